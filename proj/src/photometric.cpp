#include "refsim/photometric.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace refsim {

const char* to_string(CullReason reason) {
    switch (reason) {
        case CullReason::None: return "None";
        case CullReason::OverUnderExposed: return "OverUnderExposed";
        case CullReason::TooTransparent: return "TooTransparent";
        case CullReason::TooDestroyed: return "TooDestroyed";
        case CullReason::LowVariance: return "LowVariance";
        case CullReason::WhiteShift: return "WhiteShift";
        case CullReason::GeometryCull: return "GeometryCull";
        case CullReason::AwbFailure: return "AwbFailure";
    }
    return "?";
}

CullReason cull_reason_from_string(const std::string& s) {
    for (CullReason r : {CullReason::None, CullReason::OverUnderExposed, CullReason::TooTransparent,
                         CullReason::TooDestroyed, CullReason::LowVariance, CullReason::WhiteShift,
                         CullReason::GeometryCull, CullReason::AwbFailure}) {
        if (s == to_string(r)) return r;
    }
    throw std::runtime_error("unknown cull reason: " + s);
}

Vec3 GrayWorldAwb::estimate(const LinearImage& camera_img) const {
    Vec3 neutral{};
    const std::size_t n = static_cast<std::size_t>(camera_img.width()) * camera_img.height();
    for (int ch = 0; ch < 3; ++ch) {
        const float* p = camera_img.plane(ch);
        double sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) sum += p[i];
        neutral[ch] = sum / static_cast<double>(n);
    }
    return neutral;
}

LinearImage unexpose(const LinearImage& img, const ExposureMeta& meta) {
    if (!meta.valid()) throw std::invalid_argument("invalid exposure metadata");
    const double e = meta.exposure();
    LinearImage out = img;
    const float inv = static_cast<float>(1.0 / e);
    for (float& v : out.data()) v *= inv;
    out.saturation_level = img.saturation_level / e;
    return out;
}

LinearImage add_images(const LinearImage& a, const LinearImage& b) {
    if (a.width() != b.width() || a.height() != b.height())
        throw std::invalid_argument("dimension mismatch");
    if (a.color_space() != b.color_space()) throw std::invalid_argument("color space mismatch");
    LinearImage out = a;
    for (std::size_t i = 0; i < out.data().size(); ++i) out.data()[i] += b.data()[i];
    out.saturation_level = std::max(a.saturation_level, b.saturation_level);
    return out;
}

double compute_exposure(const LinearImage& m, const LinearImage& t, const LinearImage& r,
                        double saturation_threshold) {
    if (!t.white_xy) throw std::invalid_argument("t carries no white point");
    const Matrix3 xyz_to_srgb = xyz_to_srgb_matrix(*t.white_xy);
    const LinearImage m_srgb = apply_matrix(xyz_to_srgb, m, ColorSpace::LinearSRGB);

    const bool saturated =
        t.has_saturated(saturation_threshold) || r.has_saturated(saturation_threshold);
    if (!saturated) {
        const double mu = m_srgb.mean();
        if (mu <= 0.0) throw std::runtime_error("degenerate mixture");
        const double tau = srgb_to_linear(0.4);
        return tau / mu;
    }
    const LinearImage t_srgb = apply_matrix(xyz_to_srgb, t, ColorSpace::LinearSRGB);
    const LinearImage r_srgb = apply_matrix(xyz_to_srgb, r, ColorSpace::LinearSRGB);
    const double t_max = t_srgb.max_sample();
    const double r_max = r_srgb.max_sample();
    const double least = std::min(t_max, r_max);
    if (least <= 0.0) throw std::runtime_error("degenerate mixture");
    return 1.0 / least;
}

WhiteBalanceResult white_balance_transform(const LinearImage& m_exposed, const LinearImage& t,
                                           const CameraProfile& profile, const AwbEstimator& awb) {
    if (!t.white_xy) throw std::invalid_argument("t carries no white point");
    const Matrix3 xyz_to_cam = find_xyz_to_cam(*t.white_xy, profile);
    const LinearImage m_cam = apply_matrix(xyz_to_cam, m_exposed, ColorSpace::CameraNative);

    const Vec3 white_cam_awb = awb.estimate(m_cam);
    if (!(white_cam_awb[0] > 0.0 && white_cam_awb[1] > 0.0 && white_cam_awb[2] > 0.0))
        throw std::runtime_error("awb failure: non-positive neutral");

    const NeutralProjection proj = neutral_to_xy(white_cam_awb, profile);
    const Matrix3 bradford = map_white_matrix(proj.white_xy, d50_xy());

    WhiteBalanceResult out;
    out.white_xy_awb = proj.white_xy;
    out.xyz_to_cam = xyz_to_cam;
    out.xyz_to_cam_awb = proj.xyz_to_cam;
    out.wb_transform = bradford * proj.xyz_to_cam.inverse() * xyz_to_cam;
    return out;
}

namespace {

LinearImage clip_negatives(LinearImage img) {
    for (float& v : img.data()) v = std::max(v, 0.0f);
    return img;
}

}  // namespace

PhotometricExample simulate_example(const LinearImage& t_in, const LinearImage& r_in,
                                    const LinearImage& c_in, const CameraProfile& profile,
                                    const AwbEstimator& awb, const PhotometricOptions& opts) {
    PhotometricExample out;

    const LinearImage m = add_images(t_in, r_in);

    double e_prime = 1.0;
    try {
        e_prime = compute_exposure(m, t_in, r_in, opts.saturation_threshold);
    } catch (const std::runtime_error&) {
        out.cull = CullReason::OverUnderExposed;
        return out;
    }

    LinearImage m_exposed = m;
    for (float& v : m_exposed.data()) v = static_cast<float>(v * e_prime);

    WhiteBalanceResult wb;
    try {
        wb = white_balance_transform(m_exposed, t_in, profile, awb);
    } catch (const std::runtime_error&) {
        out.cull = CullReason::AwbFailure;
        return out;
    }

    // Cull when the AWB white is extremely different from the as-shot white.
    const double as_shot_mired = 1.0e6 / xy_to_temperature(*t_in.white_xy);
    const double awb_mired = 1.0e6 / xy_to_temperature(wb.white_xy_awb);
    if (std::abs(as_shot_mired - awb_mired) > opts.white_shift_max_mired) {
        out.cull = CullReason::WhiteShift;
        return out;
    }

    out.capture = CaptureFunction{e_prime, wb.wb_transform, wb.white_xy_awb};

    // One linear map takes each XYZ input to white-balanced linear sRGB.
    const Matrix3 to_srgb = xyz_d50_to_srgb() * wb.wb_transform;
    auto render = [&](const LinearImage& img, double scale) {
        LinearImage scaled = img;
        for (float& v : scaled.data()) v = static_cast<float>(v * scale);
        LinearImage srgb = clip_negatives(apply_matrix(to_srgb, scaled, ColorSpace::LinearSRGB));
        srgb.white_xy = d50_xy();
        srgb.saturation_level = 1.0;
        return srgb;
    };
    out.t = render(t_in, e_prime);
    out.r = render(r_in, e_prime);
    out.c = render(c_in, e_prime);
    // Summing after the (linear) transforms keeps m = t + r exact in the
    // emitted files even where out-of-gamut negatives were clipped.
    out.m = add_images(out.t, out.r);
    out.m.saturation_level = 1.0;
    return out;
}

}  // namespace refsim
