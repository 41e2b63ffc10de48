#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "refsim/photometric.hpp"
#include "test_corpus.hpp"

using namespace refsim;

namespace {

constexpr double kTau = 0.13286832155381798;  // inverse transfer curve at 0.4

// AWB stub returning a fixed camera-space neutral.
class FixedAwb final : public AwbEstimator {
public:
    explicit FixedAwb(Vec3 n) : n_(n) {}
    Vec3 estimate(const LinearImage&) const override { return n_; }

private:
    Vec3 n_;
};

LinearImage constant_xyz(int w, int h, const Vec3& v, const XyCoord& white) {
    LinearImage img(w, h, ColorSpace::XYZ);
    for (int ch = 0; ch < 3; ++ch)
        for (int r = 0; r < h; ++r)
            for (int c = 0; c < w; ++c) img.at(ch, r, c) = static_cast<float>(v[ch]);
    img.white_xy = white;
    img.saturation_level = 8.0;
    return img;
}

}  // namespace

TEST_CASE("cull reason string round trip") {
    for (CullReason r : {CullReason::None, CullReason::OverUnderExposed, CullReason::TooTransparent,
                         CullReason::TooDestroyed, CullReason::LowVariance, CullReason::WhiteShift,
                         CullReason::GeometryCull, CullReason::AwbFailure}) {
        CHECK(cull_reason_from_string(to_string(r)) == r);
    }
    CHECK_THROWS(cull_reason_from_string("bogus"));
}

TEST_CASE("unexpose divides by the exposure scalar") {
    LinearImage img(4, 4, ColorSpace::XYZ, 0.5f);
    img.saturation_level = 2.0;

    // e = 0.02 * 200 / 4 = 1
    const LinearImage same = unexpose(img, ExposureMeta{0.02, 200.0, 2.0});
    CHECK(same.at(0, 0, 0) == 0.5f);
    CHECK(same.saturation_level == doctest::Approx(2.0));

    // e = 0.01 * 100 / 4 = 0.25
    const LinearImage scaled = unexpose(img, ExposureMeta{0.01, 100.0, 2.0});
    CHECK(scaled.at(1, 2, 3) == doctest::Approx(2.0f));
    CHECK(scaled.saturation_level == doctest::Approx(8.0));

    // re-multiplying by e restores the input
    LinearImage back = scaled;
    for (float& v : back.data()) v *= 0.25f;
    CHECK(back.at(0, 0, 0) == doctest::Approx(0.5f));
}

TEST_CASE("add_images sums per pixel and tracks saturation headroom") {
    LinearImage a(3, 2, ColorSpace::XYZ, 0.25f);
    LinearImage b(3, 2, ColorSpace::XYZ, 0.5f);
    a.saturation_level = 2.0;
    b.saturation_level = 3.0;
    const LinearImage m = add_images(a, b);
    for (float v : m.data()) CHECK(v == 0.75f);
    CHECK(m.saturation_level == 3.0);
    CHECK_THROWS(add_images(a, LinearImage(2, 2, ColorSpace::XYZ)));
}

TEST_CASE("compute_exposure unsaturated path normalizes the mean") {
    const XyCoord white = d50_xy();
    // constant gray in linear sRGB: XYZ = inverse(srgb matrix) * (g,g,g)
    const Matrix3 to_xyz = xyz_to_srgb_matrix(white).inverse();
    const Vec3 gray = to_xyz * Vec3{kTau, kTau, kTau};
    const Vec3 half = {0.5 * gray[0], 0.5 * gray[1], 0.5 * gray[2]};
    const LinearImage t = constant_xyz(6, 6, half, white);
    const LinearImage r = constant_xyz(6, 6, half, white);
    const LinearImage m = add_images(t, r);
    CHECK(compute_exposure(m, t, r) == doctest::Approx(1.0).epsilon(1e-6));

    // doubling the scene halves the exposure
    const Vec3 full = {gray[0], gray[1], gray[2]};
    const LinearImage t2 = constant_xyz(6, 6, full, white);
    const LinearImage m2 = add_images(t2, t2);
    CHECK(compute_exposure(m2, t2, t2) == doctest::Approx(0.5).epsilon(1e-6));
}

TEST_CASE("compute_exposure saturated path pins the less saturated component") {
    const XyCoord white = d50_xy();
    const Matrix3 to_xyz = xyz_to_srgb_matrix(white).inverse();

    LinearImage t = constant_xyz(4, 4, to_xyz * Vec3{2.0, 2.0, 2.0}, white);
    LinearImage r = constant_xyz(4, 4, to_xyz * Vec3{4.0, 4.0, 4.0}, white);
    t.saturation_level = 2.0;  // t is saturated
    r.saturation_level = 100.0;
    const LinearImage m = add_images(t, r);
    const double e = compute_exposure(m, t, r);
    CHECK(e == doctest::Approx(0.5).epsilon(1e-6));

    // symmetry: swapping the components leaves e' unchanged
    CHECK(compute_exposure(m, r, t) == doctest::Approx(e).epsilon(1e-9));

    // after scaling, the less saturated component's max is exactly 1
    const Matrix3 to_srgb = xyz_to_srgb_matrix(white);
    LinearImage t_scaled = t;
    for (float& v : t_scaled.data()) v = static_cast<float>(v * e);
    CHECK(apply_matrix(to_srgb, t_scaled, ColorSpace::LinearSRGB).max_sample() ==
          doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("compute_exposure rejects a zero mixture") {
    const XyCoord white = d50_xy();
    const LinearImage z = constant_xyz(4, 4, Vec3{0, 0, 0}, white);
    CHECK_THROWS_WITH_AS(compute_exposure(z, z, z), "degenerate mixture", std::runtime_error);
}

TEST_CASE("white balance transform maps the adopted white to D50") {
    const CameraProfile profile = testsupport::desk_profile();
    Rng rng(61);
    for (int i = 0; i < 10; ++i) {
        const XyCoord white = temperature_to_xy(rng.uniform(3500.0, 8000.0));
        LinearImage t = testsupport::smooth_image(rng, 24, 24, 0.2, white);
        const WhiteBalanceResult wb =
            white_balance_transform(t, t, profile, GrayWorldAwb{});

        // composed transform: the AWB white, seen through the camera round
        // trip, lands on the D50 ray
        const Vec3 adopted =
            wb.xyz_to_cam.inverse() * (wb.xyz_to_cam_awb * xy_to_xyz(wb.white_xy_awb));
        const Vec3 mapped = wb.wb_transform * adopted;
        CHECK(angle_between(mapped, xy_to_xyz(d50_xy())) < 1e-6);
    }
}

TEST_CASE("white balance is invariant to mixture scale under gray-world") {
    const CameraProfile profile = testsupport::desk_profile();
    Rng rng(67);
    const XyCoord white = temperature_to_xy(5600.0);
    LinearImage t = testsupport::smooth_image(rng, 16, 16, 0.2, white);
    LinearImage t_scaled = t;
    for (float& v : t_scaled.data()) v *= 7.5f;
    t_scaled.white_xy = white;
    const WhiteBalanceResult a = white_balance_transform(t, t, profile, GrayWorldAwb{});
    const WhiteBalanceResult b =
        white_balance_transform(t_scaled, t_scaled, profile, GrayWorldAwb{});
    for (int i = 0; i < 9; ++i)
        CHECK(a.wb_transform.m[i] == doctest::Approx(b.wb_transform.m[i]).epsilon(1e-9));
}

TEST_CASE("identity camera with as-shot AWB collapses to pure adaptation") {
    CameraProfile profile;
    profile.color_matrix_1 = Matrix3::identity();
    profile.color_matrix_2 = Matrix3::identity();
    profile.calibration_temp_1 = 6500.0;
    profile.calibration_temp_2 = 2850.0;

    const XyCoord white = temperature_to_xy(4800.0);
    LinearImage t = constant_xyz(8, 8, xy_to_xyz(white), white);
    const FixedAwb awb(xy_to_xyz(white));  // camera == XYZ, neutral == white
    const WhiteBalanceResult wb = white_balance_transform(t, t, profile, awb);

    const Matrix3 bradford = map_white_matrix(wb.white_xy_awb, d50_xy());
    for (int i = 0; i < 9; ++i)
        CHECK(wb.wb_transform.m[i] == doctest::Approx(bradford.m[i]).epsilon(1e-9));
    // the sweep recovers the as-shot white up to its one-mired resolution
    CHECK(std::abs(wb.white_xy_awb.x - white.x) < 2e-3);
    CHECK(std::abs(wb.white_xy_awb.y - white.y) < 2e-3);
}

TEST_CASE("simulate_example keeps additivity and a single shared white") {
    const CameraProfile profile = testsupport::desk_profile();
    Rng rng(71);
    const XyCoord white = temperature_to_xy(6000.0);
    const LinearImage t = testsupport::smooth_image(rng, 32, 32, 0.12, white);
    const LinearImage r = testsupport::smooth_image(rng, 32, 32, 0.05, white);
    const LinearImage c = testsupport::smooth_image(rng, 32, 32, 0.07, white);

    const PhotometricExample ex = simulate_example(t, r, c, profile, GrayWorldAwb{});
    REQUIRE(ex.cull == CullReason::None);

    const double m_max = ex.m.max_sample();
    for (std::size_t i = 0; i < ex.m.data().size(); ++i) {
        const double resid = std::abs(static_cast<double>(ex.m.data()[i]) -
                                      (ex.t.data()[i] + ex.r.data()[i]));
        CHECK(resid / m_max < 1e-5);
    }
    for (const LinearImage* img : {&ex.m, &ex.t, &ex.r, &ex.c}) {
        CHECK(img->white_xy->x == d50_xy().x);
        CHECK(img->white_xy->y == d50_xy().y);
        CHECK(img->color_space() == ColorSpace::LinearSRGB);
    }
    CHECK(ex.capture.exposure_scalar > 0.0);

    // exposure contract: measured through the as-shot transform, the exposed
    // mixture mean sits at the inverse transfer curve of 0.4
    LinearImage m_in = add_images(t, r);
    for (float& v : m_in.data()) v = static_cast<float>(v * ex.capture.exposure_scalar);
    const LinearImage m_srgb =
        apply_matrix(xyz_to_srgb_matrix(white), m_in, ColorSpace::LinearSRGB);
    CHECK(m_srgb.mean() == doctest::Approx(kTau).epsilon(1e-6));
}

TEST_CASE("simulate_example with zero reflection yields m equal to t") {
    const CameraProfile profile = testsupport::desk_profile();
    Rng rng(73);
    const XyCoord white = temperature_to_xy(5200.0);
    const LinearImage t = testsupport::smooth_image(rng, 16, 16, 0.15, white);
    LinearImage r = t;
    for (float& v : r.data()) v = 0.0f;
    const PhotometricExample ex = simulate_example(t, r, t, profile, GrayWorldAwb{});
    REQUIRE(ex.cull == CullReason::None);
    for (std::size_t i = 0; i < ex.m.data().size(); ++i) {
        CHECK(ex.m.data()[i] == ex.t.data()[i]);
        CHECK(ex.r.data()[i] == 0.0f);
    }
}

TEST_CASE("simulate_example is homogeneous in the unexposed inputs") {
    const CameraProfile profile = testsupport::desk_profile();
    Rng rng(79);
    const XyCoord white = temperature_to_xy(6200.0);
    const LinearImage t = testsupport::smooth_image(rng, 16, 16, 0.12, white);
    const LinearImage r = testsupport::smooth_image(rng, 16, 16, 0.04, white);

    LinearImage t2 = t, r2 = r;
    for (float& v : t2.data()) v *= 3.0f;
    for (float& v : r2.data()) v *= 3.0f;
    t2.saturation_level *= 3.0;
    r2.saturation_level *= 3.0;

    const PhotometricExample a = simulate_example(t, r, t, profile, GrayWorldAwb{});
    const PhotometricExample b = simulate_example(t2, r2, t2, profile, GrayWorldAwb{});
    REQUIRE(a.cull == CullReason::None);
    REQUIRE(b.cull == CullReason::None);
    for (std::size_t i = 0; i < a.m.data().size(); ++i)
        CHECK(a.m.data()[i] == doctest::Approx(b.m.data()[i]).epsilon(1e-5));
}

TEST_CASE("extreme AWB whites are culled as white shift") {
    const CameraProfile profile = testsupport::desk_profile();
    Rng rng(83);
    const XyCoord white = temperature_to_xy(6500.0);
    const LinearImage t = testsupport::smooth_image(rng, 16, 16, 0.15, white);

    // neutral far down the locus: the sweep projects it near 2000 K,
    // hundreds of mireds from the 6500 K as-shot white
    const XyCoord warm = temperature_to_xy(2000.0);
    const FixedAwb awb(find_xyz_to_cam(warm, profile) * xy_to_xyz(warm));
    const PhotometricExample ex = simulate_example(t, t, t, profile, awb);
    CHECK(ex.cull == CullReason::WhiteShift);
}

TEST_CASE("non-positive AWB estimates signal failure") {
    const CameraProfile profile = testsupport::desk_profile();
    Rng rng(89);
    const XyCoord white = temperature_to_xy(6500.0);
    const LinearImage t = testsupport::smooth_image(rng, 8, 8, 0.15, white);
    const FixedAwb awb(Vec3{1.0, 0.0, 1.0});
    const PhotometricExample ex = simulate_example(t, t, t, profile, awb);
    CHECK(ex.cull == CullReason::AwbFailure);
}
