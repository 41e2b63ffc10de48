#include "refsim/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>

#include <json.hpp>

namespace refsim {

using nlohmann::json;

namespace {
constexpr double kPi = std::numbers::pi;
constexpr double kDegToRad = kPi / 180.0;
constexpr double kFeetToMm = 304.8;
constexpr double kSensorHeightMm = 24.0;  // 35 mm-equivalent sensor height
}  // namespace

std::uint64_t Rng::next_u64() {
    // splitmix64
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

double Rng::next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

bool Rng::bernoulli(double p) { return next_double() < p; }

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b, std::uint64_t c,
                          std::uint64_t d, std::uint64_t e) {
    Rng mix(master);
    std::uint64_t h = mix.next_u64();
    for (std::uint64_t v : {a, b, c, d, e}) {
        Rng step(h ^ (v + 0x9e3779b97f4a7c15ULL));
        h = step.next_u64();
    }
    return h;
}

void SimulationConfig::validate() const {
    if (!(azimuth_max_deg >= 0.0 && azimuth_max_deg < 90.0))
        throw std::runtime_error("azimuth_max_deg out of range");
    if (!(fov_min_deg > 0.0 && fov_max_deg < 180.0 && fov_min_deg <= fov_max_deg))
        throw std::runtime_error("fov range invalid");
    if (!(kappa_min > 1.0 && kappa_max < 2.0 && kappa_min <= kappa_max))
        throw std::runtime_error("kappa range invalid");
    if (!(thickness_min_mm > 0.0 && thickness_min_mm <= thickness_max_mm))
        throw std::runtime_error("thickness range invalid");
    if (!(distance_min_mm > 0.0 && distance_min_mm <= distance_max_mm))
        throw std::runtime_error("distance range invalid");
    if (!(output_resolution > 0)) throw std::runtime_error("output_resolution invalid");
    if (!(f_number > 0.0 && focal_length_mm > 0.0))
        throw std::runtime_error("lens parameters invalid");
}

SimulationConfig load_simulation_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config: " + path);
    json j = json::parse(in);
    SimulationConfig c;
    c.azimuth_max_deg = j.value("azimuth_max_deg", c.azimuth_max_deg);
    c.fov_min_deg = j.value("fov_min_deg", c.fov_min_deg);
    c.fov_max_deg = j.value("fov_max_deg", c.fov_max_deg);
    c.kappa_min = j.value("kappa_min", c.kappa_min);
    c.kappa_max = j.value("kappa_max", c.kappa_max);
    c.thickness_min_mm = j.value("thickness_min_mm", c.thickness_min_mm);
    c.thickness_max_mm = j.value("thickness_max_mm", c.thickness_max_mm);
    c.distance_min_mm = j.value("distance_min_mm", c.distance_min_mm);
    c.distance_max_mm = j.value("distance_max_mm", c.distance_max_mm);
    c.double_pane_prob = j.value("double_pane_prob", c.double_pane_prob);
    c.object_dist_min_ft = j.value("object_dist_min_ft", c.object_dist_min_ft);
    c.object_dist_max_ft = j.value("object_dist_max_ft", c.object_dist_max_ft);
    c.focus_dist_min_ft = j.value("focus_dist_min_ft", c.focus_dist_min_ft);
    c.focus_dist_max_ft = j.value("focus_dist_max_ft", c.focus_dist_max_ft);
    c.f_number = j.value("f_number", c.f_number);
    c.focal_length_mm = j.value("focal_length_mm", c.focal_length_mm);
    c.max_inclination_delta_deg = j.value("max_inclination_delta_deg", c.max_inclination_delta_deg);
    c.max_inclination_deg = j.value("max_inclination_deg", c.max_inclination_deg);
    c.max_roll_deg = j.value("max_roll_deg", c.max_roll_deg);
    c.ssim_mean_min = j.value("ssim_mean_min", c.ssim_mean_min);
    c.ssim_mean_max = j.value("ssim_mean_max", c.ssim_mean_max);
    c.ssim_std_min = j.value("ssim_std_min", c.ssim_std_min);
    c.exposure_gate_k = j.value("exposure_gate_k", c.exposure_gate_k);
    c.exposure_gate_min_n = j.value("exposure_gate_min_n", c.exposure_gate_min_n);
    c.saturation_threshold = j.value("saturation_threshold", c.saturation_threshold);
    c.white_shift_max_mired = j.value("white_shift_max_mired", c.white_shift_max_mired);
    c.max_missed_pixels = j.value("max_missed_pixels", c.max_missed_pixels);
    c.output_resolution = j.value("output_resolution", c.output_resolution);
    c.ibl_reference_median = j.value("ibl_reference_median", c.ibl_reference_median);
    c.include_outdoor_outdoor = j.value("include_outdoor_outdoor", c.include_outdoor_outdoor);
    c.validate();
    return c;
}

void save_simulation_config(const SimulationConfig& c, const std::string& path) {
    json j;
    j["azimuth_max_deg"] = c.azimuth_max_deg;
    j["fov_min_deg"] = c.fov_min_deg;
    j["fov_max_deg"] = c.fov_max_deg;
    j["kappa_min"] = c.kappa_min;
    j["kappa_max"] = c.kappa_max;
    j["thickness_min_mm"] = c.thickness_min_mm;
    j["thickness_max_mm"] = c.thickness_max_mm;
    j["distance_min_mm"] = c.distance_min_mm;
    j["distance_max_mm"] = c.distance_max_mm;
    j["double_pane_prob"] = c.double_pane_prob;
    j["object_dist_min_ft"] = c.object_dist_min_ft;
    j["object_dist_max_ft"] = c.object_dist_max_ft;
    j["focus_dist_min_ft"] = c.focus_dist_min_ft;
    j["focus_dist_max_ft"] = c.focus_dist_max_ft;
    j["f_number"] = c.f_number;
    j["focal_length_mm"] = c.focal_length_mm;
    j["max_inclination_delta_deg"] = c.max_inclination_delta_deg;
    j["max_inclination_deg"] = c.max_inclination_deg;
    j["max_roll_deg"] = c.max_roll_deg;
    j["ssim_mean_min"] = c.ssim_mean_min;
    j["ssim_mean_max"] = c.ssim_mean_max;
    j["ssim_std_min"] = c.ssim_std_min;
    j["exposure_gate_k"] = c.exposure_gate_k;
    j["exposure_gate_min_n"] = c.exposure_gate_min_n;
    j["saturation_threshold"] = c.saturation_threshold;
    j["white_shift_max_mired"] = c.white_shift_max_mired;
    j["max_missed_pixels"] = c.max_missed_pixels;
    j["output_resolution"] = c.output_resolution;
    j["ibl_reference_median"] = c.ibl_reference_median;
    j["include_outdoor_outdoor"] = c.include_outdoor_outdoor;
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write config: " + path);
    out << j.dump(2) << "\n";
}

void CaptureScenario::validate() const {
    if (!(refractive_index > 1.0 && refractive_index < 2.0))
        throw std::runtime_error("refractive index out of (1, 2)");
    if (!(pane_thickness_mm > 0.0)) throw std::runtime_error("non-positive pane thickness");
    if (!(viewing_distance_mm > 0.0 && object_dist_ft > 0.0 && focus_dist_ft > 0.0))
        throw std::runtime_error("non-positive distance");
    if (!(vfov_deg > 0.0 && vfov_deg < 180.0)) throw std::runtime_error("vfov out of (0, 180)");
}

CaptureScenario sample_scenario(Rng& rng, const SimulationConfig& config) {
    config.validate();
    CaptureScenario s;
    s.azimuth_deg = rng.uniform(-config.azimuth_max_deg, config.azimuth_max_deg);
    s.vfov_deg = rng.uniform(config.fov_min_deg, config.fov_max_deg);
    s.refractive_index = rng.uniform(config.kappa_min, config.kappa_max);
    s.pane_thickness_mm = rng.uniform(config.thickness_min_mm, config.thickness_max_mm);
    s.viewing_distance_mm = rng.uniform(config.distance_min_mm, config.distance_max_mm);
    s.double_pane = rng.bernoulli(config.double_pane_prob);
    s.object_dist_ft = rng.uniform(config.object_dist_min_ft, config.object_dist_max_ft);
    s.focus_dist_ft = rng.uniform(config.focus_dist_min_ft, config.focus_dist_max_ft);
    s.f_number = config.f_number;
    s.focal_length_mm = config.focal_length_mm;
    s.rng_seed = rng.next_u64();
    s.validate();
    return s;
}

namespace {

struct Mat3d {
    double m[9];

    Mat3d mul(const Mat3d& o) const {
        Mat3d r{};
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                double s = 0;
                for (int k = 0; k < 3; ++k) s += m[i * 3 + k] * o.m[k * 3 + j];
                r.m[i * 3 + j] = s;
            }
        return r;
    }
    void apply(double x, double y, double z, double& ox, double& oy, double& oz) const {
        ox = m[0] * x + m[1] * y + m[2] * z;
        oy = m[3] * x + m[4] * y + m[5] * z;
        oz = m[6] * x + m[7] * y + m[8] * z;
    }
    void apply_transposed(double x, double y, double z, double& ox, double& oy, double& oz) const {
        ox = m[0] * x + m[3] * y + m[6] * z;
        oy = m[1] * x + m[4] * y + m[7] * z;
        oz = m[2] * x + m[5] * y + m[8] * z;
    }
};

// World frame: y up, glass is the vertical plane z = const with the camera on
// the -z side looking toward +z at zero pose.
Mat3d world_from_camera(const CameraPose& pose) {
    const double az = pose.azimuth_deg * kDegToRad;
    const double in = pose.inclination_deg * kDegToRad;
    const double ro = pose.roll_deg * kDegToRad;
    const double ca = std::cos(az), sa = std::sin(az);
    const double ci = std::cos(in), si = std::sin(in);
    const double cr = std::cos(ro), sr = std::sin(ro);
    const Mat3d yaw{{ca, 0, sa, 0, 1, 0, -sa, 0, ca}};
    const Mat3d pitch{{1, 0, 0, 0, ci, si, 0, -si, ci}};
    const Mat3d roll{{cr, -sr, 0, sr, cr, 0, 0, 0, 1}};
    return yaw.mul(pitch).mul(roll);
}

struct PinholeGrid {
    int width, height;
    double tan_half_v, tan_half_h;

    // Pixel centers span the full field of view (row 0 / col 0 sit on the
    // frustum edge).
    void ray(int row, int col, double& x, double& y, double& z) const {
        x = width > 1 ? tan_half_h * (2.0 * col / (width - 1) - 1.0) : 0.0;
        y = height > 1 ? tan_half_v * (1.0 - 2.0 * row / (height - 1)) : 0.0;
        z = 1.0;
        const double n = std::sqrt(x * x + y * y + 1.0);
        x /= n;
        y /= n;
        z /= n;
    }
    // Inverse of ray(); returns false when the direction is behind the camera.
    bool project(double x, double y, double z, double& row, double& col) const {
        if (z <= 1e-12) return false;
        const double xn = x / z;
        const double yn = y / z;
        col = width > 1 ? (xn / tan_half_h + 1.0) * 0.5 * (width - 1) : 0.0;
        row = height > 1 ? (1.0 - yn / tan_half_v) * 0.5 * (height - 1) : 0.0;
        return true;
    }
};

PinholeGrid make_grid(const CameraPose& pose, int width, int height) {
    const double tv = std::tan(0.5 * pose.vfov_deg * kDegToRad);
    return PinholeGrid{width, height, tv, tv * static_cast<double>(width) / height};
}

int reflect_index(int i, int n) {
    while (i < 0 || i >= n) {
        if (i < 0) i = -1 - i;
        if (i >= n) i = 2 * n - 1 - i;
    }
    return i;
}

float sample_bilinear_clamped(const LinearImage& img, int ch, double row, double col) {
    const int r0 = static_cast<int>(std::floor(row));
    const int c0 = static_cast<int>(std::floor(col));
    const double fr = row - r0;
    const double fc = col - c0;
    auto px = [&](int r, int c) {
        return img.at(ch, std::clamp(r, 0, img.height() - 1), std::clamp(c, 0, img.width() - 1));
    };
    return static_cast<float>((1 - fr) * ((1 - fc) * px(r0, c0) + fc * px(r0, c0 + 1)) +
                              fr * ((1 - fc) * px(r0 + 1, c0) + fc * px(r0 + 1, c0 + 1)));
}

}  // namespace

IncidenceMap incidence_map(const CameraPose& pose, int width, int height, int max_missed_pixels) {
    const Mat3d rot = world_from_camera(pose);
    const PinholeGrid grid = make_grid(pose, width, height);
    IncidenceMap map;
    map.width = width;
    map.height = height;
    map.theta_i.resize(static_cast<std::size_t>(width) * height);
    for (int r = 0; r < height; ++r) {
        for (int c = 0; c < width; ++c) {
            double x, y, z, wx, wy, wz;
            grid.ray(r, c, x, y, z);
            rot.apply(x, y, z, wx, wy, wz);
            if (wz <= 1e-12) {
                ++map.missed_pixels;
                map.theta_i[static_cast<std::size_t>(r) * width + c] = kPi / 2.0 - 1e-9;
            } else {
                map.theta_i[static_cast<std::size_t>(r) * width + c] =
                    std::acos(std::clamp(wz, -1.0, 1.0));
            }
        }
    }
    if (map.missed_pixels > max_missed_pixels)
        throw GeometryCullError("glass does not fill FOV: " + std::to_string(map.missed_pixels) +
                                " rays miss the plane");
    return map;
}

double fresnel_alpha(double theta_i, double kappa) {
    if (!(kappa > 1.0)) throw std::invalid_argument("kappa must exceed 1");
    if (!(theta_i >= 0.0 && theta_i < kPi / 2.0))
        throw std::invalid_argument("theta_i out of [0, pi/2)");
    if (theta_i < 1e-9) {
        const double a0 = (kappa - 1.0) / (kappa + 1.0);
        return a0 * a0;
    }
    const double theta_t = std::asin(std::sin(theta_i) / kappa);
    const double sm = std::sin(theta_i - theta_t);
    const double sp = std::sin(theta_i + theta_t);
    const double a_perp = (sm * sm) / (sp * sp);
    // tan^2 ratio written via cosines so the Brewster angle is exact (0/1 safe)
    const double cm = std::cos(theta_i - theta_t);
    const double cp = std::cos(theta_i + theta_t);
    const double a_par = a_perp * (cp * cp) / (cm * cm);
    return 0.5 * (a_perp + a_par);
}

void apply_fresnel(LinearImage& t, LinearImage& r, const IncidenceMap& imap, double kappa) {
    if (t.width() != imap.width || t.height() != imap.height || r.width() != imap.width ||
        r.height() != imap.height)
        throw std::invalid_argument("incidence map dimension mismatch");
    for (int row = 0; row < imap.height; ++row) {
        for (int col = 0; col < imap.width; ++col) {
            const double alpha = fresnel_alpha(imap.at(row, col), kappa);
            for (int ch = 0; ch < 3; ++ch) {
                r.at(ch, row, col) = static_cast<float>(r.at(ch, row, col) * alpha);
                t.at(ch, row, col) = static_cast<float>(t.at(ch, row, col) * (1.0 - alpha));
            }
        }
    }
}

double defocus_diameter(const CaptureScenario& scenario) {
    const double d_o = scenario.object_dist_ft * kFeetToMm;
    const double d_f = scenario.focus_dist_ft * kFeetToMm;
    const double f = scenario.focal_length_mm;
    if (d_f <= f) throw std::runtime_error("focus distance not beyond focal length");
    const double delta_mm =
        std::abs(d_o - d_f) / d_o * (f * f) / (scenario.f_number * (d_f - f));
    return delta_mm / kSensorHeightMm;
}

DiskKernel make_disk_kernel(double diameter_px) {
    DiskKernel k;
    if (diameter_px < 1.0) {
        k.radius = 0;
        k.weights = {1.0};
        return k;
    }
    k.radius = static_cast<int>(std::ceil(0.5 * (diameter_px - 1.0)));
    const int size = 2 * k.radius + 1;
    k.weights.assign(static_cast<std::size_t>(size) * size, 0.0);
    const double rad = 0.5 * diameter_px;
    const int ss = 8;  // subsamples per axis for edge coverage
    double total = 0.0;
    for (int dy = -k.radius; dy <= k.radius; ++dy) {
        for (int dx = -k.radius; dx <= k.radius; ++dx) {
            int inside = 0;
            for (int sy = 0; sy < ss; ++sy) {
                for (int sx = 0; sx < ss; ++sx) {
                    const double py = dy - 0.5 + (sy + 0.5) / ss;
                    const double px = dx - 0.5 + (sx + 0.5) / ss;
                    if (py * py + px * px <= rad * rad) ++inside;
                }
            }
            const double w = static_cast<double>(inside) / (ss * ss);
            k.weights[static_cast<std::size_t>(dy + k.radius) * size + (dx + k.radius)] = w;
            total += w;
        }
    }
    for (double& w : k.weights) w /= total;
    return k;
}

LinearImage defocus_blur(const LinearImage& img, double delta_p) {
    if (delta_p < 0.0) throw std::invalid_argument("negative defocus diameter");
    const int h = std::min(img.width(), img.height());
    const double diameter = h * delta_p;
    if (diameter < 1.0) return img;

    const DiskKernel kernel = make_disk_kernel(diameter);
    LinearImage out = img;
    for (int ch = 0; ch < 3; ++ch) {
        for (int r = 0; r < img.height(); ++r) {
            for (int c = 0; c < img.width(); ++c) {
                double acc = 0.0;
                for (int dy = -kernel.radius; dy <= kernel.radius; ++dy) {
                    const int sr = reflect_index(r + dy, img.height());
                    for (int dx = -kernel.radius; dx <= kernel.radius; ++dx) {
                        const int sc = reflect_index(c + dx, img.width());
                        acc += kernel.at(dy, dx) * img.at(ch, sr, sc);
                    }
                }
                out.at(ch, r, c) = static_cast<float>(acc);
            }
        }
    }
    return out;
}

void double_reflection_shift(const CaptureScenario& scenario, const CameraPose& pose, int width,
                             int height, int row, int col, double& dx, double& dy) {
    const Mat3d rot = world_from_camera(pose);
    const PinholeGrid grid = make_grid(pose, width, height);
    double x, y, z, wx, wy, wz;
    grid.ray(row, col, x, y, z);
    rot.apply(x, y, z, wx, wy, wz);
    dx = dy = 0.0;
    if (wz <= 1e-12) return;  // ray misses the glass; no ghost

    const double v = scenario.viewing_distance_mm;
    const double thickness =
        scenario.pane_thickness_mm * (scenario.double_pane ? 2.0 : 1.0);

    // Entry point on the front face, mm.
    const double scale = v / wz;
    double px = wx * scale, py = wy * scale, pz = v;

    // In-plane lateral walk of the internally reflected ray: refract at the
    // front face, cross the pane, reflect off the back face, cross again.
    const double sin_i = std::sqrt(std::max(0.0, wx * wx + wy * wy));
    if (sin_i > 1e-15) {
        const double sin_t = sin_i / scenario.refractive_index;
        const double tan_t = sin_t / std::sqrt(1.0 - sin_t * sin_t);
        const double walk = 2.0 * thickness * tan_t;
        px += walk * wx / sin_i;
        py += walk * wy / sin_i;
    }

    // The emergent ray is parallel to the incident one; project its exit point
    // back through the pinhole.
    double cx, cy, cz;
    rot.apply_transposed(px, py, pz, cx, cy, cz);
    double srow, scol;
    if (!grid.project(cx, cy, cz, srow, scol)) return;
    dx = scol - col;
    dy = srow - row;
}

LinearImage double_reflection(const LinearImage& r, const IncidenceMap& imap,
                              const CaptureScenario& scenario, const CameraPose& pose) {
    if (r.width() != imap.width || r.height() != imap.height)
        throw std::invalid_argument("incidence map dimension mismatch");
    const Mat3d rot = world_from_camera(pose);
    const PinholeGrid grid = make_grid(pose, r.width(), r.height());
    const double v = scenario.viewing_distance_mm;
    const double thickness =
        scenario.pane_thickness_mm * (scenario.double_pane ? 2.0 : 1.0);

    LinearImage out = r;
    for (int row = 0; row < r.height(); ++row) {
        for (int col = 0; col < r.width(); ++col) {
            const double alpha = fresnel_alpha(imap.at(row, col), scenario.refractive_index);
            const double beta = (1.0 - alpha) * alpha * (1.0 - alpha);

            double x, y, z, wx, wy, wz;
            grid.ray(row, col, x, y, z);
            rot.apply(x, y, z, wx, wy, wz);

            double srow = row, scol = col;
            if (wz > 1e-12) {
                const double scale = v / wz;
                double px = wx * scale, py = wy * scale, pz = v;
                const double sin_i = std::sqrt(std::max(0.0, wx * wx + wy * wy));
                if (sin_i > 1e-15) {
                    const double sin_t = sin_i / scenario.refractive_index;
                    const double tan_t = sin_t / std::sqrt(1.0 - sin_t * sin_t);
                    const double walk = 2.0 * thickness * tan_t;
                    px += walk * wx / sin_i;
                    py += walk * wy / sin_i;
                }
                double cx, cy, cz;
                rot.apply_transposed(px, py, pz, cx, cy, cz);
                grid.project(cx, cy, cz, srow, scol);
            }
            for (int ch = 0; ch < 3; ++ch) {
                const double ghost = sample_bilinear_clamped(r, ch, srow, scol);
                out.at(ch, row, col) = static_cast<float>(alpha * r.at(ch, row, col) + beta * ghost);
            }
        }
    }
    return out;
}

LinearImage ibl_crop(const LinearImage& panorama, const CameraPose& pose, int out_width,
                     int out_height) {
    if (panorama.width() != 2 * panorama.height())
        throw std::invalid_argument("panorama is not 2:1 equirectangular");
    if (out_width > panorama.width() || out_height > panorama.height())
        throw std::invalid_argument("output dimensions exceed panorama sampling bound");

    const Mat3d rot = world_from_camera(pose);
    const PinholeGrid grid = make_grid(pose, out_width, out_height);
    const int pw = panorama.width();
    const int ph = panorama.height();

    LinearImage out(out_width, out_height, panorama.color_space());
    out.white_xy = panorama.white_xy;
    out.exposure = panorama.exposure;
    out.scene_class = panorama.scene_class;
    out.camera_profile_id = panorama.camera_profile_id;
    out.saturation_level = panorama.saturation_level;
    out.pose = PoseMeta{pose.inclination_deg, pose.roll_deg, pose.vfov_deg};

    for (int r = 0; r < out_height; ++r) {
        for (int c = 0; c < out_width; ++c) {
            double x, y, z, wx, wy, wz;
            grid.ray(r, c, x, y, z);
            rot.apply(x, y, z, wx, wy, wz);
            const double lon = std::atan2(wx, wz);
            const double lat = std::asin(std::clamp(wy, -1.0, 1.0));
            const double colf = (lon / (2.0 * kPi) + 0.5) * pw - 0.5;
            const double rowf = (0.5 - lat / kPi) * ph - 0.5;

            const int c0 = static_cast<int>(std::floor(colf));
            const int r0 = static_cast<int>(std::floor(rowf));
            const double fc = colf - c0;
            const double fr = rowf - r0;
            auto px = [&](int rr, int cc, int ch) {
                rr = std::clamp(rr, 0, ph - 1);
                cc = ((cc % pw) + pw) % pw;  // longitude wraps
                return static_cast<double>(panorama.at(ch, rr, cc));
            };
            for (int ch = 0; ch < 3; ++ch) {
                const double val = (1 - fr) * ((1 - fc) * px(r0, c0, ch) + fc * px(r0, c0 + 1, ch)) +
                                   fr * ((1 - fc) * px(r0 + 1, c0, ch) + fc * px(r0 + 1, c0 + 1, ch));
                out.at(ch, r, c) = static_cast<float>(val);
            }
        }
    }
    return out;
}

LinearImage calibrate_ibl_exposure(const LinearImage& panorama, double reference_median) {
    if (!(reference_median > 0.0)) throw std::invalid_argument("non-positive reference median");
    std::vector<float> samples = panorama.data();
    const std::size_t mid = samples.size() / 2;
    std::nth_element(samples.begin(), samples.begin() + mid, samples.end());
    const double median = samples[mid];
    if (median <= 0.0) throw std::runtime_error("zero-median panorama");
    const float scale = static_cast<float>(reference_median / median);
    LinearImage out = panorama;
    for (float& v : out.data()) v *= scale;
    out.saturation_level = panorama.saturation_level * scale;
    return out;
}

}  // namespace refsim
