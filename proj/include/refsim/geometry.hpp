#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "refsim/image.hpp"

namespace refsim {

/// Deterministic 64-bit RNG (splitmix64-seeded xoshiro-style core is not
/// needed; a hand-rolled splitmix64 stream keeps draws stable across
/// standard-library implementations).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64();
    /// Uniform in [0, 1).
    double next_double();
    double uniform(double lo, double hi);
    bool bernoulli(double p);

private:
    std::uint64_t state_;
};

/// Mixes identifiers into a child seed; order-independent parallel generation
/// relies on this being a pure function of its arguments.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b, std::uint64_t c,
                          std::uint64_t d, std::uint64_t e);

struct SimulationConfig {
    double azimuth_max_deg = 50.0;
    double fov_min_deg = 50.0;
    double fov_max_deg = 80.0;
    double kappa_min = 1.47;
    double kappa_max = 1.53;
    double thickness_min_mm = 8.0;
    double thickness_max_mm = 20.0;
    double distance_min_mm = 500.0;
    double distance_max_mm = 2000.0;
    double double_pane_prob = 0.5;
    double object_dist_min_ft = 1.0;
    double object_dist_max_ft = 100.0;
    double focus_dist_min_ft = 1.0;
    double focus_dist_max_ft = 100.0;
    double f_number = 1.6;
    double focal_length_mm = 26.0;

    // pairing gates
    double max_inclination_delta_deg = 15.0;
    double max_inclination_deg = 45.0;
    double max_roll_deg = 10.0;

    // mixture search
    double ssim_mean_min = 0.4;
    double ssim_mean_max = 0.94;
    double ssim_std_min = 0.05;
    double exposure_gate_k = 2.0;
    int exposure_gate_min_n = 30;

    // photometric
    double saturation_threshold = 0.999;
    double white_shift_max_mired = 100.0;

    // geometry
    int max_missed_pixels = 4;

    // dataset
    int output_resolution = 256;
    double ibl_reference_median = 0.18;
    bool include_outdoor_outdoor = false;

    void validate() const;
};

SimulationConfig load_simulation_config(const std::string& path);
void save_simulation_config(const SimulationConfig& config, const std::string& path);

/// One random draw of glass/camera geometry.
struct CaptureScenario {
    double azimuth_deg = 0.0;
    double vfov_deg = 65.0;
    double refractive_index = 1.5;
    double pane_thickness_mm = 10.0;
    double viewing_distance_mm = 1000.0;
    bool double_pane = false;
    double object_dist_ft = 10.0;
    double focus_dist_ft = 10.0;
    double f_number = 1.6;
    double focal_length_mm = 26.0;
    std::uint64_t rng_seed = 0;

    void validate() const;
};

CaptureScenario sample_scenario(Rng& rng, const SimulationConfig& config);

/// Per-pixel angle of incidence against the (vertical) glass plane, radians.
struct IncidenceMap {
    int width = 0;
    int height = 0;
    std::vector<double> theta_i;  // row-major
    int missed_pixels = 0;

    double at(int r, int c) const { return theta_i[static_cast<std::size_t>(r) * width + c]; }
};

/// Camera pose used by the geometric operators: inclination/roll come from
/// the source photo, the field of view from the sampled scenario.
struct CameraPose {
    double azimuth_deg = 0.0;
    double inclination_deg = 0.0;
    double roll_deg = 0.0;
    double vfov_deg = 65.0;
};

/// Pinhole rays against a vertical glass plane. Throws GeometryCullError when
/// more than config.max_missed_pixels rays do not strike the glass.
struct GeometryCullError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

IncidenceMap incidence_map(const CameraPose& pose, int width, int height,
                           int max_missed_pixels = 4);

/// Average of the s/p polarized Fresnel reflectances; analytic limit at 0.
double fresnel_alpha(double theta_i, double kappa);

/// r <- alpha * r, t <- (1 - alpha) * t, per pixel.
void apply_fresnel(LinearImage& t, LinearImage& r, const IncidenceMap& imap, double kappa);

/// Circle-of-confusion diameter as a fraction of the 24 mm sensor height.
/// Distances in feet, focal length in mm. Throws when d_f <= f.
double defocus_diameter(const CaptureScenario& scenario);

/// Normalized circular kernel used by defocus_blur; diameter in pixels.
struct DiskKernel {
    int radius = 0;  // support half-width; size = 2*radius + 1
    std::vector<double> weights;

    double at(int dy, int dx) const {
        const int size = 2 * radius + 1;
        return weights[static_cast<std::size_t>(dy + radius) * size + (dx + radius)];
    }
};

DiskKernel make_disk_kernel(double diameter_px);

/// Convolution with a normalized disk of diameter h * delta_p pixels
/// (h = min dimension); diameters below one pixel are the identity.
/// Mirror (symmetric) padding preserves the image mean exactly.
LinearImage defocus_blur(const LinearImage& img, double delta_p);

/// Primary + internally reflected ghost: alpha*r + beta*warp(r) with
/// beta = (1-alpha)^2 * alpha and the warp ray-traced through the pane.
LinearImage double_reflection(const LinearImage& r, const IncidenceMap& imap,
                              const CaptureScenario& scenario, const CameraPose& pose);

/// Ghost shift in pixels at one pixel (exposed for testing).
void double_reflection_shift(const CaptureScenario& scenario, const CameraPose& pose, int width,
                             int height, int row, int col, double& dx, double& dy);

/// Gnomonic crop of a full 360x180 equirectangular panorama.
LinearImage ibl_crop(const LinearImage& panorama, const CameraPose& pose, int out_width,
                     int out_height);

/// Scales the panorama so its sample median equals reference_median.
LinearImage calibrate_ibl_exposure(const LinearImage& panorama, double reference_median);

}  // namespace refsim
