#pragma once

#include <memory>
#include <optional>
#include <string>

#include "refsim/color.hpp"
#include "refsim/image.hpp"

namespace refsim {

enum class CullReason {
    None,
    OverUnderExposed,
    TooTransparent,
    TooDestroyed,
    LowVariance,
    WhiteShift,
    GeometryCull,
    AwbFailure,
};

const char* to_string(CullReason reason);
CullReason cull_reason_from_string(const std::string& s);

/// Simulated capture: re-exposure scalar plus a single linear white-balance
/// transform on XYZ, and the white it maps to D50.
struct CaptureFunction {
    double exposure_scalar = 1.0;  // e'
    Matrix3 wb_transform;          // XYZ_to_XYZ_awb
    XyCoord white_xy_awb;
};

/// Estimates a camera-space neutral from a camera-space image.
class AwbEstimator {
public:
    virtual ~AwbEstimator() = default;
    virtual Vec3 estimate(const LinearImage& camera_img) const = 0;
};

/// Gray-world: the per-channel mean is the neutral. Scale invariant.
class GrayWorldAwb final : public AwbEstimator {
public:
    Vec3 estimate(const LinearImage& camera_img) const override;
};

/// Removes the capture exposure: samples (and saturation level) divided by
/// e = shutter_s * iso_gain / f_number^2.
LinearImage unexpose(const LinearImage& img, const ExposureMeta& meta);

/// Exposure for a mixture m = t + r (all XYZ, white of t attached to t).
/// Unsaturated: e' = srgb_to_linear(0.4) / mean(m in linear sRGB).
/// Saturated:   e' = 1 / min(max(t_sRGB), max(r_sRGB)).
/// Throws std::runtime_error("degenerate mixture") when the mean is <= 0.
double compute_exposure(const LinearImage& m, const LinearImage& t, const LinearImage& r,
                        double saturation_threshold = 0.999);

struct WhiteBalanceResult {
    Matrix3 wb_transform;  // XYZ_to_XYZ_D50 * inv(XYZ_to_CAM_awb) * XYZ_to_CAM
    XyCoord white_xy_awb;
    Matrix3 xyz_to_cam;      // from the as-shot white of t
    Matrix3 xyz_to_cam_awb;  // from the projected AWB white
};

/// Builds the white-balance transform for an exposed mixture:
/// camera projection via t's white, AWB estimate, Planckian projection,
/// Bradford to D50.
WhiteBalanceResult white_balance_transform(const LinearImage& m_exposed, const LinearImage& t,
                                           const CameraProfile& profile, const AwbEstimator& awb);

struct PhotometricExample {
    LinearImage m, t, r, c;  // linear sRGB, shared white balance
    CaptureFunction capture;
    CullReason cull = CullReason::None;  // AwbFailure / WhiteShift / degenerate signals
};

struct PhotometricOptions {
    double saturation_threshold = 0.999;
    double white_shift_max_mired = 100.0;
};

/// Full photometric pipeline for prepared (post-geometry, unexposed) XYZ
/// inputs: composite, expose, white balance, shared transform on all four,
/// convert to linear sRGB under D50. Culling signals are reported, not thrown.
PhotometricExample simulate_example(const LinearImage& t_in, const LinearImage& r_in,
                                    const LinearImage& c_in, const CameraProfile& profile,
                                    const AwbEstimator& awb,
                                    const PhotometricOptions& opts = {});

/// Per-pixel sum; inputs must share dimensions and color space.
LinearImage add_images(const LinearImage& a, const LinearImage& b);

}  // namespace refsim
