#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace refsim {

enum class ColorSpace { CameraNative, XYZ, LinearSRGB };

enum class SceneClass { Indoor, Outdoor };

struct XyCoord {
    double x = 0.0;
    double y = 0.0;

    bool valid() const { return x > 0.0 && y > 0.0 && (x + y) < 1.0; }
};

struct ExposureMeta {
    double shutter_s = 1.0 / 50.0;
    double iso_gain = 100.0;
    double f_number = 2.0;

    // e = s * g / n^2
    double exposure() const { return shutter_s * iso_gain / (f_number * f_number); }
    bool valid() const { return shutter_s > 0.0 && iso_gain > 0.0 && f_number > 0.0; }
};

struct PoseMeta {
    double inclination_deg = 0.0;  // phi
    double roll_deg = 0.0;         // rho
    double vfov_deg = 65.0;

    bool valid() const;
};

/// Planar floating-point raster, linear in scene luminance.
/// Data layout is planar row-major: all of channel 0, then 1, then 2.
class LinearImage {
public:
    LinearImage() = default;
    LinearImage(int width, int height, ColorSpace cs, float fill = 0.0f);

    int width() const { return width_; }
    int height() const { return height_; }
    static constexpr int channels() { return 3; }
    std::size_t sample_count() const { return data_.size(); }

    ColorSpace color_space() const { return color_space_; }
    void set_color_space(ColorSpace cs) { color_space_ = cs; }

    float at(int c, int ry, int cx) const {
        return data_[static_cast<std::size_t>(c) * plane_ + static_cast<std::size_t>(ry) * width_ + cx];
    }
    float& at(int c, int ry, int cx) {
        return data_[static_cast<std::size_t>(c) * plane_ + static_cast<std::size_t>(ry) * width_ + cx];
    }
    const float* plane(int c) const { return data_.data() + static_cast<std::size_t>(c) * plane_; }
    float* plane(int c) { return data_.data() + static_cast<std::size_t>(c) * plane_; }
    const std::vector<float>& data() const { return data_; }
    std::vector<float>& data() { return data_; }

    std::optional<XyCoord> white_xy;
    std::optional<ExposureMeta> exposure;
    std::optional<PoseMeta> pose;
    std::optional<SceneClass> scene_class;
    std::optional<std::string> camera_profile_id;
    double saturation_level = 1.0;

    /// Throws if any sample is non-finite or negative, or sizes disagree.
    void validate() const;

    bool has_saturated(double threshold_frac = 0.999) const;
    double mean() const;
    double max_sample() const;

private:
    int width_ = 0;
    int height_ = 0;
    ColorSpace color_space_ = ColorSpace::XYZ;
    std::size_t plane_ = 0;
    std::vector<float> data_;
};

/// Reads a raster ("LRIM" container) and its JSON sidecar at path + ".json".
LinearImage read_image(const std::string& path);

/// Writes the raster and sidecar; read_image(path) returns an equal image.
void write_image(const LinearImage& img, const std::string& path);

/// IEC sRGB encode, continuous form (no quantization), input clipped to [0,1].
double srgb_encode(double x);

/// 8-bit interleaved RGB preview of a LinearSRGB image (gamma + quantize).
std::vector<std::uint8_t> to_preview_srgb(const LinearImage& img);

/// Writes an 8-bit RGB preview PNG. Requires LinearSRGB color space.
void write_preview_png(const LinearImage& img, const std::string& path);

/// Bilinear resample to new dimensions. Linear in the image argument.
LinearImage resize_bilinear(const LinearImage& img, int new_width, int new_height);

/// Crop a sub-rectangle (x0, y0) .. (x0+w, y0+h), metadata carried over.
LinearImage crop(const LinearImage& img, int x0, int y0, int w, int h);

const char* to_string(ColorSpace cs);
const char* to_string(SceneClass sc);

}  // namespace refsim
