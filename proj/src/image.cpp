#include "refsim/image.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include <png.h>

#include <json.hpp>

namespace refsim {

using nlohmann::json;

namespace {

constexpr char kMagic[4] = {'L', 'R', 'I', 'M'};

void put_u32(std::ofstream& out, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                          static_cast<unsigned char>((v >> 8) & 0xff),
                          static_cast<unsigned char>((v >> 16) & 0xff),
                          static_cast<unsigned char>((v >> 24) & 0xff)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::ifstream& in) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

ColorSpace color_space_from_string(const std::string& s) {
    if (s == "camera") return ColorSpace::CameraNative;
    if (s == "xyz") return ColorSpace::XYZ;
    if (s == "linear_srgb") return ColorSpace::LinearSRGB;
    throw std::runtime_error("unknown color_space: " + s);
}

}  // namespace

const char* to_string(ColorSpace cs) {
    switch (cs) {
        case ColorSpace::CameraNative: return "camera";
        case ColorSpace::XYZ: return "xyz";
        case ColorSpace::LinearSRGB: return "linear_srgb";
    }
    return "?";
}

const char* to_string(SceneClass sc) {
    return sc == SceneClass::Indoor ? "indoor" : "outdoor";
}

bool PoseMeta::valid() const {
    return std::isfinite(inclination_deg) && std::isfinite(roll_deg) &&
           std::isfinite(vfov_deg) && vfov_deg > 0.0 && vfov_deg < 180.0;
}

LinearImage::LinearImage(int width, int height, ColorSpace cs, float fill)
    : width_(width),
      height_(height),
      color_space_(cs),
      plane_(static_cast<std::size_t>(width) * height),
      data_(plane_ * 3, fill) {
    if (width <= 0 || height <= 0) throw std::invalid_argument("non-positive image dimensions");
}

void LinearImage::validate() const {
    if (data_.size() != static_cast<std::size_t>(width_) * height_ * 3)
        throw std::runtime_error("dimension mismatch");
    for (float v : data_) {
        if (!std::isfinite(v)) throw std::runtime_error("non-finite sample");
        if (v < 0.0f) throw std::runtime_error("negative sample");
    }
    if (white_xy && !white_xy->valid()) throw std::runtime_error("invalid white_xy");
    if (exposure && !exposure->valid()) throw std::runtime_error("invalid exposure metadata");
    if (pose && !pose->valid()) throw std::runtime_error("invalid pose metadata");
}

bool LinearImage::has_saturated(double threshold_frac) const {
    const float thresh = static_cast<float>(threshold_frac * saturation_level);
    return std::any_of(data_.begin(), data_.end(), [&](float v) { return v >= thresh; });
}

double LinearImage::mean() const {
    double sum = 0.0;
    for (float v : data_) sum += v;
    return data_.empty() ? 0.0 : sum / static_cast<double>(data_.size());
}

double LinearImage::max_sample() const {
    double m = 0.0;
    for (float v : data_) m = std::max(m, static_cast<double>(v));
    return m;
}

LinearImage read_image(const std::string& path) {
    std::ifstream side(path + ".json");
    if (!side) throw std::runtime_error("missing sidecar: " + path + ".json");
    json j = json::parse(side);

    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open raster: " + path);
    char magic[4];
    in.read(magic, 4);
    if (std::memcmp(magic, kMagic, 4) != 0) throw std::runtime_error("bad magic in " + path);
    const std::uint32_t w = get_u32(in);
    const std::uint32_t h = get_u32(in);
    const std::uint32_t c = get_u32(in);
    if (c != 3) throw std::runtime_error("expected 3 channels");
    if (w != j.at("width").get<std::uint32_t>() || h != j.at("height").get<std::uint32_t>())
        throw std::runtime_error("dimension mismatch between raster and sidecar");

    LinearImage img(static_cast<int>(w), static_cast<int>(h),
                    color_space_from_string(j.at("color_space").get<std::string>()));
    static_assert(sizeof(float) == 4);
    in.read(reinterpret_cast<char*>(img.data().data()),
            static_cast<std::streamsize>(img.data().size() * sizeof(float)));
    if (!in) throw std::runtime_error("truncated raster: " + path);

    if (j.contains("white_xy")) {
        img.white_xy = XyCoord{j["white_xy"][0].get<double>(), j["white_xy"][1].get<double>()};
    }
    if (j.contains("exposure")) {
        const auto& e = j["exposure"];
        img.exposure = ExposureMeta{e.at("shutter_s").get<double>(), e.at("iso").get<double>(),
                                    e.at("f_number").get<double>()};
    }
    if (j.contains("pose")) {
        const auto& p = j["pose"];
        img.pose = PoseMeta{p.at("inclination_deg").get<double>(), p.at("roll_deg").get<double>(),
                            p.at("vfov_deg").get<double>()};
    }
    if (j.contains("scene_class")) {
        img.scene_class = j["scene_class"].get<std::string>() == "indoor" ? SceneClass::Indoor
                                                                          : SceneClass::Outdoor;
    }
    if (j.contains("camera_profile")) img.camera_profile_id = j["camera_profile"].get<std::string>();
    if (j.contains("saturation_level")) img.saturation_level = j["saturation_level"].get<double>();

    img.validate();
    return img;
}

void write_image(const LinearImage& img, const std::string& path) {
    img.validate();

    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write raster: " + path);
    out.write(kMagic, 4);
    put_u32(out, static_cast<std::uint32_t>(img.width()));
    put_u32(out, static_cast<std::uint32_t>(img.height()));
    put_u32(out, 3);
    out.write(reinterpret_cast<const char*>(img.data().data()),
              static_cast<std::streamsize>(img.data().size() * sizeof(float)));
    if (!out) throw std::runtime_error("short write: " + path);

    json j;
    j["width"] = img.width();
    j["height"] = img.height();
    j["color_space"] = to_string(img.color_space());
    if (img.white_xy) j["white_xy"] = {img.white_xy->x, img.white_xy->y};
    if (img.exposure) {
        j["exposure"] = {{"shutter_s", img.exposure->shutter_s},
                         {"iso", img.exposure->iso_gain},
                         {"f_number", img.exposure->f_number}};
    }
    if (img.pose) {
        j["pose"] = {{"inclination_deg", img.pose->inclination_deg},
                     {"roll_deg", img.pose->roll_deg},
                     {"vfov_deg", img.pose->vfov_deg}};
    }
    if (img.scene_class) j["scene_class"] = to_string(*img.scene_class);
    if (img.camera_profile_id) j["camera_profile"] = *img.camera_profile_id;
    if (img.saturation_level != 1.0) j["saturation_level"] = img.saturation_level;

    std::ofstream side(path + ".json");
    if (!side) throw std::runtime_error("cannot write sidecar: " + path + ".json");
    side << j.dump(2) << "\n";
}

double srgb_encode(double x) {
    x = std::clamp(x, 0.0, 1.0);
    if (x <= 0.0031308) return 12.92 * x;
    return 1.055 * std::pow(x, 1.0 / 2.4) - 0.055;
}

std::vector<std::uint8_t> to_preview_srgb(const LinearImage& img) {
    if (img.color_space() != ColorSpace::LinearSRGB)
        throw std::runtime_error("to_preview_srgb requires LinearSRGB input");
    std::vector<std::uint8_t> out(static_cast<std::size_t>(img.width()) * img.height() * 3);
    std::size_t k = 0;
    for (int r = 0; r < img.height(); ++r) {
        for (int c = 0; c < img.width(); ++c) {
            for (int ch = 0; ch < 3; ++ch) {
                const double v = srgb_encode(img.at(ch, r, c));
                out[k++] = static_cast<std::uint8_t>(std::lround(v * 255.0));
            }
        }
    }
    return out;
}

void write_preview_png(const LinearImage& img, const std::string& path) {
    const std::vector<std::uint8_t> rgb = to_preview_srgb(img);

    FILE* fp = std::fopen(path.c_str(), "wb");
    if (!fp) throw std::runtime_error("cannot write preview: " + path);
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png_create_info_struct(png);
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        std::fclose(fp);
        throw std::runtime_error("libpng failure writing " + path);
    }
    png_init_io(png, fp);
    png_set_IHDR(png, info, static_cast<png_uint_32>(img.width()),
                 static_cast<png_uint_32>(img.height()), 8, PNG_COLOR_TYPE_RGB,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (int r = 0; r < img.height(); ++r) {
        png_write_row(png, const_cast<png_bytep>(rgb.data() + static_cast<std::size_t>(r) * img.width() * 3));
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);
}

LinearImage resize_bilinear(const LinearImage& img, int new_width, int new_height) {
    LinearImage out(new_width, new_height, img.color_space());
    out.white_xy = img.white_xy;
    out.exposure = img.exposure;
    out.pose = img.pose;
    out.scene_class = img.scene_class;
    out.camera_profile_id = img.camera_profile_id;
    out.saturation_level = img.saturation_level;

    const double sx = static_cast<double>(img.width()) / new_width;
    const double sy = static_cast<double>(img.height()) / new_height;
    for (int ch = 0; ch < 3; ++ch) {
        for (int r = 0; r < new_height; ++r) {
            const double fy = (r + 0.5) * sy - 0.5;
            int y0 = static_cast<int>(std::floor(fy));
            const double wy = fy - y0;
            const int y1 = std::clamp(y0 + 1, 0, img.height() - 1);
            y0 = std::clamp(y0, 0, img.height() - 1);
            for (int c = 0; c < new_width; ++c) {
                const double fx = (c + 0.5) * sx - 0.5;
                int x0 = static_cast<int>(std::floor(fx));
                const double wx = fx - x0;
                const int x1 = std::clamp(x0 + 1, 0, img.width() - 1);
                x0 = std::clamp(x0, 0, img.width() - 1);
                const double v = (1 - wy) * ((1 - wx) * img.at(ch, y0, x0) + wx * img.at(ch, y0, x1)) +
                                 wy * ((1 - wx) * img.at(ch, y1, x0) + wx * img.at(ch, y1, x1));
                out.at(ch, r, c) = static_cast<float>(v);
            }
        }
    }
    return out;
}

LinearImage crop(const LinearImage& img, int x0, int y0, int w, int h) {
    if (x0 < 0 || y0 < 0 || x0 + w > img.width() || y0 + h > img.height())
        throw std::invalid_argument("crop out of bounds");
    LinearImage out(w, h, img.color_space());
    out.white_xy = img.white_xy;
    out.exposure = img.exposure;
    out.pose = img.pose;
    out.scene_class = img.scene_class;
    out.camera_profile_id = img.camera_profile_id;
    out.saturation_level = img.saturation_level;
    for (int ch = 0; ch < 3; ++ch)
        for (int r = 0; r < h; ++r)
            for (int c = 0; c < w; ++c) out.at(ch, r, c) = img.at(ch, y0 + r, x0 + c);
    return out;
}

}  // namespace refsim
