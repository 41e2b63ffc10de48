#include "test_corpus.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <vector>

namespace refsim::testsupport {

namespace fs = std::filesystem;

CameraProfile desk_profile() {
    CameraProfile p;
    p.calibration_temp_1 = 6500.0;
    p.calibration_temp_2 = 2850.0;
    // Fixed sRGB-like sensor; the warm calibration adds mild channel
    // crosstalk so the dual-illuminant interpolation is exercised.
    const Matrix3 sensor =
        xyz_d50_to_srgb() * map_white_matrix(XyCoord{0.31271, 0.32902}, d50_xy());
    p.color_matrix_1 = sensor;
    p.color_matrix_2 = Matrix3::diagonal(Vec3{1.06, 1.0, 0.94}) * sensor;
    return p;
}

LinearImage smooth_image(Rng& rng, int width, int height, double mean_srgb, const XyCoord& white,
                         int grid) {
    // Coarse random lattice, bilinearly upsampled: smooth but non-constant.
    std::vector<double> lattice(static_cast<std::size_t>(grid) * grid * 3);
    for (double& v : lattice) v = rng.uniform(0.15, 1.85);

    LinearImage srgb(width, height, ColorSpace::LinearSRGB);
    double sum = 0.0;
    for (int ch = 0; ch < 3; ++ch) {
        for (int r = 0; r < height; ++r) {
            const double gy = (r + 0.5) / height * (grid - 1);
            const int y0 = std::min(static_cast<int>(gy), grid - 2);
            const double fy = gy - y0;
            for (int c = 0; c < width; ++c) {
                const double gx = (c + 0.5) / width * (grid - 1);
                const int x0 = std::min(static_cast<int>(gx), grid - 2);
                const double fx = gx - x0;
                auto L = [&](int yy, int xx) {
                    return lattice[(static_cast<std::size_t>(ch) * grid + yy) * grid + xx];
                };
                const double v = (1 - fy) * ((1 - fx) * L(y0, x0) + fx * L(y0, x0 + 1)) +
                                 fy * ((1 - fx) * L(y0 + 1, x0) + fx * L(y0 + 1, x0 + 1));
                srgb.at(ch, r, c) = static_cast<float>(v);
                sum += v;
            }
        }
    }
    const double mean = sum / static_cast<double>(srgb.sample_count());
    const float scale = static_cast<float>(mean_srgb / mean);
    for (float& v : srgb.data()) v *= scale;

    const Matrix3 srgb_to_xyz = xyz_to_srgb_matrix(white).inverse();
    LinearImage out = apply_matrix(srgb_to_xyz, srgb, ColorSpace::XYZ);
    out.white_xy = white;
    out.saturation_level = 4.0;  // headroom: sources are unsaturated
    return out;
}

DeskCorpus write_desk_corpus(const std::string& dir, int n, std::uint64_t seed, bool with_ibl) {
    fs::create_directories(dir);
    DeskCorpus out;
    out.dir = dir;
    out.n_images = n;
    out.profile_path = (fs::path(dir) / "profile.json").string();
    save_camera_profile(desk_profile(), out.profile_path);

    out.manifest_path = (fs::path(dir) / "corpus.jsonl").string();
    std::ofstream manifest(out.manifest_path);

    Rng rng(seed);
    for (int k = 0; k < n; ++k) {
        const bool indoor = (k % 2) == 0;
        const double kelvin = rng.uniform(5000.0, 7000.0);
        const XyCoord white = temperature_to_xy(kelvin);
        // dim interiors against bright exteriors so reflections span faint
        // through dominant across the pairing
        const double mean = indoor ? std::exp(rng.uniform(std::log(0.04), std::log(0.12)))
                                   : std::exp(rng.uniform(std::log(0.40), std::log(1.10)));
        LinearImage img = smooth_image(rng, 128, 96, mean, white);
        img.pose = PoseMeta{rng.uniform(-10.0, 10.0), rng.uniform(-5.0, 5.0), 65.0};
        img.exposure = ExposureMeta{1.0 / 50.0, 100.0, 2.0};
        // Exposure is applied at write time so sources round-trip through
        // the same unexpose step as real captures.
        const double e = img.exposure->exposure();
        for (float& v : img.data()) v = static_cast<float>(v * e);
        img.saturation_level *= e;
        img.scene_class = indoor ? SceneClass::Indoor : SceneClass::Outdoor;

        char name[32];
        std::snprintf(name, sizeof(name), "img_%02d.lrim", k);
        write_image(img, (fs::path(dir) / name).string());

        manifest << "{\"path\":\"" << name << "\",\"scene_class\":\""
                 << (indoor ? "indoor" : "outdoor") << "\",\"kind\":\"raster\","
                 << "\"pose\":{\"inclination_deg\":" << img.pose->inclination_deg
                 << ",\"roll_deg\":" << img.pose->roll_deg << ",\"vfov_deg\":65},"
                 << "\"exposure\":{\"shutter_s\":0.02,\"iso\":100,\"f_number\":2},"
                 << "\"camera_profile\":\"profile.json\"}\n";
    }

    if (with_ibl) {
        const XyCoord white = temperature_to_xy(6200.0);
        LinearImage pano = smooth_image(rng, 256, 128, 0.14, white, 10);
        write_image(pano, (fs::path(dir) / "pano.lrim").string());
        manifest << "{\"path\":\"pano.lrim\",\"scene_class\":\"outdoor\",\"kind\":\"ibl\","
                 << "\"camera_profile\":\"profile.json\"}\n";
        ++out.n_images;
    }
    return out;
}

}  // namespace refsim::testsupport
