#include "refsim/dataset.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

namespace refsim {

namespace fs = std::filesystem;
using nlohmann::json;

void SourceEntry::validate() const {
    if (id.empty() || path.empty()) throw std::runtime_error("corpus entry without a path");
    if (kind == SourceKind::Raster && !pose)
        throw std::runtime_error("raster entry requires a pose: " + id);
    if (!exposure.valid()) throw std::runtime_error("invalid exposure in corpus entry: " + id);
}

Corpus load_corpus(const std::string& manifest_path) {
    std::ifstream in(manifest_path);
    if (!in) throw std::runtime_error("cannot open corpus manifest: " + manifest_path);
    const fs::path base = fs::path(manifest_path).parent_path();

    Corpus corpus;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        json j = json::parse(line);
        SourceEntry e;
        e.id = j.at("path").get<std::string>();
        e.path = (base / e.id).string();
        e.scene_class = j.at("scene_class").get<std::string>() == "indoor" ? SceneClass::Indoor
                                                                           : SceneClass::Outdoor;
        const std::string kind = j.value("kind", std::string("raster"));
        e.kind = kind == "ibl" ? SourceKind::IblPanorama : SourceKind::Raster;
        if (j.contains("pose")) {
            const auto& p = j["pose"];
            e.pose = PoseMeta{p.at("inclination_deg").get<double>(),
                              p.at("roll_deg").get<double>(), p.at("vfov_deg").get<double>()};
        }
        if (j.contains("exposure")) {
            const auto& x = j["exposure"];
            e.exposure = ExposureMeta{x.at("shutter_s").get<double>(), x.at("iso").get<double>(),
                                      x.at("f_number").get<double>()};
        } else {
            e.exposure = ExposureMeta{1.0, 1.0, 1.0};  // identity exposure
        }
        if (j.contains("camera_profile"))
            e.camera_profile = (base / j["camera_profile"].get<std::string>()).string();
        e.validate();
        corpus.entries.push_back(std::move(e));
    }
    return corpus;
}

std::vector<std::pair<int, int>> build_pairs(const Corpus& corpus, std::uint64_t seed,
                                             bool include_outdoor_outdoor) {
    std::vector<int> outdoor, indoor;
    for (int i = 0; i < static_cast<int>(corpus.entries.size()); ++i) {
        (corpus.entries[i].scene_class == SceneClass::Outdoor ? outdoor : indoor).push_back(i);
    }
    if (indoor.empty() || outdoor.empty()) throw std::runtime_error("empty class");

    std::vector<std::pair<int, int>> pairs;
    for (int o : outdoor)
        for (int i : indoor) pairs.emplace_back(o, i);
    for (int i : indoor)
        for (int o : outdoor) pairs.emplace_back(i, o);
    for (int i : indoor)
        for (int i2 : indoor)
            if (i != i2) pairs.emplace_back(i, i2);
    if (include_outdoor_outdoor) {
        for (int o : outdoor)
            for (int o2 : outdoor)
                if (o != o2) pairs.emplace_back(o, o2);
    }

    Rng rng(seed);
    for (std::size_t k = pairs.size(); k > 1; --k) {
        const std::size_t j = static_cast<std::size_t>(rng.next_u64() % k);
        std::swap(pairs[k - 1], pairs[j]);
    }
    return pairs;
}

namespace {

bool pose_ok(const PoseMeta& p, const SimulationConfig& config) {
    if (p.vfov_deg <= 0.0) return false;
    if (std::abs(p.inclination_deg) > config.max_inclination_deg) return false;
    if (std::abs(p.roll_deg) > config.max_roll_deg) return false;
    return true;
}

}  // namespace

bool pose_compatible(const SourceEntry& i, const SourceEntry& j, const SimulationConfig& config) {
    const bool i_raster = i.kind == SourceKind::Raster;
    const bool j_raster = j.kind == SourceKind::Raster;
    if (!i_raster && !j_raster) return true;  // both IBL: poses are synthesized
    if (i_raster && !pose_ok(*i.pose, config)) return false;
    if (j_raster && !pose_ok(*j.pose, config)) return false;
    if (i_raster && j_raster) {
        // the IBL partner adopts the raster pose, so the delta gate only
        // applies to raster/raster pairs
        if (std::abs(i.pose->inclination_deg - j.pose->inclination_deg) >
            config.max_inclination_delta_deg)
            return false;
    }
    return true;
}

namespace {

std::pair<LinearImage, LinearImage> split_halves(const LinearImage& img) {
    const int w = img.width();
    const int h = img.height();
    if (w >= h) {
        const int side = std::min(h, w / 2);
        if (side < 2) throw std::runtime_error("image too small to split");
        const int y0 = (h - side) / 2;
        return {crop(img, 0, y0, side, side), crop(img, w - side, y0, side, side)};
    }
    const int side = std::min(w, h / 2);
    if (side < 2) throw std::runtime_error("image too small to split");
    const int x0 = (w - side) / 2;
    return {crop(img, x0, 0, side, side), crop(img, x0, h - side, side, side)};
}

}  // namespace

ContextCrops make_context_crops(const LinearImage& i_img, const LinearImage& j_img, int a, int b) {
    if ((a != 0 && a != 1) || (b != 0 && b != 1))
        throw std::invalid_argument("crop selectors must be 0 or 1");
    auto [i0, i1] = split_halves(i_img);
    auto [j0, j1] = split_halves(j_img);
    ContextCrops out;
    out.t_src = a == 0 ? std::move(i0) : std::move(i1);
    out.r_src = b == 0 ? std::move(j0) : std::move(j1);
    out.c_src = b == 0 ? std::move(j1) : std::move(j0);
    return out;
}

std::string split_for_id(const std::string& id) {
    // FNV-1a with a finalizer mix; raw FNV high bits are too correlated for
    // short, similar ids
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : id) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    h = Rng(h).next_u64();
    const double u = static_cast<double>(h >> 11) * 0x1.0p-53;
    if (u < 0.80) return "train";
    if (u < 0.95) return "val";
    return "test";
}

PreparedCorpus::PreparedCorpus(Corpus corpus, const SimulationConfig& config)
    : corpus_(std::move(corpus)) {
    images_.reserve(corpus_.entries.size());

    // Median of indoor raster per-image medians calibrates IBL exposure.
    std::vector<double> indoor_medians;
    std::vector<LinearImage> raw;
    raw.reserve(corpus_.entries.size());
    for (const SourceEntry& e : corpus_.entries) {
        LinearImage img = read_image(e.path);
        if (e.kind == SourceKind::IblPanorama && img.width() != 2 * img.height())
            throw std::runtime_error("IBL entry is not 2:1 equirectangular: " + e.id);
        if (e.kind == SourceKind::Raster && e.scene_class == SceneClass::Indoor) {
            std::vector<float> s = img.data();
            std::nth_element(s.begin(), s.begin() + s.size() / 2, s.end());
            indoor_medians.push_back(s[s.size() / 2]);
        }
        raw.push_back(std::move(img));
    }
    if (!indoor_medians.empty()) {
        std::nth_element(indoor_medians.begin(), indoor_medians.begin() + indoor_medians.size() / 2,
                         indoor_medians.end());
        ibl_reference_median_ = indoor_medians[indoor_medians.size() / 2];
    } else {
        ibl_reference_median_ = config.ibl_reference_median;
    }

    std::vector<double> means;
    for (std::size_t k = 0; k < corpus_.entries.size(); ++k) {
        const SourceEntry& e = corpus_.entries[k];
        LinearImage img = std::move(raw[k]);
        if (e.kind == SourceKind::IblPanorama)
            img = calibrate_ibl_exposure(img, ibl_reference_median_);
        if (img.white_xy) {
            const LinearImage srgb = apply_matrix(xyz_to_srgb_matrix(*img.white_xy), img,
                                                  ColorSpace::LinearSRGB);
            means.push_back(srgb.mean());
        }
        images_.push_back(std::move(img));

        if (!e.camera_profile.empty() && !profiles_.count(e.camera_profile))
            profiles_.emplace(e.camera_profile, load_camera_profile(e.camera_profile));
    }

    if (static_cast<int>(means.size()) >= config.exposure_gate_min_n) {
        double mean = 0.0;
        for (double v : means) mean += v;
        mean /= static_cast<double>(means.size());
        double var = 0.0;
        for (double v : means) var += (v - mean) * (v - mean);
        var /= static_cast<double>(means.size());
        const double sigma = std::sqrt(var);
        if (sigma > 0.0)
            exposure_stats_ = CorpusStats{mean, sigma, static_cast<int>(means.size())};
    }
}

const CameraProfile& PreparedCorpus::profile(const std::string& path) const {
    const auto it = profiles_.find(path);
    if (it == profiles_.end()) throw std::runtime_error("unknown camera profile: " + path);
    return it->second;
}

int PreparedCorpus::find_entry(const std::string& id) const {
    for (int i = 0; i < static_cast<int>(corpus_.entries.size()); ++i)
        if (corpus_.entries[i].id == id) return i;
    throw std::runtime_error("corpus entry not found: " + id);
}

namespace {

json scenario_to_json(const CaptureScenario& s) {
    return json{{"azimuth_deg", s.azimuth_deg},
                {"vfov_deg", s.vfov_deg},
                {"refractive_index", s.refractive_index},
                {"pane_thickness_mm", s.pane_thickness_mm},
                {"viewing_distance_mm", s.viewing_distance_mm},
                {"double_pane", s.double_pane},
                {"object_dist_ft", s.object_dist_ft},
                {"focus_dist_ft", s.focus_dist_ft},
                {"f_number", s.f_number},
                {"focal_length_mm", s.focal_length_mm},
                {"rng_seed", s.rng_seed}};
}

CaptureScenario scenario_from_json(const json& j) {
    CaptureScenario s;
    s.azimuth_deg = j.at("azimuth_deg").get<double>();
    s.vfov_deg = j.at("vfov_deg").get<double>();
    s.refractive_index = j.at("refractive_index").get<double>();
    s.pane_thickness_mm = j.at("pane_thickness_mm").get<double>();
    s.viewing_distance_mm = j.at("viewing_distance_mm").get<double>();
    s.double_pane = j.at("double_pane").get<bool>();
    s.object_dist_ft = j.at("object_dist_ft").get<double>();
    s.focus_dist_ft = j.at("focus_dist_ft").get<double>();
    s.f_number = j.at("f_number").get<double>();
    s.focal_length_mm = j.at("focal_length_mm").get<double>();
    s.rng_seed = j.at("rng_seed").get<std::uint64_t>();
    return s;
}

}  // namespace

std::string manifest_record_to_json(const ManifestRecord& rec) {
    json j;
    j["seed"] = rec.seed;
    j["i"] = rec.i_id;
    j["j"] = rec.j_id;
    j["a"] = rec.a;
    j["b"] = rec.b;
    j["scenario_index"] = rec.scenario_index;
    j["scenario"] = scenario_to_json(rec.scenario);
    j["decision"] = to_string(rec.decision);
    j["split"] = rec.split;
    if (!rec.outputs.empty()) j["outputs"] = rec.outputs;
    if (rec.has_stats) {
        j["stats"] = json{{"mean_ssim", rec.mean_ssim},
                          {"std_ssim", rec.std_ssim},
                          {"e_prime", rec.e_prime},
                          {"white_xy_awb", {rec.white_xy_awb.x, rec.white_xy_awb.y}}};
    }
    if (!rec.error.empty()) j["error"] = rec.error;
    return j.dump();
}

ManifestRecord manifest_record_from_json(const std::string& line) {
    json j = json::parse(line);
    ManifestRecord rec;
    rec.seed = j.at("seed").get<std::uint64_t>();
    rec.i_id = j.at("i").get<std::string>();
    rec.j_id = j.at("j").get<std::string>();
    rec.a = j.at("a").get<int>();
    rec.b = j.at("b").get<int>();
    rec.scenario_index = j.at("scenario_index").get<int>();
    rec.scenario = scenario_from_json(j.at("scenario"));
    rec.decision = cull_reason_from_string(j.at("decision").get<std::string>());
    rec.split = j.value("split", std::string());
    if (j.contains("outputs"))
        rec.outputs = j["outputs"].get<std::map<std::string, std::string>>();
    if (j.contains("stats")) {
        const auto& s = j["stats"];
        rec.mean_ssim = s.at("mean_ssim").get<double>();
        rec.std_ssim = s.at("std_ssim").get<double>();
        rec.e_prime = s.at("e_prime").get<double>();
        rec.white_xy_awb = XyCoord{s.at("white_xy_awb")[0].get<double>(),
                                   s.at("white_xy_awb")[1].get<double>()};
        rec.has_stats = true;
    }
    rec.error = j.value("error", std::string());
    return rec;
}

DatasetManifest load_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open manifest: " + path);
    DatasetManifest m;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty()) m.records.push_back(manifest_record_from_json(line));
    }
    return m;
}

void write_manifest(const DatasetManifest& manifest, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write manifest: " + path);
    for (const ManifestRecord& rec : manifest.records) out << manifest_record_to_json(rec) << "\n";
}

AttemptResult run_attempt(const PreparedCorpus& corpus, const SimulationConfig& config,
                          const AttemptInput& input) {
    const SourceEntry& ei = corpus.corpus().entries[input.i_index];
    const SourceEntry& ej = corpus.corpus().entries[input.j_index];

    AttemptResult result;
    ManifestRecord& rec = result.record;
    rec.seed = input.seed;
    rec.i_id = ei.id;
    rec.j_id = ej.id;
    rec.a = input.a;
    rec.b = input.b;
    rec.scenario_index = input.scenario_index;
    const std::string si = split_for_id(ei.id);
    const std::string sj = split_for_id(ej.id);
    rec.split = si == sj ? si : "mixed";

    Rng rng(input.seed);
    try {
        CaptureScenario scenario = sample_scenario(rng, config);
        rec.scenario = scenario;

        // Inclination and roll follow the raster source; IBL partners adopt
        // them. FOV and azimuth come from the scenario.
        PoseMeta photo_pose{0.0, 0.0, scenario.vfov_deg};
        if (ei.kind == SourceKind::Raster)
            photo_pose = *ei.pose;
        else if (ej.kind == SourceKind::Raster)
            photo_pose = *ej.pose;
        const CameraPose cam{scenario.azimuth_deg, photo_pose.inclination_deg,
                             photo_pose.roll_deg, scenario.vfov_deg};

        const int res = config.output_resolution;
        LinearImage t_src, r_src, c_src;
        if (ei.kind == SourceKind::Raster) {
            auto halves = split_halves(corpus.image(input.i_index));
            t_src = resize_bilinear(input.a == 0 ? halves.first : halves.second, res, res);
        } else {
            const double azim = rng.uniform(0.0, 360.0);
            t_src = ibl_crop(corpus.image(input.i_index),
                             CameraPose{azim, cam.inclination_deg, cam.roll_deg, cam.vfov_deg},
                             res, res);
        }
        if (ej.kind == SourceKind::Raster) {
            auto halves = split_halves(corpus.image(input.j_index));
            r_src = resize_bilinear(input.b == 0 ? halves.first : halves.second, res, res);
            c_src = resize_bilinear(input.b == 0 ? halves.second : halves.first, res, res);
        } else {
            const double azim = rng.uniform(0.0, 360.0);
            const CameraPose r_cam{azim, cam.inclination_deg, cam.roll_deg, cam.vfov_deg};
            // context camera: adjacent, non-overlapping horizontal FOV
            const double hfov = cam.vfov_deg;  // square output
            const CameraPose c_cam{azim + hfov, cam.inclination_deg, cam.roll_deg, cam.vfov_deg};
            r_src = ibl_crop(corpus.image(input.j_index), r_cam, res, res);
            c_src = ibl_crop(corpus.image(input.j_index), c_cam, res, res);
        }

        // Unexpose using capture metadata (sidecar first, corpus fallback).
        t_src = unexpose(t_src, t_src.exposure.value_or(ei.exposure));
        r_src = unexpose(r_src, r_src.exposure.value_or(ej.exposure));
        c_src = unexpose(c_src, c_src.exposure.value_or(ej.exposure));

        if (!t_src.white_xy) throw std::runtime_error("transmission source has no white point");
        if (!r_src.white_xy) r_src.white_xy = t_src.white_xy;

        // Geometric simulation
        const IncidenceMap imap = incidence_map(cam, res, res, config.max_missed_pixels);
        for (int row = 0; row < res; ++row) {
            for (int col = 0; col < res; ++col) {
                const double alpha = fresnel_alpha(imap.at(row, col), scenario.refractive_index);
                for (int ch = 0; ch < 3; ++ch)
                    t_src.at(ch, row, col) =
                        static_cast<float>(t_src.at(ch, row, col) * (1.0 - alpha));
            }
        }
        r_src = double_reflection(r_src, imap, scenario, cam);
        r_src = defocus_blur(r_src, defocus_diameter(scenario));

        // Photometric simulation
        const std::string profile_path =
            !ei.camera_profile.empty() ? ei.camera_profile : ej.camera_profile;
        if (profile_path.empty()) throw std::runtime_error("no camera profile for pair");
        const CameraProfile& profile = corpus.profile(profile_path);
        PhotometricOptions popts;
        popts.saturation_threshold = config.saturation_threshold;
        popts.white_shift_max_mired = config.white_shift_max_mired;
        const GrayWorldAwb awb;
        PhotometricExample ex = simulate_example(t_src, r_src, c_src, profile, awb, popts);
        if (ex.cull != CullReason::None) {
            rec.decision = ex.cull;
            return result;
        }

        // Mixture search
        const SsimReport report = ssim_weighted(ex.m, ex.t);
        const bool exposed =
            corpus.exposure_stats()
                ? well_exposed(ex.m, *corpus.exposure_stats(), config.exposure_gate_k)
                : true;
        const CullDecision decision = cull(report, exposed, config);

        rec.decision = decision.reason;
        rec.mean_ssim = report.mean_ssim;
        rec.std_ssim = report.std_ssim;
        rec.e_prime = ex.capture.exposure_scalar;
        rec.white_xy_awb = ex.capture.white_xy_awb;
        rec.has_stats = true;
        if (decision.keep) result.example = std::move(ex);
    } catch (const GeometryCullError&) {
        rec.decision = CullReason::GeometryCull;
    } catch (const std::exception& err) {
        // decision stays None; the error field alone disqualifies the record
        rec.error = err.what();
    }
    return result;
}

namespace {

std::string seed_hex(std::uint64_t seed) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(seed));
    return buf;
}

}  // namespace

DatasetManifest generate(const PreparedCorpus& corpus, const SimulationConfig& config,
                         const GenerateOptions& options) {
    const std::vector<std::pair<int, int>> pairs =
        build_pairs(corpus.corpus(), options.master_seed, config.include_outdoor_outdoor);

    std::vector<AttemptInput> attempts;
    for (const auto& [i, j] : pairs) {
        if (!pose_compatible(corpus.corpus().entries[i], corpus.corpus().entries[j], config))
            continue;
        for (int a = 0; a < 2; ++a)
            for (int b = 0; b < 2; ++b)
                for (int s = 0; s < 2; ++s) {
                    if (static_cast<int>(attempts.size()) >= options.budget) goto done;
                    AttemptInput input;
                    input.i_index = i;
                    input.j_index = j;
                    input.a = a;
                    input.b = b;
                    input.scenario_index = s;
                    input.seed = derive_seed(options.master_seed, static_cast<std::uint64_t>(i),
                                             static_cast<std::uint64_t>(j),
                                             static_cast<std::uint64_t>(a),
                                             static_cast<std::uint64_t>(b),
                                             static_cast<std::uint64_t>(s));
                    attempts.push_back(input);
                }
    }
done:

    if (options.write_outputs && !options.output_dir.empty())
        fs::create_directories(options.output_dir);

    std::vector<ManifestRecord> records(attempts.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (;;) {
            const std::size_t k = next.fetch_add(1);
            if (k >= attempts.size()) return;
            AttemptResult result = run_attempt(corpus, config, attempts[k]);
            if (result.example && options.write_outputs && !options.output_dir.empty()) {
                const std::string stem =
                    (fs::path(options.output_dir) / ("ex_" + seed_hex(result.record.seed))).string();
                try {
                    write_image(result.example->m, stem + "_m.lrim");
                    write_image(result.example->t, stem + "_t.lrim");
                    write_image(result.example->r, stem + "_r.lrim");
                    write_image(result.example->c, stem + "_c.lrim");
                    result.record.outputs = {{"m", stem + "_m.lrim"},
                                             {"t", stem + "_t.lrim"},
                                             {"r", stem + "_r.lrim"},
                                             {"c", stem + "_c.lrim"}};
                } catch (const std::exception& err) {
                    result.record.error = err.what();
                    result.record.outputs.clear();
                }
            }
            records[k] = std::move(result.record);
        }
    };

    const int n_threads = std::max(1, options.threads);
    if (n_threads == 1) {
        worker();
    } else {
        std::vector<std::thread> threads;
        threads.reserve(n_threads);
        for (int t = 0; t < n_threads; ++t) threads.emplace_back(worker);
        for (std::thread& t : threads) t.join();
    }

    DatasetManifest manifest;
    manifest.records = std::move(records);
    return manifest;
}

AttemptResult replay(const PreparedCorpus& corpus, const SimulationConfig& config,
                     const ManifestRecord& record) {
    AttemptInput input;
    input.i_index = corpus.find_entry(record.i_id);
    input.j_index = corpus.find_entry(record.j_id);
    input.a = record.a;
    input.b = record.b;
    input.scenario_index = record.scenario_index;
    input.seed = record.seed;
    AttemptResult result = run_attempt(corpus, config, input);
    // output paths are assigned at write time, not derivable from the attempt
    if (result.record.kept()) result.record.outputs = record.outputs;
    return result;
}

}  // namespace refsim
