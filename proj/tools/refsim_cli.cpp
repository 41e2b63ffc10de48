// refsim: synthesize glass-reflection training examples from pairs of
// linear scene-referred images.
//
// Exit codes: 0 success/keep, 2 cull (synth), 1 error.

#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "refsim/dataset.hpp"

namespace fs = std::filesystem;
using namespace refsim;

namespace {

constexpr std::uint64_t kDefaultSeed = 0x5eed5eed5eed5eedULL;

SimulationConfig load_config_or_default(const std::string& path) {
    if (path.empty()) return SimulationConfig{};
    return load_simulation_config(path);
}

SourceEntry entry_from_image(const std::string& path, const LinearImage& img,
                             SceneClass fallback_class) {
    SourceEntry e;
    e.id = path;
    e.path = path;
    e.kind = img.width() == 2 * img.height() ? SourceKind::IblPanorama : SourceKind::Raster;
    e.scene_class = img.scene_class.value_or(fallback_class);
    e.pose = img.pose ? img.pose : std::optional<PoseMeta>(PoseMeta{});
    e.exposure = img.exposure.value_or(ExposureMeta{1.0, 1.0, 1.0});
    if (img.camera_profile_id)
        e.camera_profile = (fs::path(path).parent_path() / *img.camera_profile_id).string();
    return e;
}

void write_example_outputs(const PhotometricExample& ex, const std::string& out_dir,
                           std::uint64_t seed, ManifestRecord& rec) {
    fs::create_directories(out_dir);
    char hex[17];
    std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(seed));
    const std::string stem = (fs::path(out_dir) / ("ex_" + std::string(hex))).string();
    const LinearImage* imgs[4] = {&ex.m, &ex.t, &ex.r, &ex.c};
    const char* names[4] = {"m", "t", "r", "c"};
    for (int k = 0; k < 4; ++k) {
        const std::string raster = stem + "_" + names[k] + ".lrim";
        write_image(*imgs[k], raster);
        write_preview_png(*imgs[k], stem + "_" + names[k] + ".png");
        rec.outputs[names[k]] = raster;
    }
}

int cmd_synth(const std::string& i_path, const std::string& j_path,
              const std::string& config_path, const std::string& profile_path,
              std::uint64_t seed, const std::string& out_dir, int resolution, bool verbose) {
    SimulationConfig config = load_config_or_default(config_path);
    if (resolution > 0) config.output_resolution = resolution;
    config.validate();

    const LinearImage i_img = read_image(i_path);
    const LinearImage j_img = read_image(j_path);
    Corpus corpus;
    corpus.entries.push_back(entry_from_image(i_path, i_img, SceneClass::Indoor));
    corpus.entries.push_back(entry_from_image(j_path, j_img, SceneClass::Outdoor));
    if (!profile_path.empty()) {
        corpus.entries[0].camera_profile = profile_path;
        corpus.entries[1].camera_profile = profile_path;
    }
    if (corpus.entries[0].camera_profile.empty() && corpus.entries[1].camera_profile.empty())
        throw std::runtime_error("no camera profile: pass --profile or set one in a sidecar");

    PreparedCorpus prepared(std::move(corpus), config);
    AttemptInput input;
    input.i_index = 0;
    input.j_index = 1;
    input.seed = seed;
    AttemptResult result = run_attempt(prepared, config, input);

    if (!result.record.error.empty()) {
        std::cerr << "error: " << result.record.error << "\n";
        return 1;
    }
    if (result.example) write_example_outputs(*result.example, out_dir, seed, result.record);
    fs::create_directories(out_dir.empty() ? "." : out_dir);
    DatasetManifest manifest;
    manifest.records.push_back(result.record);
    write_manifest(manifest, (fs::path(out_dir.empty() ? "." : out_dir) / "manifest.jsonl").string());

    if (result.record.kept()) {
        if (verbose)
            std::cout << "kept: mean_ssim=" << result.record.mean_ssim
                      << " std_ssim=" << result.record.std_ssim
                      << " e_prime=" << result.record.e_prime << "\n";
        return 0;
    }
    std::cout << "culled: " << to_string(result.record.decision) << "\n";
    return 2;
}

int cmd_generate(const std::string& corpus_path, const std::string& config_path,
                 std::uint64_t seed, int budget, int threads, const std::string& out_dir,
                 int resolution, bool verbose) {
    SimulationConfig config = load_config_or_default(config_path);
    if (resolution > 0) config.output_resolution = resolution;
    config.validate();

    Corpus corpus = load_corpus(corpus_path);
    if (verbose) std::cout << "corpus: " << corpus.entries.size() << " sources\n";
    PreparedCorpus prepared(std::move(corpus), config);

    GenerateOptions options;
    options.master_seed = seed;
    options.budget = budget;
    options.threads = threads;
    options.output_dir = out_dir;
    options.verbose = verbose;

    DatasetManifest manifest = generate(prepared, config, options);
    fs::create_directories(out_dir.empty() ? "." : out_dir);
    write_manifest(manifest, (fs::path(out_dir.empty() ? "." : out_dir) / "manifest.jsonl").string());

    std::map<std::string, int> histogram;
    int kept = 0;
    for (const ManifestRecord& rec : manifest.records) {
        if (!rec.error.empty())
            ++histogram["error"];
        else
            ++histogram[to_string(rec.decision)];
        if (rec.kept()) ++kept;
    }
    std::cout << "attempts: " << manifest.records.size() << ", kept: " << kept << "\n";
    for (const auto& [reason, count] : histogram)
        std::cout << "  " << reason << ": " << count << "\n";
    return 0;
}

int cmd_validate(const std::string& manifest_path, const std::string& config_path, bool verbose) {
    const SimulationConfig config = load_config_or_default(config_path);
    const DatasetManifest manifest = load_manifest(manifest_path);
    if (manifest.records.empty()) {
        std::cout << "warning: empty manifest, nothing to validate\n";
        return 0;
    }
    int violations = 0;
    int checked = 0;
    for (const ManifestRecord& rec : manifest.records) {
        if (!rec.kept()) continue;
        ++checked;
        try {
            const LinearImage m = read_image(rec.outputs.at("m"));
            const LinearImage t = read_image(rec.outputs.at("t"));
            const LinearImage r = read_image(rec.outputs.at("r"));
            const LinearImage c = read_image(rec.outputs.at("c"));

            const double m_max = std::max(m.max_sample(), 1e-12);
            double worst = 0.0;
            for (std::size_t i = 0; i < m.data().size(); ++i) {
                const double resid =
                    std::abs(static_cast<double>(m.data()[i]) - (t.data()[i] + r.data()[i]));
                worst = std::max(worst, resid / m_max);
            }
            if (worst >= 1e-5) throw std::runtime_error("m != t + r");

            const XyCoord w = m.white_xy.value();
            for (const LinearImage* img : {&t, &r, &c}) {
                const XyCoord wi = img->white_xy.value();
                if (std::abs(wi.x - w.x) > 1e-9 || std::abs(wi.y - w.y) > 1e-9)
                    throw std::runtime_error("white point mismatch");
            }

            const SsimReport report = ssim_weighted(m, t);
            if (report.mean_ssim < config.ssim_mean_min || report.mean_ssim > config.ssim_mean_max)
                throw std::runtime_error("mean SSIM out of range");
            if (report.std_ssim < config.ssim_std_min)
                throw std::runtime_error("SSIM std below threshold");
            if (rec.has_stats && std::abs(report.mean_ssim - rec.mean_ssim) > 1e-9)
                throw std::runtime_error("mean SSIM disagrees with manifest");
            if (verbose) std::cout << "ok: seed " << rec.seed << "\n";
        } catch (const std::exception& err) {
            std::cerr << "violation at seed " << rec.seed << ": " << err.what() << "\n";
            ++violations;
        }
    }
    std::cout << "validated " << checked << " kept records, " << violations << " violations\n";
    return violations == 0 ? 0 : 1;
}

int cmd_stats(const std::string& manifest_path) {
    const DatasetManifest manifest = load_manifest(manifest_path);
    std::map<std::string, int> histogram;
    std::map<std::string, int> splits;
    int kept = 0;
    double ssim_sum = 0.0;
    for (const ManifestRecord& rec : manifest.records) {
        if (!rec.error.empty())
            ++histogram["error"];
        else
            ++histogram[to_string(rec.decision)];
        if (rec.kept()) {
            ++kept;
            ++splits[rec.split];
            ssim_sum += rec.mean_ssim;
        }
    }
    std::cout << "attempts: " << manifest.records.size() << "\n";
    std::cout << "kept: " << kept;
    if (!manifest.records.empty())
        std::cout << " (" << 100.0 * kept / manifest.records.size() << "%)";
    std::cout << "\n";
    if (kept > 0) std::cout << "mean SSIM of kept: " << ssim_sum / kept << "\n";
    std::cout << "decisions:\n";
    for (const auto& [reason, count] : histogram) std::cout << "  " << reason << ": " << count << "\n";
    if (!splits.empty()) {
        std::cout << "splits of kept:\n";
        for (const auto& [split, count] : splits) std::cout << "  " << split << ": " << count << "\n";
    }
    return 0;
}

int cmd_preview(const std::string& in_path, const std::string& out_path) {
    const LinearImage img = read_image(in_path);
    write_preview_png(img, out_path);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"refsim: glass-reflection training-example synthesis"};
    app.require_subcommand(1);

    std::string config_path, out_dir = "out", corpus_path, manifest_path;
    std::string i_path, j_path, profile_path, preview_in, preview_out;
    std::uint64_t seed = kDefaultSeed;
    int threads = 1, budget = 64, resolution = 0;
    bool verbose = false;
    app.add_flag("-v,--verbose", verbose, "verbose output");

    auto* synth = app.add_subcommand("synth", "synthesize one example from two images");
    synth->add_option("i", i_path, "transmission source raster")->required();
    synth->add_option("j", j_path, "reflection source raster")->required();
    synth->add_option("--config", config_path, "simulation config JSON");
    synth->add_option("--profile", profile_path, "camera profile JSON");
    synth->add_option("--seed", seed, "example seed");
    synth->add_option("--out", out_dir, "output directory");
    synth->add_option("--resolution", resolution, "output resolution override");

    auto* gen = app.add_subcommand("generate", "batch-generate a dataset from a corpus");
    gen->add_option("corpus", corpus_path, "corpus manifest (JSON lines)")->required();
    gen->add_option("--config", config_path, "simulation config JSON");
    gen->add_option("--seed", seed, "master seed");
    gen->add_option("--budget", budget, "max attempts");
    gen->add_option("--threads", threads, "worker threads");
    gen->add_option("--out", out_dir, "output directory");
    gen->add_option("--resolution", resolution, "output resolution override");

    auto* validate = app.add_subcommand("validate", "re-check kept examples in a manifest");
    validate->add_option("manifest", manifest_path, "dataset manifest")->required();
    validate->add_option("--config", config_path, "simulation config JSON");

    auto* stats = app.add_subcommand("stats", "summarize a manifest");
    stats->add_option("manifest", manifest_path, "dataset manifest")->required();

    auto* preview = app.add_subcommand("preview", "write an 8-bit PNG preview of a raster");
    preview->add_option("input", preview_in, "raster path")->required();
    preview->add_option("output", preview_out, "PNG path")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*synth)
            return cmd_synth(i_path, j_path, config_path, profile_path, seed, out_dir, resolution,
                             verbose);
        if (*gen)
            return cmd_generate(corpus_path, config_path, seed, budget, threads, out_dir,
                                resolution, verbose);
        if (*validate) return cmd_validate(manifest_path, config_path, verbose);
        if (*stats) return cmd_stats(manifest_path);
        if (*preview) return cmd_preview(preview_in, preview_out);
    } catch (const std::exception& err) {
        std::cerr << "error: " << err.what() << "\n";
        return 1;
    }
    return 1;
}
