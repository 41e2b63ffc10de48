#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "refsim/geometry.hpp"
#include "refsim/image.hpp"
#include "refsim/mixture.hpp"
#include "refsim/photometric.hpp"

namespace refsim {

enum class SourceKind { Raster, IblPanorama };

struct SourceEntry {
    std::string id;    // image path, relative to the corpus manifest
    std::string path;  // resolved path
    SceneClass scene_class = SceneClass::Indoor;
    SourceKind kind = SourceKind::Raster;
    std::optional<PoseMeta> pose;
    ExposureMeta exposure;
    std::string camera_profile;  // profile JSON path, resolved

    void validate() const;
};

struct Corpus {
    std::vector<SourceEntry> entries;
};

/// JSON-lines corpus manifest, one SourceEntry per line.
Corpus load_corpus(const std::string& manifest_path);

/// (O x I) u (I x O) u (I x I) minus the diagonal; order shuffled by seed.
/// Optionally adds O x O. Throws when a scene class is empty.
std::vector<std::pair<int, int>> build_pairs(const Corpus& corpus, std::uint64_t seed,
                                             bool include_outdoor_outdoor = false);

/// Pose gates of the pairing stage. An IBL partner adopts the raster's pose;
/// IBL x IBL pairs have no pose constraint.
bool pose_compatible(const SourceEntry& i, const SourceEntry& j, const SimulationConfig& config);

struct ContextCrops {
    LinearImage t_src;
    LinearImage r_src;
    LinearImage c_src;
};

/// Splits i and j into maximal non-overlapping square halves (left/right for
/// landscape, top/bottom for portrait): t from half a of i, r from half b of
/// j, c from the other half of j.
ContextCrops make_context_crops(const LinearImage& i_img, const LinearImage& j_img, int a, int b);

struct ManifestRecord {
    std::uint64_t seed = 0;
    std::string i_id;
    std::string j_id;
    int a = 0;
    int b = 0;
    int scenario_index = 0;
    CaptureScenario scenario;
    CullReason decision = CullReason::None;
    std::string split;  // "train" | "val" | "test" | "mixed"
    std::map<std::string, std::string> outputs;  // m/t/r/c -> path, when kept
    double mean_ssim = 0.0;
    double std_ssim = 0.0;
    double e_prime = 0.0;
    XyCoord white_xy_awb{};
    bool has_stats = false;
    std::string error;  // per-record I/O failure, when any

    bool kept() const { return decision == CullReason::None && error.empty(); }
};

struct DatasetManifest {
    std::vector<ManifestRecord> records;
};

std::string manifest_record_to_json(const ManifestRecord& rec);
ManifestRecord manifest_record_from_json(const std::string& line);
DatasetManifest load_manifest(const std::string& path);

struct AttemptInput {
    int i_index = 0;
    int j_index = 0;
    int a = 0;
    int b = 0;
    int scenario_index = 0;
    std::uint64_t seed = 0;
};

struct AttemptResult {
    ManifestRecord record;
    std::optional<PhotometricExample> example;  // present when kept
};

/// Preloaded corpus: images and camera profiles resolved up front so the
/// parallel phase is read-only.
class PreparedCorpus {
public:
    PreparedCorpus(Corpus corpus, const SimulationConfig& config);

    const Corpus& corpus() const { return corpus_; }
    const LinearImage& image(int index) const { return images_[index]; }
    const CameraProfile& profile(const std::string& path) const;
    double ibl_reference_median() const { return ibl_reference_median_; }
    const std::optional<CorpusStats>& exposure_stats() const { return exposure_stats_; }
    int find_entry(const std::string& id) const;

private:
    Corpus corpus_;
    std::vector<LinearImage> images_;
    std::map<std::string, CameraProfile> profiles_;
    double ibl_reference_median_ = 0.18;
    std::optional<CorpusStats> exposure_stats_;
};

/// One full simulate -> search attempt; pure given its inputs.
AttemptResult run_attempt(const PreparedCorpus& corpus, const SimulationConfig& config,
                          const AttemptInput& input);

struct GenerateOptions {
    std::uint64_t master_seed = 0x5eed5eed5eed5eedULL;
    int budget = 0;  // max attempts; 0 means none
    int threads = 1;
    std::string output_dir;
    bool write_outputs = true;
    bool verbose = false;
};

/// Full pipeline: pairing, pose gates, two scenarios per (pair, crop) combo,
/// simulation, mixture search, output writing, manifest. Deterministic given
/// the master seed regardless of thread count.
DatasetManifest generate(const PreparedCorpus& corpus, const SimulationConfig& config,
                         const GenerateOptions& options);

void write_manifest(const DatasetManifest& manifest, const std::string& path);

/// Re-runs the attempt a manifest record describes, from its recorded seed.
AttemptResult replay(const PreparedCorpus& corpus, const SimulationConfig& config,
                     const ManifestRecord& record);

/// 80/15/5 split by source id, stable under corpus reordering.
std::string split_for_id(const std::string& id);

}  // namespace refsim
