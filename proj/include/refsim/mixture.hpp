#pragma once

#include <string>
#include <vector>

#include "refsim/geometry.hpp"
#include "refsim/image.hpp"
#include "refsim/photometric.hpp"

namespace refsim {

struct SsimReport {
    double mean_ssim = 0.0;
    double std_ssim = 0.0;
    int map_width = 0;
    int map_height = 0;
    std::vector<double> ssim_map;  // channel-weighted, row-major
};

struct CullDecision {
    bool keep = false;
    CullReason reason = CullReason::None;

    static CullDecision kept() { return CullDecision{true, CullReason::None}; }
    static CullDecision culled(CullReason r) { return CullDecision{false, r}; }
};

struct SsimParams {
    int window = 11;
    double sigma = 1.5;
    double c1 = 0.01 * 0.01;  // (0.01 * L)^2, L = 1 after gamma encode
    double c2 = 0.03 * 0.03;
};

/// Channel-weighted windowed SSIM between two linear-sRGB images. Both are
/// gamma encoded (continuous curve) first; per-channel maps are combined with
/// weights equal to the per-channel mean of m, normalized to sum 1.
SsimReport ssim_weighted(const LinearImage& m, const LinearImage& t,
                         const SsimParams& params = {});

/// Corpus statistics over per-image means, cached as JSON.
struct CorpusStats {
    double mean = 0.0;
    double sigma = 0.0;
    int n = 0;
};

CorpusStats load_corpus_stats(const std::string& path);
void save_corpus_stats(const CorpusStats& stats, const std::string& path);

/// |mean(m) - stats.mean| <= k * stats.sigma (inclusive).
/// Throws on sigma <= 0 (degenerate stats).
bool well_exposed(const LinearImage& m, const CorpusStats& stats, double k = 2.0);

/// SSIM/exposure gates of the mixture search; pure function.
CullDecision cull(const SsimReport& report, bool exposed, const SimulationConfig& config);

}  // namespace refsim
