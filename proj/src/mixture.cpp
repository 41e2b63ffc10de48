#include "refsim/mixture.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace refsim {

using nlohmann::json;

namespace {

std::vector<double> gaussian_window(int size, double sigma) {
    std::vector<double> w(size);
    const int half = size / 2;
    double total = 0.0;
    for (int i = 0; i < size; ++i) {
        const double d = i - half;
        w[i] = std::exp(-d * d / (2.0 * sigma * sigma));
        total += w[i];
    }
    for (double& v : w) v /= total;
    return w;
}

int reflect_index(int i, int n) {
    while (i < 0 || i >= n) {
        if (i < 0) i = -1 - i;
        if (i >= n) i = 2 * n - 1 - i;
    }
    return i;
}

// Separable Gaussian filter with symmetric padding.
std::vector<double> gaussian_filter(const std::vector<double>& img, int width, int height,
                                    const std::vector<double>& window) {
    const int half = static_cast<int>(window.size()) / 2;
    std::vector<double> tmp(img.size());
    for (int r = 0; r < height; ++r) {
        for (int c = 0; c < width; ++c) {
            double acc = 0.0;
            for (int k = -half; k <= half; ++k)
                acc += window[k + half] * img[static_cast<std::size_t>(r) * width +
                                              reflect_index(c + k, width)];
            tmp[static_cast<std::size_t>(r) * width + c] = acc;
        }
    }
    std::vector<double> out(img.size());
    for (int r = 0; r < height; ++r) {
        for (int c = 0; c < width; ++c) {
            double acc = 0.0;
            for (int k = -half; k <= half; ++k)
                acc += window[k + half] *
                       tmp[static_cast<std::size_t>(reflect_index(r + k, height)) * width + c];
            out[static_cast<std::size_t>(r) * width + c] = acc;
        }
    }
    return out;
}

}  // namespace

SsimReport ssim_weighted(const LinearImage& m, const LinearImage& t, const SsimParams& params) {
    if (m.width() != t.width() || m.height() != t.height())
        throw std::invalid_argument("dimension mismatch");
    const int w = m.width();
    const int h = m.height();
    const std::size_t n = static_cast<std::size_t>(w) * h;
    const std::vector<double> window = gaussian_window(params.window, params.sigma);

    SsimReport report;
    report.map_width = w;
    report.map_height = h;
    report.ssim_map.assign(n, 0.0);

    std::array<double, 3> channel_weight{};
    std::array<std::vector<double>, 3> channel_map;

    for (int ch = 0; ch < 3; ++ch) {
        std::vector<double> a(n), b(n);
        double m_channel_sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            a[i] = srgb_encode(m.plane(ch)[i]);
            b[i] = srgb_encode(t.plane(ch)[i]);
            m_channel_sum += a[i];
        }
        channel_weight[ch] = m_channel_sum / static_cast<double>(n);

        std::vector<double> aa(n), bb(n), ab(n);
        for (std::size_t i = 0; i < n; ++i) {
            aa[i] = a[i] * a[i];
            bb[i] = b[i] * b[i];
            ab[i] = a[i] * b[i];
        }
        const std::vector<double> mu_a = gaussian_filter(a, w, h, window);
        const std::vector<double> mu_b = gaussian_filter(b, w, h, window);
        const std::vector<double> e_aa = gaussian_filter(aa, w, h, window);
        const std::vector<double> e_bb = gaussian_filter(bb, w, h, window);
        const std::vector<double> e_ab = gaussian_filter(ab, w, h, window);

        channel_map[ch].resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double var_a = e_aa[i] - mu_a[i] * mu_a[i];
            const double var_b = e_bb[i] - mu_b[i] * mu_b[i];
            const double cov = e_ab[i] - mu_a[i] * mu_b[i];
            channel_map[ch][i] =
                ((2.0 * mu_a[i] * mu_b[i] + params.c1) * (2.0 * cov + params.c2)) /
                ((mu_a[i] * mu_a[i] + mu_b[i] * mu_b[i] + params.c1) *
                 (var_a + var_b + params.c2));
        }
    }

    double weight_total = channel_weight[0] + channel_weight[1] + channel_weight[2];
    if (weight_total <= 0.0) {
        channel_weight = {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
        weight_total = 1.0;
    }
    double sum = 0.0, sum_sq = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double v = 0.0;
        for (int ch = 0; ch < 3; ++ch) v += channel_weight[ch] / weight_total * channel_map[ch][i];
        report.ssim_map[i] = v;
        sum += v;
        sum_sq += v * v;
    }
    report.mean_ssim = sum / static_cast<double>(n);
    const double var = std::max(0.0, sum_sq / static_cast<double>(n) -
                                         report.mean_ssim * report.mean_ssim);
    report.std_ssim = std::sqrt(var);
    return report;
}

CorpusStats load_corpus_stats(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open corpus stats: " + path);
    json j = json::parse(in);
    return CorpusStats{j.at("mean").get<double>(), j.at("sigma").get<double>(),
                       j.at("n").get<int>()};
}

void save_corpus_stats(const CorpusStats& stats, const std::string& path) {
    json j{{"mean", stats.mean}, {"sigma", stats.sigma}, {"n", stats.n}};
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write corpus stats: " + path);
    out << j.dump(2) << "\n";
}

bool well_exposed(const LinearImage& m, const CorpusStats& stats, double k) {
    if (!(stats.sigma > 0.0)) throw std::runtime_error("degenerate corpus stats");
    return std::abs(m.mean() - stats.mean) <= k * stats.sigma;
}

CullDecision cull(const SsimReport& report, bool exposed, const SimulationConfig& config) {
    if (report.mean_ssim > config.ssim_mean_max)
        return CullDecision::culled(CullReason::TooTransparent);
    if (report.mean_ssim < config.ssim_mean_min)
        return CullDecision::culled(CullReason::TooDestroyed);
    if (report.std_ssim < config.ssim_std_min)
        return CullDecision::culled(CullReason::LowVariance);
    if (!exposed) return CullDecision::culled(CullReason::OverUnderExposed);
    return CullDecision::kept();
}

}  // namespace refsim
