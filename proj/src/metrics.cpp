#include "lpad/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>
#include <string>

namespace lpad {

namespace {

/// Mean |I(line) - I(line - 1)| over channels and the other axis.
double line_difference(const Tensor& img, SeamAxis axis, int line) {
    double sum = 0.0;
    for (int c = 0; c < img.c(); ++c) {
        const float* p = img.plane(0, c);
        if (axis == SeamAxis::vertical) {
            for (int y = 0; y < img.h(); ++y) {
                sum += std::fabs(p[y * img.w() + line] - p[y * img.w() + line - 1]);
            }
        } else {
            for (int x = 0; x < img.w(); ++x) sum += std::fabs(p[line * img.w() + x] - p[(line - 1) * img.w() + x]);
        }
    }
    const int len = axis == SeamAxis::vertical ? img.h() : img.w();
    return sum / (static_cast<double>(img.c()) * len);
}

int bin_of(float v) {
    const int b = static_cast<int>(std::floor((v + 1.0f) * 0.5f * kHistogramBins));
    return std::clamp(b, 0, kHistogramBins - 1);
}

}  // namespace

SeamReport seam_metric(const Tensor& image, const std::vector<Seam>& seams) {
    if (image.n() != 1 || image.empty()) throw ShapeError("seam_metric needs a single non-empty image");
    std::set<int> vertical, horizontal;
    for (const Seam& s : seams) (s.axis == SeamAxis::vertical ? vertical : horizontal).insert(s.position);

    SeamReport report;
    for (const Seam& s : seams) {
        const bool v = s.axis == SeamAxis::vertical;
        const int extent = v ? image.w() : image.h();
        const std::set<int>& same = v ? vertical : horizontal;
        if (s.position <= 0 || s.position >= extent) {
            throw std::invalid_argument(std::string(v ? "vertical" : "horizontal") + " seam at " +
                                        std::to_string(s.position) + " is on or beyond the image border");
        }
        double base = 0.0;
        int lines = 0;
        for (int d = -kSeamOffsets; d <= kSeamOffsets; ++d) {
            const int line = s.position + d;
            if (d == 0 || line <= 0 || line >= extent || same.count(line)) continue;
            base += line_difference(image, s.axis, line);
            ++lines;
        }
        if (lines < kMinBaselineLines) {
            throw std::invalid_argument("seam at " + std::to_string(s.position) + " has only " +
                                        std::to_string(lines) + " baseline lines");
        }
        SeamRatio r{s, line_difference(image, s.axis, s.position), base / lines, 1.0};
        if (r.baseline > 0.0) {
            r.ratio = r.across / r.baseline;
        } else if (r.across > 0.0) {
            r.ratio = std::numeric_limits<double>::infinity();
        }
        report.seams.push_back(r);
    }
    for (const SeamRatio& r : report.seams) {
        report.max_ratio = std::max(report.max_ratio, r.ratio);
        report.mean_ratio += r.ratio / static_cast<double>(report.seams.size());
    }
    return report;
}

std::vector<Seam> grid_seams(int height, int width, int extent) {
    if (extent < 1) throw std::invalid_argument("patch extent must be positive");
    std::vector<Seam> out;
    for (int x = extent; x < width; x += extent) out.push_back({SeamAxis::vertical, x});
    for (int y = extent; y < height; y += extent) out.push_back({SeamAxis::horizontal, y});
    return out;
}

Tensor diversity_map(const std::function<Tensor(int)>& sampler, int K) {
    if (K < 2) throw std::invalid_argument("diversity_map needs K >= 2");
    Tensor first = sampler(0);
    std::vector<double> mean(first.values().begin(), first.values().end());
    std::vector<double> m2(mean.size(), 0.0);
    // Welford's update per pixel.
    for (int k = 1; k < K; ++k) {
        const Tensor s = sampler(k);
        if (s.shape() != first.shape()) throw ShapeError("sampler returned a differently shaped image");
        const float* p = s.data();
        for (std::size_t i = 0; i < mean.size(); ++i) {
            const double delta = p[i] - mean[i];
            mean[i] += delta / (k + 1);
            m2[i] += delta * (p[i] - mean[i]);
        }
    }
    Tensor out(first.shape());
    for (std::size_t i = 0; i < m2.size(); ++i) out.data()[i] = static_cast<float>(std::sqrt(m2[i] / (K - 1)));
    return out;
}

BandMeans band_means(const Tensor& map, int band) {
    if (band < 1 || 2 * band >= std::min(map.h(), map.w())) {
        throw std::invalid_argument("band " + std::to_string(band) + " leaves no interior");
    }
    double border = 0.0, interior = 0.0;
    std::size_t nb = 0, ni = 0;
    for (int n = 0; n < map.n(); ++n)
        for (int c = 0; c < map.c(); ++c)
            for (int y = 0; y < map.h(); ++y)
                for (int x = 0; x < map.w(); ++x) {
                    const bool edge = y < band || x < band || y >= map.h() - band || x >= map.w() - band;
                    (edge ? border : interior) += map.at(n, c, y, x);
                    ++(edge ? nb : ni);
                }
    return {border / nb, interior / ni};
}

PatchStats patch_stats(const Tensor& image, int extent) {
    if (extent < 1) throw std::invalid_argument("patch extent must be positive");
    const int rows = image.h() / extent, cols = image.w() / extent;
    if (image.n() != 1 || rows < 1 || cols < 1) {
        throw ShapeError("image " + to_string(image.shape()) + " holds no " + std::to_string(extent) + "px patch");
    }
    const int C = image.c();
    PatchStats stats{extent, {}, std::vector<std::array<double, kHistogramBins>>(C)};
    std::vector<double> totals(C, 0.0);
    const double count = static_cast<double>(extent) * extent;
    for (int r = 0; r < rows; ++r) {
        for (int q = 0; q < cols; ++q) {
            PatchSummary p{r, q, std::vector<double>(C), std::vector<double>(C),
                           std::vector<std::array<std::uint32_t, kHistogramBins>>(C)};
            for (int c = 0; c < C; ++c) {
                double sum = 0.0, sq = 0.0;
                p.histogram[c].fill(0);
                for (int y = r * extent; y < (r + 1) * extent; ++y)
                    for (int x = q * extent; x < (q + 1) * extent; ++x) {
                        const float v = image.at(0, c, y, x);
                        sum += v;
                        sq += static_cast<double>(v) * v;
                        ++p.histogram[c][bin_of(v)];
                    }
                p.mean[c] = sum / count;
                p.stddev[c] = std::sqrt(std::max(sq / count - p.mean[c] * p.mean[c], 0.0));
                for (int b = 0; b < kHistogramBins; ++b) stats.population[c][b] += p.histogram[c][b];
                totals[c] += count;
            }
            stats.patches.push_back(std::move(p));
        }
    }
    for (int c = 0; c < C; ++c)
        for (double& v : stats.population[c]) v /= totals[c];
    return stats;
}

double patch_distance(const PatchStats& a, const PatchStats& b) {
    if (a.population.size() != b.population.size() || a.population.empty()) {
        throw ShapeError("patch populations have different channel counts");
    }
    const double bin_width = 2.0 / kHistogramBins;
    double total = 0.0;
    for (std::size_t c = 0; c < a.population.size(); ++c) {
        double ca = 0.0, cb = 0.0, l1 = 0.0;
        for (int k = 0; k < kHistogramBins; ++k) {
            ca += a.population[c][k];
            cb += b.population[c][k];
            l1 += std::fabs(ca - cb);
        }
        total += l1 * bin_width;
    }
    return total / static_cast<double>(a.population.size());
}

}  // namespace lpad
