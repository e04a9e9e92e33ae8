#pragma once

#include <array>
#include <functional>
#include <vector>

#include "lpad/tensor.hpp"

namespace lpad {

enum class SeamAxis { vertical, horizontal };

/// A patch boundary: a vertical seam at x lies between columns x - 1 and x,
/// a horizontal seam at y between rows y - 1 and y.
struct Seam {
    SeamAxis axis = SeamAxis::vertical;
    int position = 0;
};

struct SeamRatio {
    Seam seam;
    double across = 0.0;    // mean |first difference| across the seam line
    double baseline = 0.0;  // same over the offset lines
    double ratio = 1.0;
};

struct SeamReport {
    std::vector<SeamRatio> seams;
    double max_ratio = 0.0;
    double mean_ratio = 0.0;
};

/// Offsets +-1..kSeamOffsets around a seam form its baseline.
inline constexpr int kSeamOffsets = 8;
inline constexpr int kMinBaselineLines = 8;

/// Ratio of the mean absolute first difference across each seam to the mean
/// over the offset lines nearby (other seams excluded). 0/0 counts as 1.
/// Throws std::invalid_argument for a seam on or outside the image border or
/// one with fewer than kMinBaselineLines usable offset lines.
SeamReport seam_metric(const Tensor& image, const std::vector<Seam>& seams);

/// Interior seams of a grid of `extent` sized patches.
std::vector<Seam> grid_seams(int height, int width, int extent);

/// Unbiased per-pixel standard deviation over K samples from `sampler(k)`.
Tensor diversity_map(const std::function<Tensor(int)>& sampler, int K);

/// Mean of the map (over channels) within `band` pixels of the border,
/// and over the rest.
struct BandMeans {
    double border = 0.0;
    double interior = 0.0;
};
BandMeans band_means(const Tensor& map, int band);

inline constexpr int kHistogramBins = 16;

struct PatchSummary {
    int row = 0;
    int col = 0;
    std::vector<double> mean;  // per channel
    std::vector<double> stddev;
    std::vector<std::array<std::uint32_t, kHistogramBins>> histogram;  // over [-1, 1]
};

struct PatchStats {
    int extent = 0;
    std::vector<PatchSummary> patches;
    /// Per-channel histogram of the whole patch population, normalized.
    std::vector<std::array<double, kHistogramBins>> population;
};

/// Per-patch channel statistics over the floor(H/e) x floor(W/e) grid.
PatchStats patch_stats(const Tensor& image, int extent);

/// Mean over channels of the L1 distance between the populations' cumulative
/// histograms times the bin width: the 1-D earth mover's distance on the
/// binned values, from 0 (same) up to 2 * 15/16 (all mass in opposite bins).
double patch_distance(const PatchStats& a, const PatchStats& b);

}  // namespace lpad
