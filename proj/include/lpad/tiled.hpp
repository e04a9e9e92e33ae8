#pragma once

#include <vector>

#include "lpad/executor.hpp"
#include "lpad/netspec.hpp"

namespace lpad {

enum class TileMode { local_padding, overlap_baseline, single_pass };

struct TilePlan {
    TileMode mode = TileMode::local_padding;
    /// Tile extent in input pixels. 0 splits by grid_rows x grid_cols instead.
    int tile = 0;
    int grid_rows = 2;
    int grid_cols = 2;
    /// Baseline only: input pixels each tile extends into its neighbors.
    int overlap = 0;
    /// Expected scale factor of the network; 0 accepts whatever it has.
    int scale = 0;
};

/// Marks every zero-padded conv as fed by external halos. Throws SpecError
/// naming the strided convs, which cannot be fed that way.
NetworkSpec strip_zero_padding(const NetworkSpec& spec);

/// Same rewrite on bound parameters.
NetworkParams strip_zero_padding(const NetworkParams& params);

/// Input pixels of halo the network consumes from a neighbor: the sum over
/// spatial convs of halo / 2^(upsamples before it), rounded up.
int halo_demand(const NetworkSpec& spec);

/// Output pixels within which a change at the input border can reach.
int receptive_radius(const NetworkSpec& spec);

/// Tile boundaries [b0 = 0, b1, ..., bn = extent] along one axis. With a
/// tile extent, a remainder shorter than `min_extent` joins the last tile.
std::vector<int> tile_bounds(int extent, int tile, int count, int min_extent);

/// Runs an image-to-image network (z_spatial == 0) on a 1 x C x H x W image.
///  - local_padding: tiles exchange halos before every spatial conv and the
///    image border is replicated; zero paddings are stripped first.
///  - overlap_baseline: tiles run independently with replicate padding over
///    an input window widened by `overlap`; overlaps are blended with
///    complementary linear ramps (overlap 0 is a plain concatenation).
///  - single_pass: the whole image at once, padding as annotated.
Tensor tile_apply(const Tensor& image, const NetworkSpec& spec, const NetworkParams& params, const TilePlan& plan);

}  // namespace lpad
