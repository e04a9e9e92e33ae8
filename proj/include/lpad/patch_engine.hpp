#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "lpad/executor.hpp"
#include "lpad/netspec.hpp"

namespace lpad {

enum class LatentMode { gaussian, uniform, periodic_mix };

struct LatentOptions {
    LatentMode mode = LatentMode::gaussian;
    /// periodic_mix: leading channels replaced by plane waves; even channels
    /// vary along x, odd channels along y.
    int periodic_channels = 2;
    /// Angular frequency per latent pixel.
    float omega = 1.5707963f;
};

/// Spatial latents for an R x C block of patches. `origin_row`/`origin_col`
/// give the block's position on the global patch lattice; each cell is drawn
/// from a stream keyed by (seed, global row, global col), so the same cell is
/// reproduced whichever block it is sampled in.
struct LatentGrid {
    int rows = 0;
    int cols = 0;
    int origin_row = 0;
    int origin_col = 0;
    std::uint64_t seed = 0;
    LatentOptions options;
    TensorGrid z;
};

LatentGrid sample_latent_grid(int rows, int cols, const NetworkSpec& spec, std::uint64_t seed,
                              const LatentOptions& options = {}, int origin_row = 0, int origin_col = 0);

/// Draws the latent of a single global patch cell.
Tensor sample_latent_cell(const NetworkSpec& spec, std::uint64_t seed, const LatentOptions& options, int global_row,
                          int global_col);

/// Phases of the periodic channels for a seed.
std::vector<float> periodic_phases(std::uint64_t seed, int channels);

struct BlockOptions {
    const SlotBorders* borders = nullptr;
    std::optional<int> capture_col;
    std::optional<int> capture_row;
};

struct BlockResult {
    Tensor image;
    TensorGrid patches;
    /// Per spatial conv: the strips requested through BlockOptions.
    std::vector<SlotRecord> layer_inputs;
};

/// Runs the network jointly over the latent grid, exchanging halos before every
/// spatial conv (or zero padding each patch in the ablation), and assembles
/// the patches.
BlockResult generate_block(const LatentGrid& g, const NetworkSpec& spec, const NetworkParams& params,
                           PaddingMode padding = PaddingMode::local, const BlockOptions& options = {});

/// Reference path: concatenates the latents and runs the network once on the
/// whole tensor, padding before each spatial conv with `borders` (replicate
/// when absent). No patch structure is involved.
Tensor oracle_full_pass(const LatentGrid& g, const NetworkSpec& spec, const NetworkParams& params,
                        const SlotBorders* borders = nullptr);

}  // namespace lpad
