#include "lpad/patch_engine.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

namespace lpad {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t cell_seed(std::uint64_t seed, int row, int col) {
    std::uint64_t h = splitmix64(seed);
    h = splitmix64(h ^ static_cast<std::uint64_t>(static_cast<std::uint32_t>(row)));
    h = splitmix64(h ^ (static_cast<std::uint64_t>(static_cast<std::uint32_t>(col)) << 32));
    return h;
}

void check_latents(const LatentGrid& g, const NetworkSpec& spec, const NetworkParams& params) {
    spec.validate();
    if (params.layers.size() != spec.layers.size()) {
        throw SpecError("parameters bind " + std::to_string(params.layers.size()) + " layers, spec has " +
                        std::to_string(spec.layers.size()));
    }
    if (g.rows < 1 || g.cols < 1 || g.z.rows != g.rows || g.z.cols != g.cols ||
        g.z.parts.size() != static_cast<std::size_t>(g.rows) * g.cols) {
        throw ShapeError("latent grid is not fully populated");
    }
    for (const Tensor& z : g.z.parts) {
        if (z.c() != spec.z_channels || z.h() != spec.z_spatial || z.w() != spec.z_spatial) {
            throw ShapeError("latent " + to_string(z.shape()) + " does not match spec (" +
                             std::to_string(spec.z_channels) + " x " + std::to_string(spec.z_spatial) + "^2)");
        }
    }
}

}  // namespace

std::vector<float> periodic_phases(std::uint64_t seed, int channels) {
    std::mt19937_64 rng(splitmix64(seed ^ 0x70657269ULL));
    std::uniform_real_distribution<float> phase(0.0f, 2.0f * std::numbers::pi_v<float>);
    std::vector<float> out(channels);
    for (float& p : out) p = phase(rng);
    return out;
}

Tensor sample_latent_cell(const NetworkSpec& spec, std::uint64_t seed, const LatentOptions& options, int global_row,
                          int global_col) {
    if (spec.z_spatial < 1) throw SpecError("network has no spatial latent");
    const int zs = spec.z_spatial;
    Tensor z(1, spec.z_channels, zs, zs);
    std::mt19937_64 rng(cell_seed(seed, global_row, global_col));
    if (options.mode == LatentMode::uniform) {
        std::uniform_real_distribution<float> dist(-1.0f, 1.0f);
        for (float& v : z.values()) v = dist(rng);
    } else {
        std::normal_distribution<float> dist(0.0f, 1.0f);
        for (float& v : z.values()) v = dist(rng);
    }
    if (options.mode == LatentMode::periodic_mix) {
        const int k = std::min(options.periodic_channels, spec.z_channels);
        const std::vector<float> phases = periodic_phases(seed, k);
        for (int c = 0; c < k; ++c) {
            for (int y = 0; y < zs; ++y) {
                for (int x = 0; x < zs; ++x) {
                    const int gx = global_col * zs + x;
                    const int gy = global_row * zs + y;
                    const int pos = (c % 2 == 0) ? gx : gy;
                    z.at(0, c, y, x) = std::sin(options.omega * static_cast<float>(pos) + phases[c]);
                }
            }
        }
    }
    return z;
}

LatentGrid sample_latent_grid(int rows, int cols, const NetworkSpec& spec, std::uint64_t seed,
                              const LatentOptions& options, int origin_row, int origin_col) {
    if (rows < 1 || cols < 1) throw std::invalid_argument("latent grid needs rows, cols >= 1");
    LatentGrid g{rows, cols, origin_row, origin_col, seed, options, TensorGrid{rows, cols, {}}};
    g.z.parts.reserve(static_cast<std::size_t>(rows) * cols);
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            g.z.parts.push_back(sample_latent_cell(spec, seed, options, origin_row + r, origin_col + c));
        }
    }
    return g;
}

BlockResult generate_block(const LatentGrid& g, const NetworkSpec& spec, const NetworkParams& params,
                           PaddingMode padding, const BlockOptions& options) {
    check_latents(g, spec, params);
    if (options.capture_col && (*options.capture_col < 0 || *options.capture_col >= g.cols)) {
        throw std::out_of_range("capture column outside the block");
    }
    if (options.capture_row && (*options.capture_row < 0 || *options.capture_row >= g.rows)) {
        throw std::out_of_range("capture row outside the block");
    }
    GridBackend backend(GridRunOptions{padding, options.borders, options.capture_col, options.capture_row});
    BlockResult result;
    result.patches = run_network(backend, params, g.z);
    result.image = concat_spatial(result.patches);
    result.layer_inputs = backend.take_records();
    return result;
}

Tensor oracle_full_pass(const LatentGrid& g, const NetworkSpec& spec, const NetworkParams& params,
                        const SlotBorders* borders) {
    check_latents(g, spec, params);
    TensorBackend backend(borders);
    return run_network(backend, params, concat_spatial(g.z));
}

}  // namespace lpad
