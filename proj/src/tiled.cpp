#include "lpad/tiled.hpp"

#include <algorithm>
#include <string>

namespace lpad {

namespace {

void check_strides(const NetworkSpec& spec) {
    std::string offenders;
    for (std::size_t i = 0; i < spec.layers.size(); ++i) {
        const LayerSpec& l = spec.layers[i];
        if (l.kind == LayerKind::conv && l.stride != 1) {
            offenders += (offenders.empty() ? "" : ", ") + std::to_string(i);
        }
    }
    if (!offenders.empty()) {
        throw SpecError("strided convs cannot be fed by halo exchange (layers " + offenders + ")");
    }
}

/// Per-axis blend weight of a tile covering [lo, hi) whose interior sides
/// ramp over `ramp` pixels centred on the neighbor's core boundary.
float ramp_weight(int x, int lo, int hi, int ramp, bool ramp_lo, bool ramp_hi) {
    float w = 1.0f;
    if (ramp > 0 && ramp_lo) w = std::min(w, (static_cast<float>(x - lo) + 0.5f) / static_cast<float>(ramp));
    if (ramp > 0 && ramp_hi) w = std::min(w, (static_cast<float>(hi - x) - 0.5f) / static_cast<float>(ramp));
    return w;
}

}  // namespace

NetworkSpec strip_zero_padding(const NetworkSpec& spec) {
    check_strides(spec);
    NetworkSpec out = spec;
    for (LayerSpec& l : out.layers) {
        if (l.kind == LayerKind::conv && l.padding == ConvPadding::zero) l.padding = ConvPadding::external;
    }
    return out;
}

NetworkParams strip_zero_padding(const NetworkParams& params) {
    NetworkParams out = params;
    for (std::size_t i = 0; i < out.layers.size(); ++i) {
        if (auto* conv = std::get_if<ConvLayer>(&out.layers[i])) {
            if (conv->stride != 1) {
                throw SpecError("strided conv at layer " + std::to_string(i) + " cannot be fed by halo exchange");
            }
            if (conv->padding == ConvPadding::zero) conv->padding = ConvPadding::external;
        }
    }
    return out;
}

int halo_demand(const NetworkSpec& spec) {
    int total = 0;
    for (const SpatialConvInfo& info : spec.spatial_convs()) {
        const int step = 1 << info.upsamples_before;
        total += (info.halo + step - 1) / step;
    }
    return total;
}

int receptive_radius(const NetworkSpec& spec) {
    const int U = spec.upsample_count();
    int radius = 0;
    for (const SpatialConvInfo& info : spec.spatial_convs()) radius += info.halo << (U - info.upsamples_before);
    return radius;
}

std::vector<int> tile_bounds(int extent, int tile, int count, int min_extent) {
    if (extent < 1) throw std::invalid_argument("cannot tile an empty axis");
    std::vector<int> b{0};
    if (tile > 0) {
        for (int x = tile; x < extent; x += tile) b.push_back(x);
        if (b.size() > 1 && extent - b.back() < min_extent) b.pop_back();
    } else {
        if (count < 1) throw std::invalid_argument("tile grid must be at least 1 x 1");
        if (count > extent) throw std::invalid_argument("more tiles than pixels along an axis");
        for (int i = 1; i < count; ++i) b.push_back(static_cast<int>(static_cast<long long>(i) * extent / count));
    }
    b.push_back(extent);
    return b;
}

Tensor tile_apply(const Tensor& image, const NetworkSpec& spec, const NetworkParams& params, const TilePlan& plan) {
    spec.validate();
    if (spec.z_spatial != 0) throw SpecError("tile_apply needs an image-to-image network");
    if (image.n() != 1 || image.c() != spec.z_channels) {
        throw ShapeError("input " + to_string(image.shape()) + " does not match the network's " +
                         std::to_string(spec.z_channels) + " input channels");
    }
    if (plan.scale < 0 || (plan.scale > 0 && plan.scale != spec.scale_factor())) {
        throw std::invalid_argument("plan scale " + std::to_string(plan.scale) + " but the network scales by " +
                                    std::to_string(spec.scale_factor()));
    }
    if (plan.mode == TileMode::single_pass) {
        TensorBackend backend;
        return run_network(backend, params, image);
    }

    const NetworkSpec stripped = strip_zero_padding(spec);
    const NetworkParams net = strip_zero_padding(params);
    const int demand = std::max(halo_demand(stripped), 1);
    const std::vector<int> ys = tile_bounds(image.h(), plan.tile, plan.grid_rows, demand);
    const std::vector<int> xs = tile_bounds(image.w(), plan.tile, plan.grid_cols, demand);
    const int rows = static_cast<int>(ys.size()) - 1, cols = static_cast<int>(xs.size()) - 1;
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) {
            const int extent = std::min(ys[r + 1] - ys[r], xs[c + 1] - xs[c]);
            if (rows * cols > 1 && extent < demand) {
                throw std::invalid_argument("tile extent " + std::to_string(extent) +
                                            " is smaller than the network's halo demand " + std::to_string(demand));
            }
        }

    if (plan.mode == TileMode::local_padding) {
        TensorGrid grid{rows, cols, {}};
        for (int r = 0; r < rows; ++r)
            for (int c = 0; c < cols; ++c)
                grid.parts.push_back(view(image, {ys[r], xs[c], ys[r + 1] - ys[r], xs[c + 1] - xs[c]}));
        GridBackend backend(GridRunOptions{});
        return concat_spatial(run_network(backend, net, grid));
    }

    if (plan.overlap < 0) throw std::invalid_argument("overlap must be >= 0");
    const int s = spec.scale_factor();
    const int ramp = 2 * plan.overlap * s;
    Tensor acc(1, spec.out_channels, image.h() * s, image.w() * s);
    std::vector<float> weight(static_cast<std::size_t>(acc.h()) * acc.w(), 0.0f);
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            const int y0 = std::max(ys[r] - plan.overlap, 0), y1 = std::min(ys[r + 1] + plan.overlap, image.h());
            const int x0 = std::max(xs[c] - plan.overlap, 0), x1 = std::min(xs[c + 1] + plan.overlap, image.w());
            TensorBackend backend;
            const Tensor out = run_network(backend, net, view(image, {y0, x0, y1 - y0, x1 - x0}));
            for (int y = 0; y < out.h(); ++y) {
                const float wy = ramp_weight(y0 * s + y, y0 * s, y1 * s, ramp, r > 0, r + 1 < rows);
                for (int x = 0; x < out.w(); ++x) {
                    const float w = wy * ramp_weight(x0 * s + x, x0 * s, x1 * s, ramp, c > 0, c + 1 < cols);
                    const int gy = y0 * s + y, gx = x0 * s + x;
                    weight[static_cast<std::size_t>(gy) * acc.w() + gx] += w;
                    for (int ch = 0; ch < acc.c(); ++ch) acc.at(0, ch, gy, gx) += w * out.at(0, ch, y, x);
                }
            }
        }
    }
    for (int ch = 0; ch < acc.c(); ++ch) {
        float* p = acc.plane(0, ch);
        for (std::size_t i = 0; i < weight.size(); ++i) p[i] /= weight[i];
    }
    return acc;
}

}  // namespace lpad
