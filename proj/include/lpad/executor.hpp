#pragma once

#include <functional>
#include <optional>
#include <variant>
#include <vector>

#include "lpad/halo.hpp"
#include "lpad/netspec.hpp"

namespace lpad {

/// Runs `net` layer by layer over a backend value (a whole tensor or a patch
/// grid). Per-pixel ops and upsampling go through backend.map; convolutions
/// with k > 1 go through backend.conv with a running slot index.
template <class Backend, class Value>
Value run_network(Backend& backend, const NetworkParams& net, Value x) {
    int slot = 0;
    for (const BoundLayer& layer : net.layers) {
        if (const auto* conv = std::get_if<ConvLayer>(&layer)) {
            if (conv->kernel.size() == 1) {
                x = backend.map(x, [conv](const Tensor& t) { return conv2d_valid(t, conv->kernel, conv->stride); });
            } else {
                x = backend.conv(x, conv->kernel, conv->stride, conv->padding, slot++);
            }
        } else if (const auto* bn = std::get_if<BnParams>(&layer)) {
            x = backend.map(x, [bn](const Tensor& t) { return bn_inference(t, *bn); });
        } else if (const auto* act = std::get_if<Activation>(&layer)) {
            x = backend.map(x, [act](const Tensor& t) { return activation(t, *act); });
        } else if (std::holds_alternative<Upsample2x>(layer)) {
            x = backend.map(x, [](const Tensor& t) { return upsample_nearest2x(t); });
        } else {
            x = residual_block(backend, x, std::get<ResBlockParams>(layer), slot);
        }
    }
    return x;
}

/// Borders per spatial-conv slot. Slots beyond the vector use replicate.
using SlotBorders = std::vector<BorderSet>;

/// Whole-tensor execution: external convs are padded with pad_with_borders,
/// zero convs with pad_zero, none convs not at all.
class TensorBackend {
public:
    explicit TensorBackend(const SlotBorders* borders = nullptr) : borders_(borders) {}

    Tensor map(const Tensor& x, const std::function<Tensor(const Tensor&)>& f) { return f(x); }
    Tensor conv(const Tensor& x, const ConvKernel& k, int stride, ConvPadding padding, int slot);
    Tensor add(const Tensor& a, const Tensor& b) { return lpad::add(a, b); }

private:
    const SlotBorders* borders_;
};

enum class PaddingMode { local, zero_ablation };

/// Feature strips retained at one spatial conv: the conv's unpadded input.
struct SlotRecord {
    int halo = 0;
    /// Right `halo` columns of the captured patch column, stacked over rows.
    std::optional<Tensor> right_strip;
    /// Bottom `halo` rows of each patch in the captured patch row.
    std::vector<Tensor> bottom_strips;
};

struct GridRunOptions {
    PaddingMode padding = PaddingMode::local;
    const SlotBorders* borders = nullptr;
    std::optional<int> capture_col;
    std::optional<int> capture_row;
};

/// Patch-grid execution. Before every spatial conv the grid exchanges halos
/// (local) or each patch is zero padded (ablation); everything else is per patch.
class GridBackend {
public:
    explicit GridBackend(GridRunOptions options) : options_(std::move(options)) {}

    TensorGrid map(const TensorGrid& g, const std::function<Tensor(const Tensor&)>& f);
    TensorGrid conv(const TensorGrid& g, const ConvKernel& k, int stride, ConvPadding padding, int slot);
    TensorGrid add(const TensorGrid& a, const TensorGrid& b);

    const std::vector<SlotRecord>& records() const { return records_; }
    std::vector<SlotRecord> take_records() { return std::move(records_); }

private:
    GridRunOptions options_;
    std::vector<SlotRecord> records_;
};

}  // namespace lpad
