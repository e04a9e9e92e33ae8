#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "lpad/tensor.hpp"

namespace lpad {

/// Square, odd-sized convolution weights (out_ch, in_ch, k, k) plus per-output bias.
struct ConvKernel {
    Tensor weights;
    std::vector<float> bias;

    int out_channels() const { return weights.n(); }
    int in_channels() const { return weights.c(); }
    int size() const { return weights.h(); }
    int halo() const { return (weights.h() - 1) / 2; }

    /// Throws ShapeError unless the kernel is square and odd with one bias per output.
    void validate() const;
};

/// Inference-mode batch normalization statistics for one layer.
struct BnParams {
    std::vector<float> gamma;
    std::vector<float> beta;
    std::vector<float> running_mean;
    std::vector<float> running_var;
    float eps = 1e-5f;

    int channels() const { return static_cast<int>(gamma.size()); }
    void validate() const;

    static BnParams identity(int channels, float eps = 0.0f);
};

struct Activation {
    enum class Kind { identity, relu, leaky_relu, tanh };
    Kind kind = Kind::relu;
    float slope = 0.2f;

    static Activation relu() { return {Kind::relu, 0.0f}; }
    static Activation leaky(float slope = 0.2f) { return {Kind::leaky_relu, slope}; }
    static Activation tanh() { return {Kind::tanh, 0.0f}; }
    static Activation identity() { return {Kind::identity, 0.0f}; }

    friend bool operator==(const Activation&, const Activation&) = default;
};

/// How a spatial convolution obtains its border when run as a whole tensor.
/// `external` layers are fed by halo exchange (replicate at open borders),
/// `zero` layers carry their own zero padding, `none` layers shrink.
enum class ConvPadding { external, zero, none };

/// Valid (unpadded) cross-correlation.
///
/// Each output is accumulated from zero over (in_ch, ky, kx) in that nesting
/// order, and the bias is added last. Any reference that follows the same
/// order reproduces the result bit-exactly.
Tensor conv2d_valid(const Tensor& x, const ConvKernel& k, int stride = 1);

Tensor bn_inference(const Tensor& x, const BnParams& p);
Tensor upsample_nearest2x(const Tensor& x);
Tensor activation(const Tensor& x, const Activation& a);
float activate(float v, const Activation& a);

/// Pre-activation residual block:
/// out = skip(x) + conv2(pad(act(bn2(conv1(pad(act(bn1(x))))))))
/// where skip is identity when channels match and a 1x1 conv otherwise.
struct ResBlockParams {
    BnParams bn1;
    ConvKernel conv1;
    BnParams bn2;
    ConvKernel conv2;
    std::optional<ConvKernel> skip;
    Activation act = Activation::relu();

    int in_channels() const { return conv1.in_channels(); }
    int out_channels() const { return conv2.out_channels(); }
    void validate() const;
};

/// Generic residual block over an execution backend. A backend supplies
///   Value map(const Value&, const std::function<Tensor(const Tensor&)>&)
///   Value conv(const Value&, const ConvKernel&, int stride, ConvPadding, int slot)
///   Value add(const Value&, const Value&)
/// `slot` numbers the spatial convolutions of a network in execution order
/// and is advanced by two.
template <class Backend, class Value>
Value residual_block(Backend& backend, const Value& x, const ResBlockParams& p, int& slot) {
    p.validate();
    Value h = backend.map(x, [&p](const Tensor& t) { return activation(bn_inference(t, p.bn1), p.act); });
    h = backend.conv(h, p.conv1, 1, ConvPadding::external, slot++);
    h = backend.map(h, [&p](const Tensor& t) { return activation(bn_inference(t, p.bn2), p.act); });
    h = backend.conv(h, p.conv2, 1, ConvPadding::external, slot++);
    if (p.skip) {
        const ConvKernel& skip = *p.skip;
        Value s = backend.map(x, [&skip](const Tensor& t) { return conv2d_valid(t, skip); });
        return backend.add(s, h);
    }
    return backend.add(x, h);
}

/// Supplies the padded input of a spatial conv, given its unpadded input and halo.
using PadProvider = std::function<Tensor(const Tensor&, int halo)>;

/// Single-tensor residual block; `pad` is called before each 3x3 conv.
Tensor residual_block(const Tensor& x, const ResBlockParams& p, const PadProvider& pad);

}  // namespace lpad
