#include "lpad/nn_ops.hpp"

#include <cmath>
#include <string>

#include "lpad/parallel.hpp"

namespace lpad {

void ConvKernel::validate() const {
    if (weights.empty()) throw ShapeError("conv kernel has no weights");
    if (weights.h() != weights.w()) {
        throw ShapeError("conv kernel must be square, got " + to_string(weights.shape()));
    }
    if (weights.h() % 2 == 0) {
        throw ShapeError("conv kernel size must be odd, got " + std::to_string(weights.h()));
    }
    if (static_cast<int>(bias.size()) != weights.n()) {
        throw ShapeError("conv bias length " + std::to_string(bias.size()) + " != out channels " +
                         std::to_string(weights.n()));
    }
}

void BnParams::validate() const {
    const std::size_t c = gamma.size();
    if (c == 0 || beta.size() != c || running_mean.size() != c || running_var.size() != c) {
        throw ShapeError("batch norm parameter lengths differ");
    }
    if (!(eps >= 0.0f)) throw std::invalid_argument("batch norm eps must be non-negative");
    for (float v : running_var) {
        if (!(v >= 0.0f)) throw std::invalid_argument("batch norm running_var must be >= 0");
    }
}

BnParams BnParams::identity(int channels, float eps) {
    BnParams p;
    p.gamma.assign(channels, 1.0f);
    p.beta.assign(channels, 0.0f);
    p.running_mean.assign(channels, 0.0f);
    p.running_var.assign(channels, 1.0f);
    p.eps = eps;
    return p;
}

void ResBlockParams::validate() const {
    bn1.validate();
    bn2.validate();
    conv1.validate();
    conv2.validate();
    if (bn1.channels() != conv1.in_channels() || bn2.channels() != conv1.out_channels() ||
        conv2.in_channels() != conv1.out_channels()) {
        throw ShapeError("residual block: inner channel counts do not chain");
    }
    if (skip) {
        skip->validate();
        if (skip->size() != 1 || skip->in_channels() != in_channels() ||
            skip->out_channels() != out_channels()) {
            throw ShapeError("residual block: skip must be a 1x1 conv from in to out channels");
        }
    } else if (in_channels() != out_channels()) {
        throw ShapeError("residual block: channel change " + std::to_string(in_channels()) + "->" +
                         std::to_string(out_channels()) + " needs a 1x1 skip kernel");
    }
}

Tensor conv2d_valid(const Tensor& x, const ConvKernel& k, int stride) {
    k.validate();
    if (stride < 1) throw std::invalid_argument("conv stride must be >= 1");
    if (x.c() != k.in_channels()) {
        throw ShapeError("conv2d_valid: input has " + std::to_string(x.c()) + " channels, kernel expects " +
                         std::to_string(k.in_channels()));
    }
    const int ks = k.size();
    if (x.h() < ks || x.w() < ks) {
        throw ShapeError("conv2d_valid: input " + to_string(x.shape()) + " smaller than kernel " +
                         std::to_string(ks));
    }
    const int oh = (x.h() - ks) / stride + 1;
    const int ow = (x.w() - ks) / stride + 1;
    const int in_c = x.c();
    const int in_w = x.w();
    Tensor out(x.n(), k.out_channels(), oh, ow);

    const std::size_t tasks = static_cast<std::size_t>(x.n()) * k.out_channels();
    parallel_for(tasks, [&](std::size_t task) {
        const int n = static_cast<int>(task / k.out_channels());
        const int oc = static_cast<int>(task % k.out_channels());
        float* acc = out.plane(n, oc);
        for (int ic = 0; ic < in_c; ++ic) {
            const float* src = x.plane(n, ic);
            const float* wk = k.weights.plane(oc, ic);
            for (int ky = 0; ky < ks; ++ky) {
                for (int kx = 0; kx < ks; ++kx) {
                    const float wv = wk[ky * ks + kx];
                    for (int oy = 0; oy < oh; ++oy) {
                        const float* row = src + static_cast<std::size_t>(oy * stride + ky) * in_w + kx;
                        float* dst = acc + static_cast<std::size_t>(oy) * ow;
                        if (stride == 1) {
                            for (int ox = 0; ox < ow; ++ox) dst[ox] += wv * row[ox];
                        } else {
                            for (int ox = 0; ox < ow; ++ox) dst[ox] += wv * row[ox * stride];
                        }
                    }
                }
            }
        }
        const float b = k.bias[oc];
        for (int i = 0; i < oh * ow; ++i) acc[i] += b;
    });
    return out;
}

Tensor bn_inference(const Tensor& x, const BnParams& p) {
    p.validate();
    if (x.c() != p.channels()) {
        throw ShapeError("bn_inference: input has " + std::to_string(x.c()) + " channels, params have " +
                         std::to_string(p.channels()));
    }
    Tensor out = x;
    const std::size_t plane = static_cast<std::size_t>(x.h()) * x.w();
    for (int n = 0; n < x.n(); ++n) {
        for (int c = 0; c < x.c(); ++c) {
            const float scale = p.gamma[c] / std::sqrt(p.running_var[c] + p.eps);
            const float mean = p.running_mean[c];
            const float shift = p.beta[c];
            float* v = out.plane(n, c);
            for (std::size_t i = 0; i < plane; ++i) v[i] = scale * (v[i] - mean) + shift;
        }
    }
    return out;
}

Tensor upsample_nearest2x(const Tensor& x) {
    Tensor out(x.n(), x.c(), x.h() * 2, x.w() * 2);
    for (int n = 0; n < x.n(); ++n) {
        for (int c = 0; c < x.c(); ++c) {
            const float* src = x.plane(n, c);
            float* dst = out.plane(n, c);
            const int ow = out.w();
            for (int y = 0; y < x.h(); ++y) {
                float* row0 = dst + static_cast<std::size_t>(2 * y) * ow;
                for (int xx = 0; xx < x.w(); ++xx) {
                    const float v = src[static_cast<std::size_t>(y) * x.w() + xx];
                    row0[2 * xx] = v;
                    row0[2 * xx + 1] = v;
                }
                std::copy(row0, row0 + ow, row0 + ow);
            }
        }
    }
    return out;
}

float activate(float v, const Activation& a) {
    switch (a.kind) {
        case Activation::Kind::identity:
            return v;
        case Activation::Kind::relu:
            return v > 0.0f ? v : 0.0f;
        case Activation::Kind::leaky_relu:
            return v > 0.0f ? v : a.slope * v;
        case Activation::Kind::tanh:
            return std::tanh(v);
    }
    return v;
}

Tensor activation(const Tensor& x, const Activation& a) {
    Tensor out = x;
    for (float& v : out.values()) v = activate(v, a);
    return out;
}

namespace {

struct SingleTensorBackend {
    const PadProvider& pad;

    Tensor map(const Tensor& x, const std::function<Tensor(const Tensor&)>& f) { return f(x); }
    Tensor conv(const Tensor& x, const ConvKernel& k, int stride, ConvPadding, int) {
        return conv2d_valid(pad(x, k.halo()), k, stride);
    }
    Tensor add(const Tensor& a, const Tensor& b) { return lpad::add(a, b); }
};

}  // namespace

Tensor residual_block(const Tensor& x, const ResBlockParams& p, const PadProvider& pad) {
    SingleTensorBackend backend{pad};
    int slot = 0;
    return residual_block(backend, x, p, slot);
}

}  // namespace lpad
