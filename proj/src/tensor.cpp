#include "lpad/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

namespace lpad {

std::string to_string(const Shape& s) {
    return "(" + std::to_string(s.n) + "," + std::to_string(s.c) + "," + std::to_string(s.h) + "," +
           std::to_string(s.w) + ")";
}

namespace {

void check_dims(const Shape& s) {
    if (s.n < 1 || s.c < 1 || s.h < 1 || s.w < 1) {
        throw ShapeError("tensor dimensions must be >= 1, got " + to_string(s));
    }
}

}  // namespace

Tensor::Tensor(int n, int c, int h, int w, float fill) : Tensor(Shape{n, c, h, w}, fill) {}

Tensor::Tensor(Shape shape, float fill) : shape_(shape) {
    check_dims(shape_);
    data_.assign(shape_.numel(), fill);
}

Tensor::Tensor(Shape shape, std::vector<float> data) : shape_(shape), data_(std::move(data)) {
    check_dims(shape_);
    if (data_.size() != shape_.numel()) {
        throw ShapeError("data length " + std::to_string(data_.size()) + " does not match shape " +
                         to_string(shape_));
    }
}

Tensor view(const Tensor& t, const Slice2D& s) {
    if (s.top < 0 || s.left < 0 || s.height < 1 || s.width < 1 || s.top + s.height > t.h() ||
        s.left + s.width > t.w()) {
        throw BoundsError("slice (" + std::to_string(s.top) + "," + std::to_string(s.left) + "," +
                          std::to_string(s.height) + "," + std::to_string(s.width) +
                          ") outside tensor " + to_string(t.shape()));
    }
    Tensor out(t.n(), t.c(), s.height, s.width);
    for (int n = 0; n < t.n(); ++n) {
        for (int c = 0; c < t.c(); ++c) {
            for (int y = 0; y < s.height; ++y) {
                const float* src = t.data() + t.index(n, c, s.top + y, s.left);
                std::memcpy(out.data() + out.index(n, c, y, 0), src, sizeof(float) * s.width);
            }
        }
    }
    return out;
}

Tensor concat_spatial(const TensorGrid& grid) {
    if (grid.rows < 1 || grid.cols < 1 ||
        grid.parts.size() != static_cast<std::size_t>(grid.rows) * grid.cols) {
        throw ShapeError("concat_spatial: grid must be non-empty and fully populated");
    }
    const Tensor& first = grid.at(0, 0);
    std::vector<int> heights(grid.rows), widths(grid.cols);
    for (int r = 0; r < grid.rows; ++r) heights[r] = grid.at(r, 0).h();
    for (int c = 0; c < grid.cols; ++c) widths[c] = grid.at(0, c).w();
    for (int r = 0; r < grid.rows; ++r) {
        for (int c = 0; c < grid.cols; ++c) {
            const Tensor& p = grid.at(r, c);
            if (p.n() != first.n() || p.c() != first.c() || p.h() != heights[r] || p.w() != widths[c]) {
                throw ShapeError("concat_spatial: cell (" + std::to_string(r) + "," + std::to_string(c) +
                                 ") has shape " + to_string(p.shape()));
            }
        }
    }
    int total_h = 0, total_w = 0;
    for (int h : heights) total_h += h;
    for (int w : widths) total_w += w;

    Tensor out(first.n(), first.c(), total_h, total_w);
    int y0 = 0;
    for (int r = 0; r < grid.rows; ++r) {
        int x0 = 0;
        for (int c = 0; c < grid.cols; ++c) {
            const Tensor& p = grid.at(r, c);
            for (int n = 0; n < p.n(); ++n) {
                for (int ch = 0; ch < p.c(); ++ch) {
                    for (int y = 0; y < p.h(); ++y) {
                        std::memcpy(out.data() + out.index(n, ch, y0 + y, x0), p.data() + p.index(n, ch, y, 0),
                                    sizeof(float) * p.w());
                    }
                }
            }
            x0 += widths[c];
        }
        y0 += heights[r];
    }
    return out;
}

float max_abs_diff(const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape()) {
        throw ShapeError("max_abs_diff: " + to_string(a.shape()) + " vs " + to_string(b.shape()));
    }
    float m = 0.0f;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const float d = std::fabs(a.data()[i] - b.data()[i]);
        if (std::isnan(d)) return d;
        m = std::max(m, d);
    }
    return m;
}

Tensor add(const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape()) {
        throw ShapeError("add: " + to_string(a.shape()) + " vs " + to_string(b.shape()));
    }
    Tensor out = a;
    for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] += b.data()[i];
    return out;
}

}  // namespace lpad
