#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace lpad {

/// Raised when tensor shapes do not line up for an operation.
class ShapeError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Raised when a spatial window falls outside its source.
class BoundsError : public std::out_of_range {
public:
    using std::out_of_range::out_of_range;
};

struct Shape {
    int n = 1;
    int c = 1;
    int h = 1;
    int w = 1;

    std::size_t numel() const {
        return static_cast<std::size_t>(n) * c * h * w;
    }
    friend bool operator==(const Shape&, const Shape&) = default;
};

std::string to_string(const Shape& s);

/// Dense NCHW float tensor. Row-major with w fastest; owns its storage.
class Tensor {
public:
    Tensor() = default;
    Tensor(int n, int c, int h, int w, float fill = 0.0f);
    explicit Tensor(Shape shape, float fill = 0.0f);
    Tensor(Shape shape, std::vector<float> data);

    const Shape& shape() const { return shape_; }
    int n() const { return shape_.n; }
    int c() const { return shape_.c; }
    int h() const { return shape_.h; }
    int w() const { return shape_.w; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    float* data() { return data_.data(); }
    const float* data() const { return data_.data(); }
    std::vector<float>& values() { return data_; }
    const std::vector<float>& values() const { return data_; }

    std::size_t index(int n, int c, int y, int x) const {
        return ((static_cast<std::size_t>(n) * shape_.c + c) * shape_.h + y) * shape_.w + x;
    }
    float& at(int n, int c, int y, int x) { return data_[index(n, c, y, x)]; }
    float at(int n, int c, int y, int x) const { return data_[index(n, c, y, x)]; }

    /// Pointer to the start of plane (n, c).
    float* plane(int n, int c) { return data_.data() + index(n, c, 0, 0); }
    const float* plane(int n, int c) const { return data_.data() + index(n, c, 0, 0); }

    friend bool operator==(const Tensor&, const Tensor&) = default;

private:
    Shape shape_{0, 0, 0, 0};
    std::vector<float> data_;
};

struct Slice2D {
    int top = 0;
    int left = 0;
    int height = 0;
    int width = 0;
};

/// Copies the spatial window `s` of `t` across all batch entries and channels.
Tensor view(const Tensor& t, const Slice2D& s);

/// Row-major grid of tensors. `parts[r * cols + c]` is cell (r, c).
struct TensorGrid {
    int rows = 0;
    int cols = 0;
    std::vector<Tensor> parts;

    const Tensor& at(int r, int c) const { return parts[static_cast<std::size_t>(r) * cols + c]; }
    Tensor& at(int r, int c) { return parts[static_cast<std::size_t>(r) * cols + c]; }
};

/// Assembles a grid into one tensor. Cells in a row share height, cells in a
/// column share width; extents may otherwise differ between rows/columns.
Tensor concat_spatial(const TensorGrid& grid);

float max_abs_diff(const Tensor& a, const Tensor& b);

/// Elementwise sum; shapes must match.
Tensor add(const Tensor& a, const Tensor& b);

}  // namespace lpad
