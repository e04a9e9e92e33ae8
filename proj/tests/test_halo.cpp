#include "doctest.h"
#include "lpad/halo.hpp"
#include "lpad/nn_ops.hpp"
#include "test_util.hpp"

using namespace lpad;
using namespace lpad::testing;

namespace {

Tensor row(std::vector<float> v) {
    const int w = static_cast<int>(v.size());
    return Tensor(Shape{1, 1, 1, w}, std::move(v));
}

}  // namespace

TEST_CASE("pad_zero") {
    Tensor p = pad_zero(Tensor(1, 1, 1, 1, 5.0f), 1);
    CHECK(p == Tensor(Shape{1, 1, 3, 3}, {0, 0, 0, 0, 5, 0, 0, 0, 0}));
    Tensor x = random_tensor(1, 2, 3, 3, 1);
    CHECK(pad_zero(x, 0) == x);
    Tensor q = pad_zero(x, 2);
    REQUIRE(q.shape() == Shape{1, 2, 7, 7});
    for (int c = 0; c < 2; ++c)
        for (int i = 0; i < 7; ++i)
            for (int j = 0; j < 7; ++j) {
                const bool inside = i >= 2 && i < 5 && j >= 2 && j < 5;
                CHECK(q.at(0, c, i, j) == (inside ? x.at(0, c, i - 2, j - 2) : 0.0f));
            }
}

TEST_CASE("pad_replicate") {
    Tensor x(Shape{1, 1, 2, 2}, {1, 2, 3, 4});
    CHECK(pad_replicate(x, 1) == Tensor(Shape{1, 1, 4, 4}, {1, 1, 2, 2, 1, 1, 2, 2, 3, 3, 4, 4, 3, 3, 4, 4}));
    CHECK(pad_replicate(x, 0) == x);

    Tensor r = random_tensor(1, 2, 4, 5, 2);
    Tensor left = pad_replicate(r, 1, SideSet::only(Side::left));
    REQUIRE(left.shape() == Shape{1, 2, 4, 6});
    for (int c = 0; c < 2; ++c)
        for (int i = 0; i < 4; ++i) {
            CHECK(left.at(0, c, i, 0) == r.at(0, c, i, 0));
            for (int j = 0; j < 5; ++j) CHECK(left.at(0, c, i, j + 1) == r.at(0, c, i, j));
        }

    CHECK(pad_replicate(r, 2) == naive_replicate(r, 2));
}

TEST_CASE("extract_strip") {
    Tensor x(Shape{1, 1, 2, 2}, {1, 2, 3, 4});
    CHECK(extract_strip(x, Side::right, 1) == Tensor(Shape{1, 1, 2, 1}, {2, 4}));
    CHECK(extract_strip(x, Side::left, 2) == x);
    Tensor r = random_tensor(1, 3, 6, 4, 3);
    CHECK(extract_strip(r, Side::bottom, 2) == view(r, {4, 0, 2, 4}));
    CHECK_THROWS_AS(extract_strip(r, Side::top, 7), BoundsError);
}

TEST_CASE("exchange_halos on a 1x3 row") {
    FeatureGrid g{TensorGrid{1, 3, {row({1, 2, 3}), row({4, 5, 6}), row({7, 8, 9})}}, {}};
    TensorGrid p = exchange_halos(g, {1});
    // Interior patch B takes a3 on the left and c1 on the right.
    CHECK(view(p.at(0, 1), {1, 0, 1, 5}) == row({3, 4, 5, 6, 7}));
    // Outer patch A replicates its own first value.
    CHECK(view(p.at(0, 0), {1, 0, 1, 5}) == row({1, 1, 2, 3, 4}));
    CHECK(view(p.at(0, 2), {1, 0, 1, 5}) == row({6, 7, 8, 9, 9}));
}

TEST_CASE("exchange_halos matches slicing the replicate-padded assembly") {
    for (int halo : {1, 2}) {
        for (auto [rows, cols] : std::vector<std::pair<int, int>>{{1, 1}, {1, 3}, {3, 1}, {2, 2}, {3, 3}}) {
            TensorGrid cells{rows, cols, {}};
            for (int i = 0; i < rows * cols; ++i) cells.parts.push_back(random_tensor(1, 4, 4, 4, 100 + i));
            TensorGrid padded = exchange_halos(FeatureGrid{cells, {}}, {halo});
            Tensor ref = naive_replicate(concat_spatial(cells), halo);
            for (int r = 0; r < rows; ++r)
                for (int c = 0; c < cols; ++c)
                    CHECK(padded.at(r, c) == view(ref, {r * 4, c * 4, 4 + 2 * halo, 4 + 2 * halo}));
        }
    }
}

TEST_CASE("centre patch ring comes from its eight neighbours") {
    TensorGrid cells{3, 3, {}};
    for (int i = 0; i < 9; ++i) cells.parts.push_back(random_tensor(1, 4, 4, 4, 200 + i));
    TensorGrid padded = exchange_halos(FeatureGrid{cells, {}}, {1});
    CHECK(padded.at(1, 1) == view(concat_spatial(cells), {3, 3, 6, 6}));
}

TEST_CASE("seam-free identity: patch-wise conv equals whole-tensor conv") {
    std::mt19937_64 rng(7);
    for (int k : {3, 5}) {
        for (auto [rows, cols] : std::vector<std::pair<int, int>>{{1, 1}, {1, 3}, {3, 1}, {2, 2}, {3, 3}, {2, 4}}) {
            const int halo = (k - 1) / 2;
            TensorGrid cells{rows, cols, {}};
            for (int i = 0; i < rows * cols; ++i) cells.parts.push_back(random_tensor(1, 3, 5, 6, rng()));
            ConvKernel kernel = random_kernel(2, 3, k, rng());
            TensorGrid padded = exchange_halos(FeatureGrid{cells, {}}, {halo});
            for (Tensor& t : padded.parts) t = conv2d_valid(t, kernel);
            Tensor whole = conv2d_valid(pad_replicate(concat_spatial(cells), halo), kernel);
            CHECK(concat_spatial(padded) == whole);
        }
    }
}

TEST_CASE("zero padding per patch breaks the identity") {
    TensorGrid cells{2, 2, {}};
    for (int i = 0; i < 4; ++i) cells.parts.push_back(random_tensor(1, 3, 5, 5, 300 + i, 0.5f, 1.0f));
    ConvKernel kernel = random_kernel(2, 3, 3, 310);
    TensorGrid zero = cells;
    for (Tensor& t : zero.parts) t = conv2d_valid(pad_zero(t, 1), kernel);
    Tensor whole = conv2d_valid(pad_replicate(concat_spatial(cells), 1), kernel);
    CHECK(max_abs_diff(concat_spatial(zero), whole) > 0.0f);
}

TEST_CASE("cached strips stand in for physically present neighbours") {
    // 5x5 grid of 4x4 patches; the inner 3x3 is padded from strips cut out of the ring.
    const int halo = 1, e = 4;
    TensorGrid full{5, 5, {}};
    for (int i = 0; i < 25; ++i) full.parts.push_back(random_tensor(1, 2, e, e, 400 + i));
    Tensor canvas = concat_spatial(full);
    TensorGrid full_padded = exchange_halos(FeatureGrid{full, {}}, {halo});

    TensorGrid inner{3, 3, {}};
    for (int r = 1; r < 4; ++r)
        for (int c = 1; c < 4; ++c) inner.parts.push_back(full.at(r, c));
    BorderSet b;
    // Top/bottom strips carry the diagonal corners; left/right cover the inner rows.
    b[Side::top] = Border::cached(view(canvas, {e - 2, e - halo, 2, 3 * e + 2 * halo}), -halo);
    b[Side::bottom] = Border::cached(view(canvas, {4 * e, e - halo, 2, 3 * e + 2 * halo}), -halo);
    b[Side::left] = Border::cached(view(canvas, {e, e - 3, 3 * e, 3}));
    b[Side::right] = Border::cached(view(canvas, {e, 4 * e, 3 * e, 2}));
    TensorGrid inner_padded = exchange_halos(FeatureGrid{inner, b}, {halo});
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) CHECK(inner_padded.at(r, c) == full_padded.at(r + 1, c + 1));

    // The single-tensor route agrees with the exchange route for the same borders.
    Tensor whole = pad_with_borders(concat_spatial(inner), halo, b);
    CHECK(whole == view(canvas, {e - halo, e - halo, 3 * e + 2 * halo, 3 * e + 2 * halo}));
}

TEST_CASE("cached left strip with replicate top composes columns then rows") {
    const int e = 3;
    TensorGrid full{2, 3, {}};
    for (int i = 0; i < 6; ++i) full.parts.push_back(random_tensor(1, 2, e, e, 500 + i));
    Tensor canvas = concat_spatial(full);
    TensorGrid right{2, 2, {full.at(0, 1), full.at(0, 2), full.at(1, 1), full.at(1, 2)}};
    BorderSet b;
    b[Side::left] = Border::cached(view(canvas, {0, 0, 2 * e, e}));
    TensorGrid got = exchange_halos(FeatureGrid{right, b}, {1});
    TensorGrid ref = exchange_halos(FeatureGrid{full, {}}, {1});
    for (int r = 0; r < 2; ++r)
        for (int c = 0; c < 2; ++c) CHECK(got.at(r, c) == ref.at(r, c + 1));
    Tensor whole = pad_with_borders(concat_spatial(right), 1, b);
    CHECK(whole == view(pad_replicate(canvas, 1), {0, e, 2 * e + 2, 2 * e + 2}));
}

TEST_CASE("exchange_halos errors") {
    TensorGrid cells{1, 2, {random_tensor(1, 2, 2, 2, 1), random_tensor(1, 2, 2, 2, 2)}};
    CHECK_THROWS_AS(exchange_halos(FeatureGrid{cells, {}}, {3}), ShapeError);
    BorderSet b;
    b[Side::left] = Border::cached(random_tensor(1, 2, 2, 1, 3));
    CHECK_THROWS_AS(exchange_halos(FeatureGrid{cells, b}, {2}), ShapeError);
    b[Side::left] = Border::cached(random_tensor(1, 3, 2, 2, 3));
    CHECK_THROWS_AS(exchange_halos(FeatureGrid{cells, b}, {1}), ShapeError);
    b[Side::left] = Border::cached(random_tensor(1, 2, 1, 2, 3));
    CHECK_THROWS_AS(exchange_halos(FeatureGrid{cells, b}, {1}), ShapeError);
}

TEST_CASE("none borders shrink only the outer sides") {
    TensorGrid cells{1, 2, {random_tensor(1, 1, 4, 4, 1), random_tensor(1, 1, 4, 4, 2)}};
    BorderSet none;
    for (Border& s : none.sides) s = Border::none();
    ConvKernel k = random_kernel(1, 1, 3, 9);
    TensorGrid padded = exchange_halos(FeatureGrid{cells, none}, {1});
    CHECK(padded.at(0, 0).shape() == Shape{1, 1, 4, 5});
    for (Tensor& t : padded.parts) t = conv2d_valid(t, k);
    CHECK(concat_spatial(padded) == conv2d_valid(concat_spatial(cells), k));
}
