#include "doctest.h"
#include "lpad/metrics.hpp"
#include "lpad/tiled.hpp"
#include "test_util.hpp"

using namespace lpad;
using lpad::testing::random_tensor;

namespace {

struct Net {
    NetworkSpec spec;
    NetworkParams params;
};

Net random_net(const std::vector<int>& widths, int kernel, int upsamples, ConvPadding padding, std::uint64_t seed) {
    Net n;
    n.spec = build_sequential_conv_net(3, widths, 3, kernel, upsamples, padding);
    n.params = bind_weights(n.spec, init_random_weights(n.spec, seed));
    return n;
}

Tensor run(const Tensor& img, const Net& n, TileMode mode, int rows, int cols, int tile = 0, int overlap = 0) {
    TilePlan plan;
    plan.mode = mode;
    plan.grid_rows = rows;
    plan.grid_cols = cols;
    plan.tile = tile;
    plan.overlap = overlap;
    return tile_apply(img, n.spec, n.params, plan);
}

}  // namespace

TEST_CASE("tile_bounds") {
    CHECK(tile_bounds(32, 0, 2, 1) == std::vector<int>{0, 16, 32});
    CHECK(tile_bounds(10, 0, 3, 1) == std::vector<int>{0, 3, 6, 10});
    CHECK(tile_bounds(32, 10, 0, 3) == std::vector<int>{0, 10, 20, 32});
    CHECK(tile_bounds(33, 10, 0, 3) == std::vector<int>{0, 10, 20, 30, 33});
    CHECK(tile_bounds(8, 16, 0, 3) == std::vector<int>{0, 8});
    CHECK_THROWS_AS(tile_bounds(4, 0, 5, 1), std::invalid_argument);
}

TEST_CASE("halo demand and receptive radius") {
    Net a = random_net({4, 4}, 3, 0, ConvPadding::zero, 1);
    CHECK(halo_demand(a.spec) == 3);
    CHECK(receptive_radius(a.spec) == 3);
    Net b = random_net({4, 4}, 5, 1, ConvPadding::external, 1);
    // conv5 at 1x, upsample, conv5 and conv5 at 2x.
    CHECK(halo_demand(b.spec) == 2 + 1 + 1);
    CHECK(receptive_radius(b.spec) == 4 + 2 + 2);
}

TEST_CASE("strip_zero_padding rewrites annotations only") {
    NetworkSpec g = build_texture_generator(3, 32, 4, 16);
    CHECK(strip_zero_padding(g) == g);

    Net n = random_net({5, 5}, 3, 0, ConvPadding::zero, 2);
    NetworkSpec s = strip_zero_padding(n.spec);
    int converted = 0;
    for (std::size_t i = 0; i < s.layers.size(); ++i) {
        if (s.layers[i].kind != LayerKind::conv) continue;
        CHECK(n.spec.layers[i].padding == ConvPadding::zero);
        CHECK(s.layers[i].padding == ConvPadding::external);
        ++converted;
    }
    CHECK(converted == 3);
    NetworkParams p = strip_zero_padding(n.params);
    for (std::size_t i = 0; i < p.layers.size(); ++i) {
        if (const auto* c = std::get_if<ConvLayer>(&p.layers[i])) {
            CHECK(c->kernel.weights == std::get<ConvLayer>(n.params.layers[i]).kernel.weights);
        }
    }

    NetworkSpec strided = n.spec;
    strided.layers[0].stride = 2;
    strided.layers[2].stride = 2;
    try {
        strip_zero_padding(strided);
        FAIL("strided convs accepted");
    } catch (const SpecError& e) {
        CHECK(std::string(e.what()).find("layers 0, 2") != std::string::npos);
    }
}

TEST_CASE("local tiling matches the single pass") {
    const Tensor img = random_tensor(1, 3, 32, 32, 7);
    const Net shallow = random_net({6, 6}, 3, 0, ConvPadding::external, 3);
    const Net deep = random_net({6, 8, 8, 6, 5}, 3, 1, ConvPadding::external, 4);
    for (const Net* n : {&shallow, &deep}) {
        const Tensor ref = run(img, *n, TileMode::single_pass, 1, 1);
        const Tensor t2 = run(img, *n, TileMode::local_padding, 2, 2);
        const Tensor t4 = run(img, *n, TileMode::local_padding, 4, 4);
        const Tensor uneven = run(img, *n, TileMode::local_padding, 0, 0, 10);
        const Tensor mixed = run(img, *n, TileMode::local_padding, 3, 2);
        CHECK(ref.h() == 32 * n->spec.scale_factor());
        CHECK(max_abs_diff(t2, ref) <= 1e-5f);
        CHECK(max_abs_diff(t4, ref) <= 1e-5f);
        CHECK(max_abs_diff(uneven, ref) <= 1e-5f);
        CHECK(max_abs_diff(mixed, ref) <= 1e-5f);
        CHECK(max_abs_diff(t2, t4) <= 1e-5f);
    }
}

TEST_CASE("identity network passes every mode through") {
    NetworkSpec spec = build_sequential_conv_net(3, {}, 3);
    WeightStore store = init_random_weights(spec, 5);
    auto w = store.values("layers.0.weight");
    std::fill(w.begin(), w.end(), 0.0f);
    for (int c = 0; c < 3; ++c) w[(c * 3 + c) * 9 + 4] = 1.0f;
    auto b = store.values("layers.0.bias");
    std::fill(b.begin(), b.end(), 0.0f);
    Net n{spec, bind_weights(spec, store)};
    const Tensor img = random_tensor(1, 3, 20, 24, 8);
    CHECK(run(img, n, TileMode::single_pass, 1, 1) == img);
    CHECK(run(img, n, TileMode::local_padding, 2, 3) == img);
    CHECK(run(img, n, TileMode::overlap_baseline, 2, 3) == img);
    CHECK(max_abs_diff(run(img, n, TileMode::overlap_baseline, 2, 3, 0, 3), img) <= 1e-6f);
}

TEST_CASE("stripped zero-padded net agrees in the inset interior") {
    const Net n = random_net({6, 6}, 3, 1, ConvPadding::zero, 9);
    const Tensor img = random_tensor(1, 3, 24, 24, 10);
    const Tensor zero_ref = run(img, n, TileMode::single_pass, 1, 1);
    const Tensor tiled = run(img, n, TileMode::local_padding, 2, 2);
    CHECK(max_abs_diff(tiled, zero_ref) > 1e-3f);
    const int r = receptive_radius(n.spec);
    const Slice2D inner{r, r, zero_ref.h() - 2 * r, zero_ref.w() - 2 * r};
    CHECK(max_abs_diff(view(tiled, inner), view(zero_ref, inner)) <= 1e-5f);
    // One pixel further out the border change shows.
    const Slice2D wider{r - 1, r - 1, zero_ref.h() - 2 * r + 2, zero_ref.w() - 2 * r + 2};
    CHECK(max_abs_diff(view(tiled, wider), view(zero_ref, wider)) > 1e-6f);
}

TEST_CASE("overlap baseline is exact where a single tile has full context") {
    const Net n = random_net({6, 6}, 3, 0, ConvPadding::external, 11);
    const Tensor img = random_tensor(1, 3, 32, 32, 12);
    const int overlap = 4;
    const Tensor ref = run(img, n, TileMode::single_pass, 1, 1);
    const Tensor blended = run(img, n, TileMode::overlap_baseline, 2, 2, 0, overlap);
    // Seams at 16: pixels further than `overlap` from both seams see one tile
    // whose window reaches at least 2 * overlap >= radius past them.
    REQUIRE(2 * overlap >= receptive_radius(n.spec));
    for (const Slice2D s : {Slice2D{0, 0, 12, 12}, Slice2D{20, 20, 12, 12}, Slice2D{0, 20, 12, 12}}) {
        CHECK(max_abs_diff(view(blended, s), view(ref, s)) <= 1e-5f);
    }
    CHECK(max_abs_diff(blended, ref) > 1e-5f);
}

TEST_CASE("plain concatenation leaves seams local padding does not") {
    const Tensor img = random_tensor(1, 3, 48, 48, 13);
    for (std::uint64_t seed : {14, 15, 16}) {
        const Net n = random_net({8, 8}, 3, 0, ConvPadding::zero, seed);
        const std::vector<Seam> seams = grid_seams(48, 48, 24);
        const double local = seam_metric(run(img, n, TileMode::local_padding, 2, 2), seams).max_ratio;
        const double plain = seam_metric(run(img, n, TileMode::overlap_baseline, 2, 2), seams).max_ratio;
        CHECK(plain > local);
    }
}

TEST_CASE("tile_apply rejects bad plans") {
    const Net n = random_net({6, 6, 6, 6, 6}, 3, 0, ConvPadding::external, 17);
    const Tensor img = random_tensor(1, 3, 16, 16, 18);
    CHECK(halo_demand(n.spec) == 6);
    CHECK_THROWS_AS(run(img, n, TileMode::local_padding, 4, 4), std::invalid_argument);
    CHECK_NOTHROW(run(img, n, TileMode::local_padding, 2, 2));
    CHECK_THROWS_AS(run(random_tensor(1, 4, 16, 16, 1), n, TileMode::local_padding, 2, 2), ShapeError);

    TilePlan plan;
    plan.scale = 4;
    CHECK_THROWS_AS(tile_apply(img, n.spec, n.params, plan), std::invalid_argument);

    Net strided = random_net({6}, 3, 0, ConvPadding::zero, 19);
    strided.spec.layers[0].stride = 2;
    std::get<ConvLayer>(strided.params.layers[0]).stride = 2;
    CHECK_THROWS_AS(run(img, strided, TileMode::local_padding, 2, 2), SpecError);
    CHECK(run(img, strided, TileMode::single_pass, 1, 1).h() == 8);

    NetworkSpec gen = build_texture_generator(1, 8, 2, 4);
    NetworkParams gp = bind_weights(gen, init_random_weights(gen, 1));
    CHECK_THROWS_AS(tile_apply(img, gen, gp, TilePlan{}), SpecError);
}
