#include "lpad/executor.hpp"

#include "lpad/parallel.hpp"

namespace lpad {

namespace {

BorderSet all_none() {
    BorderSet b;
    for (Border& s : b.sides) s = Border::none();
    return b;
}

const BorderSet& slot_borders(const SlotBorders* borders, int slot) {
    static const BorderSet replicate = BorderSet::replicate_all();
    if (borders && slot < static_cast<int>(borders->size())) return (*borders)[slot];
    return replicate;
}

}  // namespace

Tensor TensorBackend::conv(const Tensor& x, const ConvKernel& k, int stride, ConvPadding padding, int slot) {
    switch (padding) {
        case ConvPadding::external:
            return conv2d_valid(pad_with_borders(x, k.halo(), slot_borders(borders_, slot)), k, stride);
        case ConvPadding::zero:
            return conv2d_valid(pad_zero(x, k.halo()), k, stride);
        case ConvPadding::none:
            return conv2d_valid(x, k, stride);
    }
    return x;
}

TensorGrid GridBackend::map(const TensorGrid& g, const std::function<Tensor(const Tensor&)>& f) {
    TensorGrid out{g.rows, g.cols, std::vector<Tensor>(g.parts.size())};
    parallel_for(g.parts.size(), [&](std::size_t i) { out.parts[i] = f(g.parts[i]); });
    return out;
}

TensorGrid GridBackend::add(const TensorGrid& a, const TensorGrid& b) {
    if (a.rows != b.rows || a.cols != b.cols) throw ShapeError("grid add: grid shapes differ");
    TensorGrid out{a.rows, a.cols, std::vector<Tensor>(a.parts.size())};
    parallel_for(a.parts.size(), [&](std::size_t i) { out.parts[i] = lpad::add(a.parts[i], b.parts[i]); });
    return out;
}

TensorGrid GridBackend::conv(const TensorGrid& g, const ConvKernel& k, int stride, ConvPadding padding, int slot) {
    if (stride != 1) {
        throw std::invalid_argument("strided convolution (slot " + std::to_string(slot) +
                                    ") cannot be fed by halo exchange");
    }
    const int halo = k.halo();

    if (static_cast<int>(records_.size()) <= slot) records_.resize(slot + 1);
    SlotRecord& rec = records_[slot];
    rec.halo = halo;
    if (options_.capture_col) {
        const int col = *options_.capture_col;
        TensorGrid column{g.rows, 1, {}};
        for (int r = 0; r < g.rows; ++r) column.parts.push_back(extract_strip(g.at(r, col), Side::right, halo));
        rec.right_strip = concat_spatial(column);
    }
    if (options_.capture_row) {
        const int row = *options_.capture_row;
        rec.bottom_strips.clear();
        for (int c = 0; c < g.cols; ++c) rec.bottom_strips.push_back(extract_strip(g.at(row, c), Side::bottom, halo));
    }

    TensorGrid padded;
    if (padding == ConvPadding::zero ||
        (padding == ConvPadding::external && options_.padding == PaddingMode::zero_ablation)) {
        padded = map(g, [halo](const Tensor& t) { return pad_zero(t, halo); });
    } else if (padding == ConvPadding::external) {
        padded = exchange_halos(FeatureGrid{g, slot_borders(options_.borders, slot)}, HaloSpec{halo});
    } else {
        padded = exchange_halos(FeatureGrid{g, all_none()}, HaloSpec{halo});
    }
    return map(padded, [&k, stride](const Tensor& t) { return conv2d_valid(t, k, stride); });
}

}  // namespace lpad
