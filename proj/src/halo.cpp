#include "lpad/halo.hpp"

#include <algorithm>
#include <cstring>
#include <string>
#include <vector>

#include "lpad/parallel.hpp"

namespace lpad {

SideSet SideSet::only(Side s) {
    SideSet out;
    switch (s) {
        case Side::top: out.top = true; break;
        case Side::bottom: out.bottom = true; break;
        case Side::left: out.left = true; break;
        case Side::right: out.right = true; break;
    }
    return out;
}

bool SideSet::has(Side s) const {
    switch (s) {
        case Side::top: return top;
        case Side::bottom: return bottom;
        case Side::left: return left;
        case Side::right: return right;
    }
    return false;
}

namespace {

const char* side_name(Side s) {
    switch (s) {
        case Side::top: return "top";
        case Side::bottom: return "bottom";
        case Side::left: return "left";
        case Side::right: return "right";
    }
    return "?";
}

bool vertical_side(Side s) { return s == Side::left || s == Side::right; }

int strip_length(const Border& b, Side s) { return vertical_side(s) ? b.strip.h() : b.strip.w(); }
int strip_width(const Border& b, Side s) { return vertical_side(s) ? b.strip.w() : b.strip.h(); }

/// Checks a cached strip against the grid it borders (n, c, H, W in the grid frame).
void check_border(const Border& b, Side s, int n, int c, int grid_h, int grid_w, int halo) {
    if (b.kind != Border::Kind::cached || halo == 0) return;
    if (b.strip.empty() || b.strip.n() != n || b.strip.c() != c) {
        throw ShapeError(std::string("cached ") + side_name(s) + " strip does not match feature (n, c)");
    }
    if (strip_width(b, s) < halo) {
        throw ShapeError(std::string("cached ") + side_name(s) + " strip width " +
                         std::to_string(strip_width(b, s)) + " < halo " + std::to_string(halo));
    }
    const int side_len = vertical_side(s) ? grid_h : grid_w;
    if (b.start > 0 || b.start + strip_length(b, s) < side_len) {
        throw ShapeError(std::string("cached ") + side_name(s) + " strip does not cover the side");
    }
}

int pad_amount(const Border& b, int halo) { return b.kind == Border::Kind::none ? 0 : halo; }

/// Value of a cached strip at grid-frame position (gi, gj) just outside side `s`.
float strip_value(const Border& b, Side s, int n, int c, int gi, int gj, int grid_h, int grid_w) {
    const Tensor& t = b.strip;
    const auto along = [&](int pos) { return std::clamp(pos - b.start, 0, strip_length(b, s) - 1); };
    switch (s) {
        case Side::left: return t.at(n, c, along(gi), t.w() + gj);
        case Side::right: return t.at(n, c, along(gi), gj - grid_w);
        case Side::top: return t.at(n, c, t.h() + gi, along(gj));
        case Side::bottom: return t.at(n, c, gi - grid_h, along(gj));
    }
    return 0.0f;
}

}  // namespace

Tensor pad_zero(const Tensor& x, int halo) {
    if (halo < 0) throw std::invalid_argument("pad_zero: negative halo");
    if (halo == 0) return x;
    Tensor out(x.n(), x.c(), x.h() + 2 * halo, x.w() + 2 * halo);
    for (int n = 0; n < x.n(); ++n) {
        for (int c = 0; c < x.c(); ++c) {
            for (int y = 0; y < x.h(); ++y) {
                std::memcpy(out.data() + out.index(n, c, y + halo, halo), x.data() + x.index(n, c, y, 0),
                            sizeof(float) * x.w());
            }
        }
    }
    return out;
}

Tensor pad_replicate(const Tensor& x, int halo, SideSet sides) {
    BorderSet b;
    for (Side s : {Side::top, Side::bottom, Side::left, Side::right}) {
        b[s] = sides.has(s) ? Border::replicate() : Border::none();
    }
    return pad_with_borders(x, halo, b);
}

Tensor pad_with_borders(const Tensor& x, int halo, const BorderSet& borders) {
    if (halo < 0) throw std::invalid_argument("pad_with_borders: negative halo");
    const int H = x.h(), W = x.w();
    for (Side s : {Side::top, Side::bottom, Side::left, Side::right}) {
        check_border(borders[s], s, x.n(), x.c(), H, W, halo);
    }
    const Border& top = borders[Side::top];
    const Border& bottom = borders[Side::bottom];
    const Border& left = borders[Side::left];
    const Border& right = borders[Side::right];
    const int pt = pad_amount(top, halo), pb = pad_amount(bottom, halo);
    const int pl = pad_amount(left, halo), pr = pad_amount(right, halo);
    if (pt + pb + pl + pr == 0) return x;

    Tensor out(x.n(), x.c(), H + pt + pb, W + pl + pr);
    const int OW = out.w();
    for (int n = 0; n < x.n(); ++n) {
        for (int c = 0; c < x.c(); ++c) {
            float* o = out.plane(n, c);
            const float* src = x.plane(n, c);
            // Columns first, over the tensor's own rows.
            for (int i = 0; i < H; ++i) {
                float* row = o + static_cast<std::size_t>(pt + i) * OW;
                const float* srow = src + static_cast<std::size_t>(i) * W;
                std::memcpy(row + pl, srow, sizeof(float) * W);
                for (int j = -pl; j < 0; ++j) {
                    row[pl + j] = left.kind == Border::Kind::cached ? strip_value(left, Side::left, n, c, i, j, H, W)
                                                                    : srow[0];
                }
                for (int j = W; j < W + pr; ++j) {
                    row[pl + j] = right.kind == Border::Kind::cached
                                      ? strip_value(right, Side::right, n, c, i, j, H, W)
                                      : srow[W - 1];
                }
            }
            // Then rows, across the widened extent.
            for (int i = -pt; i < 0; ++i) {
                float* row = o + static_cast<std::size_t>(pt + i) * OW;
                const float* first = o + static_cast<std::size_t>(pt) * OW;
                for (int j = -pl; j < W + pr; ++j) {
                    row[pl + j] = top.kind == Border::Kind::cached ? strip_value(top, Side::top, n, c, i, j, H, W)
                                                                   : first[pl + j];
                }
            }
            for (int i = H; i < H + pb; ++i) {
                float* row = o + static_cast<std::size_t>(pt + i) * OW;
                const float* last = o + static_cast<std::size_t>(pt + H - 1) * OW;
                for (int j = -pl; j < W + pr; ++j) {
                    row[pl + j] = bottom.kind == Border::Kind::cached
                                      ? strip_value(bottom, Side::bottom, n, c, i, j, H, W)
                                      : last[pl + j];
                }
            }
        }
    }
    return out;
}

namespace {

/// Maps grid-frame coordinates onto the patch that owns them.
struct GridFrame {
    std::vector<int> row_offset;  // size rows + 1
    std::vector<int> col_offset;  // size cols + 1
    std::vector<int> row_of;      // gi -> patch row
    std::vector<int> col_of;      // gj -> patch col

    explicit GridFrame(const TensorGrid& g) {
        row_offset.assign(g.rows + 1, 0);
        col_offset.assign(g.cols + 1, 0);
        for (int r = 0; r < g.rows; ++r) row_offset[r + 1] = row_offset[r] + g.at(r, 0).h();
        for (int c = 0; c < g.cols; ++c) col_offset[c + 1] = col_offset[c] + g.at(0, c).w();
        row_of.resize(row_offset.back());
        col_of.resize(col_offset.back());
        for (int r = 0; r < g.rows; ++r) std::fill(row_of.begin() + row_offset[r], row_of.begin() + row_offset[r + 1], r);
        for (int c = 0; c < g.cols; ++c) std::fill(col_of.begin() + col_offset[c], col_of.begin() + col_offset[c + 1], c);
    }
    int height() const { return row_offset.back(); }
    int width() const { return col_offset.back(); }
};

struct RingSampler {
    const TensorGrid& cells;
    const BorderSet& borders;
    const GridFrame& frame;

    float operator()(int n, int c, int gi, int gj) const {
        const int H = frame.height(), W = frame.width();
        if (gi >= 0 && gi < H) {
            if (gj >= 0 && gj < W) {
                const int r = frame.row_of[gi], k = frame.col_of[gj];
                return cells.at(r, k).at(n, c, gi - frame.row_offset[r], gj - frame.col_offset[k]);
            }
            const Side s = gj < 0 ? Side::left : Side::right;
            const Border& b = borders[s];
            if (b.kind == Border::Kind::cached) return strip_value(b, s, n, c, gi, gj, H, W);
            return (*this)(n, c, gi, std::clamp(gj, 0, W - 1));
        }
        const Side s = gi < 0 ? Side::top : Side::bottom;
        const Border& b = borders[s];
        if (b.kind == Border::Kind::cached) return strip_value(b, s, n, c, gi, gj, H, W);
        return (*this)(n, c, std::clamp(gi, 0, H - 1), gj);
    }
};

}  // namespace

TensorGrid exchange_halos(const FeatureGrid& g, const HaloSpec& spec) {
    const TensorGrid& cells = g.cells;
    const int halo = spec.halo;
    if (halo < 0) throw std::invalid_argument("exchange_halos: negative halo");
    if (cells.rows < 1 || cells.cols < 1 ||
        cells.parts.size() != static_cast<std::size_t>(cells.rows) * cells.cols) {
        throw ShapeError("exchange_halos: grid must be non-empty and fully populated");
    }
    const Tensor& first = cells.at(0, 0);
    for (int r = 0; r < cells.rows; ++r) {
        for (int c = 0; c < cells.cols; ++c) {
            const Tensor& p = cells.at(r, c);
            if (p.n() != first.n() || p.c() != first.c() || p.h() != cells.at(r, 0).h() ||
                p.w() != cells.at(0, c).w()) {
                throw ShapeError("exchange_halos: inconsistent patch shapes at (" + std::to_string(r) + "," +
                                 std::to_string(c) + ")");
            }
            if (halo > p.h() || halo > p.w()) {
                throw ShapeError("exchange_halos: halo " + std::to_string(halo) + " exceeds patch extent " +
                                 to_string(p.shape()));
            }
        }
    }
    const GridFrame frame(cells);
    for (Side s : {Side::top, Side::bottom, Side::left, Side::right}) {
        check_border(g.borders[s], s, first.n(), first.c(), frame.height(), frame.width(), halo);
    }
    const RingSampler sample{cells, g.borders, frame};

    TensorGrid out{cells.rows, cells.cols, std::vector<Tensor>(cells.parts.size())};
    parallel_for(cells.parts.size(), [&](std::size_t idx) {
        const int r = static_cast<int>(idx) / cells.cols;
        const int k = static_cast<int>(idx) % cells.cols;
        const Tensor& p = cells.at(r, k);
        const int pt = (r == 0) ? pad_amount(g.borders[Side::top], halo) : halo;
        const int pb = (r == cells.rows - 1) ? pad_amount(g.borders[Side::bottom], halo) : halo;
        const int pl = (k == 0) ? pad_amount(g.borders[Side::left], halo) : halo;
        const int pr = (k == cells.cols - 1) ? pad_amount(g.borders[Side::right], halo) : halo;
        const int r0 = frame.row_offset[r], c0 = frame.col_offset[k];

        Tensor padded(p.n(), p.c(), p.h() + pt + pb, p.w() + pl + pr);
        const int OW = padded.w();
        for (int n = 0; n < p.n(); ++n) {
            for (int c = 0; c < p.c(); ++c) {
                float* o = padded.plane(n, c);
                for (int i = -pt; i < p.h() + pb; ++i) {
                    float* row = o + static_cast<std::size_t>(pt + i) * OW;
                    const int gi = r0 + i;
                    if (i >= 0 && i < p.h()) {
                        std::memcpy(row + pl, p.data() + p.index(n, c, i, 0), sizeof(float) * p.w());
                        for (int j = -pl; j < 0; ++j) row[pl + j] = sample(n, c, gi, c0 + j);
                        for (int j = p.w(); j < p.w() + pr; ++j) row[pl + j] = sample(n, c, gi, c0 + j);
                    } else {
                        for (int j = -pl; j < p.w() + pr; ++j) row[pl + j] = sample(n, c, gi, c0 + j);
                    }
                }
            }
        }
        out.parts[idx] = std::move(padded);
    });
    return out;
}

Tensor extract_strip(const Tensor& x, Side side, int width) {
    const int extent = vertical_side(side) ? x.w() : x.h();
    if (width < 1 || width > extent) {
        throw BoundsError(std::string("extract_strip: width ") + std::to_string(width) + " invalid for " +
                          side_name(side) + " side of " + to_string(x.shape()));
    }
    switch (side) {
        case Side::top: return view(x, {0, 0, width, x.w()});
        case Side::bottom: return view(x, {x.h() - width, 0, width, x.w()});
        case Side::left: return view(x, {0, 0, x.h(), width});
        case Side::right: return view(x, {0, x.w() - width, x.h(), width});
    }
    return x;
}

}  // namespace lpad
