#pragma once

#include <array>

#include "lpad/tensor.hpp"

namespace lpad {

enum class Side { top = 0, bottom = 1, left = 2, right = 3 };

struct SideSet {
    bool top = false;
    bool bottom = false;
    bool left = false;
    bool right = false;

    static SideSet all() { return {true, true, true, true}; }
    static SideSet only(Side s);
    bool has(Side s) const;
};

/// Where the ring of an outer patch comes from on one side of a grid.
///
/// `cached` strips hold neighbor features that are not part of the grid. A
/// left/right strip has shape (n, c, length, width) and a top/bottom strip
/// (n, c, width, length); `start` is the grid-frame coordinate of the strip's
/// first element along the side. The `width` lines nearest the grid are the
/// inner ones: the last columns of a left strip, the first columns of a right
/// strip, and likewise for rows. Positions outside the strip's extent along
/// the side are clamped to its ends.
struct Border {
    enum class Kind { replicate, cached, none };
    Kind kind = Kind::replicate;
    Tensor strip;
    int start = 0;

    static Border replicate() { return {}; }
    static Border none() { return {Kind::none, {}, 0}; }
    static Border cached(Tensor strip, int start = 0) { return {Kind::cached, std::move(strip), start}; }
};

/// Per-side border policy. Corners follow column-then-row composition: the
/// left/right ring is built first for the grid's own rows, then the top/bottom
/// ring spans the widened extent, so top/bottom policies own the corners.
struct BorderSet {
    std::array<Border, 4> sides{};

    const Border& operator[](Side s) const { return sides[static_cast<int>(s)]; }
    Border& operator[](Side s) { return sides[static_cast<int>(s)]; }

    static BorderSet replicate_all() { return {}; }
};

/// Patches of one layer arranged R x C plus the policy for the grid's outer sides.
struct FeatureGrid {
    TensorGrid cells;
    BorderSet borders;

    int rows() const { return cells.rows; }
    int cols() const { return cells.cols; }
};

struct HaloSpec {
    int halo = 1;
};

Tensor pad_zero(const Tensor& x, int halo);

/// Replicates edge pixels outward on the selected sides; columns are padded
/// first, then rows.
Tensor pad_replicate(const Tensor& x, int halo, SideSet sides = SideSet::all());

/// Pads a whole tensor on all sides according to `borders` (none = no growth).
/// This is the single-tensor counterpart of exchange_halos.
Tensor pad_with_borders(const Tensor& x, int halo, const BorderSet& borders);

/// Local padding: pads every patch with the adjacent `halo` lines of its
/// neighbors, diagonal neighbors included. Outer sides follow the grid's
/// border policy. Throws if halo exceeds a patch extent or a cached strip is
/// too narrow or does not match.
TensorGrid exchange_halos(const FeatureGrid& g, const HaloSpec& spec);

/// The side-adjacent strip of `width` lines, full length along the side.
Tensor extract_strip(const Tensor& x, Side side, int width);

}  // namespace lpad
