#include "lpad/stream.hpp"

#include <algorithm>
#include <string>

#include "json.hpp"
#include "lpad/image_io.hpp"

namespace lpad {

namespace {

Tensor strip_or_empty(const std::vector<Tensor>& v, int col) {
    return col >= 0 && col < static_cast<int>(v.size()) ? v[col] : Tensor{};
}

void store_at(std::vector<Tensor>& v, int col, Tensor t) {
    if (static_cast<int>(v.size()) <= col) v.resize(col + 1);
    v[col] = std::move(t);
}

/// Latents of the block [c0, c0 + ncols) of the current band. Cached
/// provisional latents take precedence over fresh draws.
LatentGrid block_latents(const StreamState& s, int c0, int ncols) {
    LatentGrid g{s.rows, ncols, s.band_top, c0, s.seed, s.options.latents, TensorGrid{s.rows, ncols, {}}};
    for (int r = 0; r < s.rows; ++r) {
        for (int j = 0; j < ncols; ++j) {
            const int col = c0 + j;
            if (j == 0 && col == s.frontier_col && !s.frontier_z.empty()) {
                g.z.parts.push_back(s.frontier_z[r]);
            } else if (r == 0 && !strip_or_empty(s.top_z, col).empty()) {
                g.z.parts.push_back(s.top_z[col]);
            } else {
                g.z.parts.push_back(sample_latent_cell(s.spec, s.seed, s.options.latents, s.band_top + r, col));
            }
        }
    }
    return g;
}

SlotBorders block_borders(const StreamState& s, int c0, int ncols) {
    SlotBorders borders(s.slots.size());
    for (std::size_t k = 0; k < s.slots.size(); ++k) {
        const SlotCache& cache = s.slots[k];
        BorderSet& b = borders[k];
        if (c0 > 0) b[Side::left] = Border::cached(cache.left);
        if (s.top_limit >= 0) {
            TensorGrid row{1, 0, {}};
            int start = 0;
            if (c0 > 0) {
                // Diagonal neighbor: right columns of the strip one column left.
                const Tensor& prev = cache.top.at(c0 - 1);
                row.parts.push_back(view(prev, {0, prev.w() - cache.halo, prev.h(), cache.halo}));
                start = -cache.halo;
            }
            for (int j = 0; j < ncols; ++j) row.parts.push_back(cache.top.at(c0 + j));
            row.cols = static_cast<int>(row.parts.size());
            b[Side::top] = Border::cached(concat_spatial(row), start);
        }
    }
    return borders;
}

/// Runs one block at [c0, c0 + ncols), emits all but its last column (and with
/// grow_down its last row) and refreshes the caches.
EmitRegion run_step(StreamState& s, int c0, int ncols) {
    const LatentGrid g = block_latents(s, c0, ncols);
    const SlotBorders borders = block_borders(s, c0, ncols);

    BlockOptions opts;
    opts.borders = &borders;
    if (ncols >= 2) opts.capture_col = ncols - 2;
    if (s.options.grow_down) opts.capture_row = s.rows - 2;
    BlockResult block = generate_block(g, s.spec, *s.params, s.options.padding, opts);

    for (std::size_t k = 0; k < s.slots.size(); ++k) {
        SlotCache& cache = s.slots[k];
        const SlotRecord& rec = block.layer_inputs.at(k);
        if (rec.right_strip) cache.left = *rec.right_strip;
        for (int j = 0; j < static_cast<int>(rec.bottom_strips.size()); ++j) {
            store_at(cache.next_top, c0 + j, rec.bottom_strips[j]);
        }
    }
    s.frontier_z.clear();
    for (int r = 0; r < s.rows; ++r) s.frontier_z.push_back(g.z.at(r, ncols - 1));
    if (s.options.grow_down) {
        for (int j = 0; j < ncols; ++j) store_at(s.bottom_z, c0 + j, g.z.at(s.rows - 1, j));
    }

    const int P = s.patch_extent();
    EmitRegion region{c0 * P, s.band_top * P, {}};
    const int emit_rows = s.options.grow_down ? s.rows - 1 : s.rows;
    if (ncols >= 2) region.pixels = view(block.image, {0, 0, emit_rows * P, (ncols - 1) * P});

    s.frontier_col = c0 + ncols - 1;
    // Strips left of the new left neighbor are never read again.
    for (SlotCache& cache : s.slots) {
        for (int c = 0; c < std::min<int>(s.frontier_col - 1, cache.top.size()); ++c) cache.top[c] = Tensor{};
    }
    for (int c = 0; c < std::min<int>(s.frontier_col, s.top_z.size()); ++c) s.top_z[c] = Tensor{};

    s.last_block = std::move(block.image);
    s.last_block_col = c0;
    return region;
}

void require_initialized(const StreamState& s) {
    if (!s.initialized || !s.params) throw StreamError("stream is not initialized");
}

int step_columns(const StreamState& s) {
    int ncols = 1 + std::max(s.options.grid - 1, 1);
    if (s.top_limit >= 0) ncols = std::min(ncols, s.top_limit - s.frontier_col + 1);
    return ncols;
}

std::size_t floats_in(const std::vector<Tensor>& v) {
    std::size_t n = 0;
    for (const Tensor& t : v) n += t.size();
    return n;
}

}  // namespace

std::size_t StreamState::cache_floats() const {
    std::size_t n = floats_in(frontier_z) + floats_in(bottom_z) + floats_in(top_z);
    for (const SlotCache& c : slots) n += c.left.size() + floats_in(c.top) + floats_in(c.next_top);
    return n;
}

EmitRegion stream_init(StreamState& s, const NetworkSpec& spec, std::shared_ptr<const NetworkParams> params,
                       std::uint64_t seed, int rows, const StreamOptions& options) {
    if (!params) throw std::invalid_argument("stream_init: no parameters");
    if (rows < 1) throw std::invalid_argument("stream_init: rows must be >= 1");
    if (options.grid < 1) throw std::invalid_argument("stream_init: grid must be >= 1");
    if (options.grow_down && rows < 2) throw std::invalid_argument("stream_init: growing down needs rows >= 2");
    spec.validate();
    if (spec.z_spatial < 1) throw SpecError("streaming needs a generator with a spatial latent");

    s = StreamState{};
    s.spec = spec;
    s.params = std::move(params);
    s.seed = seed;
    s.options = options;
    s.rows = rows;
    for (const SpatialConvInfo& info : spec.spatial_convs()) s.slots.push_back(SlotCache{info.halo, {}, {}, {}});
    s.initialized = true;
    return run_step(s, 0, options.grid);
}

EmitRegion extend_right(StreamState& s) {
    require_initialized(s);
    const int ncols = step_columns(s);
    if (ncols < 2) {
        throw StreamError("band already reaches column " + std::to_string(s.top_limit) +
                          ", the previous band's frontier");
    }
    return run_step(s, s.frontier_col, ncols);
}

namespace {

/// Moves the state to the next band; returns the first block's column count.
int begin_band(StreamState& s) {
    require_initialized(s);
    if (!s.options.grow_down) throw StreamError("stream was initialized without a bottom frontier");
    s.top_limit = s.frontier_col;
    s.band_top += s.rows - 1;
    s.frontier_col = 0;
    s.frontier_z.clear();
    s.top_z = std::move(s.bottom_z);
    s.bottom_z.clear();
    for (SlotCache& cache : s.slots) {
        cache.left = Tensor{};
        cache.top = std::move(cache.next_top);
        cache.next_top.clear();
    }
    return std::min(s.options.grid, s.top_limit + 1);
}

}  // namespace

EmitRegion extend_down(StreamState& s) {
    const int ncols = begin_band(s);
    return run_step(s, 0, ncols);
}

FrontierWindow frontier_window(const StreamState& s, StreamStep step) {
    require_initialized(s);
    if (step == StreamStep::down) {
        StreamState next = s;
        const int ncols = begin_band(next);
        return {block_latents(next, 0, ncols), block_borders(next, 0, ncols)};
    }
    const int ncols = step_columns(s);
    if (ncols < 2) throw StreamError("no further extension possible in this band");
    return {block_latents(s, s.frontier_col, ncols), block_borders(s, s.frontier_col, ncols)};
}

std::size_t stream_generate(const NetworkSpec& spec, std::shared_ptr<const NetworkParams> params,
                            std::uint64_t seed, int out_w, int out_h, const StreamOptions& options,
                            const RegionSink& sink) {
    if (out_w < 1 || out_h < 1) throw std::invalid_argument("output size must be positive");
    spec.validate();
    const int P = spec.patch_extent();
    const int need_c = (out_w + P - 1) / P;
    const int need_r = (out_h + P - 1) / P;

    StreamOptions opts = options;
    int rows = need_r;
    opts.grow_down = need_r > options.grid;
    if (opts.grow_down) rows = std::max(options.grid, 2);

    std::size_t peak = 0;
    const auto emit = [&](const EmitRegion& r, const StreamState& s) {
        peak = std::max(peak, s.cache_floats());
        const int w = std::min(r.width(), out_w - r.x);
        const int h = std::min(r.height(), out_h - r.y);
        if (w <= 0 || h <= 0) return;
        if (w == r.width() && h == r.height()) {
            sink(r);
        } else {
            sink(EmitRegion{r.x, r.y, view(r.pixels, {0, 0, h, w})});
        }
    };

    StreamState s;
    emit(stream_init(s, spec, std::move(params), seed, rows, opts), s);
    while (s.finalized_cols() < need_c) emit(extend_right(s), s);
    while (opts.grow_down && s.finalized_rows() < need_r) {
        emit(extend_down(s), s);
        while (s.finalized_cols() < need_c) emit(extend_right(s), s);
    }
    return peak;
}

Tensor generate_sized(const NetworkSpec& spec, std::shared_ptr<const NetworkParams> params, std::uint64_t seed,
                      int out_w, int out_h, const StreamOptions& options) {
    Tensor canvas(1, spec.out_channels, out_h, out_w);
    stream_generate(spec, std::move(params), seed, out_w, out_h, options, [&](const EmitRegion& r) {
        for (int c = 0; c < canvas.c(); ++c)
            for (int y = 0; y < r.height(); ++y)
                std::copy_n(r.pixels.data() + r.pixels.index(0, c, y, 0), r.width(),
                            canvas.data() + canvas.index(0, c, r.y + y, r.x));
    });
    return canvas;
}

StreamFileWriter::StreamFileWriter(const std::filesystem::path& path)
    : data_(path, std::ios::binary | std::ios::trunc), index_(path.string() + ".index.jsonl", std::ios::trunc) {
    if (!data_ || !index_) throw ImageIoError("cannot open stream output " + path.string());
}

void StreamFileWriter::write(const EmitRegion& region) {
    if (region.pixels.empty()) return;
    const std::vector<std::uint8_t> rgb = to_rgb8(region.pixels);
    data_.write(reinterpret_cast<const char*>(rgb.data()), static_cast<std::streamsize>(rgb.size()));
    const nlohmann::json line = {
        {"offset", offset_}, {"x", region.x}, {"y", region.y}, {"w", region.width()}, {"h", region.height()}};
    index_ << line.dump() << '\n';
    if (!data_ || !index_) throw ImageIoError("stream output write failed");
    offset_ += rgb.size();
}

void StreamFileWriter::close() {
    data_.close();
    index_.close();
}

}  // namespace lpad
