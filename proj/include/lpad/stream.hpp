#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <stdexcept>
#include <vector>

#include "lpad/patch_engine.hpp"

namespace lpad {

class StreamError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

struct StreamOptions {
    /// N: patches per side of the block generated in one step.
    int grid = 3;
    PaddingMode padding = PaddingMode::local;
    LatentOptions latents;
    /// Keep the bottom patch row provisional so the canvas can grow downward.
    /// Needs rows >= 2; one row per band is then withheld.
    bool grow_down = false;
};

/// Finalized pixels. `pixels` is empty when a step finalizes nothing.
struct EmitRegion {
    int x = 0;
    int y = 0;
    Tensor pixels;

    int width() const { return pixels.empty() ? 0 : pixels.w(); }
    int height() const { return pixels.empty() ? 0 : pixels.h(); }
};

/// Strips kept at one spatial conv. All are unpadded conv inputs of finalized
/// patches that border the provisional frontier.
struct SlotCache {
    int halo = 0;
    /// Right `halo` columns of the last finalized patch column, over the band.
    Tensor left;
    /// Bottom `halo` rows of the previous band's last finalized patch row, per
    /// global patch column. Feeds the top border of the current band.
    std::vector<Tensor> top;
    /// Same, captured in the current band for the next one.
    std::vector<Tensor> next_top;
};

/// State of a canvas growing right and down. Single writer: every extension
/// mutates it in place.
struct StreamState {
    NetworkSpec spec;
    std::shared_ptr<const NetworkParams> params;
    std::uint64_t seed = 0;
    StreamOptions options;
    int rows = 0;  // patch rows per band, provisional bottom row included

    bool initialized = false;
    int band_top = 0;     // global patch row of the band's first row
    int frontier_col = 0; // global patch column of the provisional column
    /// Columns the previous band reached (its provisional column). -1 when
    /// the current band is the first one.
    int top_limit = -1;

    std::vector<SlotCache> slots;
    /// Latents of the provisional column, one per band row.
    std::vector<Tensor> frontier_z;
    /// Latents of the provisional bottom row, per global column (grow_down).
    std::vector<Tensor> bottom_z;
    /// Latents of the previous band's provisional row, reused on regeneration.
    std::vector<Tensor> top_z;

    /// Block image of the most recent step (diagnostics and tests).
    Tensor last_block;
    int last_block_col = 0;

    /// Floats held in strips and latent caches.
    std::size_t cache_floats() const;
    int patch_extent() const { return spec.patch_extent(); }
    /// Finalized extent in patches.
    int finalized_cols() const { return frontier_col; }
    int finalized_rows() const { return options.grow_down ? band_top + rows - 1 : rows; }
};

/// Inputs of the next extend_right: block latents and the per-slot borders
/// the step will use. Running oracle_full_pass on it replays the step.
struct FrontierWindow {
    LatentGrid latents;
    SlotBorders borders;
};

/// Generates the first rows x N block. The rightmost column (and with
/// grow_down the bottom row) stays provisional; the rest is emitted.
EmitRegion stream_init(StreamState& s, const NetworkSpec& spec, std::shared_ptr<const NetworkParams> params,
                       std::uint64_t seed, int rows, const StreamOptions& options = {});

/// Regenerates the provisional column together with max(N - 1, 1) new
/// columns; emits everything but the new provisional column.
EmitRegion extend_right(StreamState& s);

/// Starts the next band: the provisional bottom row becomes the band's top
/// row and is regenerated with its top border taken from cached strips.
EmitRegion extend_down(StreamState& s);

enum class StreamStep { right, down };

/// The window the next extend_right (or extend_down) will run on.
FrontierWindow frontier_window(const StreamState& s, StreamStep step = StreamStep::right);

using RegionSink = std::function<void(const EmitRegion&)>;

/// Finalizes at least out_w x out_h pixels, sweeping each band to the right
/// before moving down, and hands every emitted region, cropped to the
/// requested size, to `sink`. Returns the peak cache float count.
std::size_t stream_generate(const NetworkSpec& spec, std::shared_ptr<const NetworkParams> params,
                            std::uint64_t seed, int out_w, int out_h, const StreamOptions& options,
                            const RegionSink& sink);

/// stream_generate assembled into one image.
Tensor generate_sized(const NetworkSpec& spec, std::shared_ptr<const NetworkParams> params, std::uint64_t seed,
                      int out_w, int out_h, const StreamOptions& options = {});

/// Appends regions as raw interleaved RGB8 rows to `path` and one JSON line
/// per region ({"offset","x","y","w","h"}) to `path` + ".index.jsonl".
class StreamFileWriter {
public:
    explicit StreamFileWriter(const std::filesystem::path& path);
    void write(const EmitRegion& region);
    void close();
    std::uint64_t bytes_written() const { return offset_; }

private:
    std::ofstream data_;
    std::ofstream index_;
    std::uint64_t offset_ = 0;
};

}  // namespace lpad
