#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <regex>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "lpad/image_io.hpp"
#include "lpad/metrics.hpp"
#include "lpad/stream.hpp"
#include "lpad/tiled.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace lpad;

namespace {

class UsageError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct Size {
    int w = 0;
    int h = 0;
};

Size parse_size(const std::string& s) {
    static const std::regex re(R"((\d{1,6})x(\d{1,6}))");
    std::smatch m;
    if (!std::regex_match(s, m, re)) throw UsageError("--size must look like WxH, got '" + s + "'");
    const Size out{std::stoi(m[1]), std::stoi(m[2])};
    if (out.w < 1 || out.h < 1) throw UsageError("--size must be positive");
    return out;
}

enum class Format { png, raw };

Format output_format(const std::string& path, const std::string& flag) {
    const std::string ext = fs::path(path).extension().string();
    if (ext == ".png") return Format::png;
    if (ext == ".lptn") return Format::raw;
    throw UsageError(flag + " must end in .png or .lptn: " + path);
}

void write_image(const std::string& path, const Tensor& img) {
    if (output_format(path, "output") == Format::png) {
        write_png(path, img);
    } else {
        write_tensor(path, img);
    }
}

Tensor read_image(const std::string& path) {
    return output_format(path, "--in") == Format::png ? read_png(path) : read_tensor(path);
}

void check_threads_env() {
    if (const char* env = std::getenv("LPAD_THREADS")) {
        const std::string v = env;
        if (v.empty() || v.find_first_not_of("0123456789") != std::string::npos || std::stoll(v.substr(0, 9)) < 1) {
            throw UsageError("LPAD_THREADS must be a positive integer, got '" + v + "'");
        }
    }
}

struct Model {
    NetworkSpec spec;
    NetworkParams params;
};

Model load_model(const std::string& path) {
    auto [spec, store] = load_weights(path);
    NetworkParams params = bind_weights(spec, store);
    return {std::move(spec), std::move(params)};
}

json seam_json(const SeamReport& r) {
    json seams = json::array();
    for (const SeamRatio& s : r.seams) {
        seams.push_back({{"axis", s.seam.axis == SeamAxis::vertical ? "vertical" : "horizontal"},
                         {"position", s.seam.position},
                         {"ratio", s.ratio}});
    }
    return {{"count", r.seams.size()}, {"max_ratio", r.max_ratio}, {"mean_ratio", r.mean_ratio}, {"seams", seams}};
}

json stats_json(const PatchStats& s) {
    json channels = json::array();
    for (const auto& hist : s.population) channels.push_back(std::vector<double>(hist.begin(), hist.end()));
    return {{"patch_extent", s.extent},
            {"patch_count", s.patches.size()},
            {"population_histograms", channels},
            {"note", "desk-scale proxy: patch moments and histograms, not a feature-based texture metric"}};
}

void emit_report(const json& report, const std::string& path) {
    const std::string text = report.dump(2) + "\n";
    std::cout << text;
    if (!path.empty()) {
        std::ofstream out(path, std::ios::trunc);
        out << text;
        if (!out) throw std::runtime_error("cannot write report " + path);
    }
}

void check_metrics(const std::vector<std::string>& metrics, std::initializer_list<std::string> allowed) {
    for (const std::string& m : metrics) {
        if (std::find(allowed.begin(), allowed.end(), m) == allowed.end()) {
            throw UsageError("unknown metric '" + m + "'");
        }
    }
}

bool wants(const std::vector<std::string>& metrics, const std::string& m) {
    return std::find(metrics.begin(), metrics.end(), m) != metrics.end();
}

StreamOptions stream_options(int grid, const std::string& padding, const std::string& mode) {
    StreamOptions o;
    o.grid = grid;
    o.padding = padding == "zero" ? PaddingMode::zero_ablation : PaddingMode::local;
    o.latents.mode = mode == "periodic" ? LatentMode::periodic_mix : LatentMode::gaussian;
    return o;
}

void require_generator(const NetworkSpec& spec) {
    if (spec.z_spatial < 1) throw UsageError("weights describe an image-to-image network, not a generator");
}

// ---------------------------------------------------------------- generate

struct GenerateArgs {
    std::string weights;
    std::uint64_t seed = 0;
    std::string size;
    int grid = 3;
    std::string padding = "local";
    std::string mode = "gaussian";
    std::vector<std::string> metrics;
    std::string out;
    std::string emit_stream;
    std::string report;
};

int run_generate(const GenerateArgs& a);

int cmd_generate(const GenerateArgs& a) {
    try {
        return run_generate(a);
    } catch (...) {
        // No partial stream is left behind.
        if (!a.emit_stream.empty()) {
            std::error_code ec;
            fs::remove(a.emit_stream, ec);
            fs::remove(a.emit_stream + ".index.jsonl", ec);
        }
        throw;
    }
}

int run_generate(const GenerateArgs& a) {
    const Size size = parse_size(a.size);
    check_metrics(a.metrics, {"seams", "stats"});
    if (a.out.empty() && a.emit_stream.empty()) throw UsageError("give --out, --emit-stream or both");
    if (!a.out.empty()) output_format(a.out, "--out");
    const Model m = load_model(a.weights);
    require_generator(m.spec);
    const int P = m.spec.patch_extent();
    const StreamOptions opts = stream_options(a.grid, a.padding, a.mode);
    const auto params = std::make_shared<const NetworkParams>(m.params);

    const bool assemble = !a.out.empty() || !a.metrics.empty();
    Tensor canvas;
    if (assemble) canvas = Tensor(1, m.spec.out_channels, size.h, size.w);
    std::optional<StreamFileWriter> writer;
    if (!a.emit_stream.empty()) writer.emplace(a.emit_stream);

    int regions = 0;
    const std::size_t peak = stream_generate(m.spec, params, a.seed, size.w, size.h, opts, [&](const EmitRegion& r) {
        ++regions;
        if (writer) writer->write(r);
        if (!assemble) return;
        for (int c = 0; c < canvas.c(); ++c)
            for (int y = 0; y < r.height(); ++y)
                std::copy_n(r.pixels.data() + r.pixels.index(0, c, y, 0), r.width(),
                            canvas.data() + canvas.index(0, c, r.y + y, r.x));
    });

    json report = {{"command", "generate"},     {"width", size.w},          {"height", size.h},
                   {"seed", a.seed},            {"grid", a.grid},           {"padding", a.padding},
                   {"mode", a.mode},            {"patch_extent", P},        {"regions", regions},
                   {"cache_floats_peak", peak}, {"cache_bytes_peak", peak * sizeof(float)}};
    if (writer) {
        writer->close();
        report["stream_bytes"] = writer->bytes_written();
    }
    if (wants(a.metrics, "seams")) report["seams"] = seam_json(seam_metric(canvas, grid_seams(size.h, size.w, P)));
    if (wants(a.metrics, "stats")) report["stats"] = stats_json(patch_stats(canvas, P));
    if (!a.out.empty()) write_image(a.out, canvas);
    emit_report(report, a.report);
    return 0;
}

// -------------------------------------------------------------- tile-apply

struct TileArgs {
    std::string weights;
    std::string in;
    std::string out;
    std::string tiling = "local";
    int tile = 0;
    int grid = 2;
    int overlap = -1;
    int scale = 0;
    std::vector<std::string> metrics;
    std::string baseline;
    bool check = false;
    std::string report;
};

int cmd_tile_apply(const TileArgs& a) {
    check_metrics(a.metrics, {"seams"});
    output_format(a.out, "--out");
    if (!a.baseline.empty()) output_format(a.baseline, "--baseline");
    if (a.overlap >= 0 && a.tiling != "overlap" && a.baseline.empty()) {
        throw UsageError("--overlap applies to --tiling overlap or --baseline only");
    }
    if (a.tiling == "single" && (a.tile > 0 || !a.baseline.empty())) {
        throw UsageError("--tiling single takes no --tile or --baseline");
    }
    const Model m = load_model(a.weights);
    const Tensor image = read_image(a.in);

    TilePlan plan;
    plan.mode = a.tiling == "local"     ? TileMode::local_padding
                : a.tiling == "overlap" ? TileMode::overlap_baseline
                                        : TileMode::single_pass;
    plan.tile = a.tile;
    plan.grid_rows = plan.grid_cols = a.grid;
    plan.overlap = std::max(a.overlap, 0);
    plan.scale = a.scale;
    const Tensor out = tile_apply(image, m.spec, m.params, plan);

    const int s = m.spec.scale_factor();
    json report = {{"command", "tile-apply"}, {"tiling", a.tiling},     {"scale", s},
                   {"input", {image.w(), image.h()}}, {"output", {out.w(), out.h()}}};
    std::vector<Seam> seams;
    if (plan.mode != TileMode::single_pass) {
        const int demand = std::max(halo_demand(strip_zero_padding(m.spec)), 1);
        for (int y : tile_bounds(image.h(), plan.tile, plan.grid_rows, demand))
            if (y > 0 && y < image.h()) seams.push_back({SeamAxis::horizontal, y * s});
        for (int x : tile_bounds(image.w(), plan.tile, plan.grid_cols, demand))
            if (x > 0 && x < image.w()) seams.push_back({SeamAxis::vertical, x * s});
        report["tiles"] = seams.size();
    }
    const bool seam_report = wants(a.metrics, "seams") && !seams.empty();
    if (seam_report) report["seams"] = seam_json(seam_metric(out, seams));

    Tensor baseline;
    if (!a.baseline.empty()) {
        TilePlan b = plan;
        b.mode = TileMode::overlap_baseline;
        baseline = tile_apply(image, m.spec, m.params, b);
        report["baseline"] = {{"overlap", b.overlap}};
        if (seam_report) report["baseline"]["seams"] = seam_json(seam_metric(baseline, seams));
    }
    if (a.check) {
        // Oracle: the whole image at once with zero paddings stripped, which
        // is what local tiling must reproduce.
        TilePlan single = plan;
        single.mode = TileMode::single_pass;
        const float diff = max_abs_diff(
            out, tile_apply(image, strip_zero_padding(m.spec), strip_zero_padding(m.params), single));
        report["check"] = {{"max_abs_diff_vs_single_pass", diff}, {"within_1e-5", diff <= 1e-5f}};
    }
    write_image(a.out, out);
    if (!a.baseline.empty()) write_image(a.baseline, baseline);
    emit_report(report, a.report);
    return 0;
}

// --------------------------------------------------------------- diversity

struct DiversityArgs {
    std::string weights;
    std::uint64_t seed = 0;
    int samples = 50;
    std::string size;
    int grid = 3;
    std::string padding = "local";
    std::string mode = "gaussian";
    int band = 8;
    std::string out;
    std::string report;
};

int cmd_diversity(const DiversityArgs& a) {
    if (a.samples < 2) throw UsageError("--samples must be >= 2");
    if (!a.out.empty() && output_format(a.out, "--out") != Format::png) throw UsageError("--out must be a .png");
    const Model m = load_model(a.weights);
    require_generator(m.spec);
    const int P = m.spec.patch_extent();
    const Size size = a.size.empty() ? Size{a.grid * P, a.grid * P} : parse_size(a.size);
    if (2 * a.band >= std::min(size.w, size.h)) throw UsageError("--band leaves no interior");

    const StreamOptions opts = stream_options(a.grid, a.padding, a.mode);
    const auto params = std::make_shared<const NetworkParams>(m.params);
    const Tensor map = diversity_map(
        [&](int k) { return generate_sized(m.spec, params, a.seed + static_cast<std::uint64_t>(k), size.w, size.h, opts); },
        a.samples);

    // Channel-averaged map.
    Tensor gray(1, 1, map.h(), map.w());
    for (int c = 0; c < map.c(); ++c)
        for (std::size_t i = 0; i < gray.size(); ++i) gray.data()[i] += map.plane(0, c)[i] / map.c();
    const auto [lo, hi] = std::minmax_element(gray.values().begin(), gray.values().end());
    const BandMeans bands = band_means(gray, a.band);
    const double ratio = bands.interior > 0.0 ? bands.border / bands.interior : 1.0;
    json report = {{"command", "diversity"},
                   {"samples", a.samples},
                   {"seed", a.seed},
                   {"width", size.w},
                   {"height", size.h},
                   {"band", a.band},
                   {"border_mean_std", bands.border},
                   {"interior_mean_std", bands.interior},
                   {"border_to_interior", ratio},
                   {"min_std", *lo},
                   {"max_std", *hi}};
    if (!a.out.empty()) {
        const float peak = *hi;
        Tensor shown(gray.shape());
        for (std::size_t i = 0; i < gray.size(); ++i) {
            shown.data()[i] = peak > 0.0f ? 2.0f * gray.data()[i] / peak - 1.0f : -1.0f;
        }
        write_png(a.out, shown);
    }
    emit_report(report, a.report);
    return 0;
}

// -------------------------------------------------------------------- init

struct InitArgs {
    std::string arch = "generator";
    int blocks = 5;
    int base = 32;
    int z_spatial = 4;
    int z_channels = 64;
    int in_channels = 3;
    std::vector<int> widths = {16, 16};
    int out_channels = 3;
    int kernel = 3;
    int upsamples = 0;
    std::string conv_padding = "external";
    std::uint64_t seed = 0;
    std::string out;
};

int cmd_init(const InitArgs& a) {
    const NetworkSpec spec =
        a.arch == "generator"
            ? build_texture_generator(a.blocks, a.base, a.z_spatial, a.z_channels)
            : build_sequential_conv_net(a.in_channels, a.widths, a.out_channels, a.kernel, a.upsamples,
                                        a.conv_padding == "zero" ? ConvPadding::zero : ConvPadding::external);
    const WeightStore store = init_random_weights(spec, a.seed);
    save_weights(spec, store, a.out);
    json report = {{"command", "init"},
                   {"arch", a.arch},
                   {"parameters", store.blob.size()},
                   {"patch_extent", spec.z_spatial > 0 ? spec.patch_extent() : 0},
                   {"scale", spec.scale_factor()}};
    emit_report(report, "");
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Patch-wise convolutional inference with local padding"};
    app.require_subcommand(1);
    const auto positive = CLI::PositiveNumber;
    const auto nonneg = CLI::NonNegativeNumber;

    GenerateArgs gen;
    auto* g = app.add_subcommand("generate", "Stream a texture of any size from a generator");
    g->add_option("--weights", gen.weights, "Weight file")->required()->check(CLI::ExistingFile);
    g->add_option("--seed", gen.seed, "Latent seed");
    g->add_option("--size", gen.size, "Output size WxH in pixels")->required();
    g->add_option("--grid", gen.grid, "Patches per side of a step block")->check(positive);
    g->add_option("--padding", gen.padding, "local or zero (ablation)")->check(CLI::IsMember({"local", "zero"}));
    g->add_option("--mode", gen.mode, "Latent mode")->check(CLI::IsMember({"gaussian", "periodic"}));
    g->add_option("--metrics", gen.metrics, "Comma list: seams, stats")->delimiter(',');
    g->add_option("--out", gen.out, "Output image (.png or .lptn)");
    g->add_option("--emit-stream", gen.emit_stream, "Raw RGB8 region stream with a .index.jsonl sidecar");
    g->add_option("--report", gen.report, "Also write the JSON report here");

    TileArgs tile;
    auto* t = app.add_subcommand("tile-apply", "Run an image-to-image network tile by tile");
    t->add_option("--weights", tile.weights, "Weight file")->required()->check(CLI::ExistingFile);
    t->add_option("--in", tile.in, "Input image (.png or .lptn)")->required()->check(CLI::ExistingFile);
    t->add_option("--out", tile.out, "Output image (.png or .lptn)")->required();
    t->add_option("--tiling", tile.tiling, "local, overlap (baseline) or single")
        ->check(CLI::IsMember({"local", "overlap", "single"}));
    t->add_option("--tile", tile.tile, "Tile extent in input pixels (overrides --grid)")->check(positive);
    t->add_option("--grid", tile.grid, "N x N tiles when --tile is not given")->check(positive);
    t->add_option("--overlap", tile.overlap, "Baseline overlap in input pixels")->check(nonneg);
    t->add_option("--scale", tile.scale, "Expected scale factor of the network")->check(positive);
    t->add_option("--metrics", tile.metrics, "Comma list: seams")->delimiter(',');
    t->add_option("--baseline", tile.baseline, "Also write the overlap baseline here");
    t->add_flag("--check", tile.check, "Compare against a single pass");
    t->add_option("--report", tile.report, "Also write the JSON report here");

    DiversityArgs div;
    auto* d = app.add_subcommand("diversity", "Per-pixel standard deviation over seeded samples");
    d->add_option("--weights", div.weights, "Weight file")->required()->check(CLI::ExistingFile);
    d->add_option("--seed", div.seed, "First seed; sample k uses seed + k");
    d->add_option("--samples", div.samples, "Sample count K");
    d->add_option("--size", div.size, "Sample size WxH (default: grid x grid patches)");
    d->add_option("--grid", div.grid, "Patches per side of a step block")->check(positive);
    d->add_option("--padding", div.padding, "local or zero")->check(CLI::IsMember({"local", "zero"}));
    d->add_option("--mode", div.mode, "Latent mode")->check(CLI::IsMember({"gaussian", "periodic"}));
    d->add_option("--band", div.band, "Border band width in pixels")->check(positive);
    d->add_option("--out", div.out, "Grayscale PNG of the map");
    d->add_option("--report", div.report, "Also write the JSON report here");

    InitArgs init;
    auto* i = app.add_subcommand("init", "Write a randomly initialized weight file");
    i->add_option("--arch", init.arch, "generator or conv")->check(CLI::IsMember({"generator", "conv"}));
    i->add_option("--blocks", init.blocks, "Generator blocks")->check(positive);
    i->add_option("--base", init.base, "Generator base channels")->check(positive);
    i->add_option("--z-spatial", init.z_spatial, "Latent extent per patch")->check(positive);
    i->add_option("--z-channels", init.z_channels, "Latent channels")->check(positive);
    i->add_option("--in-channels", init.in_channels, "Conv net input channels")->check(positive);
    i->add_option("--widths", init.widths, "Conv net hidden widths")->delimiter(',');
    i->add_option("--out-channels", init.out_channels, "Conv net output channels")->check(positive);
    i->add_option("--kernel", init.kernel, "Conv net kernel size")->check(positive);
    i->add_option("--upsamples", init.upsamples, "Conv net 2x upsamplings")->check(nonneg);
    i->add_option("--conv-padding", init.conv_padding, "external or zero")
        ->check(CLI::IsMember({"external", "zero"}));
    i->add_option("--seed", init.seed, "Initialization seed");
    i->add_option("--out", init.out, "Weight file to write")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        check_threads_env();
        if (g->parsed()) return cmd_generate(gen);
        if (t->parsed()) return cmd_tile_apply(tile);
        if (d->parsed()) return cmd_diversity(div);
        return cmd_init(init);
    } catch (const UsageError& e) {
        std::cerr << "lpad: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "lpad: error: " << e.what() << "\n";
        return 1;
    }
}
