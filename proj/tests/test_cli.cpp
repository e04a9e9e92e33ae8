#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "json.hpp"
#include "lpad/image_io.hpp"
#include "lpad/netspec.hpp"

using namespace lpad;
namespace fs = std::filesystem;

#ifndef LPAD_CLI
#error "LPAD_CLI must name the lpad executable"
#endif

namespace {

const fs::path& workdir() {
    static const fs::path dir = [] {
        fs::path d = fs::temp_directory_path() / "lpad_cli_test";
        fs::remove_all(d);
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

fs::path at(const std::string& name) { return workdir() / name; }

struct Result {
    int code = -1;
    std::string out;
};

/// Runs the CLI with `args` (and an optional environment prefix), capturing stdout.
Result run_cli(const std::string& args, const std::string& env = "") {
    const fs::path out = at("stdout.txt");
    const std::string cmd = env + " " + std::string(LPAD_CLI) + " " + args + " > " + out.string() + " 2> " +
                            at("stderr.txt").string();
    const int status = std::system(cmd.c_str());
    std::ifstream in(out);
    Result r{WIFEXITED(status) ? WEXITSTATUS(status) : -1,
             {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()}};
    return r;
}

std::string bytes(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::string weights_flag(const std::string& name) { return "--weights " + at(name).string(); }

void make_generator() {
    static bool done = false;
    if (done) return;
    REQUIRE(run_cli("init --blocks 3 --base 16 --z-spatial 4 --z-channels 8 --seed 5 --out " + at("g.lpwt").string())
                .code == 0);
    done = true;
}

}  // namespace

TEST_CASE("help exits zero") {
    CHECK(run_cli("--help").code == 0);
    for (const char* sub : {"generate", "tile-apply", "diversity", "init"}) {
        CAPTURE(sub);
        CHECK(run_cli(std::string(sub) + " --help").code == 0);
    }
    CHECK(run_cli("").code != 0);
}

TEST_CASE("init is byte reproducible and loadable") {
    REQUIRE(run_cli("init --arch conv --widths 4,4 --seed 2 --out " + at("c1.lpwt").string()).code == 0);
    REQUIRE(run_cli("init --arch conv --widths 4,4 --seed 2 --out " + at("c2.lpwt").string()).code == 0);
    CHECK(bytes(at("c1.lpwt")) == bytes(at("c2.lpwt")));
    auto [spec, store] = load_weights(at("c1.lpwt"));
    CHECK(spec == build_sequential_conv_net(3, {4, 4}, 3));
    CHECK(store == init_random_weights(spec, 2));
}

TEST_CASE("generate is deterministic and prefix stable") {
    make_generator();
    const std::string w = weights_flag("g.lpwt");
    const Result a = run_cli("generate " + w + " --seed 7 --size 96x96 --out " + at("a.png").string());
    const Result b = run_cli("generate " + w + " --seed 7 --size 96x96 --out " + at("b.png").string());
    REQUIRE(a.code == 0);
    REQUIRE(b.code == 0);
    CHECK(bytes(at("a.png")) == bytes(at("b.png")));
    CHECK(a.out == b.out);
    REQUIRE(run_cli("generate " + w + " --seed 8 --size 96x96 --out " + at("c.png").string()).code == 0);
    CHECK(bytes(at("a.png")) != bytes(at("c.png")));

    REQUIRE(run_cli("generate " + w + " --seed 3 --size 96x32 --out " + at("n.lptn").string()).code == 0);
    REQUIRE(run_cli("generate " + w + " --seed 3 --size 192x32 --out " + at("w.lptn").string()).code == 0);
    const Tensor narrow = read_tensor(at("n.lptn"));
    const Tensor wide = read_tensor(at("w.lptn"));
    CHECK(view(wide, {0, 0, 32, 96}) == narrow);
}

TEST_CASE("generate streams regions that match the image") {
    make_generator();
    const Result r = run_cli("generate " + weights_flag("g.lpwt") + " --seed 4 --size 100x70 --grid 2 --out " +
                          at("s.lptn").string() + " --emit-stream " + at("s.rgb").string());
    REQUIRE(r.code == 0);
    const auto report = nlohmann::json::parse(r.out);
    CHECK(report["stream_bytes"] == 100 * 70 * 3);
    CHECK(report["cache_floats_peak"].get<long>() > 0);
    const std::vector<std::uint8_t> expect = to_rgb8(read_tensor(at("s.lptn")));
    const std::string data = bytes(at("s.rgb"));
    std::ifstream index(at("s.rgb").string() + ".index.jsonl");
    std::string line, rebuilt(expect.size(), '\0');
    while (std::getline(index, line)) {
        const auto j = nlohmann::json::parse(line);
        const std::size_t off = j["offset"];
        const int x = j["x"], y = j["y"], w = j["w"], h = j["h"];
        for (int yy = 0; yy < h; ++yy)
            rebuilt.replace((static_cast<std::size_t>(y + yy) * 100 + x) * 3, w * 3, data, off + yy * w * 3, w * 3);
    }
    CHECK(std::equal(rebuilt.begin(), rebuilt.end(), expect.begin(), expect.end(),
                     [](char a, std::uint8_t b) { return static_cast<std::uint8_t>(a) == b; }));
}

TEST_CASE("zero padding shows in the seam report") {
    make_generator();
    const std::string base = "generate " + weights_flag("g.lpwt") + " --seed 11 --size 128x128 --metrics seams";
    const Result local = run_cli(base + " --out " + at("l.png").string());
    const Result zero = run_cli(base + " --padding zero --out " + at("z.png").string());
    REQUIRE(local.code == 0);
    REQUIRE(zero.code == 0);
    const double lr = nlohmann::json::parse(local.out)["seams"]["max_ratio"];
    const double zr = nlohmann::json::parse(zero.out)["seams"]["max_ratio"];
    CHECK(zr > lr);
}

TEST_CASE("tile-apply with an identity net and the built-in check") {
    NetworkSpec spec = build_sequential_conv_net(3, {}, 3);
    WeightStore store = init_random_weights(spec, 1);
    auto w = store.values("layers.0.weight");
    std::fill(w.begin(), w.end(), 0.0f);
    for (int c = 0; c < 3; ++c) w[(c * 3 + c) * 9 + 4] = 1.0f;
    auto b = store.values("layers.0.bias");
    std::fill(b.begin(), b.end(), 0.0f);
    save_weights(spec, store, at("id.lpwt"));
    make_generator();
    REQUIRE(run_cli("generate " + weights_flag("g.lpwt") + " --seed 1 --size 40x40 --out " + at("in.lptn").string())
                .code == 0);
    for (const char* tiling : {"local", "overlap", "single"}) {
        CAPTURE(tiling);
        REQUIRE(run_cli("tile-apply " + weights_flag("id.lpwt") + " --in " + at("in.lptn").string() + " --tiling " +
                     tiling + " --out " + at("id_out.lptn").string())
                    .code == 0);
        CHECK(max_abs_diff(read_tensor(at("id_out.lptn")), read_tensor(at("in.lptn"))) <= 1e-6f);
    }

    REQUIRE(run_cli("init --arch conv --widths 6,6 --upsamples 1 --conv-padding zero --seed 9 --out " +
                 at("sr.lpwt").string())
                .code == 0);
    const Result r = run_cli("tile-apply " + weights_flag("sr.lpwt") + " --in " + at("in.lptn").string() +
                          " --grid 2 --check --metrics seams --baseline " + at("base.png").string() +
                          " --overlap 0 --out " + at("sr.png").string());
    REQUIRE(r.code == 0);
    const auto report = nlohmann::json::parse(r.out);
    CHECK(report["check"]["within_1e-5"] == true);
    CHECK(report["scale"] == 2);
    CHECK(report["baseline"]["seams"]["max_ratio"].get<double>() > report["seams"]["max_ratio"].get<double>());
    CHECK(read_png(at("sr.png")).w() == 80);
}

TEST_CASE("diversity reports and repeats") {
    make_generator();
    const std::string cmd =
        "diversity " + weights_flag("g.lpwt") + " --samples 2 --size 64x64 --band 8 --out " + at("d.png").string();
    const Result a = run_cli(cmd);
    const Result b = run_cli(cmd);
    REQUIRE(a.code == 0);
    CHECK(a.out == b.out);
    const auto report = nlohmann::json::parse(a.out);
    CHECK(report["min_std"].get<double>() > 0.0);
    CHECK(read_png(at("d.png")).w() == 64);
}

TEST_CASE("invalid invocations fail without writing output") {
    make_generator();
    const std::string w = weights_flag("g.lpwt");
    const fs::path out = at("never.png");
    const fs::path stream = at("never.rgb");
    const std::string tail = " --out " + out.string() + " --emit-stream " + stream.string();
    std::ofstream(at("corrupt.lpwt"), std::ios::binary) << bytes(at("g.lpwt")).substr(0, 200);

    const std::vector<std::pair<std::string, std::string>> cases = {
        {"generate " + w + " --size 0x64" + tail, ""},
        {"generate " + w + " --size big" + tail, ""},
        {"generate " + w + " --size 64x64 --grid 0" + tail, ""},
        {"generate " + w + " --size 64x64 --padding reflect" + tail, ""},
        {"generate " + w + " --size 64x64 --mode pink" + tail, ""},
        {"generate " + w + " --size 64x64 --metrics seams,fid" + tail, ""},
        {"generate " + w + " --size 64x64 --bogus" + tail, ""},
        {"generate " + w + " --size 64x64 --out " + at("never.jpg").string(), ""},
        {"generate --weights " + at("missing.lpwt").string() + " --size 64x64" + tail, ""},
        {"generate " + weights_flag("corrupt.lpwt") + " --size 64x64" + tail, ""},
        {"generate " + w + " --size 64x64" + tail, "LPAD_THREADS=zero"},
        {"tile-apply " + w + " --in " + at("a.png").string() + " --out " + out.string(), ""},
        {"diversity " + w + " --samples 1 --out " + out.string(), ""},
    };
    for (const auto& [args, env] : cases) {
        CAPTURE(args);
        CHECK(run_cli(args, env).code != 0);
        CHECK_FALSE(fs::exists(out));
        CHECK_FALSE(fs::exists(stream));
        CHECK_FALSE(fs::exists(stream.string() + ".index.jsonl"));
        CHECK_FALSE(fs::exists(at("never.jpg")));
    }
}
