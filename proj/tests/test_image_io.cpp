#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "lpad/image_io.hpp"
#include "test_util.hpp"

using namespace lpad;
using lpad::testing::random_tensor;

namespace {

std::filesystem::path temp_path(const std::string& name) {
    return std::filesystem::temp_directory_path() / ("lpad_test_" + name);
}

std::vector<char> read_all(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_CASE("byte mapping rounds half to even and clamps") {
    CHECK(to_byte(-1.0f) == 0);
    CHECK(to_byte(1.0f) == 255);
    CHECK(to_byte(0.0f) == 128);  // 127.5 -> 128
    // x = 0 is the only input whose scaled value is an exact half.
    CHECK(to_byte(-1.0f + 2.0f / 127.5f) == 2);
    CHECK(to_byte(-1.0f + 2.4f / 127.5f) == 2);
    CHECK(to_byte(-1.0f + 2.6f / 127.5f) == 3);
    CHECK(to_byte(-3.0f) == 0);
    CHECK(to_byte(7.0f) == 255);
}

TEST_CASE("rgb8 interleaves channels and expands gray") {
    Tensor rgb(1, 3, 1, 2);
    rgb.at(0, 0, 0, 0) = 1.0f;
    rgb.at(0, 1, 0, 1) = -1.0f;
    CHECK(to_rgb8(rgb) == std::vector<std::uint8_t>{255, 128, 128, 128, 0, 128});
    Tensor gray(1, 1, 1, 1, -1.0f);
    CHECK(to_rgb8(gray) == std::vector<std::uint8_t>{0, 0, 0});
    CHECK_THROWS_AS(to_rgb8(Tensor(1, 2, 2, 2)), ShapeError);
}

TEST_CASE("png round trip and byte reproducibility") {
    const Tensor img = random_tensor(1, 3, 17, 23, 1);
    const auto a = temp_path("a.png"), b = temp_path("b.png");
    write_png(a, img);
    write_png(b, img);
    CHECK(read_all(a) == read_all(b));
    const Tensor back = read_png(a);
    REQUIRE(back.shape() == img.shape());
    CHECK(to_rgb8(back) == to_rgb8(img));
    CHECK(max_abs_diff(back, img) <= 0.5f / 127.5f + 1e-6f);

    std::ofstream(temp_path("bad.png"), std::ios::binary) << "not a png";
    CHECK_THROWS_AS(read_png(temp_path("bad.png")), ImageIoError);
    CHECK_THROWS_AS(read_png(temp_path("missing.png")), ImageIoError);
}

TEST_CASE("raw tensor round trip") {
    const Tensor t = random_tensor(2, 3, 5, 7, 2);
    const auto p = temp_path("t.lptn");
    write_tensor(p, t);
    CHECK(read_tensor(p) == t);
    CHECK(std::filesystem::file_size(p) == 4 + 16 + t.size() * 4);

    std::vector<char> bytes = read_all(p);
    bytes.resize(bytes.size() - 2);
    std::ofstream(temp_path("cut.lptn"), std::ios::binary).write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    CHECK_THROWS_AS(read_tensor(temp_path("cut.lptn")), ImageIoError);
}
