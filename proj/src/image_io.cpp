#include "lpad/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <memory>
#include <string>

namespace lpad {

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const std::filesystem::path& path, const char* mode) {
    FilePtr f(std::fopen(path.c_str(), mode));
    if (!f) throw ImageIoError("cannot open " + path.string());
    return f;
}

thread_local std::string png_message;

// libpng unwinds with longjmp; the message is rethrown as an exception on the
// C++ side of the setjmp.
[[noreturn]] void png_fail(png_structp png, png_const_charp msg) {
    png_message = msg;
    png_longjmp(png, 1);
}

void png_warn(png_structp, png_const_charp) {}

}  // namespace

std::uint8_t to_byte(float v) {
    if (std::isnan(v)) return 0;
    const float scaled = std::nearbyint((v + 1.0f) * 127.5f);
    return static_cast<std::uint8_t>(std::clamp(scaled, 0.0f, 255.0f));
}

std::vector<std::uint8_t> to_rgb8(const Tensor& image) {
    if (image.n() != 1 || (image.c() != 1 && image.c() != 3)) {
        throw ShapeError("RGB8 conversion needs a 1 x {1,3} x H x W image, got " + to_string(image.shape()));
    }
    const int h = image.h(), w = image.w();
    std::vector<std::uint8_t> out(static_cast<std::size_t>(h) * w * 3);
    for (int ch = 0; ch < 3; ++ch) {
        const float* src = image.plane(0, image.c() == 3 ? ch : 0);
        for (std::size_t i = 0; i < static_cast<std::size_t>(h) * w; ++i) out[i * 3 + ch] = to_byte(src[i]);
    }
    return out;
}

void write_png(const std::filesystem::path& path, const Tensor& image) {
    const std::vector<std::uint8_t> rgb = to_rgb8(image);
    FilePtr f = open_file(path, "wb");
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, png_fail, png_warn);
    if (!png) throw ImageIoError("png_create_write_struct failed");
    png_infop info = png_create_info_struct(png);
    struct Guard {
        png_structp* p;
        png_infop* i;
        ~Guard() { png_destroy_write_struct(p, i); }
    } guard{&png, &info};
    if (!info) throw ImageIoError("png_create_info_struct failed");
    if (setjmp(png_jmpbuf(png))) throw ImageIoError("png: " + png_message + " writing " + path.string());

    png_init_io(png, f.get());
    png_set_IHDR(png, info, image.w(), image.h(), 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    const std::size_t stride = static_cast<std::size_t>(image.w()) * 3;
    for (int y = 0; y < image.h(); ++y) png_write_row(png, rgb.data() + y * stride);
    png_write_end(png, nullptr);
}

Tensor read_png(const std::filesystem::path& path) {
    FilePtr f = open_file(path, "rb");
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, png_fail, png_warn);
    if (!png) throw ImageIoError("png_create_read_struct failed");
    png_infop info = png_create_info_struct(png);
    struct Guard {
        png_structp* p;
        png_infop* i;
        ~Guard() { png_destroy_read_struct(p, i, nullptr); }
    } guard{&png, &info};
    if (!info) throw ImageIoError("png_create_info_struct failed");
    std::vector<std::uint8_t> row;
    Tensor out;
    if (setjmp(png_jmpbuf(png))) throw ImageIoError("png: " + png_message + " reading " + path.string());

    png_init_io(png, f.get());
    png_read_info(png, info);
    png_set_expand(png);
    png_set_strip_16(png);
    png_set_strip_alpha(png);
    png_set_gray_to_rgb(png);
    png_read_update_info(png, info);
    const int w = static_cast<int>(png_get_image_width(png, info));
    const int h = static_cast<int>(png_get_image_height(png, info));
    if (png_get_channels(png, info) != 3) throw ImageIoError("unsupported PNG layout in " + path.string());

    row.resize(static_cast<std::size_t>(w) * 3);
    out = Tensor(1, 3, h, w);
    for (int y = 0; y < h; ++y) {
        png_read_row(png, row.data(), nullptr);
        for (int x = 0; x < w; ++x)
            for (int ch = 0; ch < 3; ++ch) out.at(0, ch, y, x) = row[x * 3 + ch] / 127.5f - 1.0f;
    }
    png_read_end(png, nullptr);
    return out;
}

void write_tensor(const std::filesystem::path& path, const Tensor& t) {
    static_assert(std::endian::native == std::endian::little, "raw tensors are stored little-endian");
    FilePtr f = open_file(path, "wb");
    const std::int32_t dims[4] = {t.n(), t.c(), t.h(), t.w()};
    bool ok = std::fwrite("LPTN", 1, 4, f.get()) == 4 && std::fwrite(dims, sizeof(dims), 1, f.get()) == 1;
    if (!t.empty()) ok = ok && std::fwrite(t.data(), sizeof(float), t.size(), f.get()) == t.size();
    if (!ok) throw ImageIoError("write failed for " + path.string());
}

Tensor read_tensor(const std::filesystem::path& path) {
    FilePtr f = open_file(path, "rb");
    char magic[4];
    std::int32_t dims[4];
    if (std::fread(magic, 1, 4, f.get()) != 4 || std::string(magic, 4) != "LPTN" ||
        std::fread(dims, sizeof(dims), 1, f.get()) != 1) {
        throw ImageIoError(path.string() + " is not a raw tensor file");
    }
    for (std::int32_t d : dims) {
        if (d < 0 || d > (1 << 24)) throw ImageIoError(path.string() + ": implausible tensor dims");
    }
    Tensor t(dims[0], dims[1], dims[2], dims[3]);
    if (!t.empty() && std::fread(t.data(), sizeof(float), t.size(), f.get()) != t.size()) {
        throw ImageIoError(path.string() + " is truncated");
    }
    if (std::fgetc(f.get()) != EOF) throw ImageIoError(path.string() + " has trailing bytes");
    return t;
}

}  // namespace lpad
