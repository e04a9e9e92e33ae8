#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <vector>

#include "lpad/tensor.hpp"

namespace lpad {

class ImageIoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Maps [-1, 1] to 0..255 as round_half_even((x + 1) * 127.5), clamped.
std::uint8_t to_byte(float v);

/// Interleaved RGB8 rows of a 1 x C x H x W image, C in {1, 3}. A single
/// channel is replicated into gray.
std::vector<std::uint8_t> to_rgb8(const Tensor& image);

/// Writes an 8-bit RGB PNG. No timestamp or text chunks, so the bytes depend
/// only on the pixels.
void write_png(const std::filesystem::path& path, const Tensor& image);

/// Reads a PNG as a 1 x 3 x H x W tensor in [-1, 1] (v / 127.5 - 1). Gray and
/// palette images are expanded to RGB; alpha is dropped.
Tensor read_png(const std::filesystem::path& path);

/// Raw float tensor: "LPTN", four little-endian int32 dims (n, c, h, w),
/// then little-endian float32 values.
void write_tensor(const std::filesystem::path& path, const Tensor& t);
Tensor read_tensor(const std::filesystem::path& path);

}  // namespace lpad
