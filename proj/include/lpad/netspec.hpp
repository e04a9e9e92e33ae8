#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "lpad/nn_ops.hpp"

namespace lpad {

class SpecError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Malformed or unsupported weight file.
class WeightFormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ChecksumError : public WeightFormatError {
public:
    using WeightFormatError::WeightFormatError;
};

enum class LayerKind { conv, bn, act, upsample2x, resblock };

struct LayerSpec {
    LayerKind kind = LayerKind::conv;
    int in_channels = 0;
    int out_channels = 0;
    int kernel = 3;
    int stride = 1;
    ConvPadding padding = ConvPadding::external;
    Activation act = Activation::relu();
    float eps = 1e-5f;

    static LayerSpec conv(int in, int out, int kernel = 3, ConvPadding padding = ConvPadding::external,
                          int stride = 1);
    static LayerSpec bn(int channels, float eps = 1e-5f);
    static LayerSpec activation(Activation a);
    static LayerSpec upsample2x();
    static LayerSpec resblock(int in, int out, Activation a = Activation::relu(), float eps = 1e-5f);

    friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

/// Spatial convolution as seen by the execution engine, in execution order.
struct SpatialConvInfo {
    int layer = 0;       // index into NetworkSpec::layers
    int halo = 0;
    int in_channels = 0;
    int upsamples_before = 0;
};

/// A sequential network. For generators `z_channels` x `z_spatial`^2 is the
/// per-patch latent; for image-to-image networks `z_channels` is the input
/// channel count and `z_spatial` is 0.
struct NetworkSpec {
    int z_channels = 64;
    int z_spatial = 4;
    std::vector<LayerSpec> layers;
    int out_channels = 3;

    /// Throws SpecError if channel counts do not chain or a conv is even-sized.
    void validate() const;
    int upsample_count() const;
    int scale_factor() const { return 1 << upsample_count(); }
    int patch_extent() const { return z_spatial * scale_factor(); }
    /// Convolutions with kernel > 1, in execution order (resblocks contribute two).
    std::vector<SpatialConvInfo> spatial_convs() const;
    int max_channels() const;

    friend bool operator==(const NetworkSpec&, const NetworkSpec&) = default;
};

/// Generator: conv3x3 -> num_blocks x (upsample2x -> resblock) -> bn -> relu
/// -> conv3x3 -> tanh. Block i outputs max(base >> (i+1), min(base, 32)) channels.
NetworkSpec build_texture_generator(int num_blocks, int base_channels, int z_spatial, int z_channels = 64);

/// Plain conv stack `in -> widths... -> out` with leaky relu between convs and
/// `upsamples` nearest 2x upsamplings placed after the first convs.
NetworkSpec build_sequential_conv_net(int in_channels, const std::vector<int>& widths, int out_channels,
                                      int kernel = 3, int upsamples = 0,
                                      ConvPadding padding = ConvPadding::external);

struct ParamRecord {
    std::string name;
    std::vector<int> shape;
    std::uint64_t offset = 0;  // bytes into the blob

    std::size_t length() const;
    friend bool operator==(const ParamRecord&, const ParamRecord&) = default;
};

/// Named parameter tensors over one contiguous float blob, in layer order.
struct WeightStore {
    std::vector<ParamRecord> records;
    std::vector<float> blob;

    const ParamRecord* find(const std::string& name) const;
    std::span<const float> values(const std::string& name) const;
    std::span<float> values(const std::string& name);
    /// Appends a record at the end of the blob.
    void append(const std::string& name, std::vector<int> shape, std::span<const float> data);

    friend bool operator==(const WeightStore&, const WeightStore&) = default;
};

/// Names and shapes of every parameter the spec needs, in canonical order.
std::vector<std::pair<std::string, std::vector<int>>> parameter_layout(const NetworkSpec& spec);

/// He-style random initialization; deterministic for a given seed.
WeightStore init_random_weights(const NetworkSpec& spec, std::uint64_t seed);

struct ConvLayer {
    ConvKernel kernel;
    int stride = 1;
    ConvPadding padding = ConvPadding::external;
};
struct Upsample2x {};
using BoundLayer = std::variant<ConvLayer, BnParams, Activation, Upsample2x, ResBlockParams>;

/// Parameters bound to their layers, ready for execution.
struct NetworkParams {
    std::vector<BoundLayer> layers;
};

/// Matches the store against the spec's layout; throws SpecError on a
/// missing, extra or misshapen parameter.
NetworkParams bind_weights(const NetworkSpec& spec, const WeightStore& store);

inline constexpr std::uint32_t kWeightFormatVersion = 1;

/// Serializes to the canonical byte layout: "LPWT", u32 version, u64 manifest
/// length (little-endian), the JSON manifest, then the raw float blob.
std::vector<std::uint8_t> encode_weights(const NetworkSpec& spec, const WeightStore& store);
std::pair<NetworkSpec, WeightStore> decode_weights(std::span<const std::uint8_t> bytes);

void save_weights(const NetworkSpec& spec, const WeightStore& store, const std::filesystem::path& path);
std::pair<NetworkSpec, WeightStore> load_weights(const std::filesystem::path& path);

std::uint32_t crc32_of(std::span<const std::uint8_t> bytes);

}  // namespace lpad
