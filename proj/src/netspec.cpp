#include "lpad/netspec.hpp"

#include <zlib.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <random>

#include "json.hpp"

namespace lpad {

static_assert(std::endian::native == std::endian::little, "weight blob is stored little-endian");

using nlohmann::json;

LayerSpec LayerSpec::conv(int in, int out, int kernel, ConvPadding padding, int stride) {
    LayerSpec l;
    l.kind = LayerKind::conv;
    l.in_channels = in;
    l.out_channels = out;
    l.kernel = kernel;
    l.padding = padding;
    l.stride = stride;
    return l;
}

LayerSpec LayerSpec::bn(int channels, float eps) {
    LayerSpec l;
    l.kind = LayerKind::bn;
    l.in_channels = l.out_channels = channels;
    l.eps = eps;
    return l;
}

LayerSpec LayerSpec::activation(Activation a) {
    LayerSpec l;
    l.kind = LayerKind::act;
    l.act = a;
    return l;
}

LayerSpec LayerSpec::upsample2x() {
    LayerSpec l;
    l.kind = LayerKind::upsample2x;
    return l;
}

LayerSpec LayerSpec::resblock(int in, int out, Activation a, float eps) {
    LayerSpec l;
    l.kind = LayerKind::resblock;
    l.in_channels = in;
    l.out_channels = out;
    l.act = a;
    l.eps = eps;
    return l;
}

void NetworkSpec::validate() const {
    if (z_channels < 1) throw SpecError("z_channels must be >= 1");
    if (z_spatial < 0) throw SpecError("z_spatial must be >= 0");
    if (layers.empty()) throw SpecError("network has no layers");
    int channels = z_channels;
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const LayerSpec& l = layers[i];
        const std::string where = "layer " + std::to_string(i) + ": ";
        switch (l.kind) {
            case LayerKind::conv:
                if (l.in_channels != channels) {
                    throw SpecError(where + "conv expects " + std::to_string(l.in_channels) + " channels, gets " +
                                    std::to_string(channels));
                }
                if (l.out_channels < 1) throw SpecError(where + "conv needs >= 1 output channel");
                if (l.kernel < 1 || l.kernel % 2 == 0) {
                    throw SpecError(where + "conv kernel must be odd, got " + std::to_string(l.kernel));
                }
                if (l.stride < 1) throw SpecError(where + "conv stride must be >= 1");
                channels = l.out_channels;
                break;
            case LayerKind::bn:
                if (l.in_channels != channels) throw SpecError(where + "bn channel count mismatch");
                if (!(l.eps >= 0.0f)) throw SpecError(where + "bn eps must be >= 0");
                break;
            case LayerKind::act:
            case LayerKind::upsample2x:
                break;
            case LayerKind::resblock:
                if (l.in_channels != channels) throw SpecError(where + "resblock channel count mismatch");
                if (l.out_channels < 1) throw SpecError(where + "resblock needs >= 1 output channel");
                channels = l.out_channels;
                break;
        }
    }
    if (channels != out_channels) {
        throw SpecError("network ends with " + std::to_string(channels) + " channels, declared " +
                        std::to_string(out_channels));
    }
}

int NetworkSpec::upsample_count() const {
    return static_cast<int>(std::count_if(layers.begin(), layers.end(),
                                          [](const LayerSpec& l) { return l.kind == LayerKind::upsample2x; }));
}

std::vector<SpatialConvInfo> NetworkSpec::spatial_convs() const {
    std::vector<SpatialConvInfo> out;
    int ups = 0;
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const LayerSpec& l = layers[i];
        if (l.kind == LayerKind::upsample2x) ++ups;
        if (l.kind == LayerKind::conv && l.kernel > 1) {
            out.push_back({static_cast<int>(i), (l.kernel - 1) / 2, l.in_channels, ups});
        }
        if (l.kind == LayerKind::resblock) {
            out.push_back({static_cast<int>(i), 1, l.in_channels, ups});
            out.push_back({static_cast<int>(i), 1, l.out_channels, ups});
        }
    }
    return out;
}

int NetworkSpec::max_channels() const {
    int m = z_channels;
    for (const LayerSpec& l : layers) m = std::max({m, l.in_channels, l.out_channels});
    return m;
}

NetworkSpec build_texture_generator(int num_blocks, int base_channels, int z_spatial, int z_channels) {
    if (num_blocks < 1) throw SpecError("num_blocks must be >= 1");
    if (base_channels < 1) throw SpecError("base_channels must be >= 1");
    if (z_spatial < 1) throw SpecError("z_spatial must be >= 1");
    if (z_channels < 1) throw SpecError("z_channels must be >= 1");

    const int floor_channels = std::min(base_channels, 32);
    NetworkSpec spec;
    spec.z_channels = z_channels;
    spec.z_spatial = z_spatial;
    spec.out_channels = 3;
    spec.layers.push_back(LayerSpec::conv(z_channels, base_channels));
    int channels = base_channels;
    for (int i = 0; i < num_blocks; ++i) {
        const int next = std::max(base_channels >> (i + 1), floor_channels);
        spec.layers.push_back(LayerSpec::upsample2x());
        spec.layers.push_back(LayerSpec::resblock(channels, next));
        channels = next;
    }
    spec.layers.push_back(LayerSpec::bn(channels));
    spec.layers.push_back(LayerSpec::activation(Activation::relu()));
    spec.layers.push_back(LayerSpec::conv(channels, 3));
    spec.layers.push_back(LayerSpec::activation(Activation::tanh()));
    spec.validate();
    return spec;
}

NetworkSpec build_sequential_conv_net(int in_channels, const std::vector<int>& widths, int out_channels, int kernel,
                                      int upsamples, ConvPadding padding) {
    NetworkSpec spec;
    spec.z_channels = in_channels;
    spec.z_spatial = 0;
    spec.out_channels = out_channels;
    int channels = in_channels;
    int placed = 0;
    for (int w : widths) {
        spec.layers.push_back(LayerSpec::conv(channels, w, kernel, padding));
        spec.layers.push_back(LayerSpec::activation(Activation::leaky()));
        if (placed < upsamples) {
            spec.layers.push_back(LayerSpec::upsample2x());
            ++placed;
        }
        channels = w;
    }
    for (; placed < upsamples; ++placed) spec.layers.push_back(LayerSpec::upsample2x());
    spec.layers.push_back(LayerSpec::conv(channels, out_channels, kernel, padding));
    spec.validate();
    return spec;
}

std::size_t ParamRecord::length() const {
    std::size_t n = 1;
    for (int d : shape) n *= static_cast<std::size_t>(d);
    return n;
}

const ParamRecord* WeightStore::find(const std::string& name) const {
    for (const ParamRecord& r : records) {
        if (r.name == name) return &r;
    }
    return nullptr;
}

std::span<const float> WeightStore::values(const std::string& name) const {
    const ParamRecord* r = find(name);
    if (!r) throw SpecError("missing parameter " + name);
    return {blob.data() + r->offset / sizeof(float), r->length()};
}

std::span<float> WeightStore::values(const std::string& name) {
    const ParamRecord* r = find(name);
    if (!r) throw SpecError("missing parameter " + name);
    return {blob.data() + r->offset / sizeof(float), r->length()};
}

void WeightStore::append(const std::string& name, std::vector<int> shape, std::span<const float> data) {
    ParamRecord r{name, std::move(shape), blob.size() * sizeof(float)};
    if (r.length() != data.size()) throw SpecError("parameter " + name + ": data length does not match shape");
    blob.insert(blob.end(), data.begin(), data.end());
    records.push_back(std::move(r));
}

namespace {

void add_conv_params(std::vector<std::pair<std::string, std::vector<int>>>& out, const std::string& prefix, int in,
                     int outc, int k) {
    out.push_back({prefix + ".weight", {outc, in, k, k}});
    out.push_back({prefix + ".bias", {outc}});
}

void add_bn_params(std::vector<std::pair<std::string, std::vector<int>>>& out, const std::string& prefix, int c) {
    for (const char* field : {"gamma", "beta", "running_mean", "running_var"}) {
        out.push_back({prefix + "." + field, {c}});
    }
}

}  // namespace

std::vector<std::pair<std::string, std::vector<int>>> parameter_layout(const NetworkSpec& spec) {
    std::vector<std::pair<std::string, std::vector<int>>> out;
    for (std::size_t i = 0; i < spec.layers.size(); ++i) {
        const LayerSpec& l = spec.layers[i];
        const std::string p = "layers." + std::to_string(i);
        switch (l.kind) {
            case LayerKind::conv:
                add_conv_params(out, p, l.in_channels, l.out_channels, l.kernel);
                break;
            case LayerKind::bn:
                add_bn_params(out, p, l.in_channels);
                break;
            case LayerKind::resblock:
                add_bn_params(out, p + ".bn1", l.in_channels);
                add_conv_params(out, p + ".conv1", l.in_channels, l.out_channels, 3);
                add_bn_params(out, p + ".bn2", l.out_channels);
                add_conv_params(out, p + ".conv2", l.out_channels, l.out_channels, 3);
                if (l.in_channels != l.out_channels) add_conv_params(out, p + ".skip", l.in_channels, l.out_channels, 1);
                break;
            case LayerKind::act:
            case LayerKind::upsample2x:
                break;
        }
    }
    return out;
}

WeightStore init_random_weights(const NetworkSpec& spec, std::uint64_t seed) {
    spec.validate();
    std::mt19937_64 rng(seed);
    WeightStore store;
    auto ends_with = [](const std::string& s, const std::string& suffix) {
        return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
    };
    for (const auto& [name, shape] : parameter_layout(spec)) {
        std::size_t len = 1;
        for (int d : shape) len *= static_cast<std::size_t>(d);
        std::vector<float> v(len);
        if (ends_with(name, ".weight")) {
            const double fan_in = static_cast<double>(shape[1]) * shape[2] * shape[3];
            std::normal_distribution<float> dist(0.0f, static_cast<float>(std::sqrt(1.0 / fan_in)));
            for (float& x : v) x = dist(rng);
        } else if (ends_with(name, ".bias")) {
            std::normal_distribution<float> dist(0.0f, 0.05f);
            for (float& x : v) x = dist(rng);
        } else if (ends_with(name, ".gamma")) {
            std::uniform_real_distribution<float> dist(0.8f, 1.2f);
            for (float& x : v) x = dist(rng);
        } else if (ends_with(name, ".beta") || ends_with(name, ".running_mean")) {
            std::normal_distribution<float> dist(0.0f, 0.1f);
            for (float& x : v) x = dist(rng);
        } else {
            std::uniform_real_distribution<float> dist(0.5f, 1.5f);
            for (float& x : v) x = dist(rng);
        }
        store.append(name, shape, v);
    }
    return store;
}

namespace {

std::vector<float> copy_values(const WeightStore& store, const std::string& name, const std::vector<int>& shape) {
    const ParamRecord* r = store.find(name);
    if (!r) throw SpecError("missing parameter " + name);
    if (r->shape != shape) throw SpecError("parameter " + name + " has unexpected shape");
    auto span = store.values(name);
    return {span.begin(), span.end()};
}

ConvKernel bind_conv(const WeightStore& store, const std::string& prefix, int in, int out, int k) {
    ConvKernel kernel;
    kernel.weights = Tensor(Shape{out, in, k, k}, copy_values(store, prefix + ".weight", {out, in, k, k}));
    kernel.bias = copy_values(store, prefix + ".bias", {out});
    return kernel;
}

BnParams bind_bn(const WeightStore& store, const std::string& prefix, int c, float eps) {
    BnParams p;
    p.gamma = copy_values(store, prefix + ".gamma", {c});
    p.beta = copy_values(store, prefix + ".beta", {c});
    p.running_mean = copy_values(store, prefix + ".running_mean", {c});
    p.running_var = copy_values(store, prefix + ".running_var", {c});
    p.eps = eps;
    p.validate();
    return p;
}

}  // namespace

NetworkParams bind_weights(const NetworkSpec& spec, const WeightStore& store) {
    spec.validate();
    const auto layout = parameter_layout(spec);
    if (layout.size() != store.records.size()) {
        throw SpecError("weight store has " + std::to_string(store.records.size()) + " parameters, spec needs " +
                        std::to_string(layout.size()));
    }
    for (std::size_t i = 0; i < layout.size(); ++i) {
        if (store.records[i].name != layout[i].first) {
            throw SpecError("parameter " + std::to_string(i) + " is " + store.records[i].name + ", expected " +
                            layout[i].first);
        }
    }

    NetworkParams params;
    for (std::size_t i = 0; i < spec.layers.size(); ++i) {
        const LayerSpec& l = spec.layers[i];
        const std::string p = "layers." + std::to_string(i);
        switch (l.kind) {
            case LayerKind::conv:
                params.layers.emplace_back(
                    ConvLayer{bind_conv(store, p, l.in_channels, l.out_channels, l.kernel), l.stride, l.padding});
                break;
            case LayerKind::bn:
                params.layers.emplace_back(bind_bn(store, p, l.in_channels, l.eps));
                break;
            case LayerKind::act:
                params.layers.emplace_back(l.act);
                break;
            case LayerKind::upsample2x:
                params.layers.emplace_back(Upsample2x{});
                break;
            case LayerKind::resblock: {
                ResBlockParams rb;
                rb.bn1 = bind_bn(store, p + ".bn1", l.in_channels, l.eps);
                rb.conv1 = bind_conv(store, p + ".conv1", l.in_channels, l.out_channels, 3);
                rb.bn2 = bind_bn(store, p + ".bn2", l.out_channels, l.eps);
                rb.conv2 = bind_conv(store, p + ".conv2", l.out_channels, l.out_channels, 3);
                if (l.in_channels != l.out_channels) {
                    rb.skip = bind_conv(store, p + ".skip", l.in_channels, l.out_channels, 1);
                }
                rb.act = l.act;
                rb.validate();
                params.layers.emplace_back(std::move(rb));
                break;
            }
        }
    }
    return params;
}

// ---------------------------------------------------------------------------
// File format

namespace {

constexpr char kMagic[4] = {'L', 'P', 'W', 'T'};
constexpr std::size_t kHeaderSize = 16;

const char* padding_name(ConvPadding p) {
    switch (p) {
        case ConvPadding::external: return "external";
        case ConvPadding::zero: return "zero";
        case ConvPadding::none: return "none";
    }
    return "external";
}

ConvPadding padding_from(const std::string& s) {
    if (s == "external") return ConvPadding::external;
    if (s == "zero") return ConvPadding::zero;
    if (s == "none") return ConvPadding::none;
    throw WeightFormatError("unknown conv padding '" + s + "'");
}

const char* act_name(Activation::Kind k) {
    switch (k) {
        case Activation::Kind::identity: return "identity";
        case Activation::Kind::relu: return "relu";
        case Activation::Kind::leaky_relu: return "leaky_relu";
        case Activation::Kind::tanh: return "tanh";
    }
    return "identity";
}

Activation act_from(const json& j) {
    const std::string fn = j.at("fn").get<std::string>();
    if (fn == "identity") return Activation::identity();
    if (fn == "relu") return Activation::relu();
    if (fn == "tanh") return Activation::tanh();
    if (fn == "leaky_relu") return Activation::leaky(j.at("slope").get<float>());
    throw WeightFormatError("unknown activation '" + fn + "'");
}

json act_json(const Activation& a) {
    json j = {{"fn", act_name(a.kind)}};
    if (a.kind == Activation::Kind::leaky_relu) j["slope"] = a.slope;
    return j;
}

json layer_json(const LayerSpec& l) {
    switch (l.kind) {
        case LayerKind::conv:
            return {{"type", "conv"},
                    {"in", l.in_channels},
                    {"out", l.out_channels},
                    {"kernel", l.kernel},
                    {"stride", l.stride},
                    {"padding", padding_name(l.padding)}};
        case LayerKind::bn:
            return {{"type", "bn"}, {"channels", l.in_channels}, {"eps", l.eps}};
        case LayerKind::act: {
            json j = act_json(l.act);
            j["type"] = "act";
            return j;
        }
        case LayerKind::upsample2x:
            return {{"type", "upsample2x"}};
        case LayerKind::resblock:
            return {{"type", "resblock"},
                    {"in", l.in_channels},
                    {"out", l.out_channels},
                    {"act", act_json(l.act)},
                    {"eps", l.eps}};
    }
    return {};
}

LayerSpec layer_from(const json& j) {
    const std::string type = j.at("type").get<std::string>();
    if (type == "conv") {
        return LayerSpec::conv(j.at("in").get<int>(), j.at("out").get<int>(), j.at("kernel").get<int>(),
                               padding_from(j.at("padding").get<std::string>()), j.at("stride").get<int>());
    }
    if (type == "bn") return LayerSpec::bn(j.at("channels").get<int>(), j.at("eps").get<float>());
    if (type == "act") return LayerSpec::activation(act_from(j));
    if (type == "upsample2x") return LayerSpec::upsample2x();
    if (type == "resblock") {
        return LayerSpec::resblock(j.at("in").get<int>(), j.at("out").get<int>(), act_from(j.at("act")),
                                   j.at("eps").get<float>());
    }
    throw WeightFormatError("unknown layer type '" + type + "'");
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint64_t get_le(std::span<const std::uint8_t> bytes, std::size_t offset, int width) {
    std::uint64_t v = 0;
    for (int i = 0; i < width; ++i) v |= static_cast<std::uint64_t>(bytes[offset + i]) << (8 * i);
    return v;
}

std::string hex32(std::uint32_t v) {
    char buf[9];
    std::snprintf(buf, sizeof buf, "%08x", v);
    return buf;
}

}  // namespace

std::uint32_t crc32_of(std::span<const std::uint8_t> bytes) {
    uLong crc = ::crc32(0L, Z_NULL, 0);
    std::size_t done = 0;
    while (done < bytes.size()) {
        const auto chunk = static_cast<uInt>(std::min<std::size_t>(bytes.size() - done, 1u << 30));
        crc = ::crc32(crc, bytes.data() + done, chunk);
        done += chunk;
    }
    return static_cast<std::uint32_t>(crc);
}

std::vector<std::uint8_t> encode_weights(const NetworkSpec& spec, const WeightStore& store) {
    bind_weights(spec, store);  // consistency check

    // Canonical layout: records contiguous in manifest order.
    std::vector<std::uint8_t> blob;
    json params = json::array();
    std::uint64_t offset = 0;
    for (const ParamRecord& r : store.records) {
        auto values = store.values(r.name);
        const auto* raw = reinterpret_cast<const std::uint8_t*>(values.data());
        blob.insert(blob.end(), raw, raw + values.size_bytes());
        params.push_back({{"name", r.name}, {"shape", r.shape}, {"offset", offset}, {"length", r.length()}});
        offset += values.size_bytes();
    }

    json layers = json::array();
    for (const LayerSpec& l : spec.layers) layers.push_back(layer_json(l));
    const json manifest = {
        {"format", "LPWT"},
        {"version", kWeightFormatVersion},
        {"network",
         {{"z_channels", spec.z_channels},
          {"z_spatial", spec.z_spatial},
          {"out_channels", spec.out_channels},
          {"layers", layers}}},
        {"params", params},
        {"blob_bytes", blob.size()},
        {"blob_crc32", hex32(crc32_of(blob))},
    };
    const std::string text = manifest.dump();

    std::vector<std::uint8_t> out;
    out.reserve(kHeaderSize + text.size() + blob.size());
    out.insert(out.end(), std::begin(kMagic), std::end(kMagic));
    put_u32(out, kWeightFormatVersion);
    put_u64(out, text.size());
    out.insert(out.end(), text.begin(), text.end());
    out.insert(out.end(), blob.begin(), blob.end());
    return out;
}

std::pair<NetworkSpec, WeightStore> decode_weights(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < kHeaderSize || std::memcmp(bytes.data(), kMagic, 4) != 0) {
        throw WeightFormatError("not a weight file (bad magic)");
    }
    const auto version = static_cast<std::uint32_t>(get_le(bytes, 4, 4));
    if (version != kWeightFormatVersion) {
        throw WeightFormatError("unsupported weight format version " + std::to_string(version));
    }
    const std::uint64_t manifest_len = get_le(bytes, 8, 8);
    if (manifest_len > bytes.size() - kHeaderSize) throw WeightFormatError("manifest extends past end of file");

    json manifest;
    try {
        manifest = json::parse(bytes.begin() + kHeaderSize, bytes.begin() + kHeaderSize + manifest_len);
    } catch (const json::exception& e) {
        throw WeightFormatError(std::string("manifest is not valid JSON: ") + e.what());
    }

    try {
        const auto blob_bytes = bytes.subspan(kHeaderSize + manifest_len);
        const auto expected_bytes = manifest.at("blob_bytes").get<std::uint64_t>();
        const std::string expected_crc = manifest.at("blob_crc32").get<std::string>();
        const std::string actual_crc = hex32(crc32_of(blob_bytes));
        if (blob_bytes.size() != expected_bytes || actual_crc != expected_crc) {
            throw ChecksumError("blob checksum mismatch: expected " + expected_crc + " over " +
                                std::to_string(expected_bytes) + " bytes, got " + actual_crc + " over " +
                                std::to_string(blob_bytes.size()) + " bytes");
        }
        if (blob_bytes.size() % sizeof(float) != 0) throw WeightFormatError("blob is not a whole number of floats");

        NetworkSpec spec;
        const json& net = manifest.at("network");
        spec.z_channels = net.at("z_channels").get<int>();
        spec.z_spatial = net.at("z_spatial").get<int>();
        spec.out_channels = net.at("out_channels").get<int>();
        for (const json& l : net.at("layers")) spec.layers.push_back(layer_from(l));
        spec.validate();

        WeightStore store;
        store.blob.resize(blob_bytes.size() / sizeof(float));
        std::memcpy(store.blob.data(), blob_bytes.data(), blob_bytes.size());

        std::vector<std::pair<std::uint64_t, std::uint64_t>> spans;
        for (const json& p : manifest.at("params")) {
            ParamRecord r;
            r.name = p.at("name").get<std::string>();
            r.shape = p.at("shape").get<std::vector<int>>();
            r.offset = p.at("offset").get<std::uint64_t>();
            const auto length = p.at("length").get<std::uint64_t>();
            for (int d : r.shape) {
                if (d < 1) throw WeightFormatError("parameter " + r.name + " has a non-positive dimension");
            }
            if (r.length() != length) throw WeightFormatError("parameter " + r.name + ": shape does not match length");
            if (r.offset % sizeof(float) != 0 || r.offset + length * sizeof(float) > blob_bytes.size()) {
                throw WeightFormatError("parameter " + r.name + " lies outside the blob");
            }
            spans.emplace_back(r.offset, r.offset + length * sizeof(float));
            store.records.push_back(std::move(r));
        }
        std::sort(spans.begin(), spans.end());
        for (std::size_t i = 1; i < spans.size(); ++i) {
            if (spans[i].first < spans[i - 1].second) throw WeightFormatError("parameter byte ranges overlap");
        }
        bind_weights(spec, store);
        return {std::move(spec), std::move(store)};
    } catch (const json::exception& e) {
        throw WeightFormatError(std::string("malformed manifest: ") + e.what());
    } catch (const SpecError& e) {
        throw WeightFormatError(std::string("manifest inconsistent with parameters: ") + e.what());
    }
}

void save_weights(const NetworkSpec& spec, const WeightStore& store, const std::filesystem::path& path) {
    const auto bytes = encode_weights(spec, store);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("failed writing " + path.string());
}

std::pair<NetworkSpec, WeightStore> load_weights(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open weight file " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return decode_weights(bytes);
}

}  // namespace lpad
