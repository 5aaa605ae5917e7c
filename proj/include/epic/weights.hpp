#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "epic/errors.hpp"

namespace epic {

using Fingerprint = std::array<unsigned char, 32>;

template <typename S>
struct Tensor {
    std::string name;
    std::vector<std::uint32_t> shape;
    std::vector<S> values;

    std::size_t size() const {
        std::size_t n = 1;
        for (auto d : shape) n *= d;
        return n;
    }
};

// Ordered, named parameter tensors; the only thing that ever crosses the
// client/server boundary. Two sets are aggregation-compatible iff names,
// order, shapes and fingerprint all match.
template <typename S>
struct WeightSet {
    std::vector<Tensor<S>> layers;
    Fingerprint fingerprint{};

    template <typename T>
    bool compatible_with(const WeightSet<T>& other) const {
        if (fingerprint != other.fingerprint) return false;
        if (layers.size() != other.layers.size()) return false;
        for (std::size_t i = 0; i < layers.size(); ++i)
            if (layers[i].name != other.layers[i].name || layers[i].shape != other.layers[i].shape)
                return false;
        return true;
    }

    bool all_finite() const {
        for (const auto& t : layers)
            for (const S v : t.values)
                if (!std::isfinite(double(v))) return false;
        return true;
    }

    std::size_t total_values() const {
        std::size_t n = 0;
        for (const auto& t : layers) n += t.values.size();
        return n;
    }

    Tensor<S>* find(const std::string& name) {
        for (auto& t : layers)
            if (t.name == name) return &t;
        return nullptr;
    }

    const Tensor<S>* find(const std::string& name) const {
        for (const auto& t : layers)
            if (t.name == name) return &t;
        return nullptr;
    }
};

template <typename S>
WeightSet<S> zeros_like(const WeightSet<S>& w) {
    WeightSet<S> z;
    z.fingerprint = w.fingerprint;
    z.layers.reserve(w.layers.size());
    for (const auto& t : w.layers) z.layers.push_back({t.name, t.shape, std::vector<S>(t.values.size(), S(0))});
    return z;
}

// ---------------------------------------------------------------------------
// Checkpoint format (bit-exact):
//   magic "EPICW001"
//   32-byte spec fingerprint
//   u32 LE layer count
//   per layer: u32 LE name length, UTF-8 name,
//              u32 LE rank, u32 LE dims...,
//              IEEE-754 binary32 LE values, row-major
// ---------------------------------------------------------------------------

namespace detail {

inline void put_u32_le(std::vector<unsigned char>& out, std::uint32_t v) {
    out.push_back(static_cast<unsigned char>(v));
    out.push_back(static_cast<unsigned char>(v >> 8));
    out.push_back(static_cast<unsigned char>(v >> 16));
    out.push_back(static_cast<unsigned char>(v >> 24));
}

inline std::uint32_t get_u32_le(const unsigned char* p) {
    return std::uint32_t(p[0]) | std::uint32_t(p[1]) << 8 | std::uint32_t(p[2]) << 16 | std::uint32_t(p[3]) << 24;
}

} // namespace detail

inline constexpr char kCheckpointMagic[8] = {'E', 'P', 'I', 'C', 'W', '0', '0', '1'};

inline std::vector<unsigned char> serialize_weights(const WeightSet<float>& w) {
    std::vector<unsigned char> out;
    out.insert(out.end(), kCheckpointMagic, kCheckpointMagic + 8);
    out.insert(out.end(), w.fingerprint.begin(), w.fingerprint.end());
    detail::put_u32_le(out, static_cast<std::uint32_t>(w.layers.size()));
    for (const auto& t : w.layers) {
        detail::put_u32_le(out, static_cast<std::uint32_t>(t.name.size()));
        out.insert(out.end(), t.name.begin(), t.name.end());
        detail::put_u32_le(out, static_cast<std::uint32_t>(t.shape.size()));
        for (auto d : t.shape) detail::put_u32_le(out, d);
        for (float v : t.values) {
            std::uint32_t bits;
            std::memcpy(&bits, &v, 4);
            detail::put_u32_le(out, bits);
        }
    }
    return out;
}

inline WeightSet<float> deserialize_weights(const std::vector<unsigned char>& bytes) {
    std::size_t pos = 0;
    auto need = [&](std::size_t n) {
        if (pos + n > bytes.size()) throw IoError("checkpoint truncated");
    };
    need(8 + 32 + 4);
    if (std::memcmp(bytes.data(), kCheckpointMagic, 8) != 0) throw IoError("not a weight checkpoint (bad magic)");
    pos = 8;
    WeightSet<float> w;
    std::memcpy(w.fingerprint.data(), bytes.data() + pos, 32);
    pos += 32;
    const std::uint32_t nlayers = detail::get_u32_le(bytes.data() + pos);
    pos += 4;
    for (std::uint32_t i = 0; i < nlayers; ++i) {
        Tensor<float> t;
        need(4);
        const std::uint32_t namelen = detail::get_u32_le(bytes.data() + pos);
        pos += 4;
        need(namelen);
        t.name.assign(reinterpret_cast<const char*>(bytes.data() + pos), namelen);
        pos += namelen;
        need(4);
        const std::uint32_t rank = detail::get_u32_le(bytes.data() + pos);
        pos += 4;
        std::size_t count = 1;
        for (std::uint32_t d = 0; d < rank; ++d) {
            need(4);
            t.shape.push_back(detail::get_u32_le(bytes.data() + pos));
            pos += 4;
            count *= t.shape.back();
        }
        need(count * 4);
        t.values.resize(count);
        for (std::size_t v = 0; v < count; ++v) {
            const std::uint32_t bits = detail::get_u32_le(bytes.data() + pos);
            pos += 4;
            std::memcpy(&t.values[v], &bits, 4);
        }
        w.layers.push_back(std::move(t));
    }
    if (pos != bytes.size()) throw IoError("checkpoint has trailing bytes");
    return w;
}

inline void save_checkpoint(const std::string& path, const WeightSet<float>& w) {
    const auto bytes = serialize_weights(w);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write checkpoint '" + path + "'");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("error writing checkpoint '" + path + "'");
}

inline WeightSet<float> load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint '" + path + "'");
    std::vector<unsigned char> bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    return deserialize_weights(bytes);
}

} // namespace epic
