#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "freepca/errors.hpp"
#include "freepca/tensor.hpp"

namespace freepca {

// .ften on-disk layout, all fields little-endian:
//
//   offset 0   magic     4 ASCII bytes "FTEN"
//   offset 4   version   u32, currently 1
//   offset 8   ndim      u32
//   offset 12  dims      ndim x u64
//   then       payload   prod(dims) x f32, row-major
//
// The payload is the only lossy boundary in the library: in-memory doubles
// are truncated to f32 on write and widened exactly on read, so a
// write -> read -> write cycle is byte-stable after the first write.

inline constexpr char kFtenMagic[4] = {'F', 'T', 'E', 'N'};
inline constexpr std::uint32_t kFtenVersion = 1;
// Payload cap; dims that multiply past this are corrupt or hostile.
inline constexpr std::uint64_t kFtenMaxElements = 1ull << 31;

struct TensorData {
    std::vector<std::uint64_t> dims;
    std::vector<double> values;
};

namespace detail {

inline void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline void put_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline void put_f32(std::string& out, float v) {
    put_u32(out, std::bit_cast<std::uint32_t>(v));
}

inline std::uint32_t get_u32(const std::string& in, std::size_t off) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
        v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[off + i])) << (8 * i);
    return v;
}

inline std::uint64_t get_u64(const std::string& in, std::size_t off) {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i)
        v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[off + i])) << (8 * i);
    return v;
}

}  // namespace detail

inline void write_tensor(const TensorData& tensor, const std::string& path) {
    if (tensor.dims.empty()) throw ShapeError("write_tensor: no dims");
    std::uint64_t count = 1;
    for (std::uint64_t d : tensor.dims) {
        if (d == 0) throw ShapeError("write_tensor: zero dim");
        if (count > kFtenMaxElements / d) throw ShapeError("write_tensor: dims overflow");
        count *= d;
    }
    if (count != tensor.values.size()) {
        throw ShapeError("write_tensor: dims imply " + std::to_string(count) +
                         " elements, have " + std::to_string(tensor.values.size()));
    }
    require_finite(tensor.values, "write_tensor");

    std::string bytes;
    bytes.reserve(12 + 8 * tensor.dims.size() + 4 * tensor.values.size());
    bytes.append(kFtenMagic, 4);
    detail::put_u32(bytes, kFtenVersion);
    detail::put_u32(bytes, static_cast<std::uint32_t>(tensor.dims.size()));
    for (std::uint64_t d : tensor.dims) detail::put_u64(bytes, d);
    for (double v : tensor.values) detail::put_f32(bytes, static_cast<float>(v));

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("write_tensor: cannot open " + path);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write_tensor: short write to " + path);
}

inline TensorData read_tensor(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("read_tensor: cannot open " + path);
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

    auto fail = [&](std::size_t offset, const std::string& what) -> FormatError {
        return FormatError(path + ": " + what + " at byte offset " + std::to_string(offset));
    };

    if (bytes.size() < 12) throw fail(bytes.size(), "truncated header");
    if (std::memcmp(bytes.data(), kFtenMagic, 4) != 0) throw fail(0, "bad magic");
    const std::uint32_t version = detail::get_u32(bytes, 4);
    if (version != kFtenVersion) {
        throw fail(4, "unsupported version " + std::to_string(version));
    }
    const std::uint32_t ndim = detail::get_u32(bytes, 8);
    if (ndim == 0 || ndim > 8) throw fail(8, "bad ndim " + std::to_string(ndim));
    if (bytes.size() < 12 + 8ull * ndim) throw fail(bytes.size(), "truncated dims");

    TensorData tensor;
    tensor.dims.resize(ndim);
    std::uint64_t count = 1;
    for (std::uint32_t i = 0; i < ndim; ++i) {
        const std::size_t off = 12 + 8ull * i;
        const std::uint64_t d = detail::get_u64(bytes, off);
        if (d == 0) throw fail(off, "zero dim");
        if (count > kFtenMaxElements / d) throw fail(off, "dims overflow");
        count *= d;
        tensor.dims[i] = d;
    }

    const std::size_t payload_off = 12 + 8ull * ndim;
    const std::size_t need = payload_off + 4 * count;
    if (bytes.size() < need) {
        throw fail(bytes.size(), "truncated payload, expected " + std::to_string(need) +
                                     " bytes total");
    }
    if (bytes.size() > need) throw fail(need, "trailing bytes after payload");

    tensor.values.resize(count);
    for (std::uint64_t i = 0; i < count; ++i) {
        const std::size_t off = payload_off + 4 * i;
        const float v = std::bit_cast<float>(detail::get_u32(bytes, off));
        if (!std::isfinite(v)) throw fail(off, "non-finite payload value");
        tensor.values[i] = static_cast<double>(v);
    }
    return tensor;
}

inline void write_video(const VideoTensor& v, const std::string& path) {
    TensorData t;
    t.dims = {v.frames, v.height, v.width, v.channels};
    t.values = v.data;
    write_tensor(t, path);
}

inline VideoTensor read_video(const std::string& path) {
    const TensorData t = read_tensor(path);
    if (t.dims.size() != 4) {
        throw FormatError(path + ": expected 4-d video tensor, got " +
                          std::to_string(t.dims.size()) + "-d");
    }
    VideoTensor v(static_cast<std::size_t>(t.dims[0]), static_cast<std::size_t>(t.dims[1]),
                  static_cast<std::size_t>(t.dims[2]), static_cast<std::size_t>(t.dims[3]));
    v.data = t.values;
    return v;
}

inline void write_features(const FeatureTensor& x, const std::string& path) {
    if (x.layout != FeatureLayout::FrameMajor) {
        throw ShapeError("write_features: only frame-major blocks are stored");
    }
    TensorData t;
    t.dims = {x.frames, x.sites, x.channels};
    t.values = x.data;
    write_tensor(t, path);
}

inline FeatureTensor read_features(const std::string& path,
                                   FeatureLayout layout = FeatureLayout::FrameMajor) {
    const TensorData t = read_tensor(path);
    if (t.dims.size() != 3) {
        throw FormatError(path + ": expected 3-d feature tensor, got " +
                          std::to_string(t.dims.size()) + "-d");
    }
    const auto d0 = static_cast<std::size_t>(t.dims[0]);
    const auto d1 = static_cast<std::size_t>(t.dims[1]);
    const auto d2 = static_cast<std::size_t>(t.dims[2]);
    // dims on disk follow the storage order of the requested layout
    FeatureTensor x = layout == FeatureLayout::FrameMajor
                          ? FeatureTensor(d0, d1, d2, layout)
                          : FeatureTensor(d1, d0, d2, layout);
    x.data = t.values;
    return x;
}

}  // namespace freepca
