// Copyright 2026 The facedeblur Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

#include "facedeblur/contract.hpp"
#include "facedeblur/network.hpp"
#include "facedeblur/param_store.hpp"

namespace facedeblur {

// Checkpoint layout (all integers and reals little-endian):
//
//   magic        8 bytes  "FDBLCKPT"
//   version      u32
//   arch         u32 input_channels, u32 output_channels, u32 block_count,
//                u32 channels_per_block, u32 skip_count, u32 skip[skip_count],
//                u8 merge, u8 input_residual
//   seed         u64
//   tensors      u32 count, then per tensor:
//                u32 name_length, name bytes, u8 trainable, u32 rank, u64 dims[rank],
//                f64 values[product(dims)]

inline constexpr std::array<char, 8> kCheckpointMagic{'F', 'D', 'B', 'L', 'C', 'K', 'P', 'T'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
    NetArchitecture arch;
    std::uint64_t seed = 0;
    ParamStore params;
};

namespace detail {

template <typename T>
void put_le(std::ostream& os, T value) {
    using U = std::conditional_t<sizeof(T) == 8, std::uint64_t,
                                 std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint8_t>>;
    U bits = std::bit_cast<U>(value);
    for (std::size_t i = 0; i < sizeof(U); ++i) {
        os.put(static_cast<char>(bits & 0xff));
        if constexpr (sizeof(U) > 1) bits >>= 8;
    }
}

template <typename T>
T get_le(std::istream& is) {
    using U = std::conditional_t<sizeof(T) == 8, std::uint64_t,
                                 std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint8_t>>;
    std::array<unsigned char, sizeof(U)> bytes{};
    is.read(reinterpret_cast<char*>(bytes.data()), sizeof(U));
    require(static_cast<std::size_t>(is.gcount()) == sizeof(U), "checkpoint: unexpected end of file");
    U bits = 0;
    for (std::size_t i = sizeof(U); i-- > 0;) {
        if constexpr (sizeof(U) > 1) bits <<= 8;
        bits |= bytes[i];
    }
    return std::bit_cast<T>(bits);
}

}  // namespace detail

inline void write_checkpoint(std::ostream& os, const Checkpoint& ck) {
    using detail::put_le;
    os.write(kCheckpointMagic.data(), kCheckpointMagic.size());
    put_le<std::uint32_t>(os, kCheckpointVersion);
    const auto& a = ck.arch;
    put_le<std::uint32_t>(os, static_cast<std::uint32_t>(a.input_channels));
    put_le<std::uint32_t>(os, static_cast<std::uint32_t>(a.output_channels));
    put_le<std::uint32_t>(os, static_cast<std::uint32_t>(a.block_count));
    put_le<std::uint32_t>(os, static_cast<std::uint32_t>(a.channels_per_block));
    put_le<std::uint32_t>(os, static_cast<std::uint32_t>(a.skip_sources.size()));
    for (std::size_t s : a.skip_sources) put_le<std::uint32_t>(os, static_cast<std::uint32_t>(s));
    put_le<std::uint8_t>(os, static_cast<std::uint8_t>(a.merge));
    put_le<std::uint8_t>(os, a.input_residual ? 1 : 0);
    put_le<std::uint64_t>(os, ck.seed);
    put_le<std::uint32_t>(os, static_cast<std::uint32_t>(ck.params.size()));
    for (const auto& t : ck.params.entries()) {
        put_le<std::uint32_t>(os, static_cast<std::uint32_t>(t.name.size()));
        os.write(t.name.data(), static_cast<std::streamsize>(t.name.size()));
        put_le<std::uint8_t>(os, t.trainable ? 1 : 0);
        put_le<std::uint32_t>(os, static_cast<std::uint32_t>(t.shape.size()));
        for (std::size_t d : t.shape) put_le<std::uint64_t>(os, d);
        for (double v : t.value) put_le<double>(os, v);
    }
    require(os.good(), "checkpoint: write failed");
}

/// Reads a checkpoint and validates every tensor shape against the stored architecture.
inline Checkpoint read_checkpoint(std::istream& is) {
    using detail::get_le;
    std::array<char, 8> magic{};
    is.read(magic.data(), magic.size());
    require(is.gcount() == 8 && magic == kCheckpointMagic, "checkpoint: bad magic");
    const auto version = get_le<std::uint32_t>(is);
    require(version == kCheckpointVersion, "checkpoint: unsupported version ", version);
    Checkpoint ck;
    auto& a = ck.arch;
    a.input_channels = get_le<std::uint32_t>(is);
    a.output_channels = get_le<std::uint32_t>(is);
    a.block_count = get_le<std::uint32_t>(is);
    a.channels_per_block = get_le<std::uint32_t>(is);
    const auto skips = get_le<std::uint32_t>(is);
    require(skips <= 1024, "checkpoint: implausible skip count ", skips);
    a.skip_sources.clear();
    for (std::uint32_t i = 0; i < skips; ++i) a.skip_sources.push_back(get_le<std::uint32_t>(is));
    const auto merge = get_le<std::uint8_t>(is);
    require(merge <= 1, "checkpoint: unknown merge mode ", int{merge});
    a.merge = static_cast<SkipMerge>(merge);
    a.input_residual = get_le<std::uint8_t>(is) != 0;
    ck.seed = get_le<std::uint64_t>(is);
    const auto count = get_le<std::uint32_t>(is);
    for (std::uint32_t t = 0; t < count; ++t) {
        const auto len = get_le<std::uint32_t>(is);
        require(len > 0 && len < 4096, "checkpoint: bad tensor name length ", len);
        std::string name(len, '\0');
        is.read(name.data(), len);
        require(static_cast<std::uint32_t>(is.gcount()) == len, "checkpoint: unexpected end of file");
        const bool trainable = get_le<std::uint8_t>(is) != 0;
        const auto rank = get_le<std::uint32_t>(is);
        require(rank <= 8, "checkpoint: tensor '", name, "' has rank ", rank);
        std::vector<std::size_t> shape(rank);
        for (auto& d : shape) d = static_cast<std::size_t>(get_le<std::uint64_t>(is));
        require(shape_numel(shape) < (std::size_t{1} << 32), "checkpoint: tensor '", name, "' too large");
        auto& entry = ck.params.add(name, shape, trainable);
        for (double& v : entry.value) v = get_le<double>(is);
    }
    validate_params(ck.params, ck.arch);
    return ck;
}

inline void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ck) {
    std::ofstream os(path, std::ios::binary);
    require(os.good(), "cannot open ", path.string(), " for writing");
    write_checkpoint(os, ck);
    os.flush();
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    require(is.good(), "cannot open checkpoint ", path.string());
    return read_checkpoint(is);
}

}  // namespace facedeblur
