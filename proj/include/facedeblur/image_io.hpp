// Copyright 2026 The facedeblur Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include "facedeblur/contract.hpp"
#include "facedeblur/image.hpp"

namespace facedeblur {

/// Sample depth used when writing. Loading always detects the depth from the file.
enum class BitDepth { Eight = 8, Sixteen = 16 };

namespace detail {

inline std::string lower_extension(const std::filesystem::path& path) {
    std::string ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    return ext;
}

inline std::uint16_t quantize(double v, std::uint32_t maxval) {
    const double clamped = std::clamp(v, 0.0, 1.0);
    // Round half up.
    return static_cast<std::uint16_t>(std::floor(clamped * maxval + 0.5));
}

inline std::string next_pnm_token(std::istream& is) {
    std::string token;
    int c = 0;
    while ((c = is.get()) != EOF) {
        if (c == '#') {
            while ((c = is.get()) != EOF && c != '\n') {}
            continue;
        }
        if (std::isspace(c)) {
            if (!token.empty()) break;
            continue;
        }
        token.push_back(static_cast<char>(c));
    }
    return token;
}

inline Image read_pnm(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    require(is.good(), "cannot open image ", path.string());
    const std::string magic = next_pnm_token(is);
    require(magic == "P5" || magic == "P6", "unsupported PNM variant '", magic, "' in ", path.string());
    const std::size_t channels = magic == "P6" ? 3 : 1;
    const long width = std::stol(next_pnm_token(is));
    const long height = std::stol(next_pnm_token(is));
    const long maxval = std::stol(next_pnm_token(is));
    require(width > 0 && height > 0, "bad PNM dimensions in ", path.string());
    require(maxval > 0 && maxval < 65536, "bad PNM maxval ", maxval, " in ", path.string());
    const std::size_t bytes_per_sample = maxval > 255 ? 2 : 1;
    const std::size_t count = static_cast<std::size_t>(width * height) * channels;
    std::vector<unsigned char> raw(count * bytes_per_sample);
    is.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    require(static_cast<std::size_t>(is.gcount()) == raw.size(), "truncated PNM data in ", path.string());
    std::vector<double> data(count);
    for (std::size_t i = 0; i < count; ++i) {
        const std::uint32_t v = bytes_per_sample == 2 ? (std::uint32_t{raw[2 * i]} << 8) | raw[2 * i + 1]
                                                      : std::uint32_t{raw[i]};
        data[i] = static_cast<double>(v) / static_cast<double>(maxval);
    }
    return Image(static_cast<std::size_t>(height), static_cast<std::size_t>(width), channels, std::move(data));
}

inline void write_pnm(const std::filesystem::path& path, const Image& img, BitDepth depth) {
    std::ofstream os(path, std::ios::binary);
    require(os.good(), "cannot open ", path.string(), " for writing");
    const std::uint32_t maxval = depth == BitDepth::Sixteen ? 65535 : 255;
    os << (img.channels() == 3 ? "P6" : "P5") << '\n'
       << img.width() << ' ' << img.height() << '\n'
       << maxval << '\n';
    std::vector<unsigned char> raw;
    raw.reserve(img.size() * 2);
    for (double v : img.data()) {
        const std::uint16_t q = quantize(v, maxval);
        if (depth == BitDepth::Sixteen) raw.push_back(static_cast<unsigned char>(q >> 8));
        raw.push_back(static_cast<unsigned char>(q & 0xff));
    }
    os.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    os.flush();
    require(os.good(), "failed writing ", path.string());
}

struct FileCloser {
    void operator()(std::FILE* f) const { std::fclose(f); }
};

inline Image read_png(const std::filesystem::path& path) {
    std::unique_ptr<std::FILE, FileCloser> file(std::fopen(path.string().c_str(), "rb"));
    require(file != nullptr, "cannot open image ", path.string());
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png_create_info_struct(png);
    struct Guard {
        png_structp* png;
        png_infop* info;
        ~Guard() { png_destroy_read_struct(png, info, nullptr); }
    } guard{&png, &info};
    if (setjmp(png_jmpbuf(png))) throw ContractViolation("corrupt PNG file " + path.string());
    png_init_io(png, file.get());
    png_read_info(png, info);

    const int color = png_get_color_type(png, info);
    const int bit_depth = png_get_bit_depth(png, info);
    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color == PNG_COLOR_TYPE_GRAY && bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
    if (bit_depth == 16) png_set_swap(png);  // little-endian host order
    png_read_update_info(png, info);

    const std::size_t width = png_get_image_width(png, info);
    const std::size_t height = png_get_image_height(png, info);
    const std::size_t channels = png_get_channels(png, info);
    const int depth = png_get_bit_depth(png, info);
    require(channels == 1 || channels == 3, "unsupported PNG channel count ", channels);
    const std::size_t rowbytes = png_get_rowbytes(png, info);
    std::vector<unsigned char> buffer(rowbytes * height);
    std::vector<png_bytep> rows(height);
    for (std::size_t y = 0; y < height; ++y) rows[y] = buffer.data() + y * rowbytes;
    png_read_image(png, rows.data());

    const double maxval = depth == 16 ? 65535.0 : 255.0;
    std::vector<double> data(width * height * channels);
    for (std::size_t y = 0; y < height; ++y) {
        for (std::size_t i = 0; i < width * channels; ++i) {
            std::uint32_t v = 0;
            if (depth == 16) {
                const unsigned char* p = rows[y] + 2 * i;
                v = std::uint32_t{p[0]} | (std::uint32_t{p[1]} << 8);
            } else {
                v = rows[y][i];
            }
            data[y * width * channels + i] = static_cast<double>(v) / maxval;
        }
    }
    return Image(height, width, channels, std::move(data));
}

inline void write_png(const std::filesystem::path& path, const Image& img, BitDepth depth) {
    std::unique_ptr<std::FILE, FileCloser> file(std::fopen(path.string().c_str(), "wb"));
    require(file != nullptr, "cannot open ", path.string(), " for writing");
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png_create_info_struct(png);
    struct Guard {
        png_structp* png;
        png_infop* info;
        ~Guard() { png_destroy_write_struct(png, info); }
    } guard{&png, &info};
    if (setjmp(png_jmpbuf(png))) throw ContractViolation("failed writing PNG " + path.string());
    png_init_io(png, file.get());
    const int bits = static_cast<int>(depth);
    png_set_IHDR(png, info, static_cast<png_uint_32>(img.width()), static_cast<png_uint_32>(img.height()),
                 bits, img.channels() == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);

    const std::uint32_t maxval = depth == BitDepth::Sixteen ? 65535 : 255;
    const std::size_t row_samples = img.width() * img.channels();
    std::vector<unsigned char> row(row_samples * (bits / 8));
    for (std::size_t y = 0; y < img.height(); ++y) {
        for (std::size_t i = 0; i < row_samples; ++i) {
            const std::uint16_t q = quantize(img.data()[y * row_samples + i], maxval);
            if (depth == BitDepth::Sixteen) {
                row[2 * i] = static_cast<unsigned char>(q >> 8);  // PNG is big-endian
                row[2 * i + 1] = static_cast<unsigned char>(q & 0xff);
            } else {
                row[i] = static_cast<unsigned char>(q);
            }
        }
        png_write_row(png, row.data());
    }
    png_write_end(png, nullptr);
}

}  // namespace detail

inline bool is_image_path(const std::filesystem::path& path) {
    const std::string ext = detail::lower_extension(path);
    return ext == ".png" || ext == ".pgm" || ext == ".ppm" || ext == ".pnm";
}

/// Loads PNG or binary PGM/PPM; intensities are mapped linearly onto [0,1].
inline Image load_image(const std::filesystem::path& path) {
    const std::string ext = detail::lower_extension(path);
    if (ext == ".png") return detail::read_png(path);
    require(ext == ".pgm" || ext == ".ppm" || ext == ".pnm", "unsupported image format '", ext, "' (",
            path.string(), ")");
    return detail::read_pnm(path);
}

/// Saves with clamping to [0,1] and round-half-up quantization.
inline void save_image(const std::filesystem::path& path, const Image& img, BitDepth depth = BitDepth::Eight) {
    const std::string ext = detail::lower_extension(path);
    if (ext == ".png") return detail::write_png(path, img, depth);
    require(ext == ".pgm" || ext == ".ppm" || ext == ".pnm", "unsupported image format '", ext, "' (",
            path.string(), ")");
    require(ext != ".pgm" || img.channels() == 1, "cannot write a colour image as PGM: ", path.string());
    require(ext != ".ppm" || img.channels() == 3, "cannot write a grey image as PPM: ", path.string());
    detail::write_pnm(path, img, depth);
}

/// Image files of a directory, ordered by name with embedded numbers compared numerically.
inline std::vector<std::filesystem::path> list_images(const std::filesystem::path& dir) {
    require(std::filesystem::is_directory(dir), "not a directory: ", dir.string());
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir))
        if (entry.is_regular_file() && is_image_path(entry.path())) files.push_back(entry.path());
    auto natural_less = [](const std::string& a, const std::string& b) {
        std::size_t i = 0;
        std::size_t j = 0;
        while (i < a.size() && j < b.size()) {
            if (std::isdigit(static_cast<unsigned char>(a[i])) && std::isdigit(static_cast<unsigned char>(b[j]))) {
                std::size_t ie = i;
                std::size_t je = j;
                while (ie < a.size() && std::isdigit(static_cast<unsigned char>(a[ie]))) ++ie;
                while (je < b.size() && std::isdigit(static_cast<unsigned char>(b[je]))) ++je;
                const std::string na = a.substr(i, ie - i);
                const std::string nb = b.substr(j, je - j);
                const unsigned long long va = std::stoull(na);
                const unsigned long long vb = std::stoull(nb);
                if (va != vb) return va < vb;
                i = ie;
                j = je;
            } else {
                if (a[i] != b[j]) return a[i] < b[j];
                ++i;
                ++j;
            }
        }
        return a.size() - i < b.size() - j;
    };
    std::sort(files.begin(), files.end(), [&](const auto& a, const auto& b) {
        return natural_less(a.filename().string(), b.filename().string());
    });
    return files;
}

}  // namespace facedeblur
