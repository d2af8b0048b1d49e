// Copyright 2026 The facedeblur Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "facedeblur/contract.hpp"
#include "facedeblur/image.hpp"
#include "facedeblur/kernel.hpp"
#include "facedeblur/random.hpp"

namespace facedeblur {

/// VALID: output shrinks by (kernel - 1). SAME: output keeps the input size, zero-padded.
enum class ConvMode { Valid, Same };

enum class PsiKind { Identity, Clip, ClipQuantize };

/// The non-linear artifact function applied after noise.
struct Psi {
    PsiKind kind = PsiKind::Identity;
    int levels = 256;  ///< Quantization levels for ClipQuantize.

    double operator()(double v) const {
        switch (kind) {
            case PsiKind::Identity:
                return v;
            case PsiKind::Clip:
                return std::clamp(v, 0.0, 1.0);
            case PsiKind::ClipQuantize: {
                const double q = static_cast<double>(levels - 1);
                return std::floor(std::clamp(v, 0.0, 1.0) * q + 0.5) / q;
            }
        }
        return v;
    }
};

struct BlurConfig {
    double noise_sigma = 0.0;
    Psi psi{};
    ConvMode conv_mode = ConvMode::Same;
    std::uint64_t rng_seed = 0;
};

/// 2-D convolution (kernel flipped), channels independent.
inline Image convolve(const Image& image, const BlurKernel& kernel, ConvMode mode) {
    const std::size_t kh = kernel.height();
    const std::size_t kw = kernel.width();
    require(kh % 2 == 1 && kw % 2 == 1, "convolve: kernel sides must be odd, got ", kh, "x", kw);
    require(kh <= image.height() && kw <= image.width(), "convolve: kernel ", kh, "x", kw,
            " larger than image ", image.height(), "x", image.width());

    const std::size_t ch = image.channels();
    const auto ih = static_cast<long>(image.height());
    const auto iw = static_cast<long>(image.width());
    // Offset of the input coordinate for kernel tap (i, j) relative to output (y, x):
    // in = out + anchor - tap.
    const long anchor_y = mode == ConvMode::Valid ? static_cast<long>(kh) - 1 : static_cast<long>(kh / 2);
    const long anchor_x = mode == ConvMode::Valid ? static_cast<long>(kw) - 1 : static_cast<long>(kw / 2);
    const std::size_t oh = mode == ConvMode::Valid ? image.height() - kh + 1 : image.height();
    const std::size_t ow = mode == ConvMode::Valid ? image.width() - kw + 1 : image.width();

    Image out(oh, ow, ch);
    const double* src = image.data().data();
    double* dst = out.data().data();
    const auto out_h = static_cast<long>(oh);
    const auto out_w = static_cast<long>(ow);
    const auto stride = static_cast<long>(ch);
    // One shifted, weighted copy of the input per kernel tap; rows are contiguous in HWC.
    for (std::size_t i = 0; i < kh; ++i) {
        const long dy = anchor_y - static_cast<long>(i);
        const long y0 = std::max(0L, -dy);
        const long y1 = std::min(out_h, ih - dy);
        for (std::size_t j = 0; j < kw; ++j) {
            const long dx = anchor_x - static_cast<long>(j);
            const long x0 = std::max(0L, -dx);
            const long x1 = std::min(out_w, iw - dx);
            if (x0 >= x1) continue;
            const double wv = kernel.at(i, j);
            for (long y = y0; y < y1; ++y) {
                double* orow = dst + (y * out_w + x0) * stride;
                const double* irow = src + ((y + dy) * iw + x0 + dx) * stride;
                const long n = (x1 - x0) * stride;
                for (long t = 0; t < n; ++t) orow[t] += wv * irow[t];
            }
        }
    }
    return out;
}

/// psi(image * kernel + noise); deterministic for a fixed seed.
inline Image blur(const Image& image, const BlurKernel& kernel, const BlurConfig& cfg) {
    require(cfg.noise_sigma >= 0.0, "blur: noise sigma must be non-negative, got ", cfg.noise_sigma);
    require(cfg.psi.kind != PsiKind::ClipQuantize || cfg.psi.levels >= 2,
            "blur: quantization needs at least 2 levels, got ", cfg.psi.levels);
    Image out = convolve(image, kernel, cfg.conv_mode);
    if (cfg.noise_sigma > 0.0) {
        Rng rng(cfg.rng_seed);
        std::normal_distribution<double> noise(0.0, cfg.noise_sigma);
        for (double& v : out.data()) v += noise(rng);
    }
    if (cfg.psi.kind != PsiKind::Identity) {
        for (double& v : out.data()) v = cfg.psi(v);
    }
    return out;
}

/// Blurs each image with its own kernel; image i uses seed cfg.rng_seed + i.
inline std::vector<Image> blur_batch(std::span<const Image> images, std::span<const BlurKernel> kernels,
                                     const BlurConfig& cfg) {
    require(images.size() == kernels.size(), "blur_batch: ", images.size(), " images but ",
            kernels.size(), " kernels");
    std::vector<Image> out;
    out.reserve(images.size());
    for (std::size_t i = 0; i < images.size(); ++i) {
        BlurConfig item = cfg;
        item.rng_seed = cfg.rng_seed + i;
        out.push_back(blur(images[i], kernels[i], item));
    }
    return out;
}

}  // namespace facedeblur
