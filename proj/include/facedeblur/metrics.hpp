// Copyright 2026 The facedeblur Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cmath>
#include <iomanip>
#include <limits>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "facedeblur/contract.hpp"
#include "facedeblur/image.hpp"

namespace facedeblur {

// ---------------------------------------------------------------------------
// Huber loss, applied elementwise and averaged.

inline double huber_penalty(double e) {
    const double a = std::abs(e);
    return a <= 1.0 ? 0.5 * e * e : a - 0.5;
}

/// d(penalty)/de; bounded by 1 in magnitude.
inline double huber_derivative(double e) {
    if (e > 1.0) return 1.0;
    if (e < -1.0) return -1.0;
    return e;
}

inline double huber_loss(std::span<const double> residual) {
    require(!residual.empty(), "huber_loss: residual must be non-empty");
    double total = 0.0;
    for (double e : residual) total += huber_penalty(e);
    return total / static_cast<double>(residual.size());
}

// ---------------------------------------------------------------------------
// PSNR / SSIM at peak 1.0.

struct MetricsReport {
    double psnr = 0.0;  ///< dB, +inf for identical images
    double ssim = 0.0;
    std::size_t pixel_count = 0;
};

inline double mse(const Image& reference, const Image& test) {
    require(reference.same_shape(test), "dimension mismatch: ", reference.height(), "x",
            reference.width(), "x", reference.channels(), " vs ", test.height(), "x", test.width(),
            "x", test.channels());
    double acc = 0.0;
    const auto a = reference.data();
    const auto b = test.data();
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        acc += d * d;
    }
    return acc / static_cast<double>(a.size());
}

inline double psnr(const Image& reference, const Image& test) {
    const double err = mse(reference, test);
    if (err == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(1.0 / err);
}

struct SsimParams {
    static constexpr std::size_t window = 11;
    static constexpr double sigma = 1.5;
    static constexpr double c1 = 0.01 * 0.01;
    static constexpr double c2 = 0.03 * 0.03;
};

/// Normalized 1-D Gaussian taps; the 2-D window is their outer product.
inline std::array<double, SsimParams::window> ssim_taps() {
    std::array<double, SsimParams::window> taps{};
    const double center = static_cast<double>(SsimParams::window / 2);
    double total = 0.0;
    for (std::size_t i = 0; i < taps.size(); ++i) {
        const double d = static_cast<double>(i) - center;
        taps[i] = std::exp(-d * d / (2.0 * SsimParams::sigma * SsimParams::sigma));
        total += taps[i];
    }
    for (double& t : taps) t /= total;
    return taps;
}

namespace detail {

// Valid-mode separable Gaussian filtering of a single-channel plane.
inline std::vector<double> window_filter(std::span<const double> plane, std::size_t h, std::size_t w) {
    constexpr std::size_t k = SsimParams::window;
    const auto taps = ssim_taps();
    const std::size_t oh = h - k + 1;
    const std::size_t ow = w - k + 1;
    std::vector<double> rows(h * ow, 0.0);
    for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < ow; ++x) {
            double acc = 0.0;
            for (std::size_t j = 0; j < k; ++j) acc += taps[j] * plane[y * w + x + j];
            rows[y * ow + x] = acc;
        }
    std::vector<double> out(oh * ow, 0.0);
    for (std::size_t y = 0; y < oh; ++y)
        for (std::size_t x = 0; x < ow; ++x) {
            double acc = 0.0;
            for (std::size_t i = 0; i < k; ++i) acc += taps[i] * rows[(y + i) * ow + x];
            out[y * ow + x] = acc;
        }
    return out;
}

}  // namespace detail

/// Mean SSIM over all window positions fully inside the image. Colour images
/// are compared on luma.
inline double ssim(const Image& reference, const Image& test) {
    require(reference.same_shape(test), "dimension mismatch: ", reference.height(), "x",
            reference.width(), "x", reference.channels(), " vs ", test.height(), "x", test.width(),
            "x", test.channels());
    require(reference.height() >= SsimParams::window && reference.width() >= SsimParams::window,
            "ssim: image ", reference.height(), "x", reference.width(), " smaller than the ",
            SsimParams::window, "x", SsimParams::window, " window");
    const Image a = to_luma(reference);
    const Image b = to_luma(test);
    const std::size_t h = a.height();
    const std::size_t w = a.width();
    const std::size_t n = h * w;
    std::vector<double> aa(n), bb(n), ab(n);
    for (std::size_t i = 0; i < n; ++i) {
        aa[i] = a.data()[i] * a.data()[i];
        bb[i] = b.data()[i] * b.data()[i];
        ab[i] = a.data()[i] * b.data()[i];
    }
    const auto mu_a = detail::window_filter(a.data(), h, w);
    const auto mu_b = detail::window_filter(b.data(), h, w);
    const auto e_aa = detail::window_filter(aa, h, w);
    const auto e_bb = detail::window_filter(bb, h, w);
    const auto e_ab = detail::window_filter(ab, h, w);
    double total = 0.0;
    for (std::size_t i = 0; i < mu_a.size(); ++i) {
        const double ma = mu_a[i];
        const double mb = mu_b[i];
        const double va = e_aa[i] - ma * ma;
        const double vb = e_bb[i] - mb * mb;
        const double cov = e_ab[i] - ma * mb;
        total += ((2.0 * ma * mb + SsimParams::c1) * (2.0 * cov + SsimParams::c2)) /
                 ((ma * ma + mb * mb + SsimParams::c1) * (va + vb + SsimParams::c2));
    }
    return total / static_cast<double>(mu_a.size());
}

inline MetricsReport measure(const Image& reference, const Image& test) {
    return MetricsReport{psnr(reference, test), ssim(reference, test), reference.height() * reference.width()};
}

// ---------------------------------------------------------------------------
// Serialization.

inline std::string format_db(double v, int precision = 4) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    std::ostringstream oss;
    oss << std::fixed << std::setprecision(precision) << v;
    return oss.str();
}

/// Flat `key = value` block.
inline std::string to_key_value(const MetricsReport& r) {
    std::ostringstream oss;
    oss << "psnr = " << format_db(r.psnr, 6) << '\n'
        << "ssim = " << format_db(r.ssim, 6) << '\n'
        << "pixel_count = " << r.pixel_count << '\n';
    return oss.str();
}

/// JSON record; +inf PSNR is written as the string "inf".
inline nlohmann::json to_json(const MetricsReport& r) {
    nlohmann::json j;
    j["psnr"] = std::isinf(r.psnr) ? nlohmann::json("inf") : nlohmann::json(r.psnr);
    j["ssim"] = r.ssim;
    j["pixel_count"] = r.pixel_count;
    return j;
}

}  // namespace facedeblur
