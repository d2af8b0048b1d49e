// Copyright 2026 The facedeblur Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstddef>
#include <iomanip>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <vector>

#include "facedeblur/contract.hpp"

namespace facedeblur {

/// Point-spread function: odd-sided grid of non-negative weights.
class BlurKernel {
public:
    BlurKernel() = default;

    BlurKernel(std::size_t height, std::size_t width, std::vector<double> weights)
        : height_(height), width_(width), weights_(std::move(weights)) {
        require(height % 2 == 1 && width % 2 == 1, "kernel sides must be odd, got ", height, "x",
                width);
        require(weights_.size() == height * width, "kernel weight count ", weights_.size(),
                " does not match ", height, "x", width);
        for (double w : weights_) require(w >= 0.0 && std::isfinite(w), "kernel weight ", w, " is negative");
    }

    static BlurKernel identity() { return BlurKernel(1, 1, {1.0}); }

    std::size_t height() const { return height_; }
    std::size_t width() const { return width_; }
    double at(std::size_t y, std::size_t x) const { return weights_[y * width_ + x]; }
    const std::vector<double>& weights() const { return weights_; }

    double sum() const { return std::accumulate(weights_.begin(), weights_.end(), 0.0); }

    BlurKernel scaled(double factor) const {
        std::vector<double> w = weights_;
        for (double& v : w) v *= factor;
        return BlurKernel(height_, width_, std::move(w));
    }

    friend bool operator==(const BlurKernel&, const BlurKernel&) = default;

private:
    std::size_t height_ = 0;
    std::size_t width_ = 0;
    std::vector<double> weights_;
};

namespace detail {

inline BlurKernel normalized(std::size_t h, std::size_t w, std::vector<double> weights) {
    const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
    for (double& v : weights) v /= total;
    return BlurKernel(h, w, std::move(weights));
}

}  // namespace detail

/// Isotropic Gaussian sampled at integer offsets from the center, unit sum.
inline BlurKernel make_gaussian_kernel(double sigma, std::size_t size) {
    require(sigma > 0.0 && std::isfinite(sigma), "gaussian sigma must be positive, got ", sigma);
    require(size % 2 == 1, "gaussian kernel size must be odd, got ", size);
    const auto half = static_cast<long>(size / 2);
    std::vector<double> w(size * size);
    for (long y = -half; y <= half; ++y)
        for (long x = -half; x <= half; ++x)
            w[static_cast<std::size_t>((y + half) * static_cast<long>(size) + (x + half))] =
                std::exp(-static_cast<double>(x * x + y * y) / (2.0 * sigma * sigma));
    return detail::normalized(size, size, std::move(w));
}

/// Side that covers +-3 sigma, always odd.
inline std::size_t gaussian_support(double sigma) {
    return 2 * static_cast<std::size_t>(std::ceil(3.0 * sigma)) + 1;
}

/// Straight-line motion PSF through the kernel center. The segment is sampled at
/// `length` unit-spaced points and each point is splatted bilinearly onto the grid.
/// Angle is measured counter-clockwise from the +x axis (image y grows downward).
inline BlurKernel make_motion_kernel(long length, double angle) {
    require(length >= 1, "motion kernel length must be >= 1, got ", length);
    require(std::isfinite(angle), "motion kernel angle must be finite");
    const auto side = static_cast<std::size_t>(length % 2 == 1 ? length : length + 1);
    const double center = static_cast<double>(side / 2);
    std::vector<double> w(side * side, 0.0);
    const double dx = std::cos(angle);
    const double dy = -std::sin(angle);
    const double share = 1.0 / static_cast<double>(length);
    for (long k = 0; k < length; ++k) {
        const double t = static_cast<double>(k) - static_cast<double>(length - 1) / 2.0;
        const double px = center + t * dx;
        const double py = center + t * dy;
        const double fx = std::floor(px);
        const double fy = std::floor(py);
        const double ax = px - fx;
        const double ay = py - fy;
        for (int oy = 0; oy <= 1; ++oy) {
            for (int ox = 0; ox <= 1; ++ox) {
                const double weight = (ox ? ax : 1.0 - ax) * (oy ? ay : 1.0 - ay);
                if (weight <= 0.0) continue;
                const long gx = static_cast<long>(fx) + ox;
                const long gy = static_cast<long>(fy) + oy;
                // Points lie within +-(length-1)/2 of the center, so splats stay on the grid.
                if (gx < 0 || gy < 0 || gx >= static_cast<long>(side) || gy >= static_cast<long>(side))
                    continue;
                w[static_cast<std::size_t>(gy) * side + static_cast<std::size_t>(gx)] += weight * share;
            }
        }
    }
    // Snap rounding noise (e.g. cos(pi/2)) so exact-zero cells stay zero.
    for (double& v : w)
        if (v < 1e-15) v = 0.0;
    return detail::normalized(side, side, std::move(w));
}

/// Text format: "h w" on the first line, then h rows of w weights.
inline void write_kernel(std::ostream& os, const BlurKernel& k) {
    os << k.height() << ' ' << k.width() << '\n';
    os << std::setprecision(std::numeric_limits<double>::max_digits10);
    for (std::size_t y = 0; y < k.height(); ++y) {
        for (std::size_t x = 0; x < k.width(); ++x) os << (x ? " " : "") << k.at(y, x);
        os << '\n';
    }
}

inline BlurKernel read_kernel(std::istream& is) {
    std::size_t h = 0;
    std::size_t w = 0;
    require(static_cast<bool>(is >> h >> w), "kernel file: missing 'h w' header");
    require(h > 0 && w > 0 && h * w <= 1u << 20, "kernel file: bad dimensions ", h, "x", w);
    std::vector<double> weights(h * w);
    for (double& v : weights) require(static_cast<bool>(is >> v), "kernel file: truncated weights");
    return BlurKernel(h, w, std::move(weights));
}

}  // namespace facedeblur
