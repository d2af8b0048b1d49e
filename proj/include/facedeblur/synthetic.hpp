// Copyright 2026 The facedeblur Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>

#include "facedeblur/image.hpp"
#include "facedeblur/random.hpp"

namespace facedeblur {

/// Piecewise-smooth test card: a shaded background with random rectangles, discs
/// and stripes. Sharp edges at several orientations make blur clearly measurable.
inline Image make_pattern(Rng& rng, std::size_t height, std::size_t width, std::size_t channels = 3) {
    Image img(height, width, channels);
    const double h = static_cast<double>(height);
    const double w = static_cast<double>(width);
    double base[3];
    double gx[3];
    double gy[3];
    for (std::size_t c = 0; c < channels; ++c) {
        base[c] = uniform(rng, 0.2, 0.8);
        gx[c] = uniform(rng, -0.2, 0.2);
        gy[c] = uniform(rng, -0.2, 0.2);
    }
    for (std::size_t y = 0; y < height; ++y)
        for (std::size_t x = 0; x < width; ++x)
            for (std::size_t c = 0; c < channels; ++c)
                img.at(y, x, c) = base[c] + gx[c] * (static_cast<double>(x) / w - 0.5) +
                                  gy[c] * (static_cast<double>(y) / h - 0.5);

    const int shapes = 3 + static_cast<int>(rng() % 4);
    for (int s = 0; s < shapes; ++s) {
        double color[3];
        for (std::size_t c = 0; c < channels; ++c) color[c] = uniform(rng, 0.0, 1.0);
        const int kind = static_cast<int>(rng() % 3);
        const double cx = uniform(rng, 0, w);
        const double cy = uniform(rng, 0, h);
        const double r = uniform(rng, 0.1, 0.35) * std::min(h, w);
        const double angle = uniform(rng, 0, 3.14159265358979);
        const double period = uniform(rng, 3.0, 8.0);
        for (std::size_t y = 0; y < height; ++y)
            for (std::size_t x = 0; x < width; ++x) {
                const double dx = static_cast<double>(x) - cx;
                const double dy = static_cast<double>(y) - cy;
                bool inside = false;
                if (kind == 0) {
                    inside = std::abs(dx) < r && std::abs(dy) < 0.6 * r;
                } else if (kind == 1) {
                    inside = dx * dx + dy * dy < r * r;
                } else {
                    const double u = dx * std::cos(angle) + dy * std::sin(angle);
                    inside = dx * dx + dy * dy < 2.0 * r * r && std::fmod(std::abs(u), period) < period / 2;
                }
                if (inside)
                    for (std::size_t c = 0; c < channels; ++c) img.at(y, x, c) = color[c];
            }
    }
    return clamp_unit(std::move(img));
}

/// Smooth random texture in [0,1]: a sum of a few random sinusoids plus fine noise.
inline Image make_texture(Rng& rng, std::size_t height, std::size_t width, std::size_t channels = 1) {
    Image img(height, width, channels, 0.0);
    constexpr int waves = 6;
    double fx[waves], fy[waves], phase[waves], amp[waves];
    for (int i = 0; i < waves; ++i) {
        fx[i] = uniform(rng, -0.6, 0.6);
        fy[i] = uniform(rng, -0.6, 0.6);
        phase[i] = uniform(rng, 0, 6.283185307179586);
        amp[i] = uniform(rng, 0.03, 0.08);
    }
    for (std::size_t y = 0; y < height; ++y)
        for (std::size_t x = 0; x < width; ++x) {
            double v = 0.5;
            for (int i = 0; i < waves; ++i)
                v += amp[i] * std::sin(fx[i] * static_cast<double>(x) + fy[i] * static_cast<double>(y) + phase[i]);
            for (std::size_t c = 0; c < channels; ++c) img.at(y, x, c) = v + uniform(rng, -0.08, 0.08);
        }
    return clamp_unit(std::move(img));
}

}  // namespace facedeblur
