// Copyright 2026 The facedeblur Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>

#include "facedeblur/contract.hpp"
#include "facedeblur/image.hpp"

namespace facedeblur {

/// Bilinear sample at continuous coordinates; pixel centers sit on integers, edges clamp.
inline double sample_bilinear(const Image& img, double y, double x, std::size_t c) {
    const double cy = std::clamp(y, 0.0, static_cast<double>(img.height() - 1));
    const double cx = std::clamp(x, 0.0, static_cast<double>(img.width() - 1));
    const auto y0 = static_cast<std::size_t>(std::floor(cy));
    const auto x0 = static_cast<std::size_t>(std::floor(cx));
    const std::size_t y1 = std::min(y0 + 1, img.height() - 1);
    const std::size_t x1 = std::min(x0 + 1, img.width() - 1);
    const double fy = cy - static_cast<double>(y0);
    const double fx = cx - static_cast<double>(x0);
    const double top = (1.0 - fx) * img.at(y0, x0, c) + fx * img.at(y0, x1, c);
    const double bottom = (1.0 - fx) * img.at(y1, x0, c) + fx * img.at(y1, x1, c);
    return (1.0 - fy) * top + fy * bottom;
}

/// Resize with half-pixel centers: src = (dst + 0.5) * in / out - 0.5.
inline Image resize_bilinear(const Image& img, std::size_t out_h, std::size_t out_w) {
    require(!img.empty(), "resize_bilinear: empty input");
    require(out_h > 0 && out_w > 0, "resize_bilinear: target must be positive, got ", out_h, "x", out_w);
    Image out(out_h, out_w, img.channels());
    const double sy = static_cast<double>(img.height()) / static_cast<double>(out_h);
    const double sx = static_cast<double>(img.width()) / static_cast<double>(out_w);
    for (std::size_t y = 0; y < out_h; ++y) {
        const double src_y = (static_cast<double>(y) + 0.5) * sy - 0.5;
        for (std::size_t x = 0; x < out_w; ++x) {
            const double src_x = (static_cast<double>(x) + 0.5) * sx - 0.5;
            for (std::size_t c = 0; c < img.channels(); ++c) out.at(y, x, c) = sample_bilinear(img, src_y, src_x, c);
        }
    }
    return out;
}

}  // namespace facedeblur
