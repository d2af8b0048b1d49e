// Copyright 2026 The facedeblur Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>

#include "facedeblur/contract.hpp"
#include "facedeblur/image.hpp"
#include "facedeblur/mining/geometry.hpp"
#include "facedeblur/resample.hpp"

namespace facedeblur::mining {

struct CropRect {
    std::size_t y0 = 0;
    std::size_t x0 = 0;
    std::size_t height = 0;
    std::size_t width = 0;
};

/// Landmark bounds grown by `margin` x side on every side, clamped and snapped outward to pixels.
inline CropRect face_crop_rect(std::size_t frame_h, std::size_t frame_w, const SparseShape& shape, double margin) {
    require(margin >= 0.0 && std::isfinite(margin), "face crop: margin must be non-negative, got ", margin);
    const BoundingBox b = shape_bounds(shape);
    const double fw = static_cast<double>(frame_w);
    const double fh = static_cast<double>(frame_h);
    require(b.x_max > 0.0 && b.y_max > 0.0 && b.x_min < fw && b.y_min < fh, "face crop: shape ", b,
            " lies outside the ", frame_h, "x", frame_w, " frame");
    const double mx = margin * b.width();
    const double my = margin * b.height();
    const double x0 = std::clamp(std::floor(b.x_min - mx), 0.0, fw);
    const double x1 = std::clamp(std::ceil(b.x_max + mx), 0.0, fw);
    const double y0 = std::clamp(std::floor(b.y_min - my), 0.0, fh);
    const double y1 = std::clamp(std::ceil(b.y_max + my), 0.0, fh);
    require(x1 > x0 && y1 > y0, "face crop: empty crop for shape ", b);
    return {static_cast<std::size_t>(y0), static_cast<std::size_t>(x0), static_cast<std::size_t>(y1 - y0),
            static_cast<std::size_t>(x1 - x0)};
}

/// Crop around the landmarks and rescale to a square; no rotation or warping.
inline Image preprocess_face(const Image& frame, const SparseShape& shape, std::size_t target_size,
                             double margin) {
    require(target_size > 0, "preprocess_face: target size must be positive");
    const CropRect r = face_crop_rect(frame.height(), frame.width(), shape, margin);
    return resize_bilinear(crop(frame, r.y0, r.x0, r.height, r.width), target_size, target_size);
}

}  // namespace facedeblur::mining
