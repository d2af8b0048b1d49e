// Copyright 2026 The facedeblur Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <vector>

#include "facedeblur/image.hpp"
#include "facedeblur/mining/geometry.hpp"
#include "facedeblur/random.hpp"
#include "facedeblur/synthetic.hpp"

namespace facedeblur::mining {

// Cartoon faces drawn from a 68-point shape, for tests, demos and classifier bootstrapping.

struct FaceSample {
    Image image;
    SparseShape shape;
};

struct FaceClip {
    std::vector<Image> frames;
    std::vector<SparseShape> shapes;
};

namespace detail {

using Rgb = std::array<double, 3>;

inline double segment_distance(double px, double py, const Point& a, const Point& b) {
    const double vx = b.x - a.x, vy = b.y - a.y;
    const double len2 = vx * vx + vy * vy;
    const double t = len2 > 0.0 ? std::clamp(((px - a.x) * vx + (py - a.y) * vy) / len2, 0.0, 1.0) : 0.0;
    return std::hypot(px - (a.x + t * vx), py - (a.y + t * vy));
}

inline bool inside_polygon(double px, double py, std::span<const Point> poly) {
    bool inside = false;
    for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
        if ((poly[i].y > py) != (poly[j].y > py) &&
            px < (poly[j].x - poly[i].x) * (py - poly[i].y) / (poly[j].y - poly[i].y) + poly[i].x)
            inside = !inside;
    }
    return inside;
}

inline void blend(Image& img, std::size_t y, std::size_t x, const Rgb& color, double alpha) {
    if (alpha <= 0.0) return;
    if (img.channels() == 1) {
        const double g = 0.299 * color[0] + 0.587 * color[1] + 0.114 * color[2];
        img.at(y, x) = (1.0 - alpha) * img.at(y, x) + alpha * g;
        return;
    }
    for (std::size_t c = 0; c < 3; ++c) img.at(y, x, c) = (1.0 - alpha) * img.at(y, x, c) + alpha * color[c];
}

/// Polyline stroke (open) or filled polygon (closed), antialiased over one pixel.
inline void draw(Image& img, std::span<const Point> pts, const Rgb& color, double half_width, bool filled) {
    double x_lo = pts[0].x, x_hi = pts[0].x, y_lo = pts[0].y, y_hi = pts[0].y;
    for (const auto& p : pts) {
        x_lo = std::min(x_lo, p.x);
        x_hi = std::max(x_hi, p.x);
        y_lo = std::min(y_lo, p.y);
        y_hi = std::max(y_hi, p.y);
    }
    const double pad = half_width + 2.0;
    const long ys = std::max(0L, static_cast<long>(std::floor(y_lo - pad)));
    const long ye = std::min(static_cast<long>(img.height()) - 1, static_cast<long>(std::ceil(y_hi + pad)));
    const long xs = std::max(0L, static_cast<long>(std::floor(x_lo - pad)));
    const long xe = std::min(static_cast<long>(img.width()) - 1, static_cast<long>(std::ceil(x_hi + pad)));
    const std::size_t segs = filled ? pts.size() : pts.size() - 1;
    for (long y = ys; y <= ye; ++y)
        for (long x = xs; x <= xe; ++x) {
            const double px = static_cast<double>(x), py = static_cast<double>(y);
            double d = std::numeric_limits<double>::infinity();
            for (std::size_t s = 0; s < segs; ++s) d = std::min(d, segment_distance(px, py, pts[s], pts[(s + 1) % pts.size()]));
            double alpha = std::clamp(half_width + 0.5 - d, 0.0, 1.0);
            if (filled && inside_polygon(px, py, pts)) alpha = 1.0;
            blend(img, static_cast<std::size_t>(y), static_cast<std::size_t>(x), color, alpha);
        }
}

}  // namespace detail

/// Draws a face whose landmarks are `shape` over a copy of `background`.
inline Image render_face(const Image& background, const SparseShape& shape) {
    require(shape.size() == kDefaultLandmarks, "render_face: needs a 68-point shape, got ", shape.size());
    Image img = background;
    const auto& p = shape.points;
    const BoundingBox b = shape_bounds(shape);
    const double side = 0.5 * (b.width() + b.height());

    // Head: jaw line closed over an arc through the forehead.
    std::vector<Point> head(p.begin(), p.begin() + 17);
    const double cx = 0.5 * (b.x_min + b.x_max);
    const double top = b.y_min - 0.15 * b.height();
    for (int k = 1; k < 8; ++k) {
        const double t = std::numbers::pi * k / 8.0;
        head.push_back({cx + 0.5 * b.width() * std::cos(t), p[0].y + (top - p[0].y) * std::sin(t)});
    }
    detail::draw(img, head, {0.86, 0.70, 0.58}, 0.0, true);

    const double stroke = std::max(0.6, 0.025 * side);
    auto span_of = [&](std::size_t first, std::size_t count) { return std::span<const Point>(p.data() + first, count); };
    detail::draw(img, span_of(17, 5), {0.25, 0.18, 0.12}, stroke, false);
    detail::draw(img, span_of(22, 5), {0.25, 0.18, 0.12}, stroke, false);
    detail::draw(img, span_of(27, 4), {0.62, 0.47, 0.38}, 0.6 * stroke, false);
    detail::draw(img, span_of(31, 5), {0.45, 0.32, 0.26}, 0.6 * stroke, false);
    detail::draw(img, span_of(36, 6), {0.95, 0.95, 0.95}, 0.0, true);
    detail::draw(img, span_of(42, 6), {0.95, 0.95, 0.95}, 0.0, true);
    for (std::size_t eye : {36u, 42u}) {
        Point c{0.0, 0.0};
        for (std::size_t k = 0; k < 6; ++k) {
            c.x += p[eye + k].x / 6.0;
            c.y += p[eye + k].y / 6.0;
        }
        const double r = 0.3 * std::abs(p[eye + 3].x - p[eye].x);
        std::vector<Point> iris;
        for (int k = 0; k < 10; ++k)
            iris.push_back({c.x + r * std::cos(0.2 * std::numbers::pi * k), c.y + r * std::sin(0.2 * std::numbers::pi * k)});
        detail::draw(img, iris, {0.15, 0.1, 0.08}, 0.0, true);
    }
    detail::draw(img, span_of(48, 12), {0.72, 0.32, 0.32}, 0.0, true);
    detail::draw(img, span_of(60, 8), {0.35, 0.1, 0.1}, 0.0, true);
    return img;
}

/// Mean shape in a random box of side in [min_side, max_side] with small per-point jitter.
inline SparseShape random_face_shape(Rng& rng, std::size_t h, std::size_t w, double min_side, double max_side) {
    require(max_side + 2.0 <= static_cast<double>(std::min(h, w)) && min_side > 4.0 && min_side <= max_side,
            "random_face_shape: side range [", min_side, ", ", max_side, "] does not fit ", h, "x", w);
    const double side = uniform(rng, min_side, max_side);
    const double aspect = uniform(rng, 0.9, 1.1);
    const double bw = side * std::sqrt(aspect), bh = side / std::sqrt(aspect);
    const double bw_fit = std::min(bw, static_cast<double>(w) - 2.0);
    const double bh_fit = std::min(bh, static_cast<double>(h) - 2.0);
    const double x0 = uniform(rng, 1.0, static_cast<double>(w) - 1.0 - bw_fit);
    const double y0 = uniform(rng, 1.0, static_cast<double>(h) - 1.0 - bh_fit);
    SparseShape s = place_shape(unit_mean_shape(), {x0, y0, x0 + bw_fit, y0 + bh_fit});
    for (auto& pt : s.points) {
        pt.x += gaussian(rng, 0.0, 0.01 * side);
        pt.y += gaussian(rng, 0.0, 0.01 * side);
    }
    return s;
}

inline FaceSample make_face_sample(Rng& rng, std::size_t h, std::size_t w, double min_side, double max_side,
                                   std::size_t channels = 3) {
    Image background = make_texture(rng, h, w, channels);
    for (double& v : background.data()) v = 0.2 + 0.4 * v;
    SparseShape shape = random_face_shape(rng, h, w, min_side, max_side);
    return {render_face(background, shape), std::move(shape)};
}

/// One face translated by (vx, vy) pixels per frame over a static background.
inline FaceClip make_face_clip(Rng& rng, std::size_t frames, std::size_t h, std::size_t w, const SparseShape& start,
                               double vx, double vy, std::size_t channels = 3) {
    Image background = make_texture(rng, h, w, channels);
    for (double& v : background.data()) v = 0.2 + 0.4 * v;
    FaceClip clip;
    for (std::size_t k = 0; k < frames; ++k) {
        SparseShape s = start.translated(vx * static_cast<double>(k), vy * static_cast<double>(k));
        clip.frames.push_back(render_face(background, s));
        clip.shapes.push_back(std::move(s));
    }
    return clip;
}

}  // namespace facedeblur::mining
