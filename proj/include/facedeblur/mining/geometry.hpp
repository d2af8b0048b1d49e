// Copyright 2026 The facedeblur Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "facedeblur/contract.hpp"

namespace facedeblur::mining {

struct BoundingBox {
    double x_min = 0.0;
    double y_min = 0.0;
    double x_max = 1.0;
    double y_max = 1.0;

    double width() const { return x_max - x_min; }
    double height() const { return y_max - y_min; }
    double area() const { return width() * height(); }
    bool valid() const {
        return std::isfinite(x_min) && std::isfinite(y_min) && std::isfinite(x_max) && std::isfinite(y_max) &&
               x_min < x_max && y_min < y_max;
    }
    BoundingBox translated(double dx, double dy) const { return {x_min + dx, y_min + dy, x_max + dx, y_max + dy}; }

    friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

inline std::ostream& operator<<(std::ostream& os, const BoundingBox& b) {
    return os << "(" << b.x_min << ", " << b.y_min << ", " << b.x_max << ", " << b.y_max << ")";
}

/// Intersection over union; 0 for disjoint boxes.
inline double iou(const BoundingBox& a, const BoundingBox& b) {
    require(a.valid(), "iou: degenerate box ", a);
    require(b.valid(), "iou: degenerate box ", b);
    const double iw = std::min(a.x_max, b.x_max) - std::max(a.x_min, b.x_min);
    const double ih = std::min(a.y_max, b.y_max) - std::max(a.y_min, b.y_min);
    if (iw <= 0.0 || ih <= 0.0) return 0.0;
    const double inter = iw * ih;
    return inter / (a.area() + b.area() - inter);
}

struct Point {
    double x = 0.0;
    double y = 0.0;
    friend bool operator==(const Point&, const Point&) = default;
};

inline constexpr std::size_t kDefaultLandmarks = 68;

/// Ordered landmark points in image coordinates (x right, y down).
struct SparseShape {
    std::vector<Point> points;

    std::size_t size() const { return points.size(); }
    bool finite() const {
        return std::all_of(points.begin(), points.end(),
                           [](const Point& p) { return std::isfinite(p.x) && std::isfinite(p.y); });
    }
    SparseShape translated(double dx, double dy) const {
        SparseShape s = *this;
        for (auto& p : s.points) {
            p.x += dx;
            p.y += dy;
        }
        return s;
    }

    friend bool operator==(const SparseShape&, const SparseShape&) = default;
};

inline BoundingBox shape_bounds(const SparseShape& shape) {
    require(!shape.points.empty(), "shape_bounds: empty shape");
    require(shape.finite(), "shape_bounds: non-finite landmark");
    BoundingBox b{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
                  -std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
    for (const auto& p : shape.points) {
        b.x_min = std::min(b.x_min, p.x);
        b.y_min = std::min(b.y_min, p.y);
        b.x_max = std::max(b.x_max, p.x);
        b.y_max = std::max(b.y_max, p.y);
    }
    return b;
}

/// Mean side of the landmark bounding box.
inline double face_size(const SparseShape& shape) {
    const BoundingBox b = shape_bounds(shape);
    return 0.5 * (b.width() + b.height());
}

/// 68-point mean shape in the unit square, in the usual jaw / brows / nose / eyes / mouth order.
inline SparseShape unit_mean_shape() {
    constexpr double pi = std::numbers::pi;
    SparseShape s;
    auto& p = s.points;
    for (int k = 0; k <= 16; ++k) {
        const double phi = pi - pi * k / 16.0;
        p.push_back({0.5 + 0.5 * std::cos(phi), 0.35 + 0.65 * std::sin(phi)});
    }
    for (double x0 : {0.08, 0.58}) {
        for (int k = 0; k < 5; ++k) {
            const double t = k / 4.0;
            p.push_back({x0 + 0.34 * t, 0.22 - 0.06 * std::sin(pi * t)});
        }
    }
    for (int k = 0; k < 4; ++k) p.push_back({0.5, 0.36 + 0.08 * k});
    for (int k = 0; k < 5; ++k) p.push_back({0.4 + 0.05 * k, 0.66 + 0.02 * (1.0 - std::abs(k - 2) / 2.0)});
    for (double cx : {0.28, 0.72}) {
        const double cy = 0.38, rx = 0.1, ry = 0.04;
        p.insert(p.end(), {{cx - rx, cy},
                           {cx - rx / 2, cy - ry},
                           {cx + rx / 2, cy - ry},
                           {cx + rx, cy},
                           {cx + rx / 2, cy + ry},
                           {cx - rx / 2, cy + ry}});
    }
    for (int k = 0; k < 12; ++k) {
        const double th = pi - k * pi / 6.0;
        p.push_back({0.5 + 0.2 * std::cos(th), 0.82 - 0.07 * std::sin(th)});
    }
    for (int k = 0; k < 8; ++k) {
        const double th = pi - k * pi / 4.0;
        p.push_back({0.5 + 0.12 * std::cos(th), 0.82 - 0.025 * std::sin(th)});
    }
    // Stretch so the landmark bounds are exactly [0,1] x [0,1].
    const BoundingBox b = shape_bounds(s);
    for (auto& pt : p) {
        pt.x = (pt.x - b.x_min) / b.width();
        pt.y = (pt.y - b.y_min) / b.height();
    }
    return s;
}

/// Mean shape stretched to fill a box.
inline SparseShape place_shape(const SparseShape& unit, const BoundingBox& box) {
    require(box.valid(), "place_shape: degenerate box ", box);
    SparseShape s = unit;
    for (auto& pt : s.points) {
        pt.x = box.x_min + pt.x * box.width();
        pt.y = box.y_min + pt.y * box.height();
    }
    return s;
}

// .pts landmark files: "version: 1", "n_points: N", then N "x y" lines inside braces.

inline void write_pts(std::ostream& os, const SparseShape& shape) {
    os << "version: 1\nn_points: " << shape.size() << "\n{\n";
    os.precision(17);
    for (const auto& p : shape.points) os << p.x << " " << p.y << "\n";
    os << "}\n";
}

inline SparseShape read_pts(std::istream& is) {
    std::string line;
    std::size_t n = 0;
    bool open = false;
    SparseShape shape;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        if (line.starts_with("version")) continue;
        if (line.starts_with("n_points")) {
            const auto colon = line.find(':');
            require(colon != std::string::npos, "pts: malformed header '", line, "'");
            n = std::stoul(line.substr(colon + 1));
            continue;
        }
        if (line.starts_with("{")) {
            open = true;
            continue;
        }
        if (line.starts_with("}")) break;
        require(open, "pts: point before '{'");
        std::istringstream ls(line);
        Point p;
        require(static_cast<bool>(ls >> p.x >> p.y), "pts: malformed point '", line, "'");
        shape.points.push_back(p);
    }
    require(n == shape.size(), "pts: header declares ", n, " points, found ", shape.size());
    require(shape.finite(), "pts: non-finite point");
    return shape;
}

inline SparseShape load_pts(const std::string& path) {
    std::ifstream is(path);
    require(is.good(), "cannot open landmark file ", path);
    return read_pts(is);
}

inline void save_pts(const std::string& path, const SparseShape& shape) {
    std::ofstream os(path);
    require(os.good(), "cannot write landmark file ", path);
    write_pts(os, shape);
}

}  // namespace facedeblur::mining
