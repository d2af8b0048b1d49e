// Copyright 2026 The facedeblur Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "facedeblur/contract.hpp"
#include "facedeblur/image.hpp"
#include "facedeblur/mining/components.hpp"
#include "facedeblur/mining/preprocess.hpp"
#include "facedeblur/resample.hpp"

namespace facedeblur::mining {

namespace detail {

struct Offset {
    long dx;
    long dy;
};

/// All offsets within a square radius, nearest first; ties keep the smaller displacement.
inline std::vector<Offset> offsets_by_distance(long radius) {
    std::vector<Offset> out;
    for (long dy = -radius; dy <= radius; ++dy)
        for (long dx = -radius; dx <= radius; ++dx) out.push_back({dx, dy});
    std::stable_sort(out.begin(), out.end(),
                     [](const Offset& a, const Offset& b) { return a.dx * a.dx + a.dy * a.dy < b.dx * b.dx + b.dy * b.dy; });
    return out;
}

/// Zero-mean NCC of `templ` against the window of `img` at (y0, x0). Flat windows score 0.
inline double ncc_at(const Image& img, std::size_t y0, std::size_t x0, const Image& templ) {
    const std::size_t th = templ.height(), tw = templ.width();
    const double n = static_cast<double>(th * tw);
    double sa = 0.0, sb = 0.0;
    for (std::size_t y = 0; y < th; ++y)
        for (std::size_t x = 0; x < tw; ++x) {
            sa += img.at(y0 + y, x0 + x);
            sb += templ.at(y, x);
        }
    const double ma = sa / n, mb = sb / n;
    double cov = 0.0, va = 0.0, vb = 0.0;
    for (std::size_t y = 0; y < th; ++y)
        for (std::size_t x = 0; x < tw; ++x) {
            const double a = img.at(y0 + y, x0 + x) - ma;
            const double b = templ.at(y, x) - mb;
            cov += a * b;
            va += a * a;
            vb += b * b;
        }
    const double den = std::sqrt(va * vb);
    return den > 1e-12 ? cov / den : 0.0;
}

inline double sad_at(const Image& a, const Image& b, std::size_t ay, std::size_t ax, std::size_t by, std::size_t bx,
                     std::size_t block) {
    double acc = 0.0;
    for (std::size_t y = 0; y < block; ++y)
        for (std::size_t x = 0; x < block; ++x) acc += std::abs(a.at(ay + y, ax + x) - b.at(by + y, bx + x));
    return acc;
}

}  // namespace detail

/// Normalized cross-correlation tracker with a fixed first-frame template and integer search.
class NccTracker final : public Tracker {
public:
    explicit NccTracker(long search_radius = 8) : radius_(search_radius) {
        require(search_radius >= 0, "NccTracker: search radius must be non-negative");
    }

    void reset() override { templ_.reset(); }

    BoundingBox track(const Image& frame, const BoundingBox& previous) override {
        require(previous.valid(), "NccTracker: degenerate box ", previous);
        const Image luma = to_luma(frame);
        const long x0 = std::lround(previous.x_min);
        const long y0 = std::lround(previous.y_min);
        if (!templ_) {
            const long w = std::max(1L, std::lround(previous.width()));
            const long h = std::max(1L, std::lround(previous.height()));
            require(x0 >= 0 && y0 >= 0 && x0 + w <= static_cast<long>(luma.width()) &&
                        y0 + h <= static_cast<long>(luma.height()),
                    "NccTracker: initial box ", previous, " leaves the frame");
            templ_ = crop(luma, static_cast<std::size_t>(y0), static_cast<std::size_t>(x0),
                          static_cast<std::size_t>(h), static_cast<std::size_t>(w));
            return previous;
        }
        const long th = static_cast<long>(templ_->height());
        const long tw = static_cast<long>(templ_->width());
        double best = -std::numeric_limits<double>::infinity();
        detail::Offset best_offset{0, 0};
        for (const auto& o : detail::offsets_by_distance(radius_)) {
            const long cx = x0 + o.dx, cy = y0 + o.dy;
            if (cx < 0 || cy < 0 || cx + tw > static_cast<long>(luma.width()) ||
                cy + th > static_cast<long>(luma.height()))
                continue;
            const double score =
                detail::ncc_at(luma, static_cast<std::size_t>(cy), static_cast<std::size_t>(cx), *templ_);
            if (score > best) {
                best = score;
                best_offset = o;
            }
        }
        return previous.translated(static_cast<double>(best_offset.dx), static_cast<double>(best_offset.dy));
    }

private:
    long radius_;
    std::optional<Image> templ_;
};

/// Sliding-window detector scoring windows by NCC against an averaged face template.
class TemplateDetector final : public FaceDetector {
public:
    struct Options {
        std::vector<std::size_t> window_sides{32, 40, 48};
        std::size_t stride = 2;
        double threshold = 0.5;
        double nms_overlap = 0.3;
        std::size_t max_detections = 5;
    };

    TemplateDetector(Image face_template, Options opt) : templ_(to_luma(face_template)), opt_(std::move(opt)) {
        require(opt_.stride > 0, "TemplateDetector: stride must be positive");
        require(!opt_.window_sides.empty(), "TemplateDetector: no window sides");
    }

    /// Average of the landmark crops, each resized to side x side.
    static Image average_template(std::span<const Image> frames, std::span<const SparseShape> shapes,
                                  std::size_t side) {
        require(!frames.empty() && frames.size() == shapes.size(), "average_template: need matching frames and shapes");
        Image acc(side, side, 1);
        for (std::size_t i = 0; i < frames.size(); ++i) {
            const Image c = preprocess_face(to_luma(frames[i]), shapes[i], side, 0.0);
            for (std::size_t k = 0; k < acc.size(); ++k) acc.raw()[k] += c.data()[k];
        }
        for (double& v : acc.data()) v /= static_cast<double>(frames.size());
        return acc;
    }

    std::vector<Detection> detect(const Image& frame) override {
        const Image luma = to_luma(frame);
        std::vector<Detection> found;
        for (std::size_t side : opt_.window_sides) {
            if (side > luma.height() || side > luma.width()) continue;
            for (std::size_t y = 0; y + side <= luma.height(); y += opt_.stride)
                for (std::size_t x = 0; x + side <= luma.width(); x += opt_.stride) {
                    const Image window =
                        resize_bilinear(crop(luma, y, x, side, side), templ_.height(), templ_.width());
                    const double score = detail::ncc_at(window, 0, 0, templ_);
                    if (score < opt_.threshold) continue;
                    found.push_back({{static_cast<double>(x), static_cast<double>(y), static_cast<double>(x + side),
                                      static_cast<double>(y + side)},
                                     score});
                }
        }
        std::stable_sort(found.begin(), found.end(),
                         [](const Detection& a, const Detection& b) { return a.score > b.score; });
        std::vector<Detection> kept;
        for (const auto& d : found) {
            if (kept.size() == opt_.max_detections) break;
            const bool suppressed = std::any_of(kept.begin(), kept.end(), [&](const Detection& k) {
                return iou(k.box, d.box) > opt_.nms_overlap;
            });
            if (!suppressed) kept.push_back(d);
        }
        return kept;
    }

private:
    Image templ_;
    Options opt_;
};

/// Places a fixed mean shape so its bounds fill the box.
class MeanShapeLocalizer final : public LandmarkLocalizer {
public:
    explicit MeanShapeLocalizer(SparseShape unit_shape = unit_mean_shape()) : unit_(std::move(unit_shape)) {}

    SparseShape localize(const Image&, const BoundingBox& box) override { return place_shape(unit_, box); }

private:
    SparseShape unit_;
};

/// Exhaustive SAD block matching on luma, integer displacements.
class BlockMatchingFlow final : public OpticalFlow {
public:
    explicit BlockMatchingFlow(std::size_t block = 8, long radius = 7) : block_(block), radius_(radius) {
        require(block > 0 && radius >= 0, "BlockMatchingFlow: invalid block ", block, " / radius ", radius);
    }

    /// Blocks whose whole search window fits inside the frame are used; if none fit, all
    /// blocks are used with out-of-frame candidates skipped.
    FlowField compute(const Image& a, const Image& b) override {
        require(a.height() == b.height() && a.width() == b.width(), "BlockMatchingFlow: frame sizes differ");
        require(a.height() >= block_ && a.width() >= block_, "BlockMatchingFlow: frame smaller than block ", block_);
        const Image la = to_luma(a), lb = to_luma(b);
        const long h = static_cast<long>(la.height()), w = static_cast<long>(la.width());
        const long bs = static_cast<long>(block_);

        std::vector<detail::Offset> blocks;
        std::vector<detail::Offset> interior;
        for (long y = 0; y + bs <= h; y += bs)
            for (long x = 0; x + bs <= w; x += bs) {
                blocks.push_back({x, y});
                if (x >= radius_ && y >= radius_ && x + bs + radius_ <= w && y + bs + radius_ <= h)
                    interior.push_back({x, y});
            }
        if (!interior.empty()) blocks = std::move(interior);

        const auto candidates = detail::offsets_by_distance(radius_);
        FlowField field;
        for (const auto& blk : blocks) {
            double best = std::numeric_limits<double>::infinity();
            detail::Offset best_offset{0, 0};
            for (const auto& o : candidates) {
                const long bx = blk.dx + o.dx, by = blk.dy + o.dy;
                if (bx < 0 || by < 0 || bx + bs > w || by + bs > h) continue;
                const double sad = detail::sad_at(la, lb, static_cast<std::size_t>(blk.dy),
                                                  static_cast<std::size_t>(blk.dx), static_cast<std::size_t>(by),
                                                  static_cast<std::size_t>(bx), block_);
                if (sad < best) {
                    best = sad;
                    best_offset = o;
                }
            }
            field.vectors.push_back({static_cast<double>(blk.dx), static_cast<double>(blk.dy),
                                     static_cast<double>(best_offset.dx), static_cast<double>(best_offset.dy)});
        }
        return field;
    }

private:
    std::size_t block_;
    long radius_;
};

}  // namespace facedeblur::mining
