// Copyright 2026 The facedeblur Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <memory>
#include <vector>

#include "facedeblur/image.hpp"
#include "facedeblur/mining/geometry.hpp"

namespace facedeblur::mining {

struct Detection {
    BoundingBox box;
    double score = 0.0;
};

/// Sparse displacement field: one vector per analysed block, b(p + d) ~ a(p).
struct FlowField {
    struct Vector {
        double x = 0.0;  ///< Block origin.
        double y = 0.0;
        double dx = 0.0;
        double dy = 0.0;
    };
    std::vector<Vector> vectors;

    /// Mean displacement magnitude; blocks are equal-sized, so this is the per-pixel mean.
    double mean_magnitude() const {
        if (vectors.empty()) return 0.0;
        double acc = 0.0;
        for (const auto& v : vectors) acc += std::hypot(v.dx, v.dy);
        return acc / static_cast<double>(vectors.size());
    }
};

class FaceDetector {
public:
    virtual ~FaceDetector() = default;
    /// Any order; the pipeline ranks by score.
    virtual std::vector<Detection> detect(const Image& frame) = 0;
};

/// Model-free tracker. The first call after reset() initialises from the given box.
class Tracker {
public:
    virtual ~Tracker() = default;
    virtual void reset() = 0;
    virtual BoundingBox track(const Image& frame, const BoundingBox& previous) = 0;
};

class LandmarkLocalizer {
public:
    virtual ~LandmarkLocalizer() = default;
    virtual SparseShape localize(const Image& frame, const BoundingBox& box) = 0;
};

class OpticalFlow {
public:
    virtual ~OpticalFlow() = default;
    virtual FlowField compute(const Image& a, const Image& b) = 0;
};

/// Decides whether a landmark fitting on a frame is plausible.
class FittingVerifier {
public:
    virtual ~FittingVerifier() = default;
    virtual bool accept(const Image& frame, const SparseShape& shape) const = 0;
};

struct ComponentSet {
    std::shared_ptr<FaceDetector> detector;
    std::shared_ptr<Tracker> tracker;
    std::shared_ptr<LandmarkLocalizer> localizer;
    std::shared_ptr<OpticalFlow> flow;
    std::shared_ptr<const FittingVerifier> verifier;

    bool complete() const { return detector && tracker && localizer && flow && verifier; }
};

}  // namespace facedeblur::mining
