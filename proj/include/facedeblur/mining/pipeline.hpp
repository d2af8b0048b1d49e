// Copyright 2026 The facedeblur Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "facedeblur/contract.hpp"
#include "facedeblur/image.hpp"
#include "facedeblur/mining/components.hpp"

namespace facedeblur::mining {

enum class MotionRule {
    RequireMovement,  ///< Discard clips whose mean motion is below the threshold.
    DiscardAbove,     ///< Discard clips whose mean motion is above the threshold.
};

/// Mean flow magnitude for each consecutive pair.
inline std::vector<double> pairwise_motion(std::span<const Image> frames, OpticalFlow& flow) {
    require(frames.size() >= 2, "motion gate needs at least 2 frames, got ", frames.size());
    std::vector<double> out;
    for (std::size_t i = 1; i < frames.size(); ++i) out.push_back(flow.compute(frames[i - 1], frames[i]).mean_magnitude());
    return out;
}

inline bool motion_passes(std::span<const double> pair_motion, double min_avg_motion, MotionRule rule) {
    double mean = 0.0;
    for (double m : pair_motion) mean += m;
    mean /= static_cast<double>(pair_motion.size());
    return rule == MotionRule::RequireMovement ? mean >= min_avg_motion : mean <= min_avg_motion;
}

/// True when the clip moves enough (or, with DiscardAbove, little enough).
inline bool motion_gate(std::span<const Image> frames, OpticalFlow& flow, double min_avg_motion,
                        MotionRule rule = MotionRule::RequireMovement) {
    require(min_avg_motion > 0.0, "motion gate: threshold must be positive, got ", min_avg_motion);
    const auto motion = pairwise_motion(frames, flow);
    return motion_passes(motion, min_avg_motion, rule);
}

struct MiningConfig {
    double overlap_threshold = 0.5;
    double min_frames_fraction = 0.5;
    double min_avg_motion = 1.0;
    bool motion_gate = true;
    MotionRule motion_rule = MotionRule::RequireMovement;

    void validate() const {
        require(overlap_threshold >= 0.0 && overlap_threshold <= 1.0, "mining: overlap threshold must be in [0,1], got ",
                overlap_threshold);
        require(min_frames_fraction >= 0.0 && min_frames_fraction <= 1.0,
                "mining: min frames fraction must be in [0,1], got ", min_frames_fraction);
        require(min_avg_motion > 0.0, "mining: min average motion must be positive, got ", min_avg_motion);
    }
};

struct FrameRecord {
    std::size_t frame = 0;
    bool detected = false;
    std::optional<BoundingBox> tracker_box;
    std::optional<BoundingBox> detector_box;
    std::optional<double> overlap;
    bool overlap_counted = false;
    std::optional<bool> fitting_accepted;
    std::optional<double> flow_magnitude;  ///< Motion from the previous accepted frame.
};

struct MiningResult {
    std::vector<std::size_t> accepted_frames;
    std::vector<SparseShape> landmarks;
    std::vector<FrameRecord> ledger;
    std::size_t overlap_count = 0;
    std::optional<double> mean_motion;
    bool video_accepted = false;
    std::string outcome;
};

namespace detail {

inline std::vector<Detection> ranked(std::vector<Detection> faces) {
    std::stable_sort(faces.begin(), faces.end(), [](const Detection& a, const Detection& b) { return a.score > b.score; });
    return faces;
}

inline void reject(MiningResult& r, std::string why) {
    r.accepted_frames.clear();
    r.landmarks.clear();
    r.video_accepted = false;
    r.outcome = std::move(why);
}

}  // namespace detail

/// The mining state machine: detect on the first frame, track through every frame while
/// auditing tracker/detector overlap, keep frames whose fitting the verifier accepts, then
/// apply the overlap-count rule and the motion gate over the accepted frames.
inline MiningResult run_pipeline(std::span<const Image> frames, ComponentSet& components,
                                 const MiningConfig& cfg = {}) {
    require(!frames.empty(), "run_pipeline: empty frame sequence");
    require(components.complete(), "run_pipeline: component set is incomplete");
    cfg.validate();
    MiningResult result;
    const std::size_t m = frames.size();

    auto faces = detail::ranked(components.detector->detect(frames[0]));
    if (faces.empty()) {
        result.ledger.emplace_back();
        result.outcome = "no initial detection";
        return result;
    }
    components.tracker->reset();
    BoundingBox bb = faces[0].box;

    for (std::size_t idx = 0; idx < m; ++idx) {
        FrameRecord rec;
        rec.frame = idx;
        faces = detail::ranked(components.detector->detect(frames[idx]));
        bb = components.tracker->track(frames[idx], bb);
        rec.tracker_box = bb;
        rec.detected = !faces.empty();
        if (rec.detected) {
            rec.detector_box = faces[0].box;
            rec.overlap = iou(faces[0].box, bb);
            if (*rec.overlap > cfg.overlap_threshold) {
                ++result.overlap_count;
                rec.overlap_counted = true;
            }
        }
        SparseShape shape = components.localizer->localize(frames[idx], bb);
        rec.fitting_accepted = components.verifier->accept(frames[idx], shape);
        if (*rec.fitting_accepted) {
            result.accepted_frames.push_back(idx);
            result.landmarks.push_back(std::move(shape));
        }
        result.ledger.push_back(rec);
    }

    if (static_cast<double>(result.overlap_count) < static_cast<double>(m) * cfg.min_frames_fraction) {
        detail::reject(result, "insufficient tracker/detector overlap");
        return result;
    }
    if (cfg.motion_gate) {
        if (result.accepted_frames.size() < 2) {
            detail::reject(result, "fewer than 2 accepted frames for the motion gate");
            return result;
        }
        std::vector<Image> kept;
        for (std::size_t idx : result.accepted_frames) kept.push_back(frames[idx]);
        const auto motion = pairwise_motion(kept, *components.flow);
        for (std::size_t k = 0; k < motion.size(); ++k)
            result.ledger[result.accepted_frames[k + 1]].flow_magnitude = motion[k];
        double mean = 0.0;
        for (double v : motion) mean += v;
        result.mean_motion = mean / static_cast<double>(motion.size());
        if (!motion_passes(motion, cfg.min_avg_motion, cfg.motion_rule)) {
            detail::reject(result, cfg.motion_rule == MotionRule::RequireMovement ? "static clip" : "excessive motion");
            return result;
        }
    }
    result.video_accepted = true;
    result.outcome = "accepted";
    return result;
}

// Output: manifest lines "frame_index x1 y1 ... xn yn", and a JSON-lines ledger.

inline void write_manifest(std::ostream& os, const MiningResult& r) {
    const auto old_precision = os.precision(10);
    for (std::size_t k = 0; k < r.accepted_frames.size(); ++k) {
        os << r.accepted_frames[k];
        for (const auto& p : r.landmarks[k].points) os << " " << p.x << " " << p.y;
        os << "\n";
    }
    os.precision(old_precision);
}

inline nlohmann::json to_json(const FrameRecord& rec) {
    auto box = [](const std::optional<BoundingBox>& b) -> nlohmann::json {
        if (!b) return nullptr;
        return nlohmann::json::array({b->x_min, b->y_min, b->x_max, b->y_max});
    };
    auto opt = [](const auto& v) -> nlohmann::json {
        if (!v) return nullptr;
        return *v;
    };
    return {{"frame", rec.frame},
            {"detected", rec.detected},
            {"tracker_box", box(rec.tracker_box)},
            {"detector_box", box(rec.detector_box)},
            {"overlap", opt(rec.overlap)},
            {"overlap_counted", rec.overlap_counted},
            {"fitting_accepted", opt(rec.fitting_accepted)},
            {"flow_magnitude", opt(rec.flow_magnitude)}};
}

inline void write_ledger(std::ostream& os, const MiningResult& r) {
    for (const auto& rec : r.ledger) os << to_json(rec).dump() << "\n";
}

inline std::string summary_line(const MiningResult& r) {
    std::string s = "video_accepted=" + std::string(r.video_accepted ? "true" : "false") +
                    " frames_processed=" + std::to_string(r.ledger.size()) +
                    " frames_accepted=" + std::to_string(r.accepted_frames.size()) +
                    " overlap_count=" + std::to_string(r.overlap_count) + " outcome=\"" + r.outcome + "\"";
    return s;
}

}  // namespace facedeblur::mining
