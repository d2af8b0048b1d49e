// Copyright 2026 The facedeblur Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <iomanip>
#include <map>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "facedeblur/contract.hpp"
#include "facedeblur/image.hpp"
#include "facedeblur/image_io.hpp"
#include "facedeblur/metrics.hpp"
#include "facedeblur/mining/components.hpp"
#include "facedeblur/network.hpp"
#include "facedeblur/tensor.hpp"
#include "facedeblur/trainer.hpp"

namespace facedeblur {

/// Runs the network in eval mode on one image. The output is clamped to [0, 1] and has the
/// input's channel count.
inline Image deblur_image(const ParamStore& params, const NetArchitecture& arch, const Image& blurry) {
    const Tensor4 out = forward(params, arch, images_to_tensor(std::span(&blurry, 1), arch.input_channels));
    Image img = clamp_unit(tensor_to_image(out, 0));
    return blurry.channels() == 1 && img.channels() == 3 ? to_luma(img) : img;
}

struct EvalRecord {
    std::string id;
    MetricsReport blurred;
    MetricsReport deblurred;
};

struct EvalFailure {
    std::string id;
    std::string message;
};

struct EvalSummary {
    std::vector<EvalRecord> records;
    std::vector<EvalFailure> failures;
    double mean_psnr_blurred = 0.0;
    double mean_ssim_blurred = 0.0;
    double mean_psnr_deblurred = 0.0;
    double mean_ssim_deblurred = 0.0;
};

/// Arithmetic means over the successful records.
inline void aggregate(EvalSummary& s) {
    double pb = 0.0, sb = 0.0, pd = 0.0, sd = 0.0;
    for (const auto& r : s.records) {
        pb += r.blurred.psnr;
        sb += r.blurred.ssim;
        pd += r.deblurred.psnr;
        sd += r.deblurred.ssim;
    }
    const double n = static_cast<double>(s.records.size());
    if (s.records.empty()) {
        s.mean_psnr_blurred = s.mean_ssim_blurred = s.mean_psnr_deblurred = s.mean_ssim_deblurred = 0.0;
        return;
    }
    s.mean_psnr_blurred = pb / n;
    s.mean_ssim_blurred = sb / n;
    s.mean_psnr_deblurred = pd / n;
    s.mean_ssim_deblurred = sd / n;
}

struct SelfEvalConfig {
    double sigma_min = 1.0;
    double sigma_max = 2.0;
    double noise_sigma = 0.0;
    std::uint64_t seed = 0;

    void validate() const {
        require(sigma_min > 0.0 && sigma_min <= sigma_max, "self evaluation: invalid sigma range [", sigma_min, ", ",
                sigma_max, "]");
        require(noise_sigma >= 0.0, "self evaluation: noise sigma must be non-negative");
    }
};

/// Gaussian-blurs every sharp image with a per-item sigma, deblurs it and scores both.
inline EvalSummary self_evaluation(std::span<const Image> sharp_set, const ParamStore& params,
                                   const NetArchitecture& arch, const SelfEvalConfig& cfg,
                                   std::span<const std::string> ids = {}) {
    cfg.validate();
    validate_params(params, arch);
    require(ids.empty() || ids.size() == sharp_set.size(), "self evaluation: ", ids.size(), " ids for ",
            sharp_set.size(), " images");
    TrainConfig blur_cfg;
    blur_cfg.seed = cfg.seed;
    blur_cfg.motion_probability = 0.0;
    blur_cfg.gaussian_sigma_min = cfg.sigma_min;
    blur_cfg.gaussian_sigma_max = cfg.sigma_max;
    blur_cfg.noise_sigma = cfg.noise_sigma;

    EvalSummary s;
    for (std::size_t i = 0; i < sharp_set.size(); ++i) {
        const std::string id = ids.empty() ? std::to_string(i) : ids[i];
        try {
            const TrainingPair pair = make_pair(sharp_set[i], blur_cfg, i);
            const Image restored = deblur_image(params, arch, pair.blurry);
            s.records.push_back({id, measure(pair.sharp, pair.blurry), measure(pair.sharp, restored)});
        } catch (const std::exception& e) {
            s.failures.push_back({id, e.what()});
        }
    }
    aggregate(s);
    return s;
}

// ---------------------------------------------------------------------------
// Simulated motion blur from frame averaging.

struct SimBlurConfig {
    std::size_t frames_to_average = 7;
    double min_pair_motion = 1.0;
    double min_psnr_keep = 15.0;
    bool motion_gate = true;

    void validate() const {
        require(frames_to_average >= 7 && frames_to_average <= 11 && frames_to_average % 2 == 1,
                "frames to average must be odd and in [7, 11], got ", frames_to_average);
        require(min_pair_motion > 0.0, "min pair motion must be positive, got ", min_pair_motion);
    }
};

struct SimPair {
    std::size_t first_frame = 0;
    Image blurred;
    Image ground_truth;
    double psnr = 0.0;
};

struct SimBlurResult {
    std::vector<SimPair> pairs;
    std::size_t windows = 0;
    std::size_t skipped_static = 0;
    std::size_t skipped_noisy = 0;
};

/// Pixelwise mean of equally sized frames. Running-mean update, so identical frames average exactly.
inline Image average_frames(std::span<const Image> frames) {
    require(!frames.empty(), "average_frames: no frames");
    Image out = frames[0];
    for (std::size_t k = 1; k < frames.size(); ++k) {
        require(frames[k].same_shape(frames[0]), "average_frames: frame sizes differ");
        const double inv = 1.0 / static_cast<double>(k + 1);
        for (std::size_t i = 0; i < out.size(); ++i) out.raw()[i] += (frames[k].data()[i] - out.raw()[i]) * inv;
    }
    return out;
}

/// Non-overlapping windows of consecutive frames; the window mean is the blurred image and its
/// middle frame the ground truth. Windows with too little motion or too low PSNR are dropped.
inline SimBlurResult simulate_motion_blur(std::span<const Image> frames, const SimBlurConfig& cfg,
                                          mining::OpticalFlow& flow) {
    cfg.validate();
    const std::size_t n = cfg.frames_to_average;
    require(frames.size() >= n, "simulate_motion_blur: need at least ", n, " frames, got ", frames.size());
    for (const auto& f : frames) require(f.same_shape(frames[0]), "simulate_motion_blur: frame sizes differ");

    SimBlurResult result;
    for (std::size_t start = 0; start + n <= frames.size(); start += n) {
        ++result.windows;
        const auto window = frames.subspan(start, n);
        if (cfg.motion_gate) {
            bool moving = true;
            for (std::size_t k = 1; k < n && moving; ++k)
                moving = flow.compute(window[k - 1], window[k]).mean_magnitude() >= cfg.min_pair_motion;
            if (!moving) {
                ++result.skipped_static;
                continue;
            }
        }
        SimPair pair{start, average_frames(window), window[n / 2], 0.0};
        pair.psnr = psnr(pair.ground_truth, pair.blurred);
        if (pair.psnr < cfg.min_psnr_keep) {
            ++result.skipped_noisy;
            continue;
        }
        result.pairs.push_back(std::move(pair));
    }
    return result;
}

// ---------------------------------------------------------------------------
// Scoring other methods' outputs against ground truth.

struct MethodScore {
    std::string method;
    double psnr = 0.0;
    double ssim = 0.0;
    std::size_t images = 0;
};

struct ExternalScores {
    std::vector<MethodScore> rows;
    std::vector<std::string> unmatched;  ///< "method/file" entries without ground truth.
};

/// Each subdirectory of `outputs_dir` is one method; a directory holding images directly is a
/// single method named after it. Files match ground truth by stem.
inline ExternalScores score_external(const std::filesystem::path& outputs_dir,
                                     const std::filesystem::path& ground_truth_dir) {
    namespace fs = std::filesystem;
    require(fs::is_directory(outputs_dir), "score: outputs directory ", outputs_dir.string(), " not found");
    require(fs::is_directory(ground_truth_dir), "score: ground-truth directory ", ground_truth_dir.string(),
            " not found");
    std::map<std::string, fs::path> truth;
    for (const auto& p : list_images(ground_truth_dir)) truth[p.stem().string()] = p;

    std::vector<fs::path> methods;
    for (const auto& e : fs::directory_iterator(outputs_dir))
        if (e.is_directory()) methods.push_back(e.path());
    std::sort(methods.begin(), methods.end());
    if (methods.empty()) methods.push_back(outputs_dir);

    ExternalScores scores;
    std::map<fs::path, Image> truth_cache;
    for (const auto& dir : methods) {
        const fs::path normal = dir.lexically_normal();
        MethodScore row{normal.has_filename() ? normal.filename().string() : normal.parent_path().filename().string()};
        for (const auto& out : list_images(dir)) {
            const auto it = truth.find(out.stem().string());
            if (it == truth.end()) {
                scores.unmatched.push_back(row.method + "/" + out.filename().string());
                continue;
            }
            auto cached = truth_cache.find(it->second);
            if (cached == truth_cache.end()) cached = truth_cache.emplace(it->second, load_image(it->second)).first;
            const MetricsReport m = measure(cached->second, load_image(out));
            row.psnr += m.psnr;
            row.ssim += m.ssim;
            ++row.images;
        }
        if (row.images > 0) {
            row.psnr /= static_cast<double>(row.images);
            row.ssim /= static_cast<double>(row.images);
        }
        scores.rows.push_back(row);
    }
    return scores;
}

// ---------------------------------------------------------------------------
// Reports.

struct TableRow {
    std::string label;
    double psnr = 0.0;
    double ssim = 0.0;
};

/// Aligned "Method  PSNR  SSIM" table with three decimals.
inline std::string format_metric_table(std::span<const TableRow> rows, const std::string& first_header = "Method") {
    std::size_t width = first_header.size();
    for (const auto& r : rows) width = std::max(width, r.label.size());
    std::ostringstream os;
    os << std::left << std::setw(static_cast<int>(width)) << first_header << std::right << std::setw(10) << "PSNR"
       << std::setw(8) << "SSIM" << "\n";
    for (const auto& r : rows)
        os << std::left << std::setw(static_cast<int>(width)) << r.label << std::right << std::setw(10)
           << format_db(r.psnr, 3) << std::setw(8) << format_db(r.ssim, 3) << "\n";
    return os.str();
}

inline std::string format_self_eval_table(const EvalSummary& s) {
    const TableRow rows[] = {{"blurred", s.mean_psnr_blurred, s.mean_ssim_blurred},
                             {"deblurred", s.mean_psnr_deblurred, s.mean_ssim_deblurred}};
    return format_metric_table(rows, "Images");
}

inline std::string format_method_table(const ExternalScores& scores) {
    std::vector<TableRow> rows;
    for (const auto& r : scores.rows) rows.push_back({r.method, r.psnr, r.ssim});
    return format_metric_table(rows);
}

inline void write_eval_csv(std::ostream& os, std::span<const EvalRecord> records) {
    os << "id,psnr_blurred,ssim_blurred,psnr_deblurred,ssim_deblurred\n";
    for (const auto& r : records)
        os << r.id << "," << format_db(r.blurred.psnr, 6) << "," << format_db(r.blurred.ssim, 6) << ","
           << format_db(r.deblurred.psnr, 6) << "," << format_db(r.deblurred.ssim, 6) << "\n";
}

/// GT | blurred | deblurred, separated by 2-pixel white bars.
inline Image make_composite(const Image& ground_truth, const Image& blurred, const Image& deblurred) {
    require(ground_truth.height() == blurred.height() && ground_truth.height() == deblurred.height(),
            "composite: image heights differ");
    const bool colour = ground_truth.channels() == 3 || blurred.channels() == 3 || deblurred.channels() == 3;
    const std::size_t ch = colour ? 3 : 1;
    constexpr std::size_t bar = 2;
    const std::size_t w = ground_truth.width() + blurred.width() + deblurred.width() + 2 * bar;
    Image out(ground_truth.height(), w, ch, 1.0);
    std::size_t x0 = 0;
    for (const Image* part : {&ground_truth, &blurred, &deblurred}) {
        const Image src = colour ? to_rgb(*part) : *part;
        for (std::size_t y = 0; y < src.height(); ++y)
            for (std::size_t x = 0; x < src.width(); ++x)
                for (std::size_t c = 0; c < ch; ++c) out.at(y, x0 + x, c) = src.at(y, x, c);
        x0 += src.width() + bar;
    }
    return out;
}

}  // namespace facedeblur
