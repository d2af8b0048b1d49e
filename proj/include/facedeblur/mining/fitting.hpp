// Copyright 2026 The facedeblur Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <numbers>
#include <numeric>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "facedeblur/contract.hpp"
#include "facedeblur/image.hpp"
#include "facedeblur/mining/components.hpp"
#include "facedeblur/random.hpp"
#include "facedeblur/synthetic.hpp"

namespace facedeblur::mining {

struct DescriptorParams {
    std::size_t patch = 16;  ///< Patch side in pixels, centred on the landmark.
    std::size_t cells = 4;   ///< Cells per patch side.
    std::size_t bins = 8;    ///< Unsigned orientation bins over [0, pi).

    std::size_t length() const { return cells * cells * bins; }
    void validate() const {
        require(patch > 0 && cells > 0 && bins > 0 && patch % cells == 0, "descriptor: patch ", patch,
                " must be a positive multiple of cells ", cells);
    }
    friend bool operator==(const DescriptorParams&, const DescriptorParams&) = default;
};

/// Central-difference gradients of the luma plane; borders replicate.
struct GradientField {
    std::size_t height = 0;
    std::size_t width = 0;
    std::vector<double> magnitude;
    std::vector<double> angle;  ///< In [0, pi).

    explicit GradientField(const Image& frame) {
        const Image l = to_luma(frame);
        height = l.height();
        width = l.width();
        magnitude.resize(height * width);
        angle.resize(height * width);
        for (std::size_t y = 0; y < height; ++y)
            for (std::size_t x = 0; x < width; ++x) {
                const double gx = l.at(y, std::min(x + 1, width - 1)) - l.at(y, x > 0 ? x - 1 : 0);
                const double gy = l.at(std::min(y + 1, height - 1), x) - l.at(y > 0 ? y - 1 : 0, x);
                double a = std::atan2(gy, gx);
                if (a < 0.0) a += std::numbers::pi;
                if (a >= std::numbers::pi) a -= std::numbers::pi;
                magnitude[y * width + x] = std::hypot(gx, gy);
                angle[y * width + x] = a;
            }
    }
};

/// Orientation histograms over a cell grid around `center`, L2-normalised. Outside pixels add nothing.
inline void patch_descriptor(const GradientField& g, const Point& center, const DescriptorParams& p,
                             std::span<double> out) {
    std::fill(out.begin(), out.end(), 0.0);
    const long half = static_cast<long>(p.patch / 2);
    const long x0 = std::lround(center.x) - half;
    const long y0 = std::lround(center.y) - half;
    const std::size_t cell = p.patch / p.cells;
    const double bin_width = std::numbers::pi / static_cast<double>(p.bins);
    for (std::size_t v = 0; v < p.patch; ++v) {
        const long y = y0 + static_cast<long>(v);
        if (y < 0 || y >= static_cast<long>(g.height)) continue;
        for (std::size_t u = 0; u < p.patch; ++u) {
            const long x = x0 + static_cast<long>(u);
            if (x < 0 || x >= static_cast<long>(g.width)) continue;
            const std::size_t idx = static_cast<std::size_t>(y) * g.width + static_cast<std::size_t>(x);
            // Linear vote between the two nearest bin centres, wrapping at pi.
            const double pos = g.angle[idx] / bin_width - 0.5;
            const double lo = std::floor(pos);
            const double frac = pos - lo;
            const auto b0 = static_cast<std::size_t>((static_cast<long>(lo) + static_cast<long>(p.bins)) % static_cast<long>(p.bins));
            const std::size_t b1 = (b0 + 1) % p.bins;
            const std::size_t base = ((v / cell) * p.cells + u / cell) * p.bins;
            out[base + b0] += (1.0 - frac) * g.magnitude[idx];
            out[base + b1] += frac * g.magnitude[idx];
        }
    }
    double norm = 0.0;
    for (double d : out) norm += d * d;
    norm = std::sqrt(norm + 1e-12);
    for (double& d : out) d /= norm;
}

inline std::vector<double> shape_descriptor(const GradientField& g, const SparseShape& shape,
                                            const DescriptorParams& p) {
    const std::size_t len = p.length();
    std::vector<double> out(shape.size() * len);
    for (std::size_t i = 0; i < shape.size(); ++i)
        patch_descriptor(g, shape.points[i], p, std::span<double>(out).subspan(i * len, len));
    return out;
}

/// Linear patch-based fitting classifier: accept iff w . phi(I, l) + b >= threshold.
class FittingClassifier final : public FittingVerifier {
public:
    FittingClassifier() = default;
    FittingClassifier(DescriptorParams params, std::size_t landmarks, std::vector<double> weights, double bias,
                      double threshold = 0.0)
        : params_(params), landmarks_(landmarks), weights_(std::move(weights)), bias_(bias), threshold_(threshold) {
        params_.validate();
        require(weights_.size() == landmarks_ * params_.length(), "fitting classifier: ", weights_.size(),
                " weights for ", landmarks_, " landmarks x ", params_.length(), " descriptor entries");
    }

    double decision(const Image& frame, const SparseShape& shape) const {
        return decision(GradientField(frame), shape);
    }

    double decision(const GradientField& g, const SparseShape& shape) const {
        require(shape.size() == landmarks_, "fitting classifier expects ", landmarks_, " landmarks, got ",
                shape.size());
        const auto phi = shape_descriptor(g, shape, params_);
        return std::inner_product(phi.begin(), phi.end(), weights_.begin(), bias_);
    }

    bool accept(const Image& frame, const SparseShape& shape) const override {
        return decision(frame, shape) >= threshold_;
    }

    const DescriptorParams& params() const { return params_; }
    std::size_t landmarks() const { return landmarks_; }
    const std::vector<double>& weights() const { return weights_; }
    double bias() const { return bias_; }
    double threshold() const { return threshold_; }

    friend bool operator==(const FittingClassifier& a, const FittingClassifier& b) {
        return a.params_ == b.params_ && a.landmarks_ == b.landmarks_ && a.weights_ == b.weights_ &&
               a.bias_ == b.bias_ && a.threshold_ == b.threshold_;
    }

private:
    DescriptorParams params_{};
    std::size_t landmarks_ = 0;
    std::vector<double> weights_;
    double bias_ = 0.0;
    double threshold_ = 0.0;
};

struct ClassifierTrainConfig {
    double perturbation_sigma = 0.2;          ///< Per-point noise, as a fraction of face size.
    std::size_t perturbed_per_positive = 2;
    std::size_t background_per_positive = 1;
    std::vector<double> c_grid{0.01, 0.1, 1.0, 10.0, 100.0};
    std::size_t folds = 5;
    std::size_t epochs = 20;
    std::uint64_t seed = 0;
    DescriptorParams descriptor{};
};

struct ClassifierTrainReport {
    double chosen_c = 0.0;
    std::vector<double> cv_balanced_accuracy;  ///< Aligned with the C grid.
    std::size_t positives = 0;
    std::size_t negatives = 0;
};

namespace detail {

struct Sample {
    std::vector<double> x;
    double y;
};

/// Pegasos: hinge-loss subgradient descent with step 1/(lambda t), lambda = 1/(C n).
/// The bias is the weight of a constant feature.
inline std::vector<double> pegasos(const std::vector<const Sample*>& data, double c, std::size_t epochs,
                                   std::uint64_t seed) {
    const std::size_t dim = data.front()->x.size() + 1;
    const double n = static_cast<double>(data.size());
    const double lambda = 1.0 / (c * n);
    std::vector<double> w(dim, 0.0);
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), 0);
    std::size_t t = 0;
    for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
        Rng rng(mix_seed(seed, epoch));
        for (std::size_t i = order.size(); i > 1; --i) {
            std::uniform_int_distribution<std::size_t> pick(0, i - 1);
            std::swap(order[i - 1], order[pick(rng)]);
        }
        for (std::size_t k : order) {
            ++t;
            const Sample& s = *data[k];
            const double eta = 1.0 / (lambda * static_cast<double>(t));
            double margin = w[dim - 1];
            for (std::size_t j = 0; j + 1 < dim; ++j) margin += w[j] * s.x[j];
            margin *= s.y;
            const double shrink = 1.0 - eta * lambda;
            for (double& v : w) v *= shrink;
            if (margin < 1.0) {
                for (std::size_t j = 0; j + 1 < dim; ++j) w[j] += eta * s.y * s.x[j];
                w[dim - 1] += eta * s.y;
            }
        }
    }
    return w;
}

inline double score(const std::vector<double>& w, const std::vector<double>& x) {
    return std::inner_product(x.begin(), x.end(), w.begin(), w.back());
}

}  // namespace detail

/// Trains the fitting classifier from ground-truth fittings. Negatives are per-point Gaussian
/// perturbations of each positive and the positive's shape dropped on unrelated backgrounds
/// (generated from the seed when none are given). C is picked by k-fold balanced accuracy.
inline FittingClassifier train_fitting_classifier(std::span<const Image> images, std::span<const SparseShape> shapes,
                                                  const ClassifierTrainConfig& cfg,
                                                  std::span<const Image> backgrounds = {},
                                                  ClassifierTrainReport* report = nullptr) {
    require(images.size() == shapes.size(), "train_fitting_classifier: ", images.size(), " images but ",
            shapes.size(), " shapes");
    require(images.size() >= 50, "train_fitting_classifier: need at least 50 positives, got ", images.size());
    require(cfg.perturbation_sigma > 0.0, "train_fitting_classifier: perturbation sigma must be positive");
    require(cfg.folds >= 2 && !cfg.c_grid.empty() && cfg.epochs > 0, "train_fitting_classifier: invalid CV setup");
    cfg.descriptor.validate();
    const std::size_t n_landmarks = shapes.front().size();

    std::vector<detail::Sample> samples;
    for (std::size_t i = 0; i < images.size(); ++i) {
        require(shapes[i].size() == n_landmarks, "train_fitting_classifier: shape ", i, " has ", shapes[i].size(),
                " points, expected ", n_landmarks);
        Rng rng = derived_rng(cfg.seed, i);
        const GradientField g(images[i]);
        samples.push_back({shape_descriptor(g, shapes[i], cfg.descriptor), 1.0});
        const double sd = cfg.perturbation_sigma * face_size(shapes[i]);
        for (std::size_t k = 0; k < cfg.perturbed_per_positive; ++k) {
            SparseShape bad = shapes[i];
            for (auto& p : bad.points) {
                p.x += gaussian(rng, 0.0, sd);
                p.y += gaussian(rng, 0.0, sd);
            }
            samples.push_back({shape_descriptor(g, bad, cfg.descriptor), -1.0});
        }
        for (std::size_t k = 0; k < cfg.background_per_positive; ++k) {
            const Image bg = backgrounds.empty()
                                 ? make_pattern(rng, images[i].height(), images[i].width(), images[i].channels())
                                 : backgrounds[(i * cfg.background_per_positive + k) % backgrounds.size()];
            const BoundingBox b = shape_bounds(shapes[i]);
            const double room_x = static_cast<double>(bg.width()) - b.width();
            const double room_y = static_cast<double>(bg.height()) - b.height();
            const double nx = room_x > 0.0 ? uniform(rng, 0.0, room_x) : 0.0;
            const double ny = room_y > 0.0 ? uniform(rng, 0.0, room_y) : 0.0;
            const SparseShape moved = shapes[i].translated(nx - b.x_min, ny - b.y_min);
            samples.push_back({shape_descriptor(GradientField(bg), moved, cfg.descriptor), -1.0});
        }
    }

    // Fold assignment over a seeded permutation.
    std::vector<std::size_t> perm(samples.size());
    std::iota(perm.begin(), perm.end(), 0);
    {
        Rng rng(mix_seed(cfg.seed, 0xf01d));
        for (std::size_t i = perm.size(); i > 1; --i) {
            std::uniform_int_distribution<std::size_t> pick(0, i - 1);
            std::swap(perm[i - 1], perm[pick(rng)]);
        }
    }
    std::vector<std::size_t> fold_of(samples.size());
    for (std::size_t k = 0; k < perm.size(); ++k) fold_of[perm[k]] = k % cfg.folds;

    std::vector<double> cv;
    for (std::size_t ci = 0; ci < cfg.c_grid.size(); ++ci) {
        double tp = 0, pos = 0, tn = 0, neg = 0;
        for (std::size_t f = 0; f < cfg.folds; ++f) {
            std::vector<const detail::Sample*> train_set;
            for (std::size_t k = 0; k < samples.size(); ++k)
                if (fold_of[k] != f) train_set.push_back(&samples[k]);
            const auto w = detail::pegasos(train_set, cfg.c_grid[ci], cfg.epochs, mix_seed(cfg.seed, 100 + f));
            for (std::size_t k = 0; k < samples.size(); ++k) {
                if (fold_of[k] != f) continue;
                const bool predicted = detail::score(w, samples[k].x) >= 0.0;
                if (samples[k].y > 0) {
                    ++pos;
                    tp += predicted;
                } else {
                    ++neg;
                    tn += !predicted;
                }
            }
        }
        cv.push_back(0.5 * (tp / pos + tn / neg));
    }
    // First (smallest) C with the best score.
    const std::size_t best = static_cast<std::size_t>(std::max_element(cv.begin(), cv.end()) - cv.begin());

    std::vector<const detail::Sample*> all;
    for (const auto& s : samples) all.push_back(&s);
    auto w = detail::pegasos(all, cfg.c_grid[best], cfg.epochs, mix_seed(cfg.seed, 99));
    const double bias = w.back();
    w.pop_back();

    if (report) {
        report->chosen_c = cfg.c_grid[best];
        report->cv_balanced_accuracy = cv;
        report->positives = images.size();
        report->negatives = samples.size() - images.size();
    }
    return FittingClassifier(cfg.descriptor, n_landmarks, std::move(w), bias, 0.0);
}

// Text format: header, descriptor parameters, weight count and values, bias, threshold.

inline void write_classifier(std::ostream& os, const FittingClassifier& clf) {
    os.precision(17);
    const auto& p = clf.params();
    os << "facedeblur-fitting-classifier 1\n";
    os << "patch " << p.patch << "\ncells " << p.cells << "\nbins " << p.bins << "\nlandmarks " << clf.landmarks()
       << "\n";
    os << "weights " << clf.weights().size() << "\n";
    for (double w : clf.weights()) os << w << "\n";
    os << "bias " << clf.bias() << "\nthreshold " << clf.threshold() << "\n";
}

inline FittingClassifier read_classifier(std::istream& is) {
    auto expect = [&](const std::string& key) {
        std::string got;
        require(static_cast<bool>(is >> got) && got == key, "classifier file: expected '", key, "', got '", got, "'");
    };
    std::string magic;
    int version = 0;
    require(static_cast<bool>(is >> magic >> version) && magic == "facedeblur-fitting-classifier" && version == 1,
            "classifier file: bad header");
    DescriptorParams p;
    std::size_t landmarks = 0, count = 0;
    expect("patch");
    is >> p.patch;
    expect("cells");
    is >> p.cells;
    expect("bins");
    is >> p.bins;
    expect("landmarks");
    is >> landmarks;
    expect("weights");
    require(static_cast<bool>(is >> count), "classifier file: missing weight count");
    std::vector<double> w(count);
    for (double& v : w) require(static_cast<bool>(is >> v), "classifier file: truncated weights");
    double bias = 0.0, threshold = 0.0;
    expect("bias");
    require(static_cast<bool>(is >> bias), "classifier file: missing bias");
    expect("threshold");
    require(static_cast<bool>(is >> threshold), "classifier file: missing threshold");
    return FittingClassifier(p, landmarks, std::move(w), bias, threshold);
}

inline void save_classifier(const std::string& path, const FittingClassifier& clf) {
    std::ofstream os(path);
    require(os.good(), "cannot write classifier ", path);
    write_classifier(os, clf);
}

inline FittingClassifier load_classifier(const std::string& path) {
    std::ifstream is(path);
    require(is.good(), "cannot open classifier ", path);
    return read_classifier(is);
}

}  // namespace facedeblur::mining
