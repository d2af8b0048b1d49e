// Copyright 2026 The facedeblur Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <future>
#include <istream>
#include <map>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "facedeblur/blur.hpp"
#include "facedeblur/contract.hpp"
#include "facedeblur/network.hpp"
#include "facedeblur/random.hpp"

namespace facedeblur {

struct TrainingPair {
    Image blurry;
    Image sharp;
    BlurKernel kernel;
};

struct TrainConfig {
    std::size_t batch_size = 16;
    double lr_initial = 0.0003;
    double lr_decay_factor = 0.5;
    std::size_t lr_decay_every = 15000;
    std::size_t max_steps = 1000;
    bool single_pass = true;
    std::uint64_t seed = 0;

    double gaussian_sigma_min = 0.5;
    double gaussian_sigma_max = 3.0;
    std::size_t gaussian_size = 0;  ///< 0 derives the side from sigma
    long motion_length_min = 3;
    long motion_length_max = 11;
    double motion_probability = 0.5;
    double noise_sigma = 0.0;

    std::size_t checkpoint_every = 0;  ///< 0 disables periodic checkpoints

    void validate() const {
        require(batch_size > 0, "train config: batch_size must be positive");
        require(lr_initial > 0.0, "train config: lr_initial must be positive");
        require(lr_decay_factor > 0.0 && lr_decay_factor < 1.0, "train config: lr_decay_factor must be in (0,1)");
        require(lr_decay_every > 0, "train config: lr_decay_every must be positive");
        require(gaussian_sigma_min > 0.0 && gaussian_sigma_min <= gaussian_sigma_max,
                "train config: bad gaussian sigma interval [", gaussian_sigma_min, ", ", gaussian_sigma_max, "]");
        require(gaussian_size == 0 || gaussian_size % 2 == 1, "train config: gaussian_size must be odd");
        require(motion_length_min >= 1 && motion_length_min <= motion_length_max,
                "train config: bad motion length interval [", motion_length_min, ", ", motion_length_max, "]");
        require(motion_probability >= 0.0 && motion_probability <= 1.0,
                "train config: motion_probability must be in [0,1]");
        require(noise_sigma >= 0.0, "train config: noise_sigma must be non-negative");
    }
};

/// lr_initial * lr_decay_factor ^ floor(step / lr_decay_every)
inline double learning_rate(const TrainConfig& cfg, std::size_t step) {
    const auto drops = static_cast<double>(step / cfg.lr_decay_every);
    return cfg.lr_initial * std::pow(cfg.lr_decay_factor, drops);
}

namespace detail {

inline std::size_t largest_odd_at_most(std::size_t n) { return n % 2 == 1 ? n : n - 1; }

}  // namespace detail

/// Draws a fresh kernel for one sharp image and blurs it (SAME mode, identity psi).
/// Deterministic in (cfg.seed, draw_index).
inline TrainingPair make_pair(const Image& sharp, const TrainConfig& cfg, std::uint64_t draw_index) {
    Rng rng = derived_rng(cfg.seed, draw_index);
    const std::size_t limit = detail::largest_odd_at_most(std::min(sharp.height(), sharp.width()));
    const bool motion = std::uniform_real_distribution<double>(0.0, 1.0)(rng) < cfg.motion_probability;
    BlurKernel kernel;
    if (motion) {
        long length = std::uniform_int_distribution<long>(cfg.motion_length_min, cfg.motion_length_max)(rng);
        const double angle = uniform(rng, 0.0, 3.141592653589793);
        length = std::min(length, static_cast<long>(limit));
        kernel = make_motion_kernel(length, angle);
    } else {
        const double sigma = cfg.gaussian_sigma_min == cfg.gaussian_sigma_max
                                 ? cfg.gaussian_sigma_min
                                 : uniform(rng, cfg.gaussian_sigma_min, cfg.gaussian_sigma_max);
        const std::size_t size = std::min(cfg.gaussian_size > 0 ? cfg.gaussian_size : gaussian_support(sigma), limit);
        kernel = make_gaussian_kernel(sigma, size);
    }
    BlurConfig blur_cfg;
    blur_cfg.noise_sigma = cfg.noise_sigma;
    blur_cfg.conv_mode = ConvMode::Same;
    blur_cfg.rng_seed = mix_seed(cfg.seed ^ 0x6e6f697365ULL, draw_index);
    Image blurry = blur(sharp, kernel, blur_cfg);
    return TrainingPair{std::move(blurry), sharp, std::move(kernel)};
}

struct TrainResult {
    ParamStore params;
    std::vector<double> loss_history;
    std::vector<std::size_t> consumed;  ///< dataset indices in consumption order
};

struct TrainHooks {
    std::function<void(std::size_t step, double loss, double lr)> on_step;
    std::function<void(std::size_t step, const ParamStore&)> on_checkpoint;
};

struct PreparedBatch {
    Tensor4 input;
    Tensor4 target;
    std::vector<std::size_t> indices;
};

inline PreparedBatch prepare_batch(std::span<const Image> dataset, std::span<const std::size_t> order,
                                   const TrainConfig& cfg, std::size_t step, std::size_t channels) {
    std::vector<Image> blurry;
    std::vector<Image> sharp;
    PreparedBatch batch;
    for (std::size_t k = 0; k < cfg.batch_size; ++k) {
        const std::size_t position = step * cfg.batch_size + k;
        const std::size_t index = order[position % order.size()];
        TrainingPair pair = make_pair(dataset[index], cfg, position);
        blurry.push_back(std::move(pair.blurry));
        sharp.push_back(std::move(pair.sharp));
        batch.indices.push_back(index);
    }
    batch.input = images_to_tensor(blurry, channels);
    batch.target = images_to_tensor(sharp, channels);
    return batch;
}

/// Applies theta <- theta - lr * grad to every trainable tensor.
inline void sgd_step(ParamStore& params, double lr) {
    for (auto& t : params.entries()) {
        if (!t.trainable) continue;
        for (std::size_t i = 0; i < t.value.size(); ++i) t.value[i] -= lr * t.grad[i];
    }
}

inline std::vector<std::size_t> shuffled_order(std::size_t n, std::uint64_t seed) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(mix_seed(seed, 0x5348554646ULL));
    // Explicit Fisher-Yates so the permutation does not depend on the standard library.
    for (std::size_t i = n; i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(rng() % i);
        std::swap(order[i - 1], order[j]);
    }
    return order;
}

/// Plain mini-batch SGD over blurred copies of `dataset`. The dataset is shuffled
/// once; with single_pass each image is consumed at most once. The next batch is
/// synthesized concurrently with the current optimization step.
inline TrainResult train(std::span<const Image> dataset, const NetArchitecture& arch, const TrainConfig& cfg,
                         const TrainHooks& hooks = {}) {
    cfg.validate();
    require(dataset.size() >= cfg.batch_size, "train: dataset of ", dataset.size(),
            " images is smaller than one batch of ", cfg.batch_size);
    const std::size_t h = dataset[0].height();
    const std::size_t w = dataset[0].width();
    for (const auto& img : dataset)
        require(img.height() == h && img.width() == w, "train: all images must be ", h, "x", w, ", got ",
                img.height(), "x", img.width());

    TrainResult result{init_params(arch, cfg.seed), {}, {}};
    const auto order = shuffled_order(dataset.size(), cfg.seed);
    std::size_t steps = cfg.max_steps;
    if (cfg.single_pass) steps = std::min(steps, dataset.size() / cfg.batch_size);

    auto launch = [&](std::size_t step) {
        return std::async(std::launch::async, [&, step] {
            return prepare_batch(dataset, order, cfg, step, arch.input_channels);
        });
    };
    std::future<PreparedBatch> next;
    if (steps > 0) next = launch(0);
    for (std::size_t step = 0; step < steps; ++step) {
        PreparedBatch batch = next.get();
        if (step + 1 < steps) next = launch(step + 1);
        const double lr = learning_rate(cfg, step);
        const auto out = backward(result.params, arch, batch.input, batch.target);
        sgd_step(result.params, lr);
        result.loss_history.push_back(out.loss);
        result.consumed.insert(result.consumed.end(), batch.indices.begin(), batch.indices.end());
        if (hooks.on_step) hooks.on_step(step, out.loss, lr);
        if (hooks.on_checkpoint && cfg.checkpoint_every > 0 && (step + 1) % cfg.checkpoint_every == 0)
            hooks.on_checkpoint(step + 1, result.params);
    }
    return result;
}

// ---------------------------------------------------------------------------
// `key = value` configuration files. Blank lines and '#' comments are ignored.

inline std::map<std::string, std::string> parse_key_values(std::istream& is) {
    std::map<std::string, std::string> out;
    std::string line;
    std::size_t number = 0;
    auto trim = [](std::string s) {
        const auto b = s.find_first_not_of(" \t\r");
        if (b == std::string::npos) return std::string{};
        const auto e = s.find_last_not_of(" \t\r");
        return s.substr(b, e - b + 1);
    };
    while (std::getline(is, line)) {
        ++number;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        require(eq != std::string::npos, "config line ", number, ": expected 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        require(!key.empty(), "config line ", number, ": empty key");
        out[key] = trim(line.substr(eq + 1));
    }
    return out;
}

namespace detail {

inline double parse_real(const std::string& key, const std::string& v) {
    std::size_t used = 0;
    double out = 0;
    try {
        out = std::stod(v, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    require(used == v.size() && !v.empty(), "config: '", key, "' expects a number, got '", v, "'");
    return out;
}

inline long long parse_integer(const std::string& key, const std::string& v) {
    std::size_t used = 0;
    long long out = 0;
    try {
        out = std::stoll(v, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    require(used == v.size() && !v.empty(), "config: '", key, "' expects an integer, got '", v, "'");
    return out;
}

inline bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ContractViolation("config: '" + key + "' expects true/false, got '" + v + "'");
}

inline std::size_t parse_count(const std::string& key, const std::string& v) {
    const long long n = parse_integer(key, v);
    require(n >= 0, "config: '", key, "' must be non-negative");
    return static_cast<std::size_t>(n);
}

}  // namespace detail

/// Applies one TrainConfig field by name; unknown keys are rejected.
inline void apply_train_setting(TrainConfig& cfg, const std::string& key, const std::string& value) {
    using namespace detail;
    if (key == "batch_size") cfg.batch_size = parse_count(key, value);
    else if (key == "lr_initial") cfg.lr_initial = parse_real(key, value);
    else if (key == "lr_decay_factor") cfg.lr_decay_factor = parse_real(key, value);
    else if (key == "lr_decay_every") cfg.lr_decay_every = parse_count(key, value);
    else if (key == "max_steps") cfg.max_steps = parse_count(key, value);
    else if (key == "single_pass") cfg.single_pass = parse_bool(key, value);
    else if (key == "seed") cfg.seed = static_cast<std::uint64_t>(parse_integer(key, value));
    else if (key == "gaussian_sigma_min") cfg.gaussian_sigma_min = parse_real(key, value);
    else if (key == "gaussian_sigma_max") cfg.gaussian_sigma_max = parse_real(key, value);
    else if (key == "gaussian_size") cfg.gaussian_size = parse_count(key, value);
    else if (key == "motion_length_min") cfg.motion_length_min = static_cast<long>(parse_integer(key, value));
    else if (key == "motion_length_max") cfg.motion_length_max = static_cast<long>(parse_integer(key, value));
    else if (key == "motion_probability") cfg.motion_probability = parse_real(key, value);
    else if (key == "noise_sigma") cfg.noise_sigma = parse_real(key, value);
    else if (key == "checkpoint_every") cfg.checkpoint_every = parse_count(key, value);
    else throw ContractViolation("config: unknown key '" + key + "'");
}

inline TrainConfig parse_train_config(std::istream& is, TrainConfig cfg = {}) {
    for (const auto& [key, value] : parse_key_values(is)) apply_train_setting(cfg, key, value);
    cfg.validate();
    return cfg;
}

/// One `step loss learning_rate` line.
inline std::string format_loss_line(std::size_t step, double loss, double lr) {
    std::ostringstream oss;
    oss.precision(10);
    oss << step << ' ' << loss << ' ' << lr;
    return oss.str();
}

}  // namespace facedeblur
