// Copyright 2026 The facedeblur Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "facedeblur/network.hpp"

namespace facedeblur {

// Central finite differences against backward(). Only the train-mode forward pass
// and huber_loss are used on the numeric side.

struct GradCheckOptions {
    double step = 1e-5;
    std::size_t batch = 2;
    std::size_t height = 8;
    std::size_t width = 8;
    /// Denominator floor for the relative error, so near-zero gradients compare absolutely.
    double floor = 1e-6;
};

struct TensorGradError {
    std::string name;
    double max_relative_error = 0.0;
    double max_abs_gradient = 0.0;
};

struct GradCheckReport {
    double max_relative_error = 0.0;
    std::size_t checked = 0;
    std::vector<TensorGradError> tensors;
};

inline double relative_error(double analytic, double numeric, double floor) {
    return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

inline GradCheckReport gradient_check(const NetArchitecture& arch, std::uint64_t seed,
                                      const GradCheckOptions& opt = {}) {
    ParamStore params = init_params(arch, seed);
    Rng rng(mix_seed(seed, 1));
    Tensor4 input(opt.batch, arch.input_channels, opt.height, opt.width);
    Tensor4 target(opt.batch, arch.output_channels, opt.height, opt.width);
    for (double& v : input.data()) v = uniform(rng, 0.0, 1.0);
    for (double& v : target.data()) v = uniform(rng, 0.0, 1.0);
    // Non-trivial normalization parameters so every path carries signal.
    for (auto& t : params.entries()) {
        if (t.name.ends_with("bias") || t.name.ends_with("bn.beta"))
            for (double& v : t.value) v = uniform(rng, -0.1, 0.1);
        if (t.name.ends_with("bn.gamma"))
            for (double& v : t.value) v = uniform(rng, 0.5, 1.5);
        if (t.name == "head.weight" && std::all_of(t.value.begin(), t.value.end(), [](double v) { return v == 0.0; }))
            for (double& v : t.value) v = gaussian(rng, 0.0, 0.3);
    }

    backward(params, arch, input, target);
    const ParamStore analytic = params;

    auto loss_at = [&]() {
        const Tensor4 out = forward(params, arch, input, Mode::Train);
        std::vector<double> r(out.size());
        for (std::size_t i = 0; i < r.size(); ++i) r[i] = out.data()[i] - target.data()[i];
        return huber_loss(r);
    };

    GradCheckReport report;
    for (std::size_t t = 0; t < params.entries().size(); ++t) {
        auto& entry = params.entries()[t];
        if (!entry.trainable) continue;
        TensorGradError err{entry.name, 0.0, 0.0};
        for (std::size_t i = 0; i < entry.value.size(); ++i) {
            const double saved = entry.value[i];
            entry.value[i] = saved + opt.step;
            const double up = loss_at();
            entry.value[i] = saved - opt.step;
            const double down = loss_at();
            entry.value[i] = saved;
            const double numeric = (up - down) / (2.0 * opt.step);
            const double a = analytic.entries()[t].grad[i];
            err.max_relative_error = std::max(err.max_relative_error, relative_error(a, numeric, opt.floor));
            err.max_abs_gradient = std::max(err.max_abs_gradient, std::abs(a));
            ++report.checked;
        }
        report.max_relative_error = std::max(report.max_relative_error, err.max_relative_error);
        report.tensors.push_back(err);
    }
    return report;
}

}  // namespace facedeblur
