// Copyright 2026 The facedeblur Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "facedeblur/contract.hpp"
#include "facedeblur/metrics.hpp"
#include "facedeblur/param_store.hpp"
#include "facedeblur/random.hpp"
#include "facedeblur/tensor.hpp"

namespace facedeblur {

// Deblurring network
// ==================
//
//   input -> stem(3x3, relu) -> block_1 -> ... -> block_B -> trunk_proj(1x1) --+
//                                  |                  |                         |
//                                  +-- skip_k: batch-norm -> 1x1 ---------------+--> merge -> head(3x3) -> output
//
// Each block is conv3x3 -> relu -> conv3x3, plus the identity shortcut, then relu.
// Every layer is stride 1 with SAME padding; there is no pooling, so the spatial size
// never changes. Skip outputs and the projected trunk live in output-channel space and
// are merged by sum (or channel concatenation) before the head. With `input_residual`
// the network input is added to the head output.

enum class SkipMerge : std::uint8_t { Sum = 0, Concat = 1 };

enum class Mode { Train, Eval };

struct NetArchitecture {
    std::size_t input_channels = 3;
    std::size_t block_count = 3;
    std::size_t channels_per_block = 16;
    std::vector<std::size_t> skip_sources{2, 3};  ///< 1-based block indices
    std::size_t output_channels = 3;
    SkipMerge merge = SkipMerge::Sum;
    bool input_residual = false;

    void validate() const {
        require(input_channels > 0 && output_channels > 0, "architecture: channel counts must be positive");
        require(block_count > 0, "architecture: block_count must be positive");
        require(channels_per_block > 0, "architecture: channels_per_block must be positive");
        for (std::size_t i = 0; i < skip_sources.size(); ++i) {
            require(skip_sources[i] >= 1 && skip_sources[i] <= block_count, "architecture: skip source ",
                    skip_sources[i], " outside blocks 1..", block_count);
            for (std::size_t j = 0; j < i; ++j)
                require(skip_sources[i] != skip_sources[j], "architecture: duplicate skip source ",
                        skip_sources[i]);
        }
        require(!input_residual || input_channels == output_channels,
                "architecture: input_residual needs input_channels == output_channels");
    }

    std::size_t merged_channels() const {
        return merge == SkipMerge::Sum ? output_channels : output_channels * (1 + skip_sources.size());
    }

    /// Two blocks of four channels; used for gradient checks and desk-scale training.
    static NetArchitecture small() {
        NetArchitecture a;
        a.block_count = 2;
        a.channels_per_block = 4;
        a.skip_sources = {1, 2};
        a.input_residual = true;
        return a;
    }

    /// Three blocks with skips from the 2nd and 3rd.
    static NetArchitecture standard() { return NetArchitecture{}; }

    friend bool operator==(const NetArchitecture&, const NetArchitecture&) = default;
};

inline constexpr double kBatchNormEpsilon = 1e-5;
inline constexpr double kBatchNormMomentum = 0.9;

namespace layer_names {

inline std::string block(std::size_t b, const char* part) { return "block" + std::to_string(b) + "." + part; }
inline std::string skip(std::size_t k, const char* part) { return "skip" + std::to_string(k) + "." + part; }

}  // namespace layer_names

namespace detail {

struct ConvSpec {
    std::string name;
    std::size_t in;
    std::size_t out;
    std::size_t k;
};

inline std::vector<ConvSpec> conv_specs(const NetArchitecture& a) {
    std::vector<ConvSpec> specs;
    const std::size_t c = a.channels_per_block;
    specs.push_back({"stem", a.input_channels, c, 3});
    for (std::size_t b = 1; b <= a.block_count; ++b) {
        specs.push_back({layer_names::block(b, "conv_a"), c, c, 3});
        specs.push_back({layer_names::block(b, "conv_b"), c, c, 3});
    }
    for (std::size_t k : a.skip_sources) specs.push_back({layer_names::skip(k, "proj"), c, a.output_channels, 1});
    specs.push_back({"trunk_proj", c, a.output_channels, 1});
    specs.push_back({"head", a.merged_channels(), a.output_channels, 3});
    return specs;
}

}  // namespace detail

/// He-normal convolution weights (std sqrt(2 / fan_in)), zero biases, unit/zero
/// normalization scale/shift, running mean 0 and variance 1. Deterministic per seed.
inline ParamStore init_params(const NetArchitecture& arch, std::uint64_t seed) {
    arch.validate();
    Rng rng(seed);
    ParamStore store;
    auto add_conv = [&](const detail::ConvSpec& s) {
        auto& w = store.add(s.name + ".weight", {s.out, s.in, s.k, s.k});
        const double stddev = std::sqrt(2.0 / static_cast<double>(s.in * s.k * s.k));
        std::normal_distribution<double> dist(0.0, stddev);
        for (double& v : w.value) v = dist(rng);
        store.add(s.name + ".bias", {s.out});
    };
    const auto specs = detail::conv_specs(arch);
    for (const auto& s : specs) {
        if (s.name.rfind("skip", 0) == 0) {
            const std::string prefix = s.name.substr(0, s.name.find('.'));
            const std::size_t c = arch.channels_per_block;
            auto& gamma = store.add(prefix + ".bn.gamma", {c});
            std::fill(gamma.value.begin(), gamma.value.end(), 1.0);
            store.add(prefix + ".bn.beta", {c});
            store.add(prefix + ".bn.running_mean", {c}, false);
            auto& var = store.add(prefix + ".bn.running_var", {c}, false);
            std::fill(var.value.begin(), var.value.end(), 1.0);
        }
        add_conv(s);
    }
    // With an input residual path the head starts at zero, so the untrained
    // network is the identity map.
    if (arch.input_residual) {
        auto& head = store.get("head.weight").value;
        std::fill(head.begin(), head.end(), 0.0);
    }
    return store;
}

/// Checks every tensor the architecture needs, naming the first offending layer.
inline void validate_params(const ParamStore& params, const NetArchitecture& arch) {
    arch.validate();
    auto check = [&](const std::string& name, const std::vector<std::size_t>& shape) {
        require(params.contains(name), "parameter store is missing layer '", name, "'");
        const auto& t = params.get(name);
        require(t.shape == shape && t.value.size() == shape_numel(shape) && t.grad.size() == t.value.size(),
                "layer '", name, "' has a shape that does not match the architecture");
    };
    for (const auto& s : detail::conv_specs(arch)) {
        check(s.name + ".weight", {s.out, s.in, s.k, s.k});
        check(s.name + ".bias", {s.out});
    }
    for (std::size_t k : arch.skip_sources)
        for (const char* part : {"bn.gamma", "bn.beta", "bn.running_mean", "bn.running_var"})
            check(layer_names::skip(k, part), {arch.channels_per_block});
}

namespace detail {

// --- convolution (cross-correlation, stride 1, SAME zero padding) -----------------

inline void conv_forward(const Tensor4& in, const ParamTensor& weight, const ParamTensor& bias, Tensor4& out) {
    const std::size_t oc_n = weight.shape[0];
    const std::size_t ic_n = weight.shape[1];
    const std::size_t k = weight.shape[2];
    const long pad = static_cast<long>(k / 2);
    const long h = static_cast<long>(in.height());
    const long w = static_cast<long>(in.width());
    out = Tensor4(in.batch(), oc_n, in.height(), in.width());
    for (std::size_t n = 0; n < in.batch(); ++n) {
        for (std::size_t oc = 0; oc < oc_n; ++oc) {
            double* o = out.plane(n, oc);
            std::fill(o, o + out.plane_size(), bias.value[oc]);
            for (std::size_t ic = 0; ic < ic_n; ++ic) {
                const double* src = in.plane(n, ic);
                const double* wk = &weight.value[(oc * ic_n + ic) * k * k];
                for (long ky = 0; ky < static_cast<long>(k); ++ky) {
                    const long dy = ky - pad;
                    const long y0 = std::max(0L, -dy);
                    const long y1 = std::min(h, h - dy);
                    for (long kx = 0; kx < static_cast<long>(k); ++kx) {
                        const long dx = kx - pad;
                        const long x0 = std::max(0L, -dx);
                        const long x1 = std::min(w, w - dx);
                        const double wv = wk[ky * static_cast<long>(k) + kx];
                        for (long y = y0; y < y1; ++y) {
                            double* orow = o + y * w;
                            const double* irow = src + (y + dy) * w + dx;
                            for (long x = x0; x < x1; ++x) orow[x] += wv * irow[x];
                        }
                    }
                }
            }
        }
    }
}

/// Accumulates weight/bias gradients; writes the input gradient into `din` when non-null.
inline void conv_backward(const Tensor4& in, ParamTensor& weight, ParamTensor& bias, const Tensor4& dout,
                          Tensor4* din) {
    const std::size_t oc_n = weight.shape[0];
    const std::size_t ic_n = weight.shape[1];
    const std::size_t k = weight.shape[2];
    const long pad = static_cast<long>(k / 2);
    const long h = static_cast<long>(in.height());
    const long w = static_cast<long>(in.width());
    if (din != nullptr) *din = Tensor4(in.batch(), ic_n, in.height(), in.width());
    for (std::size_t n = 0; n < in.batch(); ++n) {
        for (std::size_t oc = 0; oc < oc_n; ++oc) {
            const double* g = dout.plane(n, oc);
            double bsum = 0.0;
            for (std::size_t i = 0; i < dout.plane_size(); ++i) bsum += g[i];
            bias.grad[oc] += bsum;
            for (std::size_t ic = 0; ic < ic_n; ++ic) {
                const double* src = in.plane(n, ic);
                double* dsrc = din != nullptr ? din->plane(n, ic) : nullptr;
                const std::size_t base = (oc * ic_n + ic) * k * k;
                for (long ky = 0; ky < static_cast<long>(k); ++ky) {
                    const long dy = ky - pad;
                    const long y0 = std::max(0L, -dy);
                    const long y1 = std::min(h, h - dy);
                    for (long kx = 0; kx < static_cast<long>(k); ++kx) {
                        const long dx = kx - pad;
                        const long x0 = std::max(0L, -dx);
                        const long x1 = std::min(w, w - dx);
                        const std::size_t widx = base + static_cast<std::size_t>(ky * static_cast<long>(k) + kx);
                        const double wv = weight.value[widx];
                        double acc = 0.0;
                        for (long y = y0; y < y1; ++y) {
                            const double* grow = g + y * w;
                            const double* irow = src + (y + dy) * w + dx;
                            for (long x = x0; x < x1; ++x) acc += grow[x] * irow[x];
                            if (dsrc != nullptr) {
                                double* drow = dsrc + (y + dy) * w + dx;
                                for (long x = x0; x < x1; ++x) drow[x] += wv * grow[x];
                            }
                        }
                        weight.grad[widx] += acc;
                    }
                }
            }
        }
    }
}

inline void relu_inplace(Tensor4& t) {
    for (double& v : t.data()) v = v > 0.0 ? v : 0.0;
}

// grad *= (activation > 0)
inline void relu_mask(const Tensor4& activation, Tensor4& grad) {
    auto a = activation.data();
    auto g = grad.data();
    for (std::size_t i = 0; i < g.size(); ++i)
        if (!(a[i] > 0.0)) g[i] = 0.0;
}

inline void add_inplace(Tensor4& dst, const Tensor4& src) {
    auto d = dst.data();
    auto s = src.data();
    for (std::size_t i = 0; i < d.size(); ++i) d[i] += s[i];
}

// --- batch normalization -------------------------------------------------------------

struct NormCache {
    Tensor4 normalized;          // x-hat
    std::vector<double> invstd;  // per channel
};

inline Tensor4 batchnorm_forward(const Tensor4& in, const ParamStore& params, std::size_t skip, Mode mode,
                                 NormCache* cache, ParamStore* stats_sink) {
    const auto& gamma = params.get(layer_names::skip(skip, "bn.gamma")).value;
    const auto& beta = params.get(layer_names::skip(skip, "bn.beta")).value;
    const auto& run_mean = params.get(layer_names::skip(skip, "bn.running_mean")).value;
    const auto& run_var = params.get(layer_names::skip(skip, "bn.running_var")).value;
    const std::size_t channels = in.channels();
    const std::size_t plane = in.plane_size();
    const double count = static_cast<double>(in.batch() * plane);

    Tensor4 out(in.batch(), channels, in.height(), in.width());
    if (cache != nullptr) {
        cache->normalized = Tensor4(in.batch(), channels, in.height(), in.width());
        cache->invstd.assign(channels, 0.0);
    }
    std::vector<double> batch_mean(channels, 0.0), batch_var(channels, 0.0);
    for (std::size_t c = 0; c < channels; ++c) {
        double mean = run_mean[c];
        double var = run_var[c];
        if (mode == Mode::Train) {
            double s = 0.0;
            for (std::size_t n = 0; n < in.batch(); ++n) {
                const double* p = in.plane(n, c);
                for (std::size_t i = 0; i < plane; ++i) s += p[i];
            }
            mean = s / count;
            double v = 0.0;
            for (std::size_t n = 0; n < in.batch(); ++n) {
                const double* p = in.plane(n, c);
                for (std::size_t i = 0; i < plane; ++i) v += (p[i] - mean) * (p[i] - mean);
            }
            var = v / count;
            batch_mean[c] = mean;
            batch_var[c] = var;
        }
        const double invstd = 1.0 / std::sqrt(var + kBatchNormEpsilon);
        if (cache != nullptr) cache->invstd[c] = invstd;
        for (std::size_t n = 0; n < in.batch(); ++n) {
            const double* p = in.plane(n, c);
            double* o = out.plane(n, c);
            double* xh = cache != nullptr ? cache->normalized.plane(n, c) : nullptr;
            for (std::size_t i = 0; i < plane; ++i) {
                const double norm = (p[i] - mean) * invstd;
                if (xh != nullptr) xh[i] = norm;
                o[i] = gamma[c] * norm + beta[c];
            }
        }
    }
    if (mode == Mode::Train && stats_sink != nullptr) {
        auto& rm = stats_sink->get(layer_names::skip(skip, "bn.running_mean")).value;
        auto& rv = stats_sink->get(layer_names::skip(skip, "bn.running_var")).value;
        for (std::size_t c = 0; c < channels; ++c) {
            rm[c] = kBatchNormMomentum * rm[c] + (1.0 - kBatchNormMomentum) * batch_mean[c];
            rv[c] = kBatchNormMomentum * rv[c] + (1.0 - kBatchNormMomentum) * batch_var[c];
        }
    }
    return out;
}

// Train-mode backward (batch statistics).
inline Tensor4 batchnorm_backward(const NormCache& cache, ParamStore& params, std::size_t skip,
                                  const Tensor4& dout) {
    auto& gamma = params.get(layer_names::skip(skip, "bn.gamma"));
    auto& beta = params.get(layer_names::skip(skip, "bn.beta"));
    const std::size_t channels = dout.channels();
    const std::size_t plane = dout.plane_size();
    const double count = static_cast<double>(dout.batch() * plane);
    Tensor4 din(dout.batch(), channels, dout.height(), dout.width());
    for (std::size_t c = 0; c < channels; ++c) {
        double sum_dy = 0.0;
        double sum_dy_xhat = 0.0;
        for (std::size_t n = 0; n < dout.batch(); ++n) {
            const double* g = dout.plane(n, c);
            const double* xh = cache.normalized.plane(n, c);
            for (std::size_t i = 0; i < plane; ++i) {
                sum_dy += g[i];
                sum_dy_xhat += g[i] * xh[i];
            }
        }
        gamma.grad[c] += sum_dy_xhat;
        beta.grad[c] += sum_dy;
        const double scale = gamma.value[c] * cache.invstd[c] / count;
        for (std::size_t n = 0; n < dout.batch(); ++n) {
            const double* g = dout.plane(n, c);
            const double* xh = cache.normalized.plane(n, c);
            double* d = din.plane(n, c);
            for (std::size_t i = 0; i < plane; ++i) d[i] = scale * (count * g[i] - sum_dy - xh[i] * sum_dy_xhat);
        }
    }
    return din;
}

// --- full network --------------------------------------------------------------------

struct ForwardTrace {
    Tensor4 input;
    Tensor4 stem;                 // post-relu
    std::vector<Tensor4> mid;     // per block, post-relu after conv_a
    std::vector<Tensor4> blocks;  // per block output (post-relu); index 0 unused
    std::vector<NormCache> norm;  // per skip, aligned with arch.skip_sources
    std::vector<Tensor4> skip_out;
    Tensor4 trunk;
    Tensor4 merged;
};

inline Tensor4 run_forward(const ParamStore& params, const NetArchitecture& arch, const Tensor4& input, Mode mode,
                           ForwardTrace* trace, ParamStore* stats_sink) {
    validate_params(params, arch);
    require(input.channels() == arch.input_channels, "forward: input has ", input.channels(),
            " channels, architecture expects ", arch.input_channels);
    auto conv = [&](const std::string& name, const Tensor4& in, Tensor4& out) {
        conv_forward(in, params.get(name + ".weight"), params.get(name + ".bias"), out);
    };

    Tensor4 stem;
    conv("stem", input, stem);
    relu_inplace(stem);

    std::vector<Tensor4> blocks(arch.block_count + 1);
    std::vector<Tensor4> mids(arch.block_count + 1);
    blocks[0] = std::move(stem);
    for (std::size_t b = 1; b <= arch.block_count; ++b) {
        conv(layer_names::block(b, "conv_a"), blocks[b - 1], mids[b]);
        relu_inplace(mids[b]);
        Tensor4 out;
        conv(layer_names::block(b, "conv_b"), mids[b], out);
        add_inplace(out, blocks[b - 1]);
        relu_inplace(out);
        blocks[b] = std::move(out);
    }

    std::vector<NormCache> norms(arch.skip_sources.size());
    std::vector<Tensor4> skips(arch.skip_sources.size());
    for (std::size_t s = 0; s < arch.skip_sources.size(); ++s) {
        const std::size_t k = arch.skip_sources[s];
        Tensor4 normed = batchnorm_forward(blocks[k], params, k, mode, trace != nullptr ? &norms[s] : nullptr,
                                           stats_sink);
        conv(layer_names::skip(k, "proj"), normed, skips[s]);
    }
    Tensor4 trunk;
    conv("trunk_proj", blocks[arch.block_count], trunk);

    Tensor4 merged;
    if (arch.merge == SkipMerge::Sum) {
        merged = trunk;
        for (const auto& s : skips) add_inplace(merged, s);
    } else {
        const std::size_t oc = arch.output_channels;
        merged = Tensor4(input.batch(), arch.merged_channels(), input.height(), input.width());
        for (std::size_t n = 0; n < input.batch(); ++n)
            for (std::size_t part = 0; part <= skips.size(); ++part) {
                const Tensor4& src = part == 0 ? trunk : skips[part - 1];
                for (std::size_t c = 0; c < oc; ++c)
                    std::copy_n(src.plane(n, c), src.plane_size(), merged.plane(n, part * oc + c));
            }
    }
    Tensor4 output;
    conv("head", merged, output);
    if (arch.input_residual) add_inplace(output, input);

    if (trace != nullptr) {
        trace->input = input;
        trace->stem = blocks[0];
        trace->mid = std::move(mids);
        trace->blocks = std::move(blocks);
        trace->norm = std::move(norms);
        trace->skip_out = std::move(skips);
        trace->trunk = std::move(trunk);
        trace->merged = std::move(merged);
    }
    return output;
}

}  // namespace detail

/// Eval-mode forward: a pure function of (params, input) using running statistics.
inline Tensor4 forward(const ParamStore& params, const NetArchitecture& arch, const Tensor4& input) {
    return detail::run_forward(params, arch, input, Mode::Eval, nullptr, nullptr);
}

/// Forward in either mode. Train mode normalizes with batch statistics and folds
/// them into the running statistics stored in `params`.
inline Tensor4 forward(ParamStore& params, const NetArchitecture& arch, const Tensor4& input, Mode mode) {
    return detail::run_forward(params, arch, input, mode, nullptr, mode == Mode::Train ? &params : nullptr);
}

struct BackwardResult {
    double loss = 0.0;
    Tensor4 output;
};

/// Train-mode forward followed by backpropagation of the mean Huber loss between
/// output and target. Gradient buffers are overwritten.
inline BackwardResult backward(ParamStore& params, const NetArchitecture& arch, const Tensor4& input,
                               const Tensor4& target) {
    using namespace detail;
    ForwardTrace tr;
    Tensor4 output = run_forward(params, arch, input, Mode::Train, &tr, &params);
    require(target.same_shape(output), "backward: target shape ", target.batch(), "x", target.channels(), "x",
            target.height(), "x", target.width(), " does not match output ", output.batch(), "x",
            output.channels(), "x", output.height(), "x", output.width());
    params.zero_grad();

    const auto out = output.data();
    const auto tgt = target.data();
    std::vector<double> residual(out.size());
    for (std::size_t i = 0; i < out.size(); ++i) residual[i] = out[i] - tgt[i];
    const double loss = huber_loss(residual);

    Tensor4 d_out(output.batch(), output.channels(), output.height(), output.width());
    const double inv_n = 1.0 / static_cast<double>(residual.size());
    for (std::size_t i = 0; i < residual.size(); ++i) d_out.data()[i] = huber_derivative(residual[i]) * inv_n;

    auto conv_back = [&](const std::string& name, const Tensor4& in, const Tensor4& dy, Tensor4* dx) {
        conv_backward(in, params.get(name + ".weight"), params.get(name + ".bias"), dy, dx);
    };

    Tensor4 d_merged;
    conv_back("head", tr.merged, d_out, &d_merged);

    const std::size_t oc = arch.output_channels;
    auto merged_slice = [&](std::size_t part) {
        if (arch.merge == SkipMerge::Sum) return d_merged;
        Tensor4 slice(d_merged.batch(), oc, d_merged.height(), d_merged.width());
        for (std::size_t n = 0; n < d_merged.batch(); ++n)
            for (std::size_t c = 0; c < oc; ++c)
                std::copy_n(d_merged.plane(n, part * oc + c), d_merged.plane_size(), slice.plane(n, c));
        return slice;
    };

    std::vector<Tensor4> d_blocks(arch.block_count + 1);
    for (std::size_t b = 0; b <= arch.block_count; ++b)
        d_blocks[b] = Tensor4(input.batch(), arch.channels_per_block, input.height(), input.width());

    {
        Tensor4 d_final;
        conv_back("trunk_proj", tr.blocks[arch.block_count], merged_slice(0), &d_final);
        add_inplace(d_blocks[arch.block_count], d_final);
    }
    for (std::size_t s = 0; s < arch.skip_sources.size(); ++s) {
        const std::size_t k = arch.skip_sources[s];
        // The projection input (batch-norm output) is rebuilt from the cached x-hat.
        const auto& gamma = params.get(layer_names::skip(k, "bn.gamma")).value;
        const auto& beta = params.get(layer_names::skip(k, "bn.beta")).value;
        Tensor4 normed = tr.norm[s].normalized;
        for (std::size_t n = 0; n < normed.batch(); ++n)
            for (std::size_t c = 0; c < normed.channels(); ++c) {
                double* p = normed.plane(n, c);
                for (std::size_t i = 0; i < normed.plane_size(); ++i) p[i] = gamma[c] * p[i] + beta[c];
            }
        Tensor4 d_normed;
        conv_back(layer_names::skip(k, "proj"), normed, merged_slice(s + 1), &d_normed);
        add_inplace(d_blocks[k], batchnorm_backward(tr.norm[s], params, k, d_normed));
    }

    for (std::size_t b = arch.block_count; b >= 1; --b) {
        Tensor4 d_pre = std::move(d_blocks[b]);
        relu_mask(tr.blocks[b], d_pre);
        add_inplace(d_blocks[b - 1], d_pre);  // identity shortcut
        Tensor4 d_mid;
        conv_back(layer_names::block(b, "conv_b"), tr.mid[b], d_pre, &d_mid);
        relu_mask(tr.mid[b], d_mid);
        Tensor4 d_in;
        conv_back(layer_names::block(b, "conv_a"), tr.blocks[b - 1], d_mid, &d_in);
        add_inplace(d_blocks[b - 1], d_in);
    }
    relu_mask(tr.stem, d_blocks[0]);
    conv_back("stem", tr.input, d_blocks[0], nullptr);

    return BackwardResult{loss, std::move(output)};
}

}  // namespace facedeblur
