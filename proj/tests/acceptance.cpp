// Copyright 2026 The facedeblur Authors
// SPDX-License-Identifier: Apache-2.0

// End-to-end acceptance run. Prints one PASS/FAIL line per criterion and exits
// non-zero if any criterion fails.

#include <chrono>
#include <cmath>
#include <functional>
#include <iomanip>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "facedeblur/blur.hpp"
#include "facedeblur/checkpoint.hpp"
#include "facedeblur/eval.hpp"
#include "facedeblur/gradcheck.hpp"
#include "facedeblur/metrics.hpp"
#include "facedeblur/mining.hpp"
#include "facedeblur/resample.hpp"
#include "facedeblur/synthetic.hpp"
#include "facedeblur/trainer.hpp"
#include "oracles.hpp"
#include "scripted_mining.hpp"

namespace {

using namespace facedeblur;
using Clock = std::chrono::steady_clock;

// Tolerances.
constexpr double kGradTolerance = 1e-4;
constexpr double kGradStep = 1e-5;
constexpr double kGradSeconds = 60.0;
constexpr double kDeskPsnrGain = 0.3;
constexpr double kDeskSeconds = 30.0 * 60.0;
constexpr std::size_t kDeskMaxSteps = 5000;
constexpr double kOracleTolerance = 1e-9;
constexpr double kConvTolerance = 1e-10;
constexpr std::size_t kOracleInstances = 100;
constexpr double kPsnrClosedFormTolerance = 1e-12;
constexpr double kScalingTolerance = 1e-9;
constexpr double kFlowMeanError = 0.5;
constexpr double kClassifierRate = 0.9;

struct Verdict {
    bool pass = false;
    std::string detail;
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(double v, int precision = 4) {
    std::ostringstream os;
    os << std::setprecision(precision) << v;
    return os.str();
}

// 1 -------------------------------------------------------------------------

Verdict gradient_correctness() {
    const auto t0 = Clock::now();
    NetArchitecture arch = NetArchitecture::small();
    GradCheckOptions opt;
    opt.step = kGradStep;
    opt.height = 8;
    opt.width = 8;
    const GradCheckReport r = gradient_check(arch, 7, opt);
    const double secs = seconds_since(t0);
    const bool ok = arch.block_count == 2 && arch.channels_per_block == 4 && r.max_relative_error < kGradTolerance &&
                    secs < kGradSeconds && r.checked > 0;
    return {ok, "max relative error " + fmt(r.max_relative_error) + " over " + std::to_string(r.checked) +
                    " parameters in " + fmt(secs, 3) + " s"};
}

// 2 -------------------------------------------------------------------------

struct DeskRun {
    std::string checkpoint_bytes;
    EvalSummary summary;
    double seconds = 0.0;
};

DeskRun desk_run() {
    Rng rng(1);
    std::vector<Image> train_set, held_out;
    for (int i = 0; i < 500; ++i) train_set.push_back(make_pattern(rng, 32, 32));
    for (int i = 0; i < 70; ++i) held_out.push_back(make_pattern(rng, 32, 32));

    const NetArchitecture arch = NetArchitecture::small();
    TrainConfig cfg;
    cfg.seed = 7;
    cfg.max_steps = 3000;
    cfg.lr_initial = 0.05;
    cfg.single_pass = false;
    cfg.gaussian_sigma_min = 1.0;
    cfg.gaussian_sigma_max = 2.0;
    cfg.motion_probability = 0.0;

    const auto t0 = Clock::now();
    const TrainResult trained = train(train_set, arch, cfg);
    DeskRun run;
    run.seconds = seconds_since(t0);
    std::ostringstream bytes;
    write_checkpoint(bytes, Checkpoint{arch, cfg.seed, trained.params});
    run.checkpoint_bytes = bytes.str();

    SelfEvalConfig eval;
    eval.sigma_min = 1.0;
    eval.sigma_max = 2.0;
    eval.seed = 999;
    run.summary = self_evaluation(held_out, trained.params, arch, eval);
    return run;
}

Verdict desk_direction(const DeskRun& run) {
    const EvalSummary& s = run.summary;
    const double gain = s.mean_psnr_deblurred - s.mean_psnr_blurred;
    const bool ok = s.records.size() == 70 && s.failures.empty() && gain >= kDeskPsnrGain &&
                    s.mean_ssim_deblurred > s.mean_ssim_blurred && run.seconds < kDeskSeconds && 3000 <= kDeskMaxSteps;
    return {ok, "PSNR " + fmt(s.mean_psnr_blurred, 5) + " -> " + fmt(s.mean_psnr_deblurred, 5) + " dB (+" +
                    fmt(gain, 3) + "), SSIM " + fmt(s.mean_ssim_blurred) + " -> " + fmt(s.mean_ssim_deblurred) +
                    ", trained in " + fmt(run.seconds, 4) + " s"};
}

// 3 -------------------------------------------------------------------------

Verdict oracle_equivalence() {
    Rng rng(2026);
    auto dim = [&](std::size_t lo, std::size_t hi) {
        return lo + static_cast<std::size_t>(uniform(rng, 0.0, 1.0) * static_cast<double>(hi - lo + 1)) % (hi - lo + 1);
    };
    double conv = 0, ps = 0, ss = 0, hu = 0, avg = 0, bil = 0;
    for (std::size_t n = 0; n < kOracleInstances; ++n) {
        const std::size_t c = n % 2 ? 3 : 1;
        const Image img = oracle::random_image(rng, dim(6, 14), dim(6, 14), c);
        const BlurKernel k = oracle::random_kernel(rng, 1 + 2 * dim(0, 2), 1 + 2 * dim(0, 2));
        conv = std::max(conv, oracle::max_abs_diff(convolve(img, k, ConvMode::Same), oracle::convolve_scatter(img, k, false)));
        conv = std::max(conv, oracle::max_abs_diff(convolve(img, k, ConvMode::Valid), oracle::convolve_scatter(img, k, true)));

        const std::size_t h = dim(11, 18), w = dim(11, 18);
        const Image a = oracle::random_image(rng, h, w, c);
        const Image b = oracle::random_image(rng, h, w, c);
        ps = std::max(ps, std::fabs(psnr(a, b) - oracle::psnr(a, b)));
        ss = std::max(ss, std::fabs(ssim(a, b) - oracle::ssim(a, b)));

        std::vector<double> r(dim(1, 40));
        for (double& v : r) v = uniform(rng, -3.0, 3.0);
        hu = std::max(hu, std::fabs(huber_loss(r) - oracle::huber(r)));

        std::vector<Image> frames;
        const std::size_t fh = dim(2, 9), fw = dim(2, 9);
        for (std::size_t f = 0, m = dim(1, 11); f < m; ++f) frames.push_back(oracle::random_image(rng, fh, fw, c));
        avg = std::max(avg, oracle::max_abs_diff(average_frames(frames), oracle::average(frames)));

        const Image src = oracle::random_image(rng, dim(2, 12), dim(2, 12), c);
        const std::size_t oh = dim(1, 24), ow = dim(1, 24);
        bil = std::max(bil, oracle::max_abs_diff(resize_bilinear(src, oh, ow), oracle::resize(src, oh, ow)));
    }
    const bool ok = conv < kConvTolerance && ps < kOracleTolerance && ss < kOracleTolerance && hu < kOracleTolerance &&
                    avg < kOracleTolerance && bil < kOracleTolerance;
    return {ok, std::to_string(kOracleInstances) + " instances each; max diffs conv " + fmt(conv, 2) + ", psnr " +
                    fmt(ps, 2) + ", ssim " + fmt(ss, 2) + ", huber " + fmt(hu, 2) + ", average " + fmt(avg, 2) +
                    ", bilinear " + fmt(bil, 2)};
}

// 4 -------------------------------------------------------------------------

Verdict closed_forms() {
    const TrainConfig cfg;
    const bool lr = learning_rate(cfg, 0) == 0.0003 && learning_rate(cfg, 15000) == 0.00015 &&
                    learning_rate(cfg, 30000) == 0.000075;
    const bool hub = huber_loss(std::vector<double>{0.0}) == 0.0 && huber_loss(std::vector<double>{0.5}) == 0.125 &&
                     huber_loss(std::vector<double>{2.0}) == 1.5;
    const double p = psnr(Image(16, 16, 1, 0.5), Image(16, 16, 1, 0.4));
    const bool ps = std::fabs(p - 20.0) <= kPsnrClosedFormTolerance;
    return {lr && hub && ps, std::string("learning rate ") + (lr ? "exact" : "WRONG") + ", huber " +
                                 (hub ? "exact" : "WRONG") + ", psnr " + fmt(p, 17)};
}

// 5 -------------------------------------------------------------------------

Verdict scaling_ambiguity() {
    Rng rng(55);
    double worst = 0.0;
    for (int n = 0; n < 50; ++n) {
        const Image img = oracle::random_image(rng, 12, 12, n % 2 ? 3 : 1);
        const BlurKernel k = oracle::random_kernel(rng, 3 + 2 * (n % 2), 3 + 2 * (n % 3 == 0));
        const Image ref = blur(img, k, BlurConfig{});
        for (double lambda : {0.5, 2.0}) {
            Image scaled = img;
            for (double& v : scaled.data()) v *= lambda;
            worst = std::max(worst, oracle::max_abs_diff(blur(scaled, k.scaled(1.0 / lambda), BlurConfig{}), ref));
        }
    }
    return {worst < kScalingTolerance, "50 instances, max diff " + fmt(worst, 3)};
}

// 6 -------------------------------------------------------------------------

struct ScenarioOutputs {
    std::string manifests;
    std::string ledgers;
};

Verdict mining_conformance(ScenarioOutputs* out) {
    const auto all = scripted::scenarios();
    std::size_t matched = 0;
    std::string mismatches;
    for (const auto& sc : all) {
        const mining::MiningResult r = scripted::run(sc);
        if (r.video_accepted == sc.expect_accepted && r.accepted_frames.size() == sc.expect_frames)
            ++matched;
        else
            mismatches += " " + sc.name;
        if (out) {
            std::ostringstream m, l;
            mining::write_manifest(m, r);
            mining::write_ledger(l, r);
            out->manifests += sc.name + "\n" + m.str();
            out->ledgers += sc.name + "\n" + l.str();
        }
    }
    const bool ok = all.size() >= 10 && matched == all.size();
    return {ok, std::to_string(matched) + "/" + std::to_string(all.size()) + " scenarios match" +
                    (mismatches.empty() ? "" : "; mismatched:" + mismatches)};
}

// 7 -------------------------------------------------------------------------

Verdict motion_protocol() {
    Rng rng(7);
    const Image canvas = make_texture(rng, 48, 120, 3);
    std::vector<Image> clip;
    for (std::size_t k = 0; k < 21; ++k) clip.push_back(crop(canvas, 4, 4 + 2 * k, 40, 40));
    mining::BlockMatchingFlow flow;
    const SimBlurConfig cfg;
    const SimBlurResult r = simulate_motion_blur(clip, cfg, flow);

    const std::size_t half = cfg.frames_to_average / 2;
    bool middle = true, mean = true, threshold = true;
    for (const auto& p : r.pairs) {
        const std::vector<Image> window(clip.begin() + static_cast<long>(p.first_frame),
                                        clip.begin() + static_cast<long>(p.first_frame + cfg.frames_to_average));
        middle = middle && p.ground_truth == clip[p.first_frame + half];
        mean = mean && oracle::max_abs_diff(p.blurred, oracle::mean_of(window)) < kOracleTolerance;
        threshold = threshold && psnr(p.ground_truth, p.blurred) >= cfg.min_psnr_keep;
        for (std::size_t k = 1; k < window.size(); ++k)
            threshold = threshold && flow.compute(window[k - 1], window[k]).mean_magnitude() >= cfg.min_pair_motion;
    }
    const std::vector<Image> still(21, clip[0]);
    const SimBlurResult s = simulate_motion_blur(still, cfg, flow);
    const bool ok = !r.pairs.empty() && middle && mean && threshold && s.pairs.empty();
    return {ok, std::to_string(r.pairs.size()) + " pairs from translating clip (middle " + (middle ? "ok" : "BAD") +
                    ", mean " + (mean ? "ok" : "BAD") + ", thresholds " + (threshold ? "ok" : "BAD") + "); static clip " +
                    std::to_string(s.pairs.size()) + " pairs"};
}

// 8 -------------------------------------------------------------------------

Image paste(const Image& patch, std::size_t h, std::size_t w, long y, long x) {
    Image out(h, w, 1, 0.5);
    for (std::size_t v = 0; v < patch.height(); ++v)
        for (std::size_t u = 0; u < patch.width(); ++u)
            out.at(static_cast<std::size_t>(y) + v, static_cast<std::size_t>(x) + u) = patch.at(v, u);
    return out;
}

Verdict reference_components() {
    using namespace mining;
    Rng rng(5);
    const Image patch = make_texture(rng, 16, 16);
    std::size_t exact = 0, tried = 0;
    for (long dy = -5; dy <= 5; ++dy)
        for (long dx = -5; dx <= 5; ++dx) {
            NccTracker tracker;
            const BoundingBox start{20, 20, 36, 36};
            tracker.track(paste(patch, 60, 60, 20, 20), start);
            const BoundingBox got = tracker.track(paste(patch, 60, 60, 20 + dy, 20 + dx), start);
            exact += got == start.translated(static_cast<double>(dx), static_cast<double>(dy));
            ++tried;
        }

    const Image canvas = make_texture(rng, 96, 96);
    BlockMatchingFlow flow;
    double worst_flow = 0.0;
    for (long dy = -6; dy <= 6; dy += 3)
        for (long dx = -7; dx <= 7; dx += 2) {
            const Image a = crop(canvas, 16, 16, 64, 64);
            const Image b = crop(canvas, static_cast<std::size_t>(16 - dy), static_cast<std::size_t>(16 - dx), 64, 64);
            const FlowField f = flow.compute(a, b);
            double err = 0.0;
            for (const auto& v : f.vectors) err += std::hypot(v.dx - static_cast<double>(dx), v.dy - static_cast<double>(dy));
            worst_flow = std::max(worst_flow, f.vectors.empty() ? INFINITY : err / static_cast<double>(f.vectors.size()));
        }

    Rng face_rng(13);
    std::vector<Image> images;
    std::vector<SparseShape> shapes;
    for (int i = 0; i < 60; ++i) {
        auto s = make_face_sample(face_rng, 64, 64, 30, 44);
        images.push_back(std::move(s.image));
        shapes.push_back(std::move(s.shape));
    }
    ClassifierTrainConfig cfg;
    cfg.seed = 5;
    const FittingClassifier clf = train_fitting_classifier(images, shapes, cfg);
    std::size_t accepted = 0, rejected = 0, perturbed = 0;
    for (std::size_t i = 0; i < images.size(); ++i) {
        accepted += clf.accept(images[i], shapes[i]);
        const double d = 0.5 * face_size(shapes[i]);
        for (auto [px, py] : {std::pair{d, 0.0}, std::pair{-d, 0.0}, std::pair{0.0, d}, std::pair{0.0, -d}}) {
            rejected += !clf.accept(images[i], shapes[i].translated(px, py));
            ++perturbed;
        }
    }
    const double accept_rate = static_cast<double>(accepted) / static_cast<double>(images.size());
    const double reject_rate = static_cast<double>(rejected) / static_cast<double>(perturbed);
    const bool ok = exact == tried && worst_flow <= kFlowMeanError && accept_rate >= kClassifierRate &&
                    reject_rate >= kClassifierRate;
    return {ok, "tracker " + std::to_string(exact) + "/" + std::to_string(tried) + " exact, worst flow error " +
                    fmt(worst_flow, 3) + " px, classifier accepts " + fmt(100 * accept_rate, 3) + "% and rejects " +
                    fmt(100 * reject_rate, 3) + "% of perturbed fits"};
}

// 9 -------------------------------------------------------------------------

Verdict determinism(const DeskRun& first, const ScenarioOutputs& first_mining) {
    const DeskRun second = desk_run();
    ScenarioOutputs again;
    mining_conformance(&again);
    const bool ck = first.checkpoint_bytes == second.checkpoint_bytes;
    const bool ev = first.summary.mean_psnr_deblurred == second.summary.mean_psnr_deblurred &&
                    first.summary.mean_ssim_deblurred == second.summary.mean_ssim_deblurred;
    const bool mf = first_mining.manifests == again.manifests && first_mining.ledgers == again.ledgers;
    return {ck && ev && mf, std::string("checkpoints ") + (ck ? "identical" : "DIFFER") + " (" +
                                std::to_string(first.checkpoint_bytes.size()) + " bytes), evaluation " +
                                (ev ? "identical" : "DIFFERS") + ", manifests and ledgers " +
                                (mf ? "identical" : "DIFFER")};
}

}  // namespace

// Optional arguments pick criteria by number; determinism pulls in 2 and 6.
int main(int argc, char** argv) {
    std::set<int> wanted;
    for (int i = 1; i < argc; ++i) wanted.insert(std::stoi(argv[i]));
    if (wanted.count(9)) wanted.insert({2, 6});
    int failures = 0;
    auto report = [&](int id, const std::string& name, const std::function<Verdict()>& check) {
        if (!wanted.empty() && !wanted.count(id)) return;
        Verdict v;
        try {
            v = check();
        } catch (const std::exception& e) {
            v = {false, std::string("threw: ") + e.what()};
        }
        failures += !v.pass;
        std::cout << (v.pass ? "PASS" : "FAIL") << " " << id << " " << name << ": " << v.detail << std::endl;
    };

    DeskRun desk;
    ScenarioOutputs mining_outputs;
    report(1, "gradient correctness", gradient_correctness);
    report(2, "desk-scale deblurring direction", [&] {
        desk = desk_run();
        return desk_direction(desk);
    });
    report(3, "oracle equivalence", oracle_equivalence);
    report(4, "closed-form values", closed_forms);
    report(5, "scaling ambiguity", scaling_ambiguity);
    report(6, "mining pipeline conformance", [&] { return mining_conformance(&mining_outputs); });
    report(7, "simulated motion blur protocol", motion_protocol);
    report(8, "reference component sanity", reference_components);
    report(9, "determinism", [&] { return determinism(desk, mining_outputs); });
    std::cout << (failures ? "FAILED " + std::to_string(failures) + " criteria" : std::string("ALL PASSED")) << "\n";
    return failures ? 1 : 0;
}
