// Copyright 2026 The facedeblur Authors
// SPDX-License-Identifier: Apache-2.0

// facedeblur: command-line front end. Exit codes: 0 success, 1 contract violation or
// runtime failure (one line on stderr), 2 malformed flags (usage on stderr).

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "facedeblur/blur.hpp"
#include "facedeblur/checkpoint.hpp"
#include "facedeblur/eval.hpp"
#include "facedeblur/gradcheck.hpp"
#include "facedeblur/image_io.hpp"
#include "facedeblur/kernel.hpp"
#include "facedeblur/mining.hpp"
#include "facedeblur/synthetic.hpp"
#include "facedeblur/trainer.hpp"

namespace {

using namespace facedeblur;
namespace fs = std::filesystem;

/// A flag combination CLI11 cannot express; reported like a parse error.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void usage_check(bool ok, const std::string& message) {
    if (!ok) throw UsageError(message);
}

NetArchitecture architecture(const std::string& name) {
    return name == "standard" ? NetArchitecture::standard() : NetArchitecture::small();
}

BitDepth bit_depth(int bits) { return bits == 16 ? BitDepth::Sixteen : BitDepth::Eight; }

std::vector<Image> load_all(const std::vector<fs::path>& paths) {
    std::vector<Image> out;
    out.reserve(paths.size());
    for (const auto& p : paths) out.push_back(load_image(p));
    return out;
}

std::vector<Image> generated_patterns(std::size_t count, std::size_t side, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<Image> out;
    for (std::size_t i = 0; i < count; ++i) out.push_back(make_pattern(rng, side, side));
    return out;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream os(path);
    require(os.good(), "cannot write ", path.string());
    os << text;
    require(os.good(), "write failed for ", path.string());
}

const auto kOddOrZero = CLI::Validator(
    [](std::string& v) {
        const long n = std::stol(v);
        return n == 0 || (n > 0 && n % 2 == 1) ? std::string{} : "must be 0 or a positive odd number";
    },
    "ODD", "odd");

// ---------------------------------------------------------------------------
// blur / kernel

struct KernelArgs {
    std::string type = "gaussian";
    double sigma = 1.0;
    long size = 0;
    long length = 9;
    double angle = 0.0;
    std::string file;
};

void add_kernel_flags(CLI::App* sub, KernelArgs& k, bool allow_file) {
    std::vector<std::string> kinds{"gaussian", "motion"};
    if (allow_file) kinds.push_back("file");
    sub->add_option("--kernel", k.type, "Kernel family")->check(CLI::IsMember(kinds))->capture_default_str();
    sub->add_option("--sigma", k.sigma, "Gaussian standard deviation")->check(CLI::PositiveNumber)->capture_default_str();
    sub->add_option("--size", k.size, "Gaussian side (odd; 0 derives it from sigma)")->check(kOddOrZero);
    sub->add_option("--length", k.length, "Motion length in pixels")->check(CLI::PositiveNumber)->capture_default_str();
    sub->add_option("--angle", k.angle, "Motion angle in degrees, counter-clockwise")->capture_default_str();
    if (allow_file) sub->add_option("--kernel-file", k.file, "Kernel text file")->check(CLI::ExistingFile);
}

BlurKernel build_kernel(const KernelArgs& k) {
    if (k.type == "file") {
        usage_check(!k.file.empty(), "--kernel file needs --kernel-file");
        std::ifstream is(k.file);
        require(is.good(), "cannot read ", k.file);
        return read_kernel(is);
    }
    if (k.type == "motion") return make_motion_kernel(k.length, k.angle * std::numbers::pi / 180.0);
    const std::size_t size = k.size > 0 ? static_cast<std::size_t>(k.size) : gaussian_support(k.sigma);
    return make_gaussian_kernel(k.sigma, size);
}

struct BlurArgs {
    std::string in, out, psi = "identity", mode = "same";
    KernelArgs kernel;
    double noise = 0.0;
    int levels = 256;
    std::uint64_t seed = 0;
    int depth = 8;
};

void run_blur(const BlurArgs& a) {
    if (a.kernel.type == "file") usage_check(!a.kernel.file.empty(), "--kernel file needs --kernel-file");
    BlurConfig cfg;
    cfg.noise_sigma = a.noise;
    cfg.rng_seed = a.seed;
    cfg.conv_mode = a.mode == "valid" ? ConvMode::Valid : ConvMode::Same;
    cfg.psi.kind = a.psi == "clip" ? PsiKind::Clip : a.psi == "quantize" ? PsiKind::ClipQuantize : PsiKind::Identity;
    cfg.psi.levels = a.levels;
    const BlurKernel k = build_kernel(a.kernel);
    save_image(a.out, blur(load_image(a.in), k, cfg), bit_depth(a.depth));
}

struct KernelOnlyArgs {
    KernelArgs kernel;
    std::string out;
    std::string png;
};

void run_kernel(const KernelOnlyArgs& a) {
    const BlurKernel k = build_kernel(a.kernel);
    std::ostringstream os;
    write_kernel(os, k);
    write_text(a.out, os.str());
    if (!a.png.empty()) {
        double peak = 0.0;
        for (double w : k.weights()) peak = std::max(peak, w);
        Image vis(k.height(), k.width(), 1);
        for (std::size_t y = 0; y < k.height(); ++y)
            for (std::size_t x = 0; x < k.width(); ++x) vis.at(y, x) = k.at(y, x) / peak;
        save_image(a.png, vis);
    }
    std::cout << "kernel " << k.height() << "x" << k.width() << " written to " << a.out << "\n";
}

// ---------------------------------------------------------------------------
// train / deblur / eval-self

struct DataArgs {
    std::string dir;
    std::size_t synthetic = 0;
    std::size_t side = 32;
    std::uint64_t seed = 1;
};

void add_data_flags(CLI::App* sub, DataArgs& d) {
    auto* dir = sub->add_option("--data", d.dir, "Directory of sharp images")->check(CLI::ExistingDirectory);
    auto* syn = sub->add_option("--synthetic", d.synthetic, "Use N generated patterns instead of --data")
                    ->check(CLI::PositiveNumber);
    dir->excludes(syn);
    sub->add_option("--pattern-size", d.side, "Side of generated patterns")->check(CLI::Range(11, 4096))->capture_default_str();
    sub->add_option("--data-seed", d.seed, "Seed for generated patterns")->capture_default_str();
}

std::vector<Image> load_data(const DataArgs& d, std::vector<std::string>* ids = nullptr) {
    usage_check(!d.dir.empty() || d.synthetic > 0, "one of --data or --synthetic is required");
    if (d.synthetic > 0) {
        if (ids)
            for (std::size_t i = 0; i < d.synthetic; ++i) ids->push_back("pattern_" + std::to_string(i));
        return generated_patterns(d.synthetic, d.side, d.seed);
    }
    const auto paths = list_images(d.dir);
    require(!paths.empty(), "no images found in ", d.dir);
    if (ids)
        for (const auto& p : paths) ids->push_back(p.stem().string());
    return load_all(paths);
}

struct TrainArgs {
    DataArgs data;
    std::string out, arch = "small", log;
    TrainConfig cfg;
};

void run_train(const TrainArgs& a) {
    const NetArchitecture arch = architecture(a.arch);
    a.cfg.validate();
    const auto dataset = load_data(a.data);
    std::ofstream log;
    if (!a.log.empty()) {
        log.open(a.log);
        require(log.good(), "cannot write ", a.log);
    }
    TrainHooks hooks;
    hooks.on_step = [&](std::size_t step, double loss, double lr) {
        if (log.is_open()) log << format_loss_line(step, loss, lr) << "\n";
    };
    hooks.on_checkpoint = [&](std::size_t step, const ParamStore& params) {
        save_checkpoint(a.out + ".step" + std::to_string(step), Checkpoint{arch, a.cfg.seed, params});
    };
    const TrainResult r = train(dataset, arch, a.cfg, hooks);
    save_checkpoint(a.out, Checkpoint{arch, a.cfg.seed, r.params});
    std::cout << "steps " << r.loss_history.size() << "\n";
    if (!r.loss_history.empty()) std::cout << "final_loss " << std::setprecision(10) << r.loss_history.back() << "\n";
    std::cout << "model " << a.out << "\n";
}

struct DeblurArgs {
    std::string model, in, out;
    int depth = 8;
};

void run_deblur(const DeblurArgs& a) {
    const Checkpoint ck = load_checkpoint(a.model);
    if (fs::is_directory(a.in)) {
        fs::create_directories(a.out);
        for (const auto& p : list_images(a.in))
            save_image(fs::path(a.out) / p.filename(), deblur_image(ck.params, ck.arch, load_image(p)), bit_depth(a.depth));
        return;
    }
    save_image(a.out, deblur_image(ck.params, ck.arch, load_image(a.in)), bit_depth(a.depth));
}

struct EvalSelfArgs {
    std::string model, csv, composites, table;
    DataArgs data;
    SelfEvalConfig cfg;
};

void run_eval_self(const EvalSelfArgs& a) {
    usage_check(a.cfg.sigma_min <= a.cfg.sigma_max, "--sigma-min must not exceed --sigma-max");
    const Checkpoint ck = load_checkpoint(a.model);
    std::vector<std::string> ids;
    const auto images = load_data(a.data, &ids);
    const EvalSummary s = self_evaluation(images, ck.params, ck.arch, a.cfg, ids);
    const std::string table = format_self_eval_table(s);
    std::cout << table;
    std::cout << "items " << s.records.size() << " failed " << s.failures.size() << "\n";
    for (const auto& f : s.failures) std::cout << "failed " << f.id << ": " << f.message << "\n";
    if (!a.table.empty()) write_text(a.table, table);
    if (!a.csv.empty()) {
        std::ostringstream os;
        write_eval_csv(os, s.records);
        write_text(a.csv, os.str());
    }
    if (!a.composites.empty()) {
        fs::create_directories(a.composites);
        TrainConfig blur_cfg;
        blur_cfg.seed = a.cfg.seed;
        blur_cfg.motion_probability = 0.0;
        blur_cfg.gaussian_sigma_min = a.cfg.sigma_min;
        blur_cfg.gaussian_sigma_max = a.cfg.sigma_max;
        blur_cfg.noise_sigma = a.cfg.noise_sigma;
        for (std::size_t i = 0; i < images.size(); ++i) {
            const TrainingPair pair = make_pair(images[i], blur_cfg, i);
            const Image restored = deblur_image(ck.params, ck.arch, pair.blurry);
            save_image(fs::path(a.composites) / (ids[i] + ".png"),
                       make_composite(pair.sharp, clamp_unit(pair.blurry), restored));
        }
    }
}

// ---------------------------------------------------------------------------
// sim-motion / score

struct SimArgs {
    std::string frames, out;
    SimBlurConfig cfg;
    bool no_gate = false;
    int depth = 8;
};

void run_sim_motion(const SimArgs& a) {
    SimBlurConfig cfg = a.cfg;
    cfg.motion_gate = !a.no_gate;
    cfg.validate();
    const auto paths = list_images(a.frames);
    require(!paths.empty(), "no frames found in ", a.frames);
    const auto frames = load_all(paths);
    mining::BlockMatchingFlow flow;
    const SimBlurResult r = simulate_motion_blur(frames, cfg, flow);
    const fs::path blurred_dir = fs::path(a.out) / "blurred";
    const fs::path truth_dir = fs::path(a.out) / "gt";
    fs::create_directories(blurred_dir);
    fs::create_directories(truth_dir);
    for (const auto& p : r.pairs) {
        const std::string name = paths[p.first_frame].stem().string() + ".png";
        save_image(blurred_dir / name, p.blurred, bit_depth(a.depth));
        save_image(truth_dir / name, p.ground_truth, bit_depth(a.depth));
    }
    std::cout << "windows " << r.windows << " kept " << r.pairs.size() << " skipped_static " << r.skipped_static
              << " skipped_noisy " << r.skipped_noisy << "\n";
}

struct ScoreArgs {
    std::string outputs, truth, out;
    std::vector<std::string> references;
};

TableRow parse_reference(const std::string& spec) {
    // label=psnr,ssim
    const auto eq = spec.rfind('=');
    const auto comma = spec.rfind(',');
    usage_check(eq != std::string::npos && comma != std::string::npos && comma > eq,
                "--reference expects label=psnr,ssim, got '" + spec + "'");
    try {
        return {spec.substr(0, eq), std::stod(spec.substr(eq + 1, comma - eq - 1)), std::stod(spec.substr(comma + 1))};
    } catch (const std::logic_error&) {
        throw UsageError("--reference expects label=psnr,ssim, got '" + spec + "'");
    }
}

void run_score(const ScoreArgs& a) {
    std::vector<TableRow> rows;
    for (const auto& r : a.references) rows.push_back(parse_reference(r));
    const ExternalScores s = score_external(a.outputs, a.truth);
    for (const auto& m : s.rows) rows.push_back({m.method, m.psnr, m.ssim});
    const std::string table = format_metric_table(rows);
    std::cout << table;
    std::cout << "unmatched " << s.unmatched.size() << "\n";
    for (const auto& u : s.unmatched) std::cout << "unmatched " << u << "\n";
    if (!a.out.empty()) write_text(a.out, table);
}

// ---------------------------------------------------------------------------
// mine / train-classifier

struct MineArgs {
    std::string frames, classifier, templ, manifest, ledger, rule = "require-movement";
    std::vector<std::size_t> windows{32, 40, 48};
    double detector_threshold = 0.5;
    std::size_t stride = 2;
    long search_radius = 8;
    mining::MiningConfig cfg;
    bool no_gate = false;
};

void run_mine(const MineArgs& a) {
    mining::MiningConfig cfg = a.cfg;
    cfg.motion_gate = !a.no_gate;
    cfg.motion_rule = a.rule == "discard-above" ? mining::MotionRule::DiscardAbove : mining::MotionRule::RequireMovement;
    cfg.validate();
    const auto paths = list_images(a.frames);
    require(!paths.empty(), "no frames found in ", a.frames);

    mining::TemplateDetector::Options opt;
    opt.window_sides = a.windows;
    opt.threshold = a.detector_threshold;
    opt.stride = a.stride;
    mining::ComponentSet components;
    components.detector = std::make_shared<mining::TemplateDetector>(load_image(a.templ), opt);
    components.tracker = std::make_shared<mining::NccTracker>(a.search_radius);
    components.localizer = std::make_shared<mining::MeanShapeLocalizer>();
    components.flow = std::make_shared<mining::BlockMatchingFlow>();
    components.verifier = std::make_shared<mining::FittingClassifier>(mining::load_classifier(a.classifier));

    const auto frames = load_all(paths);
    const mining::MiningResult r = mining::run_pipeline(frames, components, cfg);
    std::ostringstream manifest, ledger;
    mining::write_manifest(manifest, r);
    mining::write_ledger(ledger, r);
    write_text(a.manifest, manifest.str());
    if (!a.ledger.empty()) write_text(a.ledger, ledger.str());
    std::cout << mining::summary_line(r) << "\n";
}

struct ClassifierArgs {
    std::string images, shapes, backgrounds, out, template_out;
    std::size_t synthetic = 0;
    std::size_t side = 64;
    std::size_t template_size = 24;
    mining::ClassifierTrainConfig cfg;
};

void run_train_classifier(const ClassifierArgs& a) {
    usage_check(a.synthetic > 0 || (!a.images.empty() && !a.shapes.empty()),
                "give --images with --shapes, or --synthetic");
    std::vector<Image> images;
    std::vector<mining::SparseShape> shapes;
    if (a.synthetic > 0) {
        Rng rng(mix_seed(a.cfg.seed, 0xface));
        const double lo = 0.45 * static_cast<double>(a.side), hi = 0.7 * static_cast<double>(a.side);
        for (std::size_t i = 0; i < a.synthetic; ++i) {
            auto f = mining::make_face_sample(rng, a.side, a.side, lo, hi);
            images.push_back(std::move(f.image));
            shapes.push_back(std::move(f.shape));
        }
    } else {
        for (const auto& p : list_images(a.images)) {
            const fs::path pts = fs::path(a.shapes) / (p.stem().string() + ".pts");
            require(fs::exists(pts), "no landmark file ", pts.string(), " for ", p.string());
            images.push_back(load_image(p));
            shapes.push_back(mining::load_pts(pts.string()));
        }
    }
    std::vector<Image> backgrounds;
    if (!a.backgrounds.empty()) backgrounds = load_all(list_images(a.backgrounds));

    mining::ClassifierTrainReport report;
    const auto clf = mining::train_fitting_classifier(images, shapes, a.cfg, backgrounds, &report);
    mining::save_classifier(a.out, clf);
    if (!a.template_out.empty())
        save_image(a.template_out, mining::TemplateDetector::average_template(images, shapes, a.template_size),
                   BitDepth::Sixteen);
    std::cout << "positives " << report.positives << " negatives " << report.negatives << "\n";
    std::cout << "cv_balanced_accuracy";
    for (std::size_t i = 0; i < report.cv_balanced_accuracy.size(); ++i)
        std::cout << " C=" << a.cfg.c_grid[i] << ":" << std::fixed << std::setprecision(4)
                  << report.cv_balanced_accuracy[i] << std::defaultfloat;
    std::cout << "\nchosen_c " << report.chosen_c << "\n";
}

// ---------------------------------------------------------------------------
// gradcheck

struct GradArgs {
    std::string arch = "small";
    std::uint64_t seed = 7;
    double tolerance = 1e-4;
    GradCheckOptions opt;
};

int run_gradcheck(const GradArgs& a) {
    const GradCheckReport r = gradient_check(architecture(a.arch), a.seed, a.opt);
    std::cout << "checked " << r.checked << " parameters in " << r.tensors.size() << " tensors\n";
    std::cout << "max_relative_error " << std::scientific << std::setprecision(3) << r.max_relative_error << "\n";
    if (r.max_relative_error >= a.tolerance) {
        std::cerr << "error: gradient check failed, max relative error " << r.max_relative_error << " >= "
                  << a.tolerance << "\n";
        return 1;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Face deblurring toolkit: blur synthesis, training, evaluation and dataset mining.", "facedeblur"};
    app.require_subcommand(1, 1);
    app.set_config("--config", "", "INI/TOML config file, one [section] per command; flags override it")
        ->envname("FACEDEBLUR_CONFIG");

    BlurArgs blur_args;
    auto* blur_cmd = app.add_subcommand("blur", "Blur an image: psi(I * K + noise)");
    blur_cmd->add_option("--in", blur_args.in, "Input image")->required()->check(CLI::ExistingFile);
    blur_cmd->add_option("--out", blur_args.out, "Output image (.png/.pgm/.ppm)")->required();
    add_kernel_flags(blur_cmd, blur_args.kernel, true);
    blur_cmd->add_option("--noise", blur_args.noise, "Gaussian noise sigma")->check(CLI::NonNegativeNumber);
    blur_cmd->add_option("--psi", blur_args.psi, "Output non-linearity")
        ->check(CLI::IsMember({"identity", "clip", "quantize"}))
        ->capture_default_str();
    blur_cmd->add_option("--levels", blur_args.levels, "Quantization levels")->check(CLI::Range(2, 65536));
    blur_cmd->add_option("--mode", blur_args.mode, "Convolution mode")->check(CLI::IsMember({"same", "valid"}))->capture_default_str();
    blur_cmd->add_option("--seed", blur_args.seed, "Noise seed");
    blur_cmd->add_option("--depth", blur_args.depth, "Output bit depth")->check(CLI::IsMember({8, 16}));

    KernelOnlyArgs kernel_args;
    auto* kernel_cmd = app.add_subcommand("kernel", "Write a blur kernel as text");
    add_kernel_flags(kernel_cmd, kernel_args.kernel, false);
    kernel_cmd->add_option("--out", kernel_args.out, "Kernel text file")->required();
    kernel_cmd->add_option("--png", kernel_args.png, "Also save a peak-normalized picture");

    TrainArgs train_args;
    auto* train_cmd = app.add_subcommand("train", "Train the deblurring network on blurred copies of sharp images");
    add_data_flags(train_cmd, train_args.data);
    TrainConfig& tc = train_args.cfg;
    train_cmd->add_option("--out", train_args.out, "Checkpoint path")->required();
    train_cmd->add_option("--arch", train_args.arch, "Architecture")->check(CLI::IsMember({"small", "standard"}))->capture_default_str();
    train_cmd->add_option("--steps", tc.max_steps, "Maximum optimisation steps")->capture_default_str();
    train_cmd->add_option("--batch-size", tc.batch_size, "Images per step")->check(CLI::PositiveNumber)->capture_default_str();
    train_cmd->add_option("--lr", tc.lr_initial, "Initial learning rate")->check(CLI::PositiveNumber)->capture_default_str();
    train_cmd->add_option("--lr-decay-every", tc.lr_decay_every, "Steps between decays")->check(CLI::PositiveNumber)->capture_default_str();
    train_cmd->add_option("--lr-decay-factor", tc.lr_decay_factor, "Decay multiplier")->check(CLI::Range(0.0, 1.0))->capture_default_str();
    train_cmd->add_option("--single-pass", tc.single_pass, "Consume each image at most once (true/false)")->capture_default_str();
    train_cmd->add_option("--seed", tc.seed, "Seed for initialisation, shuffling and kernels")->capture_default_str();
    train_cmd->add_option("--sigma-min", tc.gaussian_sigma_min, "Smallest Gaussian sigma")->check(CLI::PositiveNumber)->capture_default_str();
    train_cmd->add_option("--sigma-max", tc.gaussian_sigma_max, "Largest Gaussian sigma")->check(CLI::PositiveNumber)->capture_default_str();
    train_cmd->add_option("--kernel-size", tc.gaussian_size, "Gaussian side (0 derives it)")->check(kOddOrZero);
    train_cmd->add_option("--motion-probability", tc.motion_probability, "Chance of a motion kernel")->check(CLI::Range(0.0, 1.0))->capture_default_str();
    train_cmd->add_option("--motion-length-min", tc.motion_length_min, "Shortest motion")->check(CLI::PositiveNumber)->capture_default_str();
    train_cmd->add_option("--motion-length-max", tc.motion_length_max, "Longest motion")->check(CLI::PositiveNumber)->capture_default_str();
    train_cmd->add_option("--noise", tc.noise_sigma, "Additive noise sigma")->check(CLI::NonNegativeNumber);
    train_cmd->add_option("--checkpoint-every", tc.checkpoint_every, "Also save <out>.stepN every N steps");
    train_cmd->add_option("--log", train_args.log, "Write 'step loss lr' lines here");

    DeblurArgs deblur_args;
    auto* deblur_cmd = app.add_subcommand("deblur", "Deblur an image or a directory of images");
    deblur_cmd->add_option("--model", deblur_args.model, "Checkpoint")->required()->check(CLI::ExistingFile);
    deblur_cmd->add_option("--in", deblur_args.in, "Input image or directory")->required()->check(CLI::ExistingPath);
    deblur_cmd->add_option("--out", deblur_args.out, "Output image or directory")->required();
    deblur_cmd->add_option("--depth", deblur_args.depth, "Output bit depth")->check(CLI::IsMember({8, 16}));

    EvalSelfArgs eval_args;
    auto* eval_cmd = app.add_subcommand("eval-self", "Blur sharp images, deblur them and report PSNR/SSIM");
    eval_cmd->add_option("--model", eval_args.model, "Checkpoint")->required()->check(CLI::ExistingFile);
    add_data_flags(eval_cmd, eval_args.data);
    eval_cmd->add_option("--seed", eval_args.cfg.seed, "Seed for per-image sigma and noise")->capture_default_str();
    eval_cmd->add_option("--sigma-min", eval_args.cfg.sigma_min, "Smallest Gaussian sigma")->check(CLI::PositiveNumber)->capture_default_str();
    eval_cmd->add_option("--sigma-max", eval_args.cfg.sigma_max, "Largest Gaussian sigma")->check(CLI::PositiveNumber)->capture_default_str();
    eval_cmd->add_option("--noise", eval_args.cfg.noise_sigma, "Additive noise sigma")->check(CLI::NonNegativeNumber);
    eval_cmd->add_option("--csv", eval_args.csv, "Per-item CSV report");
    eval_cmd->add_option("--table", eval_args.table, "Also write the summary table here");
    eval_cmd->add_option("--composites", eval_args.composites, "Directory for GT | blurred | deblurred images");

    SimArgs sim_args;
    auto* sim_cmd = app.add_subcommand("sim-motion", "Average consecutive frames into motion-blurred pairs");
    sim_cmd->add_option("--frames", sim_args.frames, "Directory of numbered frames")->required()->check(CLI::ExistingDirectory);
    sim_cmd->add_option("--out", sim_args.out, "Output directory (blurred/ and gt/)")->required();
    sim_cmd->add_option("--average", sim_args.cfg.frames_to_average, "Frames per window (odd, 7-11)")
        ->check(CLI::IsMember({7, 9, 11}))
        ->capture_default_str();
    sim_cmd->add_option("--min-motion", sim_args.cfg.min_pair_motion, "Minimum mean flow per frame pair")->check(CLI::PositiveNumber)->capture_default_str();
    sim_cmd->add_option("--min-psnr", sim_args.cfg.min_psnr_keep, "Drop windows below this PSNR")->capture_default_str();
    sim_cmd->add_flag("--no-motion-gate", sim_args.no_gate, "Keep windows regardless of motion");
    sim_cmd->add_option("--depth", sim_args.depth, "Output bit depth")->check(CLI::IsMember({8, 16}));

    ScoreArgs score_args;
    auto* score_cmd = app.add_subcommand("score", "Mean PSNR/SSIM per method directory against ground truth");
    score_cmd->add_option("--outputs", score_args.outputs, "Method outputs: one subdirectory per method")->required()->check(CLI::ExistingDirectory);
    score_cmd->add_option("--ground-truth", score_args.truth, "Ground-truth directory")->required()->check(CLI::ExistingDirectory);
    score_cmd->add_option("--reference", score_args.references, "Literal row label=psnr,ssim (repeatable)");
    score_cmd->add_option("--out", score_args.out, "Also write the table here");

    MineArgs mine_args;
    auto* mine_cmd = app.add_subcommand("mine", "Run the mining pipeline over one video's frames");
    mine_cmd->add_option("--frames", mine_args.frames, "Directory of numbered frames")->required()->check(CLI::ExistingDirectory);
    mine_cmd->add_option("--classifier", mine_args.classifier, "Fitting classifier file")->required()->check(CLI::ExistingFile);
    mine_cmd->add_option("--template", mine_args.templ, "Face template image for the detector")->required()->check(CLI::ExistingFile);
    mine_cmd->add_option("--manifest", mine_args.manifest, "Accepted frames and landmarks")->required();
    mine_cmd->add_option("--ledger", mine_args.ledger, "Per-frame JSON-lines decision ledger");
    mine_cmd->add_option("--window-sides", mine_args.windows, "Detector window sides")->capture_default_str();
    mine_cmd->add_option("--detector-threshold", mine_args.detector_threshold, "Minimum NCC score")->check(CLI::Range(-1.0, 1.0))->capture_default_str();
    mine_cmd->add_option("--stride", mine_args.stride, "Detector stride")->check(CLI::PositiveNumber)->capture_default_str();
    mine_cmd->add_option("--search-radius", mine_args.search_radius, "Tracker search radius")->check(CLI::NonNegativeNumber)->capture_default_str();
    mine_cmd->add_option("--overlap-threshold", mine_args.cfg.overlap_threshold, "IoU a detection must exceed")->check(CLI::Range(0.0, 1.0))->capture_default_str();
    mine_cmd->add_option("--min-frames-fraction", mine_args.cfg.min_frames_fraction, "Fraction of frames that must overlap")->check(CLI::Range(0.0, 1.0))->capture_default_str();
    mine_cmd->add_option("--min-motion", mine_args.cfg.min_avg_motion, "Motion threshold in pixels")->check(CLI::PositiveNumber)->capture_default_str();
    mine_cmd->add_option("--motion-rule", mine_args.rule, "Which side of the threshold is discarded")
        ->check(CLI::IsMember({"require-movement", "discard-above"}))
        ->capture_default_str();
    mine_cmd->add_flag("--no-motion-gate", mine_args.no_gate, "Skip the motion gate");

    ClassifierArgs clf_args;
    auto* clf_cmd = app.add_subcommand("train-classifier", "Train the landmark fitting classifier");
    auto* images_opt = clf_cmd->add_option("--images", clf_args.images, "Face images")->check(CLI::ExistingDirectory);
    clf_cmd->add_option("--shapes", clf_args.shapes, ".pts files matching the images by stem")->check(CLI::ExistingDirectory);
    auto* syn_opt = clf_cmd->add_option("--synthetic", clf_args.synthetic, "Use N rendered faces instead")->check(CLI::PositiveNumber);
    images_opt->excludes(syn_opt);
    clf_cmd->add_option("--image-size", clf_args.side, "Side of rendered faces")->check(CLI::Range(32, 1024))->capture_default_str();
    clf_cmd->add_option("--backgrounds", clf_args.backgrounds, "Face-free images for negatives")->check(CLI::ExistingDirectory);
    clf_cmd->add_option("--perturbation", clf_args.cfg.perturbation_sigma, "Negative perturbation, fraction of face size")->check(CLI::PositiveNumber)->capture_default_str();
    clf_cmd->add_option("--c-grid", clf_args.cfg.c_grid, "Regularisation grid")->check(CLI::PositiveNumber)->capture_default_str();
    clf_cmd->add_option("--epochs", clf_args.cfg.epochs, "Passes over the data")->check(CLI::PositiveNumber)->capture_default_str();
    clf_cmd->add_option("--seed", clf_args.cfg.seed, "Seed for negatives, folds and ordering")->capture_default_str();
    clf_cmd->add_option("--out", clf_args.out, "Classifier file")->required();
    clf_cmd->add_option("--template-out", clf_args.template_out, "Also save the averaged face template");
    clf_cmd->add_option("--template-size", clf_args.template_size, "Template side")->check(CLI::Range(8, 256))->capture_default_str();

    GradArgs grad_args;
    auto* grad_cmd = app.add_subcommand("gradcheck", "Compare analytic gradients with finite differences");
    grad_cmd->add_option("--arch", grad_args.arch, "Architecture")->check(CLI::IsMember({"small", "standard"}))->capture_default_str();
    grad_cmd->add_option("--seed", grad_args.seed, "Seed")->capture_default_str();
    grad_cmd->add_option("--step", grad_args.opt.step, "Finite-difference step")->check(CLI::PositiveNumber)->capture_default_str();
    grad_cmd->add_option("--tolerance", grad_args.tolerance, "Failure threshold")->check(CLI::PositiveNumber)->capture_default_str();

    CLI::App* selected = nullptr;
    try {
        app.parse(argc, argv);
        selected = app.get_subcommands().front();
        if (selected == blur_cmd) run_blur(blur_args);
        else if (selected == kernel_cmd) run_kernel(kernel_args);
        else if (selected == train_cmd) run_train(train_args);
        else if (selected == deblur_cmd) run_deblur(deblur_args);
        else if (selected == eval_cmd) run_eval_self(eval_args);
        else if (selected == sim_cmd) run_sim_motion(sim_args);
        else if (selected == score_cmd) run_score(score_args);
        else if (selected == mine_cmd) run_mine(mine_args);
        else if (selected == clf_cmd) run_train_classifier(clf_args);
        else if (selected == grad_cmd) return run_gradcheck(grad_args);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        const auto subs = app.get_subcommands();
        std::cerr << (subs.empty() ? app.help() : subs.front()->help());
        return 2;
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n" << (selected ? selected->help() : app.help());
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    std::cout.flush();
    return 0;
}
