// Copyright 2026 The facedeblur Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <sstream>
#include <string>

#include "facedeblur/blur.hpp"
#include "facedeblur/checkpoint.hpp"
#include "facedeblur/eval.hpp"
#include "facedeblur/image_io.hpp"
#include "facedeblur/kernel.hpp"
#include "facedeblur/mining.hpp"
#include "facedeblur/synthetic.hpp"
#include "test_support.hpp"

namespace {

using namespace facedeblur;
namespace fs = std::filesystem;

struct CliRun {
    int code = -1;
    std::string out;
    std::string err;
};

std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    std::ostringstream os;
    os << is.rdbuf();
    return os.str();
}

CliRun cli(const fs::path& dir, const std::string& args, const std::string& env = "") {
    const fs::path out = dir / "stdout.txt";
    const fs::path err = dir / "stderr.txt";
    const std::string cmd = "cd '" + dir.string() + "' && " + env + " '" FACEDEBLUR_CLI "' " + args + " > '" +
                            out.string() + "' 2> '" + err.string() + "'";
    const int status = std::system(cmd.c_str());
    CliRun r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(out);
    r.err = slurp(err);
    return r;
}

Image test_image(std::uint64_t seed, std::size_t side = 32) {
    Rng rng(seed);
    return make_pattern(rng, side, side);
}

TEST(Cli, ExitCodes) {
    const auto dir = scratch_dir("cli_exit");
    save_image(dir / "in.png", test_image(1));
    EXPECT_EQ(cli(dir, "").code, 2);
    EXPECT_EQ(cli(dir, "--help").code, 0);
    EXPECT_EQ(cli(dir, "blur --help").code, 0);
    EXPECT_EQ(cli(dir, "no-such-command").code, 2);

    const CliRun neg = cli(dir, "blur --in in.png --out o.png --sigma -1");
    EXPECT_EQ(neg.code, 2);
    EXPECT_NE(neg.err.find("--sigma"), std::string::npos);
    EXPECT_NE(neg.err.find("Usage"), std::string::npos);

    EXPECT_EQ(cli(dir, "blur --in missing.png --out o.png").code, 2);
    EXPECT_EQ(cli(dir, "blur --in in.png --out o.png --size 4").code, 2);
    EXPECT_EQ(cli(dir, "blur --in in.png --out o.png --kernel file").code, 2);
    EXPECT_EQ(cli(dir, "train --out m.ckpt --steps 1").code, 2);
    EXPECT_EQ(cli(dir, "train --out m.ckpt --synthetic 2 --data .").code, 2);

    // Kernel larger than the image is a contract violation.
    const CliRun big = cli(dir, "blur --in in.png --out o.png --sigma 9");
    EXPECT_EQ(big.code, 1);
    EXPECT_EQ(big.err.rfind("error: ", 0), 0u);
    EXPECT_EQ(std::count(big.err.begin(), big.err.end(), '\n'), 1);

    // Not a checkpoint.
    EXPECT_EQ(cli(dir, "deblur --model in.png --in in.png --out d.png").code, 1);
}

TEST(Cli, GradcheckPasses) {
    const auto dir = scratch_dir("cli_grad");
    const CliRun r = cli(dir, "gradcheck --arch small --seed 7");
    ASSERT_EQ(r.code, 0) << r.err;
    const auto pos = r.out.find("max_relative_error ");
    ASSERT_NE(pos, std::string::npos);
    EXPECT_LT(std::stod(r.out.substr(pos + 19)), 1e-4);
    EXPECT_EQ(cli(dir, "gradcheck --arch small --seed 7 --tolerance 1e-15").code, 1);
}

TEST(Cli, KernelMatchesLibrary) {
    const auto dir = scratch_dir("cli_kernel");
    ASSERT_EQ(cli(dir, "kernel --kernel motion --length 7 --angle 30 --out k.txt").code, 0);
    std::ifstream is(dir / "k.txt");
    const BlurKernel k = read_kernel(is);
    const BlurKernel expect = make_motion_kernel(7, 30.0 * std::numbers::pi / 180.0);
    ASSERT_EQ(k.height(), expect.height());
    ASSERT_EQ(k.width(), expect.width());
    for (std::size_t i = 0; i < k.weights().size(); ++i) EXPECT_DOUBLE_EQ(k.weights()[i], expect.weights()[i]);
}

TEST(Cli, BlurMatchesLibrary) {
    const auto dir = scratch_dir("cli_blur");
    const Image img = test_image(2);
    save_image(dir / "in.png", img, BitDepth::Sixteen);
    ASSERT_EQ(cli(dir, "blur --in in.png --out o.png --sigma 1.3 --psi clip --depth 16").code, 0);
    BlurConfig cfg;
    cfg.psi.kind = PsiKind::Clip;
    const Image expect = blur(load_image(dir / "in.png"), make_gaussian_kernel(1.3, gaussian_support(1.3)), cfg);
    const Image got = load_image(dir / "o.png");
    ASSERT_EQ(got.data().size(), expect.data().size());
    for (std::size_t i = 0; i < got.data().size(); ++i) EXPECT_NEAR(got.data()[i], expect.data()[i], 0.5 / 65535.0 + 1e-12);
}

TEST(Cli, TrainIsDeterministicAndEvalReports) {
    const auto dir = scratch_dir("cli_train");
    const std::string train = "train --synthetic 6 --pattern-size 24 --steps 4 --batch-size 2 --seed 3 --log ";
    ASSERT_EQ(cli(dir, train + "a.log --out a.ckpt").code, 0);
    ASSERT_EQ(cli(dir, train + "b.log --out b.ckpt").code, 0);
    EXPECT_EQ(slurp(dir / "a.ckpt"), slurp(dir / "b.ckpt"));
    EXPECT_EQ(slurp(dir / "a.log"), slurp(dir / "b.log"));
    EXPECT_EQ(load_checkpoint(dir / "a.ckpt").seed, 3u);

    const CliRun e = cli(dir, "eval-self --model a.ckpt --synthetic 3 --pattern-size 24 --csv e.csv --composites comp");
    ASSERT_EQ(e.code, 0) << e.err;
    EXPECT_NE(e.out.find("blurred"), std::string::npos);
    EXPECT_NE(e.out.find("deblurred"), std::string::npos);
    const std::string csv = slurp(dir / "e.csv");
    EXPECT_EQ(csv.rfind("id,psnr_blurred,ssim_blurred,psnr_deblurred,ssim_deblurred\n", 0), 0u);
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 4);
    EXPECT_TRUE(fs::exists(dir / "comp" / "pattern_0.png"));

    fs::create_directories(dir / "in");
    save_image(dir / "in" / "x.png", test_image(4, 20));
    ASSERT_EQ(cli(dir, "deblur --model a.ckpt --in in --out out").code, 0);
    EXPECT_EQ(load_image(dir / "out" / "x.png").height(), 20u);
}

TEST(Cli, ConfigFileFromEnvironmentWithFlagOverride) {
    const auto dir = scratch_dir("cli_config");
    std::ofstream(dir / "c.ini") << "[gradcheck]\nseed = 3\ntolerance = 1e-15\n";
    EXPECT_EQ(cli(dir, "gradcheck", "FACEDEBLUR_CONFIG=c.ini").code, 1);
    const CliRun over = cli(dir, "gradcheck --tolerance 1e-4", "FACEDEBLUR_CONFIG=c.ini");
    EXPECT_EQ(over.code, 0) << over.err;
    const CliRun flag = cli(dir, "--config c.ini gradcheck --tolerance 1e-4");
    EXPECT_EQ(flag.out, over.out);
    // Seed from the file is honoured.
    EXPECT_NE(cli(dir, "gradcheck --seed 7").out, over.out);
}

TEST(Cli, ScoreTable) {
    const auto dir = scratch_dir("cli_score");
    fs::create_directories(dir / "gt");
    fs::create_directories(dir / "outs" / "copy");
    const Image img = test_image(5);
    save_image(dir / "gt" / "a.png", img);
    save_image(dir / "outs" / "copy" / "a.png", img);
    const CliRun r = cli(dir, "score --outputs outs --ground-truth gt --reference 'Babacan et al.=25.127,0.580' --out t.txt");
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("Babacan et al."), std::string::npos);
    EXPECT_NE(r.out.find("25.127"), std::string::npos);
    EXPECT_NE(r.out.find("copy"), std::string::npos);
    EXPECT_NE(r.out.find("inf"), std::string::npos);
    EXPECT_EQ(slurp(dir / "t.txt"), r.out.substr(0, r.out.find("unmatched")));
    EXPECT_EQ(cli(dir, "score --outputs outs --ground-truth gt --reference nonsense").code, 2);
}

TEST(Cli, SimMotionMatchesLibrary) {
    const auto dir = scratch_dir("cli_sim");
    Rng rng(8);
    const Image scene = make_pattern(rng, 48, 120);
    fs::create_directories(dir / "frames");
    std::vector<Image> stored;
    for (std::size_t i = 0; i < 14; ++i) {
        std::ostringstream name;
        name << "f" << std::setw(3) << std::setfill('0') << i << ".png";
        save_image(dir / "frames" / name.str(), crop(scene, 0, 2 * i, 48, 64), BitDepth::Sixteen);
        stored.push_back(load_image(dir / "frames" / name.str()));
    }
    const CliRun r = cli(dir, "sim-motion --frames frames --out sim --average 7 --depth 16");
    ASSERT_EQ(r.code, 0) << r.err;
    mining::BlockMatchingFlow flow;
    const SimBlurResult expect = simulate_motion_blur(stored, SimBlurConfig{}, flow);
    EXPECT_NE(r.out.find("kept " + std::to_string(expect.pairs.size())), std::string::npos) << r.out;
    ASSERT_FALSE(expect.pairs.empty());
    const Image gt = load_image(dir / "sim" / "gt" / "f000.png");
    for (std::size_t i = 0; i < gt.data().size(); ++i)
        ASSERT_NEAR(gt.data()[i], expect.pairs[0].ground_truth.data()[i], 0.5 / 65535.0 + 1e-12);
    EXPECT_TRUE(fs::exists(dir / "sim" / "blurred" / "f000.png"));
}

TEST(Cli, MineIsDeterministic) {
    const auto dir = scratch_dir("cli_mine");
    ASSERT_EQ(cli(dir, "train-classifier --synthetic 60 --seed 2 --out clf.txt --template-out t.png").code, 0);
    ASSERT_EQ(cli(dir, "train-classifier --synthetic 60 --seed 2 --out clf2.txt").code, 0);
    EXPECT_EQ(slurp(dir / "clf.txt"), slurp(dir / "clf2.txt"));
    EXPECT_NO_THROW(mining::load_classifier((dir / "clf.txt").string()));

    Rng rng(31);
    const auto start = mining::place_shape(mining::unit_mean_shape(), {8, 12, 44, 48});
    const auto clip = mining::make_face_clip(rng, 8, 72, 96, start, 4.0, 0.0);
    fs::create_directories(dir / "frames");
    for (std::size_t i = 0; i < clip.frames.size(); ++i)
        save_image(dir / "frames" / ("f" + std::to_string(i) + ".png"), clip.frames[i], BitDepth::Sixteen);

    const std::string mine =
        "mine --frames frames --classifier clf.txt --template t.png --window-sides 36 --manifest ";
    const CliRun a = cli(dir, mine + "a.txt --ledger a.jsonl");
    ASSERT_EQ(a.code, 0) << a.err;
    const CliRun b = cli(dir, mine + "b.txt --ledger b.jsonl");
    ASSERT_EQ(b.code, 0) << b.err;
    EXPECT_EQ(a.out, b.out);
    EXPECT_EQ(a.out.rfind("video_accepted=", 0), 0u);
    EXPECT_NE(a.out.find("frames_processed=8"), std::string::npos);
    EXPECT_EQ(slurp(dir / "a.txt"), slurp(dir / "b.txt"));
    EXPECT_EQ(slurp(dir / "a.jsonl"), slurp(dir / "b.jsonl"));
    const std::string ledger = slurp(dir / "a.jsonl");
    EXPECT_EQ(std::count(ledger.begin(), ledger.end(), '\n'), 8);

    EXPECT_EQ(cli(dir, mine + "c.txt --motion-rule sideways").code, 2);
}

}  // namespace
