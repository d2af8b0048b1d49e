// Copyright 2026 The facedeblur Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <numbers>
#include <sstream>

#include "facedeblur/blur.hpp"
#include "facedeblur/image_io.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

using namespace facedeblur;

TEST(Convolve, UnitKernelIsIdentity) {
    Rng rng(1);
    const Image img = oracle::random_image(rng, 9, 7, 3);
    EXPECT_EQ(convolve(img, BlurKernel::identity(), ConvMode::Valid), img);
    EXPECT_EQ(convolve(img, BlurKernel::identity(), ConvMode::Same), img);
}

TEST(Convolve, ConstantPreservedUnderUnitSumKernel) {
    Rng rng(2);
    const Image img(12, 12, 1, 0.37);
    auto k = oracle::random_kernel(rng, 5, 3);
    k = k.scaled(1.0 / k.sum());
    const Image out = convolve(img, k, ConvMode::Valid);
    ASSERT_EQ(out.height(), 8u);
    ASSERT_EQ(out.width(), 10u);
    for (double v : out.data()) EXPECT_NEAR(v, 0.37, 1e-12);
}

TEST(Convolve, MatchesScatterOracle16x16) {
    Rng rng(3);
    const Image img = oracle::random_image(rng, 16, 16);
    const auto k = oracle::random_kernel(rng, 5, 5);
    for (bool valid : {true, false}) {
        const Image got = convolve(img, k, valid ? ConvMode::Valid : ConvMode::Same);
        const Image want = oracle::convolve_scatter(img, k, valid);
        ASSERT_TRUE(got.same_shape(want));
        EXPECT_LT(oracle::max_abs_diff(got, want), 1e-10);
    }
}

TEST(Convolve, BruteForceEquivalenceProperty) {
    Rng rng(4);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t kh = 1 + 2 * (rng() % 5);
        const std::size_t kw = 1 + 2 * (rng() % 5);
        const std::size_t h = kh + rng() % (10 - kh);
        const std::size_t w = kw + rng() % (10 - kw);
        const Image img = oracle::random_image(rng, h, w, trial % 2 ? 3 : 1);
        const auto k = oracle::random_kernel(rng, kh, kw);
        const bool valid = trial % 3 == 0;
        const Image got = convolve(img, k, valid ? ConvMode::Valid : ConvMode::Same);
        EXPECT_LT(oracle::max_abs_diff(got, oracle::convolve_scatter(img, k, valid)), 1e-10) << "trial " << trial;
    }
}

TEST(Convolve, Linearity) {
    Rng rng(5);
    for (int trial = 0; trial < 20; ++trial) {
        const Image x = oracle::random_image(rng, 16, 16);
        const Image y = oracle::random_image(rng, 16, 16);
        const auto k = oracle::random_kernel(rng, 3, 5);
        const double a = uniform(rng, -2, 2);
        const double b = uniform(rng, -2, 2);
        Image mix(16, 16);
        for (std::size_t i = 0; i < mix.size(); ++i) mix.raw()[i] = a * x.data()[i] + b * y.data()[i];
        const Image lhs = convolve(mix, k, ConvMode::Same);
        const Image cx = convolve(x, k, ConvMode::Same);
        const Image cy = convolve(y, k, ConvMode::Same);
        for (std::size_t i = 0; i < lhs.size(); ++i)
            EXPECT_NEAR(lhs.data()[i], a * cx.data()[i] + b * cy.data()[i], 1e-9);
    }
}

TEST(Convolve, RejectsOversizedKernel) {
    const Image img(4, 4);
    try {
        convolve(img, make_gaussian_kernel(1.0, 5), ConvMode::Valid);
        FAIL() << "expected ContractViolation";
    } catch (const ContractViolation& e) {
        EXPECT_NE(std::string(e.what()).find("5x5"), std::string::npos);
        EXPECT_NE(std::string(e.what()).find("4x4"), std::string::npos);
    }
}

TEST(Kernel, RejectsEvenSides) {
    EXPECT_THROW(BlurKernel(2, 3, std::vector<double>(6, 0.1)), ContractViolation);
    EXPECT_THROW(BlurKernel(3, 3, std::vector<double>(9, -0.1)), ContractViolation);
}

TEST(GaussianKernel, NearDeltaForTinySigma) {
    EXPECT_GT(make_gaussian_kernel(0.1, 3).at(1, 1), 0.999);
}

TEST(GaussianKernel, UnitSumAndRotationSymmetry) {
    for (double sigma : {0.3, 0.8, 1.5, 3.0})
        for (std::size_t size : {1u, 3u, 7u, 11u}) {
            const auto k = make_gaussian_kernel(sigma, size);
            EXPECT_NEAR(k.sum(), 1.0, 1e-9);
            for (std::size_t y = 0; y < size; ++y)
                for (std::size_t x = 0; x < size; ++x) {
                    EXPECT_GE(k.at(y, x), 0.0);
                    EXPECT_DOUBLE_EQ(k.at(y, x), k.at(x, size - 1 - y));
                }
        }
}

TEST(GaussianKernel, MatchesDensityOracleSigmaHalf) {
    // Normalized exp(-(x^2+y^2)/(2*0.25)) at offsets {-1,0,1}^2.
    const double corner = 0.011343736558495071;
    const double edge = 0.0838195058022106;
    const double center = 0.6193470305571772;
    const auto k = make_gaussian_kernel(0.5, 3);
    const double want[3][3] = {{corner, edge, corner}, {edge, center, edge}, {corner, edge, corner}};
    for (std::size_t y = 0; y < 3; ++y)
        for (std::size_t x = 0; x < 3; ++x) EXPECT_NEAR(k.at(y, x), want[y][x], 1e-15);
}

TEST(GaussianKernel, RejectsBadArguments) {
    EXPECT_THROW(make_gaussian_kernel(1.0, 4), ContractViolation);
    EXPECT_THROW(make_gaussian_kernel(0.0, 3), ContractViolation);
    EXPECT_THROW(make_gaussian_kernel(-1.0, 3), ContractViolation);
}

TEST(MotionKernel, LengthOneIsDelta) {
    for (double angle : {0.0, 0.7, 2.0}) {
        const auto k = make_motion_kernel(1, angle);
        ASSERT_EQ(k.height(), 1u);
        EXPECT_EQ(k.at(0, 0), 1.0);
    }
}

TEST(MotionKernel, HorizontalLine) {
    const auto k = make_motion_kernel(5, 0.0);
    ASSERT_EQ(k.height(), 5u);
    ASSERT_EQ(k.width(), 5u);
    for (std::size_t y = 0; y < 5; ++y)
        for (std::size_t x = 0; x < 5; ++x) EXPECT_NEAR(k.at(y, x), y == 2 ? 0.2 : 0.0, 1e-15);
}

TEST(MotionKernel, DiagonalMatchesRasterOracle) {
    // Tent-weighted gather over the five unit-spaced line samples, frozen.
    const double want[5][5] = {
        {0, 0, 0, 0.048528137423857025, 0.034314575050761957},
        {0, 0, 0.041421356237309512, 0.16862915010152396, 0.048528137423857025},
        {0, 0.041421356237309512, 0.23431457505076203, 0.041421356237309512, 0},
        {0.048528137423857046, 0.16862915010152393, 0.041421356237309512, 0, 0},
        {0.034314575050761978, 0.048528137423857004, 0, 0, 0},
    };
    const auto k = make_motion_kernel(5, std::numbers::pi / 4);
    for (std::size_t y = 0; y < 5; ++y)
        for (std::size_t x = 0; x < 5; ++x) EXPECT_NEAR(k.at(y, x), want[y][x], 1e-12) << y << "," << x;
}

TEST(MotionKernel, UnitSumNonNegativeOddSide) {
    Rng rng(6);
    for (int i = 0; i < 100; ++i) {
        const long len = 1 + static_cast<long>(rng() % 15);
        const auto k = make_motion_kernel(len, uniform(rng, 0, 2 * std::numbers::pi));
        EXPECT_EQ(k.height() % 2, 1u);
        EXPECT_GE(k.height(), static_cast<std::size_t>(len));
        EXPECT_LE(k.height(), static_cast<std::size_t>(len) + 1);
        EXPECT_NEAR(k.sum(), 1.0, 1e-9);
        for (double w : k.weights()) EXPECT_GE(w, 0.0);
    }
    EXPECT_THROW(make_motion_kernel(0, 0.0), ContractViolation);
}

TEST(Blur, IdentityComponents) {
    Rng rng(7);
    const Image img = oracle::random_image(rng, 8, 8, 3);
    EXPECT_EQ(blur(img, BlurKernel::identity(), BlurConfig{}), img);
}

TEST(Blur, ScalingAmbiguity) {
    Rng rng(8);
    for (int trial = 0; trial < 50; ++trial) {
        const Image img = oracle::random_image(rng, 12, 12);
        const auto k = make_gaussian_kernel(uniform(rng, 0.5, 2.0), 5);
        const Image ref = blur(img, k, BlurConfig{});
        for (double lambda : {0.5, 2.0}) {
            Image scaled = img;
            for (double& v : scaled.data()) v *= lambda;
            const Image out = blur(scaled, k.scaled(1.0 / lambda), BlurConfig{});
            EXPECT_LT(oracle::max_abs_diff(out, ref), 1e-9);
        }
    }
}

TEST(Blur, DeterministicNoise) {
    Rng rng(9);
    const Image img = oracle::random_image(rng, 10, 10);
    BlurConfig cfg;
    cfg.noise_sigma = 0.01;
    cfg.rng_seed = 42;
    const Image a = blur(img, make_gaussian_kernel(1.0, 3), cfg);
    const Image b = blur(img, make_gaussian_kernel(1.0, 3), cfg);
    EXPECT_EQ(a, b);
    EXPECT_NE(a, blur(img, make_gaussian_kernel(1.0, 3), BlurConfig{}));
}

TEST(Blur, ClipKeepsUnitRange) {
    Rng rng(10);
    const Image img = oracle::random_image(rng, 10, 10);
    for (PsiKind kind : {PsiKind::Clip, PsiKind::ClipQuantize}) {
        BlurConfig cfg;
        cfg.noise_sigma = 0.5;
        cfg.psi.kind = kind;
        cfg.psi.levels = 16;
        const Image out = blur(img, make_gaussian_kernel(1.0, 3), cfg);
        for (double v : out.data()) {
            EXPECT_GE(v, 0.0);
            EXPECT_LE(v, 1.0);
            if (kind == PsiKind::ClipQuantize) {
                EXPECT_NEAR(v * 15, std::round(v * 15), 1e-9);
            }
        }
    }
}

TEST(Blur, BatchSeedsArePerImage) {
    Rng rng(11);
    std::vector<Image> imgs{oracle::random_image(rng, 6, 6), oracle::random_image(rng, 6, 6)};
    std::vector<BlurKernel> ks{BlurKernel::identity(), make_gaussian_kernel(1.0, 3)};
    BlurConfig cfg;
    cfg.noise_sigma = 0.05;
    cfg.rng_seed = 100;
    const auto out = blur_batch(imgs, ks, cfg);
    BlurConfig second = cfg;
    second.rng_seed = 101;
    EXPECT_EQ(out[1], blur(imgs[1], ks[1], second));
}

TEST(KernelText, RoundTrip) {
    const auto k = make_motion_kernel(7, 0.3);
    std::stringstream ss;
    write_kernel(ss, k);
    EXPECT_EQ(read_kernel(ss), k);
    std::stringstream bad("3 3\n0.1 0.2\n");
    EXPECT_THROW(read_kernel(bad), ContractViolation);
}

TEST(ImageIo, QuantizedRoundTripAllFormats) {
    const auto dir = scratch_dir("io");
    Rng rng(12);
    for (std::size_t channels : {1u, 3u})
        for (BitDepth depth : {BitDepth::Eight, BitDepth::Sixteen})
            for (const char* ext : {".png", channels == 1 ? ".pgm" : ".ppm"}) {
                const Image img = oracle::random_image(rng, 5, 7, channels);
                const auto path = dir / ("img" + std::to_string(channels) + std::to_string(int(depth)) + ext);
                save_image(path, img, depth);
                const Image back = load_image(path);
                ASSERT_TRUE(back.same_shape(img)) << path;
                const double maxval = depth == BitDepth::Eight ? 255.0 : 65535.0;
                for (std::size_t i = 0; i < img.size(); ++i)
                    EXPECT_EQ(back.data()[i], std::floor(img.data()[i] * maxval + 0.5) / maxval) << path;
            }
}

TEST(ImageIo, RoundsHalfUpAndClamps) {
    const auto dir = scratch_dir("round");
    Image img(1, 4);
    img.raw() = {0.5 / 255.0, 1.5 / 255.0, -0.2, 1.7};
    save_image(dir / "r.pgm", img);
    const Image back = load_image(dir / "r.pgm");
    EXPECT_EQ(back.at(0, 0), 1.0 / 255.0);
    EXPECT_EQ(back.at(0, 1), 2.0 / 255.0);
    EXPECT_EQ(back.at(0, 2), 0.0);
    EXPECT_EQ(back.at(0, 3), 1.0);
}

TEST(ImageIo, ListsFramesInNumericOrder) {
    const auto dir = scratch_dir("order");
    for (int i : {10, 2, 1}) save_image(dir / ("frame" + std::to_string(i) + ".pgm"), Image(2, 2));
    const auto files = list_images(dir);
    ASSERT_EQ(files.size(), 3u);
    EXPECT_EQ(files[0].filename(), "frame1.pgm");
    EXPECT_EQ(files[1].filename(), "frame2.pgm");
    EXPECT_EQ(files[2].filename(), "frame10.pgm");
}
