// Copyright 2026 The facedeblur Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "facedeblur/metrics.hpp"
#include "oracles.hpp"

using namespace facedeblur;

TEST(Huber, ClosedFormValues) {
    const std::vector<double> zeros(10, 0.0);
    EXPECT_EQ(huber_loss(zeros), 0.0);
    EXPECT_EQ(huber_loss(std::vector<double>{0.5}), 0.125);
    EXPECT_EQ(huber_loss(std::vector<double>{2.0}), 1.5);
    EXPECT_EQ(huber_loss(std::vector<double>{-2.0}), 1.5);
    EXPECT_THROW(huber_loss(std::vector<double>{}), ContractViolation);
}

TEST(Huber, JunctionIsContinuousAndDifferentiable) {
    EXPECT_EQ(huber_penalty(1.0), 0.5);
    EXPECT_NEAR(huber_penalty(std::nextafter(1.0, 2.0)), 0.5, 1e-15);
    EXPECT_EQ(huber_derivative(1.0), 1.0);
    EXPECT_EQ(huber_derivative(std::nextafter(1.0, 2.0)), 1.0);
    EXPECT_EQ(huber_derivative(-1.0), -1.0);
    EXPECT_EQ(huber_derivative(-3.0), -1.0);
}

TEST(Huber, NeverExceedsQuadraticAndMatchesOracle) {
    Rng rng(1);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> r(1 + rng() % 40);
        for (double& e : r) e = uniform(rng, -4, 4);
        double quad = 0;
        for (double e : r) quad += 0.5 * e * e;
        quad /= static_cast<double>(r.size());
        const double h = huber_loss(r);
        EXPECT_LE(h, quad + 1e-15);
        EXPECT_GE(h, 0.0);
        EXPECT_NEAR(h, oracle::huber(r), 1e-12);
    }
}

TEST(Psnr, IdenticalIsInfinite) {
    Rng rng(2);
    const Image a = oracle::random_image(rng, 8, 8, 3);
    EXPECT_EQ(psnr(a, a), std::numeric_limits<double>::infinity());
}

TEST(Psnr, UniformTenthErrorIsTwentyDb) {
    const Image a(16, 16, 1, 0.5);
    const Image b(16, 16, 1, 0.4);
    EXPECT_NEAR(psnr(a, b), 20.0, 1e-12);
}

TEST(Psnr, MatchesOracleAndIsSymmetric) {
    Rng rng(3);
    for (int trial = 0; trial < 100; ++trial) {
        const Image a = oracle::random_image(rng, 9, 13, trial % 2 ? 3 : 1);
        const Image b = oracle::random_image(rng, 9, 13, trial % 2 ? 3 : 1);
        EXPECT_NEAR(psnr(a, b), oracle::psnr(a, b), 1e-9);
        EXPECT_EQ(psnr(a, b), psnr(b, a));
    }
}

TEST(Psnr, DecreasesWhenOnePixelErrorGrows) {
    Rng rng(4);
    const Image ref = oracle::random_image(rng, 10, 10);
    Image test = ref;
    test.at(3, 3) += 0.01;
    double previous = psnr(ref, test);
    for (int step = 0; step < 20; ++step) {
        test.at(3, 3) += 0.02;
        const double now = psnr(ref, test);
        EXPECT_LT(now, previous);
        previous = now;
    }
}

TEST(Psnr, RejectsMismatchedShapes) {
    EXPECT_THROW(psnr(Image(4, 4), Image(4, 5)), ContractViolation);
    EXPECT_THROW(psnr(Image(4, 4, 1), Image(4, 4, 3)), ContractViolation);
}

TEST(Ssim, SelfSimilarityIsOne) {
    Rng rng(5);
    const Image a = oracle::random_image(rng, 20, 17, 3);
    EXPECT_NEAR(ssim(a, a), 1.0, 1e-12);
}

TEST(Ssim, NegationIsPenalized) {
    Rng rng(6);
    const Image a = oracle::random_image(rng, 16, 16);
    Image neg = a;
    for (double& v : neg.data()) v = 1.0 - v;
    EXPECT_LT(ssim(a, neg), 1.0);
}

TEST(Ssim, MatchesWindowOracleAndIsSymmetric) {
    Rng rng(7);
    for (int trial = 0; trial < 30; ++trial) {
        const Image a = oracle::random_image(rng, 11 + rng() % 8, 11 + rng() % 8, trial % 3 == 0 ? 3 : 1);
        Image b = a;
        for (double& v : b.data()) v = std::clamp(v + uniform(rng, -0.3, 0.3), 0.0, 1.0);
        EXPECT_NEAR(ssim(a, b), oracle::ssim(a, b), 1e-9);
        EXPECT_NEAR(ssim(a, b), ssim(b, a), 1e-14);
    }
}

TEST(Ssim, RejectsTooSmallImages) {
    EXPECT_THROW(ssim(Image(10, 20), Image(10, 20)), ContractViolation);
}

TEST(MetricsReport, Serialization) {
    const MetricsReport r{std::numeric_limits<double>::infinity(), 1.0, 256};
    EXPECT_EQ(to_key_value(r), "psnr = inf\nssim = 1.000000\npixel_count = 256\n");
    const auto j = to_json(r);
    EXPECT_EQ(j["psnr"], "inf");
    EXPECT_EQ(j["ssim"], 1.0);
    EXPECT_EQ(j["pixel_count"], 256);
    EXPECT_EQ(to_json(MetricsReport{21.5, 0.5, 4})["psnr"], 21.5);
}
