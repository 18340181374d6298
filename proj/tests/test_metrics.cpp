#include <gtest/gtest.h>

#include <cmath>

#include "lsfuse/metrics.hpp"
#include "support/generators.hpp"

using namespace lsfuse;
using namespace lsfuse::metrics;

namespace {

Slice checkerboard(int n, int cell, float lo = 0.0f, float hi = 1.0f) {
    Slice s(n, n);
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) s(r, c) = ((r / cell + c / cell) % 2) ? hi : lo;
    return s;
}

Slice invert(const Slice& s) {
    Slice out = s;
    for (float& v : out.pixels()) v = 1.0f - v;
    return out;
}

Slice noisy(const Slice& s, double sigma, testgen::Gen& gen) {
    std::normal_distribution<double> g(0.0, sigma);
    Slice out = s;
    for (float& v : out.pixels()) v = static_cast<float>(std::clamp(v + g(gen.engine()), 0.0, 1.0));
    return out;
}

}  // namespace

TEST(Emse, Examples) {
    testgen::Gen gen(61);
    const Slice x = gen.slice(16, 16);
    EXPECT_EQ(emse(x, x), 0.0);
    EXPECT_NEAR(emse(Slice(4, 4, 0.0f), Slice(4, 4, 0.1f)), 0.01, 1e-8);
    Slice half(4, 4, 0.5f), other(4, 4, 0.5f);
    for (int r = 0; r < 2; ++r)
        for (int c = 0; c < 4; ++c) other(r, c) = 0.7f;
    EXPECT_NEAR(emse(half, other), 0.5 * 0.2 * 0.2, 1e-8);
    const Slice y = gen.slice(16, 16);
    EXPECT_EQ(emse(x, y), emse(y, x));
    EXPECT_THROW(emse(x, Slice(16, 15, 0.f)), Error);
}

TEST(Ssim, IdentityAndSymmetry) {
    testgen::Gen gen(62);
    const Slice x = gen.texture(40, 40, 1.0), y = gen.texture(40, 40, 1.0);
    EXPECT_NEAR(ssim(x, x), 1.0, 1e-12);
    EXPECT_DOUBLE_EQ(ssim(x, y), ssim(y, x));
    const double v = ssim(x, y);
    EXPECT_GE(v, -1.0);
    EXPECT_LE(v, 1.0);
    EXPECT_THROW(ssim(Slice(8, 8, 0.f), Slice(8, 8, 0.f)), Error);
}

TEST(Ssim, InvertedCheckerboardIsNegative) {
    const Slice x = checkerboard(32, 4);
    EXPECT_LT(ssim(x, invert(x)), 0.0);
}

TEST(Ssim, DecreasesWithNoise) {
    testgen::Gen gen(63);
    const Slice x = gen.texture(64, 64, 1.5, 0.2, 0.8);
    double prev = 1.0 + 1e-12;
    for (double sigma : {0.01, 0.05, 0.1}) {
        const double v = ssim(noisy(x, sigma, gen), x);
        EXPECT_LT(v, prev);
        prev = v;
    }
}

TEST(QMi, SelfInformation) {
    testgen::Gen gen(64);
    const Slice a = gen.slice(32, 32);
    EXPECT_NEAR(q_mi(a, a, a), 2.0, 1e-9);
    const Slice b = gen.slice(32, 32), f = gen.slice(32, 32);
    EXPECT_DOUBLE_EQ(q_mi(a, b, f), q_mi(b, a, f));
}

TEST(QMi, IndependentNoiseNearZero) {
    testgen::Gen gen(65);
    // two-level inputs keep the plug-in estimator bias near (bins - 1) / (2 N ln 2) per term
    const Slice a = checkerboard(200, 10, 0.2f, 0.8f);
    const Slice b = checkerboard(200, 7, 0.1f, 0.9f);
    Slice f(200, 200);
    for (float& v : f.pixels()) v = static_cast<float>(gen.uniform());
    EXPECT_LT(q_mi(a, b, f), 0.05);
}

TEST(QMi, InvariantToSharedBinRelabeling) {
    testgen::Gen gen(66);
    auto quantized = [&](int n) {
        Slice s(n, n);
        for (float& v : s.pixels()) v = static_cast<float>((gen.integer(0, 255) + 0.5) / 256.0);
        return s;
    };
    const Slice a = quantized(24), b = quantized(24), f = quantized(24);
    // a bijection on bins permutes every histogram the same way
    std::vector<int> perm(256);
    for (int k = 0; k < 256; ++k) perm[static_cast<std::size_t>(k)] = k;
    std::shuffle(perm.begin(), perm.end(), gen.engine());
    auto relabel = [&](const Slice& s) {
        Slice out = s;
        for (float& v : out.pixels())
            v = static_cast<float>((perm[static_cast<std::size_t>(geometry::histogram_bin(v, 256))] + 0.5) / 256.0);
        return out;
    };
    EXPECT_NEAR(q_mi(a, b, f), q_mi(relabel(a), relabel(b), relabel(f)), 1e-12);
}

TEST(QMi, ConstantFusedImageIsZero) {
    testgen::Gen gen(67);
    const Slice a = gen.slice(16, 16), b = gen.slice(16, 16);
    const Slice f(16, 16, 0.5f);
    EXPECT_EQ(q_mi(a, b, f), 0.0);
    EXPECT_EQ(entropy(f), 0.0);
    EXPECT_TRUE(evaluate_slice(a, b, f).q_mi_degenerate);
    const Slice c(16, 16, 0.3f);
    EXPECT_EQ(q_mi(c, c, c), 0.0);
}

TEST(QG, PerfectAgreementHitsSigmoidCeiling) {
    testgen::Gen gen(68);
    const Slice a = gen.texture(48, 48, 1.5);
    const QgParams p;
    const double ceiling = p.gamma_g / (1.0 + std::exp(p.kappa_g * (1.0 - p.sigma_g))) * p.gamma_a /
                           (1.0 + std::exp(p.kappa_a * (1.0 - p.sigma_a)));
    EXPECT_NEAR(q_g(a, a, a), ceiling, 1e-12);
    EXPECT_NEAR(q_g(a, a, a), 0.97, 0.02);
}

TEST(QG, ConstantFusedKillsPreservation) {
    testgen::Gen gen(69);
    const Slice a = gen.texture(48, 48, 1.5), b = gen.texture(48, 48, 2.0);
    EXPECT_LT(q_g(a, b, Slice(48, 48, 0.5f)), 0.05);
    const Slice flat(48, 48, 0.2f);
    EXPECT_EQ(q_g(flat, flat, a), 0.0);
    EXPECT_TRUE(evaluate_slice(flat, flat, a).q_g_degenerate);
}

TEST(QG, HardCutBeatsAverageOnTwoFocusPair) {
    testgen::Gen gen(70);
    const int n = 64;
    const Slice sharp = gen.texture(n, n, 0.8);
    const Plane blurred = gaussian_blur(sharp, 3.0);
    Slice a = sharp, b = sharp, avg(n, n);
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) {
            if (r >= n / 2) a(r, c) = static_cast<float>(blurred(r, c));
            else b(r, c) = static_cast<float>(blurred(r, c));
            avg(r, c) = 0.5f * (a(r, c) + b(r, c));
        }
    EXPECT_GT(q_g(a, b, sharp), q_g(a, b, avg));
}

TEST(QG, InRangeAndTransposeInvariant) {
    testgen::Gen gen(71);
    const Slice a = gen.texture(30, 40, 1.0), b = gen.texture(30, 40, 2.0), f = gen.texture(30, 40, 1.5);
    const double v = q_g(a, b, f);
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
    EXPECT_NEAR(v, q_g(transpose(a), transpose(b), transpose(f)), 1e-12);
    EXPECT_NEAR(q_s(a, b, f), q_s(transpose(a), transpose(b), transpose(f)), 1e-12);
    EXPECT_NEAR(q_mi(a, b, f), q_mi(transpose(a), transpose(b), transpose(f)), 1e-12);
}

TEST(QS, Examples) {
    testgen::Gen gen(72);
    const Slice a = gen.texture(32, 32, 1.0);
    EXPECT_NEAR(q_s(a, a, a), 1.0, 1e-9);

    // all saliency in a: b is flat, so lambda = 1 and Q_s = Q0(a, a) = 1
    const Slice flat(32, 32, 0.4f);
    EXPECT_NEAR(q_s(a, flat, a), 1.0, 1e-9);

    const Slice board = checkerboard(28, 1, 0.2f, 0.8f);
    EXPECT_LT(q_s(board, board, invert(board)), 0.0);

    const Slice b = gen.texture(32, 32, 2.0), f = gen.texture(32, 32, 1.5);
    const double v = q_s(a, b, f);
    EXPECT_DOUBLE_EQ(v, q_s(b, a, f));
    EXPECT_GE(v, -1.0);
    EXPECT_LE(v, 1.0);
}

TEST(QS, FlatWindowsUseLuminanceOnly) {
    EXPECT_DOUBLE_EQ(quality_index(0.5, 0.5, 0.0, 0.0, 0.0), 1.0);
    const double c = q0_stabilizer;
    EXPECT_DOUBLE_EQ(quality_index(0.2, 0.6, 0.0, 0.0, 0.0), (2 * 0.2 * 0.6 + c) / (0.04 + 0.36 + c));
    EXPECT_NEAR(q_s(Slice(10, 10, 0.3f), Slice(10, 10, 0.3f), Slice(10, 10, 0.3f)), 1.0, 1e-12);
}

TEST(EvaluateVolume, MeansAndOptionalReference) {
    testgen::Gen gen(73);
    const Volume a({gen.texture(24, 24, 1.0), gen.texture(24, 24, 1.0)});
    const Volume b({gen.texture(24, 24, 1.0), gen.texture(24, 24, 1.0)});
    const auto blind = evaluate_volume(a, b, a);
    EXPECT_FALSE(blind.mean.emse.has_value());
    ASSERT_EQ(blind.slices.size(), 2u);
    EXPECT_NEAR(blind.mean.q_s, 0.5 * (blind.slices[0].q_s + blind.slices[1].q_s), 1e-12);
    const auto ref = evaluate_volume(a, b, a, a);
    EXPECT_EQ(*ref.mean.emse, 0.0);
    EXPECT_NEAR(*ref.mean.ssim, 1.0, 1e-12);
    EXPECT_THROW(evaluate_volume(a, b, Volume({a.slice(0)})), Error);
}

TEST(Metrics, Deterministic) {
    testgen::Gen gen(74);
    const Slice a = gen.texture(32, 32, 1.0), b = gen.texture(32, 32, 1.0), f = gen.texture(32, 32, 1.0);
    const auto m1 = evaluate_slice(a, b, f, a), m2 = evaluate_slice(a, b, f, a);
    EXPECT_EQ(m1.q_mi, m2.q_mi);
    EXPECT_EQ(m1.q_g, m2.q_g);
    EXPECT_EQ(m1.q_s, m2.q_s);
    EXPECT_EQ(*m1.ssim, *m2.ssim);
}
