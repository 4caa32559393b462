#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "hetaccess/phy.hpp"

using namespace hetaccess;
using namespace hetaccess::phy;

namespace {

// Frozen from an independent double-precision evaluation of the closed-form
// link formulas at the reference parameters.
constexpr double kBeta100 = 8.97762966649106e-08;
constexpr double kBeta35 = 1.3758933485952624e-06;
constexpr double kNoise1MHz = 8.295391429544246e-15;
constexpr double kNoiseHalfMHz = 4.147695714772123e-15;
constexpr double kIotThreshold1MHz = 1.0335493465839125;
constexpr double kIotErasure100m = 4.775032309556337e-07;
constexpr double kBroadbandPower35m = 1.7739277142567114e-06;

double mc_success(const LinkBudget& b, int draws, Rng& rng) {
    int ok = 0;
    for (int i = 0; i < draws; ++i) {
        const double g = sample_channel_power(b.beta, rng) * b.tx_power;
        if (g / b.noise_power >= b.sinr_threshold) ++ok;
    }
    return double(ok) / draws;
}

}  // namespace

TEST(Pathloss, MatchesLogDistanceModel) {
    const SystemParams p;
    EXPECT_NEAR(pathloss_gain(100.0, p), kBeta100, 1e-12 * kBeta100);
    EXPECT_NEAR(pathloss_gain(35.0, p), kBeta35, 1e-12 * kBeta35);
    EXPECT_NEAR(pathloss_gain(100.0, p), 8.99e-8, 0.005 * 8.99e-8);
    EXPECT_NEAR(pathloss_gain(35.0, p), 1.378e-6, 0.005 * 1.378e-6);
}

TEST(Pathloss, StrictlyDecreasingAndRejectsNonPositive) {
    const SystemParams p;
    double prev = pathloss_gain(1.0, p);
    for (double d = 2.0; d < 500.0; d *= 1.3) {
        const double b = pathloss_gain(d, p);
        EXPECT_LT(b, prev);
        prev = b;
    }
    EXPECT_THROW(pathloss_gain(0.0, p), std::domain_error);
    EXPECT_THROW(pathloss_gain(-3.0, p), std::domain_error);
}

TEST(ChannelPower, ExponentialMeanAndMedian) {
    Rng rng(11);
    const int n = 1'000'000;
    double sum = 0.0;
    int above_median = 0;
    for (int i = 0; i < n; ++i) {
        const double x = sample_channel_power(1.0, rng);
        sum += x;
        if (x > std::log(2.0)) ++above_median;
    }
    EXPECT_GE(sum / n, 0.995);
    EXPECT_LE(sum / n, 1.005);
    EXPECT_NEAR(double(above_median) / n, 0.5, 0.002);
    EXPECT_THROW(sample_channel_power(0.0, rng), std::domain_error);
}

TEST(Noise, ThermalNoiseIsLinearInWidth) {
    const SystemParams p;
    EXPECT_NEAR(noise_power(1e6, p), kNoise1MHz, 1e-12 * kNoise1MHz);
    EXPECT_NEAR(noise_power(0.5e6, p), kNoiseHalfMHz, 1e-12 * kNoiseHalfMHz);
    EXPECT_NEAR(noise_power(0.3e6, p) + noise_power(0.45e6, p), noise_power(0.75e6, p), 1e-27);
}

TEST(Sinr, DirectArithmetic) {
    EXPECT_DOUBLE_EQ(sinr(4.0, {}, 2.0), 2.0);
    const std::vector<double> two{2.0, 2.0};
    EXPECT_NEAR(sinr(4.0, two, 2.0), 4.0 / 6.0, 1e-15);
    const std::vector<double> zero{0.0};
    EXPECT_DOUBLE_EQ(sinr(4.0, {}, 2.0), sinr(4.0, zero, 2.0));
}

TEST(Sinr, ScaleInvariant) {
    Rng rng(3);
    std::uniform_real_distribution<double> u(0.01, 10.0);
    for (int i = 0; i < 200; ++i) {
        std::vector<double> inter{u(rng), u(rng), u(rng)};
        const double t = u(rng), n = u(rng), c = u(rng) * 1e3;
        std::vector<double> scaled;
        for (double x : inter) scaled.push_back(c * x);
        EXPECT_NEAR(sinr(t, inter, n), sinr(c * t, scaled, c * n), 1e-12 * sinr(t, inter, n));
    }
}

TEST(Threshold, Values) {
    EXPECT_DOUBLE_EQ(decode_threshold(5e6, 1e6), 31.0);
    EXPECT_NEAR(decode_threshold(1.024e6, 1e6), kIotThreshold1MHz, 1e-14);
    EXPECT_NEAR(decode_threshold(1.024e6, 1e6), 1.034, 1e-3);
    EXPECT_NEAR(decode_threshold(1e-9, 1e6), 0.0, 1e-12);
}

TEST(Threshold, IncreasingAndConvexInRate) {
    const double w = 1e6;
    for (double r = 1e5; r < 8e6; r += 1e5) {
        const double a = decode_threshold(r - 5e4, w), b = decode_threshold(r, w), c = decode_threshold(r + 5e4, w);
        EXPECT_LT(a, b);
        EXPECT_LT(b, c);
        EXPECT_GT(a + c, 2 * b);
    }
}

TEST(SuccessProb, ClosedFormLimits) {
    EXPECT_DOUBLE_EQ(interference_free_success_prob({1.0, 1.0, 1.0, 0.0, 0.0}), 1.0);
    const SystemParams p;
    const auto b = make_link_budget(pathloss_gain(100.0, p), 1e6, p.max_power, iot_rate(p), p);
    EXPECT_NEAR(1.0 - interference_free_success_prob(b), kIotErasure100m, 1e-12);
    EXPECT_NEAR(1.0 - interference_free_success_prob(b), 4.8e-7, 0.05e-7);
}

TEST(SuccessProb, StrictlyDecreasingInThreshold) {
    LinkBudget b{1.0, 1.0, 1.0, 0.0, 0.0};
    double prev = 1.0;
    for (double t = 0.1; t < 10.0; t += 0.1) {
        b.sinr_threshold = t;
        const double q = interference_free_success_prob(b);
        EXPECT_LT(q, prev);
        EXPECT_GT(q, 0.0);
        prev = q;
    }
}

TEST(SuccessProb, MonteCarloAgreesAtThreePoints) {
    Rng rng(99);
    for (double mean_snr_over_threshold : {0.5, 2.0, 8.0}) {
        const LinkBudget b{1.0, 1.0, 1.0, 0.0, 1.0 * mean_snr_over_threshold};
        EXPECT_NEAR(mc_success(b, 1'000'000, rng), interference_free_success_prob(b), 1e-3)
            << "threshold " << mean_snr_over_threshold;
    }
}

TEST(BroadbandRate, ClampActiveCloseIn) {
    const SystemParams p;
    EXPECT_DOUBLE_EQ(select_broadband_rate(p, kBeta35, 1e6), 5e6);
    const double tiny = 1e-14;
    const double unclamped = 1e6 * std::log2(1.0 + erasure_margin(0.1) * tiny * p.max_power / noise_power(1e6, p));
    EXPECT_LT(unclamped, 5e6);
    EXPECT_DOUBLE_EQ(select_broadband_rate(p, tiny, 1e6), unclamped);
}

TEST(BroadbandRate, SelectedRateIsAffordable) {
    const SystemParams p;
    for (double beta = 1e-16; beta < 1e-5; beta *= 3.0) {
        for (double w : {0.1e6, 0.5e6, 1e6}) {
            const double r = select_broadband_rate(p, beta, w);
            const double needed = decode_threshold(r, w) * noise_power(w, p) / (beta * erasure_margin(0.1));
            EXPECT_LE(needed, p.max_power * (1 + 1e-9));
            EXPECT_LE(broadband_power(r, beta, w, p), p.max_power);
        }
    }
}

TEST(BroadbandPower, CalibratedValueAndClamp) {
    const SystemParams p;
    EXPECT_NEAR(broadband_power(5e6, kBeta35, 1e6, p), kBroadbandPower35m, 1e-12 * kBroadbandPower35m);
    EXPECT_NEAR(broadband_power(5e6, kBeta35, 1e6, p), 1.77e-6, 0.01e-6);
    EXPECT_DOUBLE_EQ(broadband_power(5e6, 1e-30, 1e6, p), p.max_power);
    EXPECT_DOUBLE_EQ(broadband_power(5e6, 0.0, 1e6, p), p.max_power);
}

TEST(BroadbandPower, MonotoneBeforeClamp) {
    const SystemParams p;
    for (double r = 1e6; r < 5e6; r += 2.5e5)
        EXPECT_LE(broadband_power(r, kBeta35, 1e6, p), broadband_power(r + 2.5e5, kBeta35, 1e6, p));
    for (double beta = 1e-9; beta < 1e-5; beta *= 2.0)
        EXPECT_GE(broadband_power(5e6, beta, 1e6, p), broadband_power(5e6, beta * 2.0, 1e6, p));
}

TEST(BroadbandPower, MonteCarloErasureHitsTarget) {
    const SystemParams p;
    const double w = 1e6;
    const double pb = broadband_power(5e6, kBeta35, w, p);
    const auto b = make_link_budget(kBeta35, w, pb, 5e6, p);
    Rng rng(5);
    EXPECT_NEAR(1.0 - mc_success(b, 1'000'000, rng), 0.1, 0.005);
}
