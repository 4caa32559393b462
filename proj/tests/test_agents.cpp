#include <gtest/gtest.h>

#include <cmath>
#include <set>
#include <sstream>

#include "hetaccess/agents/irsa.hpp"
#include "hetaccess/agents/q_learning.hpp"
#include "hetaccess/agents/reward.hpp"

using namespace hetaccess;
using namespace hetaccess::agents;

namespace {

const StateSpace kSpace(10, 50);
const AgentState kS{1, 0, false};
const AgentState kNext{11, 0, false};

LearningParams params(double mu, double phi) {
    LearningParams p;
    p.learning_rate = mu;
    p.discount = phi;
    return p;
}

}  // namespace

TEST(Reward, ReferencePoints) {
    EXPECT_DOUBLE_EQ(reward(0, 0, true), 25.0);
    EXPECT_DOUBLE_EQ(reward(0, 0, false), 0.0);
    EXPECT_DOUBLE_EQ(reward(50, 10, false), -1.0);
    EXPECT_DOUBLE_EQ(reward(3, 2, true), 50.0 / 19.0);
    EXPECT_DOUBLE_EQ(reward(10, 5, false), -0.35);
}

TEST(Reward, BoundsOverReachableStates) {
    for (int l = 0; l <= 60; ++l)
        for (int v = 0; v <= 54; ++v) {
            const double ok = reward(l, v, true);
            const double fail = reward(l, v, false);
            EXPECT_GT(ok, 0.0);
            EXPECT_LE(ok, 25.0);
            EXPECT_GE(fail, -1.0);
            EXPECT_LE(fail, 0.0);
        }
}

TEST(Temperature, GeometricScheduleHeldAtEnd) {
    LearningParams p;
    EXPECT_DOUBLE_EQ(temperature(p, 0), 5.0);
    EXPECT_NEAR(temperature(p, 2500), 0.5, 1e-12);
    EXPECT_NEAR(temperature(p, 5000), 0.05, 1e-15);
    EXPECT_NEAR(temperature(p, 90000), 0.05, 1e-15);
    for (long f = 1; f <= 5000; f += 7) EXPECT_LT(temperature(p, f), temperature(p, f - 1));
}

TEST(StateSpace, IndexRoundTripAndReachability) {
    EXPECT_EQ(kSpace.max_repetitions(), 45);
    for (std::size_t i = 0; i < kSpace.size(); ++i) EXPECT_EQ(kSpace.index(kSpace.state_at(i)), i);
    EXPECT_FALSE(kSpace.contains(AgentState{}));
    EXPECT_FALSE(kSpace.contains(AgentState{5, 0, true}));
    EXPECT_FALSE(kSpace.contains(AgentState{51, 0, false}));
    EXPECT_TRUE(kSpace.reachable(AgentState{41, 36, false}));
    EXPECT_FALSE(kSpace.reachable(AgentState{10, 1, false}));
    EXPECT_TRUE(kSpace.reachable(AgentState{11, 9, false}));
    EXPECT_THROW((void)kSpace.index(AgentState{0, 0, false}), std::out_of_range);
}

TEST(DoubleQ, PrintedRuleHandEvaluation) {
    QTablePair q(kSpace);
    q.q1.at(kS, 3) = 1.0;
    q.q2.at(kS, 3) = 1.0;
    // Q2 prefers action 4 at s'; Q1 values it at 2.0 and would itself prefer 5.
    q.q2.at(kNext, 4) = 7.0;
    q.q1.at(kNext, 4) = 2.0;
    q.q1.at(kNext, 5) = 9.0;
    q.q2.at(kNext, 5) = 4.0;
    const Transition t{kS, 3, kNext, 0.0, false};
    Rng rng(3);
    bool saw1 = false, saw2 = false;
    for (int i = 0; i < 64 && !(saw1 && saw2); ++i) {
        QTablePair c = q;
        const int which = doql_update(c, t, params(0.1, 0.9), rng);
        if (which == 1) {
            saw1 = true;
            EXPECT_NEAR(c.q1.at(kS, 3), 1.08, 1e-12);
            EXPECT_EQ(c.q2, q.q2);
        } else {
            saw2 = true;
            // updating Q2 picks a1 = argmax Q1(s') = 5 and evaluates Q2(s', 5) = 4
            EXPECT_NEAR(c.q2.at(kS, 3), 0.9 + 0.1 * 0.9 * 4.0, 1e-12);
            EXPECT_EQ(c.q1, q.q1);
        }
    }
    EXPECT_TRUE(saw1 && saw2);
}

TEST(DoubleQ, VanHasseltVariantSelfArgmax) {
    QTablePair q(kSpace);
    q.q1.at(kS, 3) = 1.0;
    q.q1.at(kNext, 6) = 2.0;  // Q1 argmax at s'
    q.q2.at(kNext, 6) = 2.0;  // evaluated by Q2
    q.q2.at(kNext, 1) = 5.0;
    const Transition t{kS, 3, kNext, 0.0, false};
    auto p = params(0.1, 0.9);
    p.double_q_rule = DoubleQRule::van_hasselt;
    Rng rng(11);
    for (int i = 0; i < 64; ++i) {
        QTablePair c = q;
        if (doql_update(c, t, p, rng) == 1) {
            EXPECT_NEAR(c.q1.at(kS, 3), 1.08, 1e-12);
            return;
        }
    }
    FAIL() << "Q1 never selected";
}

TEST(DoubleQ, ZeroLearningRateIsIdentityAndTerminalBootstrap) {
    QTablePair q(kSpace);
    q.q1.at(kNext, 2) = 3.0;
    q.q2.at(kNext, 2) = 3.0;
    Rng rng(5);
    QTablePair c = q;
    for (int i = 0; i < 10; ++i) doql_update(c, Transition{kS, 2, kNext, 4.0, false}, params(0.0, 0.9), rng);
    EXPECT_EQ(c, q);

    const Transition done{kS, 1, AgentState{3, 1, true}, 25.0, true};
    for (int i = 0; i < 10; ++i) doql_update(c, done, params(1.0, 0.95), rng);
    EXPECT_DOUBLE_EQ(c.q1.at(kS, 1), 25.0);
    EXPECT_DOUBLE_EQ(c.q2.at(kS, 1), 25.0);
}

TEST(DoubleQ, TableSelectionIsFairCoin) {
    QTablePair q(kSpace);
    Rng rng(2024);
    const Transition t{kS, 0, kNext, -0.3, false};
    int first = 0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) first += doql_update(q, t, params(0.1, 0.95), rng) == 1;
    EXPECT_NEAR(double(first) / n, 0.5, 0.01);
}

TEST(SingleQ, StandardRule) {
    QTable q(kSpace);
    q.at(kS, 2) = 1.0;
    q.at(kNext, 7) = 2.0;
    q.at(kNext, 1) = -4.0;
    ql_update(q, Transition{kS, 2, kNext, 0.5, false}, params(0.1, 0.9));
    EXPECT_NEAR(q.at(kS, 2), 0.9 + 0.1 * (0.5 + 0.9 * 2.0), 1e-12);
    ql_update(q, Transition{kS, 2, AgentState{51, 0, false}, -1.0, true}, params(1.0, 0.9));
    EXPECT_DOUBLE_EQ(q.at(kS, 2), -1.0);
}

// Two-step chain: s -> s' (reward 0), then each of k actions at s' ends the
// episode with a zero-mean noisy reward. The true Q(s, 0) is zero; the single
// estimator inherits the positive bias of max over noisy estimates.
TEST(DoubleQ, ReducesOverestimationBias) {
    const int k = 10, trials = 200, sweeps = 50;
    const auto p = params(0.1, 0.95);
    Rng rng(77);
    std::normal_distribution<double> noise(0.0, 1.0);
    double ql_sum = 0.0, doql_sum = 0.0;
    int doql_lower = 0;
    for (int trial = 0; trial < trials; ++trial) {
        QTable single(kSpace);
        QTablePair pair(kSpace);
        for (int it = 0; it < sweeps; ++it) {
            for (int a = 0; a < k; ++a) {
                const double r = noise(rng);
                const Transition end{kNext, a, AgentState{21, 0, false}, r, true};
                ql_update(single, end, p);
                doql_update(pair, end, p, rng);
            }
            const Transition step{kS, 0, kNext, 0.0, false};
            ql_update(single, step, p);
            doql_update(pair, step, p, rng);
        }
        const double ql = single.at(kS, 0);
        const double dq = 0.5 * (pair.q1.at(kS, 0) + pair.q2.at(kS, 0));
        ql_sum += ql;
        doql_sum += dq;
        doql_lower += dq < ql;
    }
    EXPECT_GT(ql_sum / trials, 0.1);
    EXPECT_LT(std::abs(doql_sum / trials), ql_sum / trials);
    // sign test: P(Binomial(200, 1/2) >= 120) < 0.003
    EXPECT_GE(doql_lower, 120);
}

TEST(Softmax, ProbabilitiesSumToOne) {
    Rng rng(9);
    std::uniform_real_distribution<double> u(-1e3, 1e3);
    for (int i = 0; i < 1000; ++i) {
        std::vector<double> v(10);
        for (double& x : v) x = u(rng);
        const auto p = softmax_probabilities(v, 0.05 + (i % 50));
        double s = 0.0;
        for (double x : p) s += x;
        EXPECT_NEAR(s, 1.0, 1e-12);
    }
    EXPECT_THROW(softmax_probabilities(std::vector<double>{0.0}, 0.0), std::domain_error);
}

TEST(Softmax, ClosedFormTwoActions) {
    const double tau = 0.7;
    const std::vector<double> v{0.0, std::log(2.0) * tau};
    Rng rng(1);
    int ones = 0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) ones += softmax_select(v, tau, rng) == 1;
    EXPECT_NEAR(double(ones) / n, 2.0 / 3.0, 0.01);
}

TEST(Softmax, UniformWhenEqualChiSquare) {
    const std::vector<double> v(10, 1.25);
    Rng rng(4);
    std::vector<int> counts(10);
    const int n = 100000;
    for (int i = 0; i < n; ++i) ++counts[std::size_t(softmax_select(v, 1.0, rng))];
    double chi2 = 0.0;
    for (int c : counts) chi2 += (c - n / 10.0) * (c - n / 10.0) / (n / 10.0);
    EXPECT_LT(chi2, 27.88);  // chi-square(9) upper 0.001 quantile
}

TEST(Softmax, ColdLimitPicksArgmax) {
    QTablePair q(kSpace);
    q.q1.at(kS, 4) = 1.0;
    q.q2.at(kS, 4) = 0.6;
    Rng rng(8);
    for (int i = 0; i < 1000; ++i) EXPECT_EQ(softmax_select(q, kS, 1e-3, rng), 4);
}

TEST(Policy, AveragedGreedyWithTiesToSmallerDegree) {
    QTablePair q(kSpace);
    q.q1.at(kS, 0) = 0.0;
    q.q1.at(kS, 1) = 2.0;
    q.q2.at(kS, 0) = 2.0;
    q.q2.at(kS, 1) = 0.0;
    EXPECT_EQ(extract_policy(q).action(kS), 0);

    Rng rng(12);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    QTablePair same(kSpace);
    for (double& x : same.q1.values()) x = u(rng);
    same.q2 = same.q1;
    EXPECT_EQ(extract_policy(same), extract_policy(same.q1));

    QTablePair scaled = same;
    for (double& x : scaled.q2.values()) x = u(rng);
    const auto base = extract_policy(scaled);
    for (double& x : scaled.q1.values()) x *= 3.5;
    for (double& x : scaled.q2.values()) x *= 3.5;
    EXPECT_EQ(extract_policy(scaled), base);
}

TEST(Checkpoint, RoundTripIsBitExact) {
    QTablePair q(kSpace);
    Rng rng(21);
    std::normal_distribution<double> n(0.0, 10.0);
    for (double& x : q.q1.values()) x = n(rng);
    for (double& x : q.q2.values()) x = n(rng) / 3.0;
    std::stringstream ss;
    write_qtables(ss, q);
    EXPECT_EQ(ss.str().rfind("# schema: hetaccess.qtable v1", 0), 0u);
    const auto back = read_qtables(ss, kSpace);
    EXPECT_EQ(back, q);
    EXPECT_EQ(fingerprint(back), fingerprint(q));
}

TEST(Checkpoint, RejectsMalformedAndTruncated) {
    std::stringstream bad("1\t0\t0\t12\t0\t0\n");
    EXPECT_THROW(read_qtables(bad, kSpace), std::runtime_error);
    std::stringstream shortfile("1\t0\t0\t0\t1.5\t2.5\n");
    EXPECT_THROW(read_qtables(shortfile, kSpace), std::runtime_error);
}

TEST(Irsa, ReferenceDegreeFrequencies) {
    const auto d = DegreeDistribution::reference();
    EXPECT_EQ(d.max_degree(), 8);
    Rng rng(31);
    std::vector<int> counts(9);
    const int n = 100000;
    for (int i = 0; i < n; ++i) ++counts[std::size_t(d.sample(rng))];
    EXPECT_NEAR(counts[2] / double(n), 0.25, 0.01);
    EXPECT_NEAR(counts[3] / double(n), 0.60, 0.01);
    EXPECT_NEAR(counts[8] / double(n), 0.15, 0.01);
    EXPECT_EQ(counts[0] + counts[1] + counts[4] + counts[5] + counts[6] + counts[7], 0);
}

TEST(Irsa, PlacementsAreDistinctSlotsWithinRange) {
    const auto d = DegreeDistribution::reference();
    Rng rng(32);
    std::vector<int> slot_hits(9);
    for (int i = 0; i < 20000; ++i) {
        const auto p = irsa_action(d, 9, rng);
        EXPECT_TRUE(p.degree() == 2 || p.degree() == 3 || p.degree() == 8);
        EXPECT_EQ(p.mask >> 9, 0u);
        for (int s = 0; s < 9; ++s) slot_hits[std::size_t(s)] += p.uses(s);
    }
    // degree mean 3.5, so each slot is used 3.5/9 of the time
    for (int h : slot_hits) EXPECT_NEAR(h / 20000.0, 3.5 / 9.0, 0.02);

    for (int i = 0; i < 200; ++i) {
        const auto p = irsa_action(d, 2, rng);
        EXPECT_EQ(p.degree(), 2);
        EXPECT_EQ(p.mask, 3u);
    }
    EXPECT_EQ(irsa_action(d, 9, rng, IrsaPlacement::consecutive).mask & 1u, 1u);
    EXPECT_EQ(irsa_action(d, 0, rng).mask, 0u);
}

TEST(Irsa, RejectsBadDistributions) {
    EXPECT_THROW(DegreeDistribution({0.5, 0.4}), std::invalid_argument);
    EXPECT_THROW(DegreeDistribution({1.2, -0.2}), std::invalid_argument);
    EXPECT_THROW(parse_irsa_placement("diagonal"), std::invalid_argument);
}
