#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>
#include <vector>

#include "hetaccess/agents/q_learning.hpp"
#include "hetaccess/agents/reward.hpp"
#include "hetaccess/agents/single_user_model.hpp"

namespace hetaccess::agents {

struct ValueSolution {
    std::vector<double> value;  // per decision state, indexed by StateSpace
    double empty_value = 0.0;   // V(0,0,0)
    QTable action_values;       // Q_VI(s, a)
    Policy policy;              // greedy, ties to the smaller degree
    int sweeps = 0;
};

namespace detail {

template <class ValueOf>
double backup(const SingleUserModel& m, const AgentState& s, int a, double discount, ValueOf&& value_of) {
    double q = 0.0;
    for (const auto& o : m.outcomes(s, a)) {
        const double cont = o.terminal ? 0.0 : value_of(o.next);
        q += o.probability * (reward(o.next) + discount * cont);
    }
    return q;
}

}  // namespace detail

/// Jacobi value iteration with rewards collected on entering s'. Terminal
/// successors (delivered, dropped) contribute their reward only. Iterates
/// until the sup-norm change of a sweep drops below `tol`. Unreachable
/// decision states keep value and action values 0.
inline ValueSolution value_iteration(const SingleUserModel& m, double discount, double tol,
                                     int max_sweeps = 100000) {
    if (m.normalization_error() > 1e-12) throw std::invalid_argument("value_iteration: model rows do not sum to one");
    if (!(discount >= 0.0 && discount < 1.0)) throw std::domain_error("value_iteration: discount must be in [0, 1)");

    const auto& space = m.space();
    std::vector<double> v(space.size(), 0.0), next(space.size(), 0.0);
    double v_empty = 0.0;
    int sweeps = 0;
    for (; sweeps < max_sweeps;) {
        const auto value_of = [&](const AgentState& s) { return s.empty() ? v_empty : v[space.index(s)]; };
        double change = 0.0;
        for (std::size_t i = 0; i < space.size(); ++i) {
            const auto s = space.state_at(i);
            if (!space.reachable(s)) continue;
            double best = -std::numeric_limits<double>::infinity();
            for (int a = 0; a < m.num_actions(); ++a) best = std::max(best, detail::backup(m, s, a, discount, value_of));
            next[i] = best;
            change = std::max(change, std::abs(best - v[i]));
        }
        const double e = detail::backup(m, AgentState{}, 0, discount, value_of);
        change = std::max(change, std::abs(e - v_empty));
        v.swap(next);
        v_empty = e;
        ++sweeps;
        if (change < tol) break;
    }

    const auto value_of = [&](const AgentState& s) { return s.empty() ? v_empty : v[space.index(s)]; };
    QTable qv(space);
    for (std::size_t i = 0; i < space.size(); ++i) {
        const auto s = space.state_at(i);
        if (!space.reachable(s)) continue;
        for (int a = 0; a < m.num_actions(); ++a) qv.at(s, a) = detail::backup(m, s, a, discount, value_of);
    }
    auto policy = extract_policy(qv);
    return ValueSolution{std::move(v), v_empty, std::move(qv), std::move(policy), sweeps};
}

/// Largest change one more Bellman sweep would make; zero at a fixed point.
inline double bellman_residual(const SingleUserModel& m, const ValueSolution& sol, double discount) {
    const auto& space = m.space();
    const auto value_of = [&](const AgentState& s) { return s.empty() ? sol.empty_value : sol.value[space.index(s)]; };
    double worst = 0.0;
    for (std::size_t i = 0; i < space.size(); ++i) {
        const auto s = space.state_at(i);
        if (!space.reachable(s)) continue;
        double best = -std::numeric_limits<double>::infinity();
        for (int a = 0; a < m.num_actions(); ++a) best = std::max(best, detail::backup(m, s, a, discount, value_of));
        worst = std::max(worst, std::abs(best - sol.value[i]));
    }
    return std::max(worst, std::abs(detail::backup(m, AgentState{}, 0, discount, value_of) - sol.empty_value));
}

/// Seeds both tables with Q_VI.
inline void vi_initialize(QTablePair& q, const ValueSolution& sol) {
    if (!(q.q1.space() == sol.action_values.space())) throw std::invalid_argument("vi_initialize: state space mismatch");
    q.q1 = sol.action_values;
    q.q2 = sol.action_values;
}

inline void vi_initialize(QTable& q, const ValueSolution& sol) {
    if (!(q.space() == sol.action_values.space())) throw std::invalid_argument("vi_initialize: state space mismatch");
    q = sol.action_values;
}

/// Fate distribution of one packet under `policy`, starting from the fresh
/// packet distribution: probability of delivery at each latency, plus the
/// probability and expected terminal reward of a drop.
struct PacketForecast {
    std::map<int, double> delivered_latency;  // latency (slots) -> probability
    double drop_prob = 0.0;
    double expected_terminal_reward = 0.0;
};

inline PacketForecast forecast_packet(const SingleUserModel& m, const Policy& policy) {
    PacketForecast f;
    std::map<AgentState, double> frontier;
    for (const auto& [s, p] : m.start_distribution()) frontier[s] += p;
    // latency grows by a frame per step, so the walk ends within deadline / T_F + 2 steps
    while (!frontier.empty()) {
        std::map<AgentState, double> next;
        for (const auto& [s, p] : frontier) {
            for (const auto& o : m.outcomes(s, policy.action(s))) {
                const double w = p * o.probability;
                if (w == 0.0) continue;
                if (!o.terminal) {
                    next[o.next] += w;
                } else if (o.next.decoded) {
                    f.delivered_latency[o.next.latency] += w;
                    f.expected_terminal_reward += w * reward(o.next);
                } else {
                    f.drop_prob += w;
                    f.expected_terminal_reward += w * reward(o.next);
                }
            }
        }
        frontier.swap(next);
    }
    return f;
}

}  // namespace hetaccess::agents
