#pragma once

#include <algorithm>

#include "hetaccess/state.hpp"

namespace hetaccess::agents {

/// Per-state reward: a latency- and repetition-discounted payoff once the
/// packet is decoded, otherwise a linear penalty floored at -1.
inline double reward(int latency, int repetitions, bool decoded) noexcept {
    const double l = latency;
    const double v = repetitions;
    if (decoded) return 50.0 / ((l + 1.0) * (l + 1.0) + (v + 1.0));
    return std::max(-1.0, -0.03 * l - 0.01 * v);
}

inline double reward(const AgentState& s) noexcept { return reward(s.latency, s.repetitions, s.decoded); }

}  // namespace hetaccess::agents
