#pragma once

#include <compare>
#include <ostream>

namespace hetaccess {

/// What an IoT device knows about its own packet at a frame boundary:
/// latency l in slots since generation, repetitions v sent since generation,
/// and the decoded flag delta. (0, 0, 0) is an empty queue.
struct AgentState {
    int latency = 0;
    int repetitions = 0;
    bool decoded = false;

    bool empty() const noexcept { return latency == 0 && repetitions == 0 && !decoded; }
    auto operator<=>(const AgentState&) const = default;
};

inline std::ostream& operator<<(std::ostream& os, const AgentState& s) {
    return os << '(' << s.latency << ',' << s.repetitions << ',' << (s.decoded ? 1 : 0) << ')';
}

}  // namespace hetaccess
