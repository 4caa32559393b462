#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <random>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "hetaccess/rng.hpp"
#include "hetaccess/state.hpp"

namespace hetaccess::agents {

/// Which table picks the bootstrap action when updating the other one.
/// `printed`: updating Q1 picks a* = argmax Q2(s', .) and evaluates Q1(s', a*).
/// `van_hasselt`: updating Q1 picks a* = argmax Q1(s', .) and evaluates Q2(s', a*).
enum class DoubleQRule { printed, van_hasselt };

struct LearningParams {
    double learning_rate = 0.1;
    double discount = 0.95;
    double temperature_start = 5.0;
    double temperature_end = 0.05;
    long anneal_frames = 5000;
    DoubleQRule double_q_rule = DoubleQRule::printed;
};

/// Softmax temperature at `frame`, geometric from start to end over the
/// annealing horizon and held at the end value afterwards.
inline double temperature(const LearningParams& p, long frame) {
    if (p.anneal_frames <= 0) return p.temperature_end;
    const double x = std::clamp(double(frame) / double(p.anneal_frames), 0.0, 1.0);
    return p.temperature_start * std::pow(p.temperature_end / p.temperature_start, x);
}

/// Decision states of one device: a queued, undecoded packet with latency in
/// [1, deadline] and repetitions in [0, max_repetitions].
class StateSpace {
public:
    StateSpace(int frame_length, int deadline)
        : frame_length_(frame_length),
          deadline_(deadline),
          max_reps_((frame_length - 1) * ((deadline + frame_length - 1) / frame_length)) {}

    int num_actions() const noexcept { return frame_length_; }
    int deadline() const noexcept { return deadline_; }
    int frame_length() const noexcept { return frame_length_; }
    int max_repetitions() const noexcept { return max_reps_; }
    std::size_t size() const noexcept { return std::size_t(deadline_) * std::size_t(max_reps_ + 1); }

    bool contains(const AgentState& s) const noexcept {
        return !s.decoded && s.latency >= 1 && s.latency <= deadline_ && s.repetitions >= 0 &&
               s.repetitions <= max_reps_;
    }
    /// A decision state the environment can produce: each frame adds at most
    /// T_F - 1 replicas and exactly T_F slots of latency.
    bool reachable(const AgentState& s) const noexcept {
        return contains(s) && s.repetitions <= (frame_length_ - 1) * ((s.latency - 1) / frame_length_);
    }
    std::size_t index(const AgentState& s) const {
        if (!contains(s)) {
            std::ostringstream os;
            os << "state " << s << " is not a decision state";
            throw std::out_of_range(os.str());
        }
        return std::size_t(s.latency - 1) * std::size_t(max_reps_ + 1) + std::size_t(s.repetitions);
    }
    AgentState state_at(std::size_t i) const {
        return AgentState{int(i / std::size_t(max_reps_ + 1)) + 1, int(i % std::size_t(max_reps_ + 1)), false};
    }

    bool operator==(const StateSpace&) const = default;

private:
    int frame_length_;
    int deadline_;
    int max_reps_;
};

/// Smallest index among the maxima.
inline int argmax(std::span<const double> values) {
    return int(std::max_element(values.begin(), values.end()) - values.begin());
}

class QTable {
public:
    explicit QTable(StateSpace space, double init = 0.0)
        : space_(space), values_(space.size() * std::size_t(space.num_actions()), init) {}

    const StateSpace& space() const noexcept { return space_; }
    std::span<const double> row(const AgentState& s) const {
        return {values_.data() + space_.index(s) * std::size_t(space_.num_actions()), std::size_t(space_.num_actions())};
    }
    std::span<double> row(const AgentState& s) {
        return {values_.data() + space_.index(s) * std::size_t(space_.num_actions()), std::size_t(space_.num_actions())};
    }
    double& at(const AgentState& s, int a) { return row(s)[std::size_t(a)]; }
    double at(const AgentState& s, int a) const { return row(s)[std::size_t(a)]; }
    std::span<const double> values() const noexcept { return values_; }
    std::span<double> values() noexcept { return values_; }

    bool operator==(const QTable&) const = default;

private:
    StateSpace space_;
    std::vector<double> values_;
};

struct QTablePair {
    QTable q1;
    QTable q2;

    explicit QTablePair(StateSpace space) : q1(space), q2(space) {}

    /// (Q1 + Q2) / 2 over the actions of `s`.
    std::vector<double> average(const AgentState& s) const {
        const auto a = q1.row(s);
        const auto b = q2.row(s);
        std::vector<double> out(a.size());
        for (std::size_t i = 0; i < a.size(); ++i) out[i] = 0.5 * (a[i] + b[i]);
        return out;
    }

    bool operator==(const QTablePair&) const = default;
};

/// One observed step of a device. `terminal` marks delivery or drop.
struct Transition {
    AgentState state;
    int action = 0;
    AgentState next_state;
    double reward = 0.0;
    bool terminal = false;
};

inline std::vector<double> softmax_probabilities(std::span<const double> values, double temperature) {
    if (!(temperature > 0.0)) throw std::domain_error("softmax: temperature must be positive");
    const double top = *std::max_element(values.begin(), values.end());
    std::vector<double> p(values.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        p[i] = std::exp((values[i] - top) / temperature);
        sum += p[i];
    }
    for (double& x : p) x /= sum;
    return p;
}

inline int softmax_select(std::span<const double> values, double temperature, Rng& rng) {
    const auto p = softmax_probabilities(values, temperature);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double x = u(rng);
    for (std::size_t i = 0; i + 1 < p.size(); ++i) {
        if (x < p[i]) return int(i);
        x -= p[i];
    }
    return int(p.size()) - 1;
}

/// Softmax over the averaged tables.
inline int softmax_select(const QTablePair& q, const AgentState& s, double temperature, Rng& rng) {
    const auto avg = q.average(s);
    return softmax_select(std::span<const double>(avg), temperature, rng);
}

/// Double Q-learning step. Exactly one table, chosen by a fair coin, is
/// updated; returns 1 or 2 for the table touched.
inline int doql_update(QTablePair& q, const Transition& t, const LearningParams& p, Rng& rng) {
    std::bernoulli_distribution coin(0.5);
    const bool first = coin(rng);
    QTable& own = first ? q.q1 : q.q2;
    QTable& other = first ? q.q2 : q.q1;
    double continuation = 0.0;
    if (!t.terminal) {
        if (p.double_q_rule == DoubleQRule::printed) {
            continuation = own.at(t.next_state, argmax(other.row(t.next_state)));
        } else {
            continuation = other.at(t.next_state, argmax(own.row(t.next_state)));
        }
    }
    double& cell = own.at(t.state, t.action);
    cell = (1.0 - p.learning_rate) * cell + p.learning_rate * (t.reward + p.discount * continuation);
    return first ? 1 : 2;
}

inline void ql_update(QTable& q, const Transition& t, const LearningParams& p) {
    double continuation = 0.0;
    if (!t.terminal) {
        const auto next = q.row(t.next_state);
        continuation = *std::max_element(next.begin(), next.end());
    }
    double& cell = q.at(t.state, t.action);
    cell = (1.0 - p.learning_rate) * cell + p.learning_rate * (t.reward + p.discount * continuation);
}

/// Deterministic state -> action map over a StateSpace.
class Policy {
public:
    explicit Policy(StateSpace space, int fill = 0) : space_(space), actions_(space.size(), fill) {}

    const StateSpace& space() const noexcept { return space_; }
    int action(const AgentState& s) const { return actions_[space_.index(s)]; }
    void set(const AgentState& s, int a) { actions_[space_.index(s)] = a; }
    std::span<const int> actions() const noexcept { return actions_; }

    bool operator==(const Policy&) const = default;

private:
    StateSpace space_;
    std::vector<int> actions_;
};

/// Greedy policy of one table; ties go to the smaller repetition degree.
inline Policy extract_policy(const QTable& q) {
    Policy pi(q.space());
    for (std::size_t i = 0; i < q.space().size(); ++i) {
        const auto s = q.space().state_at(i);
        pi.set(s, argmax(q.row(s)));
    }
    return pi;
}

/// Greedy policy of (Q1 + Q2) / 2.
inline Policy extract_policy(const QTablePair& q) {
    Policy pi(q.q1.space());
    for (std::size_t i = 0; i < q.q1.space().size(); ++i) {
        const auto s = q.q1.space().state_at(i);
        const auto avg = q.average(s);
        pi.set(s, argmax(avg));
    }
    return pi;
}

/// FNV-1a over the raw table bytes; used to prove tables stay frozen.
inline std::uint64_t fingerprint(const QTablePair& q) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const auto* t : {&q.q1, &q.q2}) {
        for (double v : t->values()) {
            const auto* bytes = reinterpret_cast<const unsigned char*>(&v);
            for (std::size_t i = 0; i < sizeof v; ++i) {
                h ^= bytes[i];
                h *= 0x100000001b3ULL;
            }
        }
    }
    return h;
}

// Checkpoint format: a header line, then one row per (state, action):
// latency repetitions decoded action q1 q2, tab separated.

inline void write_qtables(std::ostream& os, const QTablePair& q) {
    const auto& space = q.q1.space();
    os << "# schema: hetaccess.qtable v1 frame_length=" << space.frame_length() << " deadline=" << space.deadline()
       << '\n'
       << "latency\trepetitions\tdecoded\taction\tq1\tq2\n";
    os << std::setprecision(17);
    for (std::size_t i = 0; i < space.size(); ++i) {
        const auto s = space.state_at(i);
        for (int a = 0; a < space.num_actions(); ++a)
            os << s.latency << '\t' << s.repetitions << "\t0\t" << a << '\t' << q.q1.at(s, a) << '\t' << q.q2.at(s, a)
               << '\n';
    }
}

inline QTablePair read_qtables(std::istream& is, StateSpace space) {
    QTablePair q(space);
    std::string line;
    std::size_t rows = 0;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#' || line.rfind("latency", 0) == 0) continue;
        std::istringstream in(line);
        AgentState s;
        int decoded = 0, a = 0;
        double v1 = 0.0, v2 = 0.0;
        if (!(in >> s.latency >> s.repetitions >> decoded >> a >> v1 >> v2) || decoded != 0 || a < 0 ||
            a >= space.num_actions() || !space.contains(s))
            throw std::runtime_error("read_qtables: malformed row '" + line + "'");
        q.q1.at(s, a) = v1;
        q.q2.at(s, a) = v2;
        ++rows;
    }
    if (rows != space.size() * std::size_t(space.num_actions()))
        throw std::runtime_error("read_qtables: expected " + std::to_string(space.size() * space.num_actions()) +
                                 " rows, got " + std::to_string(rows));
    return q;
}

}  // namespace hetaccess::agents
