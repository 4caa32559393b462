#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

#include "hetaccess/agents/q_learning.hpp"
#include "hetaccess/phy.hpp"
#include "hetaccess/scenario.hpp"
#include "hetaccess/state.hpp"

namespace hetaccess::agents {

struct ModelOutcome {
    double probability = 0.0;
    AgentState next;
    bool terminal = false;
};

/// Packet dynamics of one device that never meets contention: every replica
/// succeeds independently with probability q. Mirrors the environment's
/// timing (consecutive replicas from the first uplink slot, none after the
/// deadline, latency +T_F per failed frame, drop past the deadline).
class SingleUserModel {
public:
    SingleUserModel(int frame_length, int deadline, double success_prob, double arrival_prob)
        : space_(frame_length, deadline), success_prob_(success_prob), arrival_prob_(arrival_prob) {
        if (!(success_prob >= 0.0 && success_prob <= 1.0))
            throw std::domain_error("SingleUserModel: success probability outside [0, 1]");
        if (!(arrival_prob >= 0.0 && arrival_prob <= 1.0))
            throw std::domain_error("SingleUserModel: arrival probability outside [0, 1]");
    }

    const StateSpace& space() const noexcept { return space_; }
    double success_prob() const noexcept { return success_prob_; }
    double arrival_prob() const noexcept { return arrival_prob_; }
    int num_actions() const noexcept { return space_.num_actions(); }

    /// Successor distribution of a decision state under `action`, or of the
    /// empty state (0,0,0) under action 0.
    std::vector<ModelOutcome> outcomes(const AgentState& s, int action) const {
        const int T = space_.frame_length();
        if (action < 0 || action >= T) throw std::out_of_range("SingleUserModel: action out of range");
        std::vector<ModelOutcome> out;
        if (s.empty()) {
            if (action != 0) throw std::invalid_argument("SingleUserModel: empty queue only allows action 0");
            double none = 1.0;
            for (int k = 0; k < T; ++k) {
                out.push_back({none * arrival_prob_, AgentState{T - k, 0, false}, false});
                none *= 1.0 - arrival_prob_;
            }
            out.push_back({none, AgentState{}, false});
            return out;
        }
        if (!space_.contains(s)) throw std::out_of_range("SingleUserModel: not a decision state");
        const int sent = std::min(action, std::max(0, space_.deadline() - s.latency));
        const int reps = s.repetitions + sent;
        const double q = success_prob_;
        double miss = 1.0;
        for (int k = 1; k <= sent; ++k) {
            out.push_back({miss * q, AgentState{s.latency + k, reps, true}, true});
            miss *= 1.0 - q;
        }
        const AgentState failed{s.latency + T, reps, false};
        out.push_back({miss, failed, failed.latency > space_.deadline()});
        return out;
    }

    /// Latency of a fresh packet at its first frame, conditioned on an arrival.
    std::vector<std::pair<AgentState, double>> start_distribution() const {
        std::vector<std::pair<AgentState, double>> d;
        double total = 0.0;
        for (const auto& o : outcomes(AgentState{}, 0))
            if (!o.next.empty()) {
                d.emplace_back(o.next, o.probability);
                total += o.probability;
            }
        for (auto& [s, p] : d) p /= total;
        return d;
    }

    /// Largest deviation of any row sum from one.
    double normalization_error() const {
        double worst = std::abs(row_sum(AgentState{}, 0) - 1.0);
        for (std::size_t i = 0; i < space_.size(); ++i)
            for (int a = 0; a < num_actions(); ++a)
                worst = std::max(worst, std::abs(row_sum(space_.state_at(i), a) - 1.0));
        return worst;
    }

private:
    double row_sum(const AgentState& s, int a) const {
        double sum = 0.0;
        for (const auto& o : outcomes(s, a)) sum += o.probability;
        return sum;
    }

    StateSpace space_;
    double success_prob_;
    double arrival_prob_;
};

/// Model of an IoT device at `iot_distance` that is alone on its sub-band.
inline SingleUserModel build_single_user_model(const Scenario& scenario, double iot_distance) {
    const auto& p = scenario.params();
    const SubBand band = scenario.mode() == AccessMode::slicing ? SubBand::iot : SubBand::shared;
    const auto link = phy::make_link_budget(phy::pathloss_gain(iot_distance, p), scenario.band_width(band), p.max_power,
                                            phy::iot_rate(p), p);
    return SingleUserModel(p.frame_length, p.latency_deadline, phy::interference_free_success_prob(link),
                           p.iot_arrival_prob);
}

}  // namespace hetaccess::agents
