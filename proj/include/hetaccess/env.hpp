#pragma once

#include <bit>
#include <cstdint>
#include <ostream>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "hetaccess/agents/reward.hpp"
#include "hetaccess/phy.hpp"
#include "hetaccess/rng.hpp"
#include "hetaccess/scenario.hpp"
#include "hetaccess/sic.hpp"
#include "hetaccess/state.hpp"

namespace hetaccess {

/// Uplink slots used by one packet in one frame; bit s is uplink slot s.
struct ReplicaPlacement {
    std::uint32_t mask = 0;

    int degree() const noexcept { return std::popcount(mask); }
    bool uses(int slot) const noexcept { return (mask >> slot) & 1U; }

    static ReplicaPlacement consecutive(int degree) {
        return ReplicaPlacement{degree <= 0 ? 0U : ((1U << degree) - 1U)};
    }
};

struct BroadbandBlockState {
    int received = 0;
    long blocks_completed = 0;
    int frames_for_current_block = 0;
    std::vector<int> frames_per_block;  // samples of F(K)

    bool operator==(const BroadbandBlockState&) const = default;
};

/// Adds one frame's worth of decoded encoded packets to the current block.
/// The block is acknowledged at the feedback slot, so encoded packets beyond
/// K in the completing frame do not carry over to the next block.
inline BroadbandBlockState broadband_progress(BroadbandBlockState block, int successes, int block_len) {
    block.received += successes;
    block.frames_for_current_block += 1;
    if (block.received >= block_len) {
        block.frames_per_block.push_back(block.frames_for_current_block);
        block.blocks_completed += 1;
        block.received = 0;
        block.frames_for_current_block = 0;
    }
    return block;
}

enum class PacketFate { none, pending, delivered, dropped };

inline const char* to_string(PacketFate f) {
    switch (f) {
        case PacketFate::none: return "none";
        case PacketFate::pending: return "pending";
        case PacketFate::delivered: return "delivered";
        case PacketFate::dropped: return "dropped";
    }
    return "?";
}

struct IotOutcome {
    AgentState before;        // decision state at frame start
    AgentState observed;      // tuple fed back at frame end
    PacketFate fate = PacketFate::none;
    int degree = 0;           // replicas actually sent
    int first_success_slot = -1;

    bool had_packet() const noexcept { return fate != PacketFate::none; }
    bool terminal() const noexcept { return fate == PacketFate::delivered || fate == PacketFate::dropped; }
};

struct FrameResult {
    long frame = 0;
    std::vector<IotOutcome> iot;
    std::vector<bool> broadband_slot_success;  // per uplink slot
    int broadband_successes = 0;
    bool broadband_block_completed = false;
};

struct EnvironmentCounters {
    long accepted = 0;
    long discarded = 0;
    long delivered = 0;
    long dropped = 0;

    long in_flight() const noexcept { return accepted - delivered - dropped; }
};

struct EnvironmentOptions {
    bool broadband_active = true;
};

/// Frame-synchronous uplink with one broadband user and J IoT devices.
///
/// Each frame has T_F - 1 uplink slots followed by a feedback slot. Devices
/// queue at most one packet; a packet generated during frame f is first sent
/// in frame f + 1. Latency ticks every slot from generation. A packet is
/// delivered with the latency of its first decoded replica, or dropped when
/// its latency exceeds the deadline at the end of a frame. Replicas that
/// would land after the deadline are not sent.
///
/// Fading and arrivals are drawn for every user and slot whether or not they
/// are used, from two streams seeded by `seed`, so different policies run on
/// the same seed face identical channel and traffic realizations.
class Environment {
public:
    Environment(Scenario scenario, Deployment deployment, std::uint64_t seed, EnvironmentOptions options = {})
        : scenario_(std::move(scenario)),
          deployment_(std::move(deployment)),
          options_(options),
          channel_rng_(derive_seed(seed, 0, "channel")),
          arrival_rng_(derive_seed(seed, 0, "arrivals")) {
        const auto& p = scenario_.params();
        const auto J = static_cast<std::size_t>(scenario_.num_iot());
        if (deployment_.iot_distances.size() != J)
            throw std::invalid_argument("Environment: deployment has " +
                                        std::to_string(deployment_.iot_distances.size()) + " IoT users, expected " +
                                        std::to_string(J));

        const double bb_width = scenario_.band_width(scenario_.broadband_band());
        bb_beta_ = phy::pathloss_gain(deployment_.broadband_distance, p);
        bb_rate_ = phy::select_broadband_rate(p, bb_beta_, bb_width);
        bb_power_ = phy::broadband_power(bb_rate_, bb_beta_, bb_width, p);
        bb_threshold_ = phy::decode_threshold(bb_rate_, bb_width);

        iot_beta_.resize(J);
        iot_threshold_.resize(J);
        for (std::size_t j = 0; j < J; ++j) {
            iot_beta_[j] = phy::pathloss_gain(deployment_.iot_distances[j], p);
            iot_threshold_[j] = phy::decode_threshold(phy::iot_rate(p), scenario_.band_width(scenario_.iot_band(int(j))));
        }
        queue_.assign(J, AgentState{});
        observed_.assign(J, AgentState{});
    }

    const Scenario& scenario() const noexcept { return scenario_; }
    const Deployment& deployment() const noexcept { return deployment_; }
    int num_iot() const noexcept { return scenario_.num_iot(); }
    long frame_index() const noexcept { return frame_; }

    double broadband_beta() const noexcept { return bb_beta_; }
    double broadband_rate() const noexcept { return bb_rate_; }
    double broadband_power() const noexcept { return bb_power_; }
    double broadband_threshold() const noexcept { return bb_threshold_; }
    double iot_beta(int user) const { return iot_beta_.at(std::size_t(user)); }
    double iot_threshold(int user) const { return iot_threshold_.at(std::size_t(user)); }
    double iot_power() const noexcept { return scenario_.params().max_power; }

    /// Link budget of an IoT device assuming it is alone on its sub-band.
    phy::LinkBudget iot_link(int user) const {
        const auto& p = scenario_.params();
        return phy::make_link_budget(iot_beta(user), scenario_.band_width(scenario_.iot_band(user)), iot_power(),
                                     phy::iot_rate(p), p);
    }

    /// Decision state of `user` for the coming frame.
    AgentState state(int user) const { return queue_.at(std::size_t(user)); }

    /// The tuple `user` received at the last feedback slot. A decoded flag is
    /// seen once; the queue itself is already reset.
    AgentState observe(int user) const { return observed_.at(std::size_t(user)); }

    /// Number of replicas `user` may still send this frame before its deadline.
    int max_degree(int user) const {
        const auto& s = queue_.at(std::size_t(user));
        if (s.empty()) return 0;
        return std::clamp(scenario_.params().latency_deadline - s.latency, 0, scenario_.params().uplink_slots());
    }

    const BroadbandBlockState& broadband_block() const noexcept { return block_; }
    void restart_broadband_block() { block_ = BroadbandBlockState{}; }
    const EnvironmentCounters& counters() const noexcept { return counters_; }

    FrameResult step_frame(std::span<const int> degrees) {
        check_size(degrees.size());
        std::vector<ReplicaPlacement> placements(degrees.size());
        for (std::size_t j = 0; j < degrees.size(); ++j) {
            if (degrees[j] < 0 || degrees[j] > scenario_.params().uplink_slots())
                throw std::out_of_range("step_frame: degree " + std::to_string(degrees[j]) + " of user " +
                                        std::to_string(j) + " outside [0, T_F - 1]");
            placements[j] = ReplicaPlacement::consecutive(degrees[j]);
        }
        return step_frame(std::span<const ReplicaPlacement>(placements));
    }

    FrameResult step_frame(std::span<const ReplicaPlacement> placements) {
        const auto& p = scenario_.params();
        const int uplink = p.uplink_slots();
        const int J = num_iot();
        check_size(placements.size());

        FrameResult result;
        result.frame = frame_;
        result.iot.resize(std::size_t(J));

        std::vector<ReplicaPlacement> sent(static_cast<std::size_t>(J));
        for (int j = 0; j < J; ++j) {
            const auto& place = placements[std::size_t(j)];
            if (place.mask >> uplink)
                throw std::out_of_range("step_frame: placement of user " + std::to_string(j) +
                                        " uses a non-uplink slot");
            const auto& s = queue_[std::size_t(j)];
            if (s.empty()) {
                if (place.mask != 0)
                    throw std::invalid_argument("step_frame: user " + std::to_string(j) +
                                                " has an empty queue but a nonzero action");
                continue;
            }
            // drop replicas past the deadline
            const int allowed = max_degree(j);
            sent[std::size_t(j)].mask = place.mask & ((allowed >= 32) ? ~0U : ((1U << allowed) - 1U));
        }

        // (1)-(2) transmissions and channel realizations
        const bool shared = scenario_.mode() == AccessMode::sharing;
        sic::FrameSignalLog iot_log;
        sic::FrameSignalLog bb_log;
        iot_log.slots.resize(std::size_t(uplink));
        iot_log.noise_power = phy::noise_power(scenario_.band_width(shared ? SubBand::shared : SubBand::iot), p);
        bb_log.slots.resize(std::size_t(uplink));
        bb_log.noise_power = phy::noise_power(scenario_.band_width(scenario_.broadband_band()), p);
        auto& bb_target = shared ? iot_log : bb_log;

        std::exponential_distribution<double> unit_exp(1.0);
        for (int s = 0; s < uplink; ++s) {
            const double bb_fade = unit_exp(channel_rng_);
            if (options_.broadband_active) {
                bb_target.slots[std::size_t(s)].push_back(
                    {-1, J + s, bb_fade * bb_beta_ * bb_power_, bb_threshold_});
            }
            for (int j = 0; j < J; ++j) {
                const double fade = unit_exp(channel_rng_);
                if (sent[std::size_t(j)].uses(s)) {
                    iot_log.slots[std::size_t(s)].push_back(
                        {j, j, fade * iot_beta_[std::size_t(j)] * iot_power(), iot_threshold_[std::size_t(j)]});
                }
            }
        }

        // (3) receiver
        const auto iot_decoded = sic::decode_frame(std::move(iot_log));
        const auto bb_decoded = shared ? iot_decoded : sic::decode_frame(std::move(bb_log));

        // (4) broadband block process
        result.broadband_slot_success.assign(std::size_t(uplink), false);
        if (options_.broadband_active) {
            for (int s = 0; s < uplink; ++s) {
                if (bb_decoded.slot_of(J + s) >= 0) {
                    result.broadband_slot_success[std::size_t(s)] = true;
                    ++result.broadband_successes;
                }
            }
            const long before = block_.blocks_completed;
            block_ = broadband_progress(std::move(block_), result.broadband_successes, p.broadband_block_len);
            result.broadband_block_completed = block_.blocks_completed != before;
        }

        // (5) IoT outcomes
        std::vector<bool> empty_at_start(static_cast<std::size_t>(J));
        for (int j = 0; j < J; ++j) {
            auto& q = queue_[std::size_t(j)];
            auto& out = result.iot[std::size_t(j)];
            out.before = q;
            empty_at_start[std::size_t(j)] = q.empty();
            if (q.empty()) {
                observed_[std::size_t(j)] = AgentState{};
                continue;
            }
            out.degree = sent[std::size_t(j)].degree();
            const int slot = iot_decoded.slot_of(j);
            if (slot >= 0) {
                out.first_success_slot = slot;
                out.fate = PacketFate::delivered;
                out.observed = AgentState{q.latency + slot + 1, q.repetitions + out.degree, true};
                ++counters_.delivered;
                q = AgentState{};
            } else {
                out.observed = AgentState{q.latency + p.frame_length, q.repetitions + out.degree, false};
                if (out.observed.latency > p.latency_deadline) {
                    out.fate = PacketFate::dropped;
                    ++counters_.dropped;
                    q = AgentState{};
                } else {
                    out.fate = PacketFate::pending;
                    q = out.observed;
                }
            }
            observed_[std::size_t(j)] = out.observed;
        }

        // (6) arrivals, drawn for every user and slot
        std::bernoulli_distribution arrival(p.iot_arrival_prob);
        for (int j = 0; j < J; ++j) {
            bool accepted = false;
            for (int k = 0; k < p.frame_length; ++k) {
                if (!arrival(arrival_rng_)) continue;
                if (empty_at_start[std::size_t(j)] && !accepted) {
                    accepted = true;
                    queue_[std::size_t(j)] = AgentState{p.frame_length - k, 0, false};
                    observed_[std::size_t(j)] = queue_[std::size_t(j)];
                    ++counters_.accepted;
                } else {
                    ++counters_.discarded;
                }
            }
        }

        // (7) feedback slot closes the frame
        ++frame_;
        return result;
    }

private:
    void check_size(std::size_t n) const {
        if (n != std::size_t(num_iot()))
            throw std::invalid_argument("step_frame: expected " + std::to_string(num_iot()) + " actions, got " +
                                        std::to_string(n));
    }

    Scenario scenario_;
    Deployment deployment_;
    EnvironmentOptions options_;
    Rng channel_rng_;
    Rng arrival_rng_;

    double bb_beta_ = 0.0;
    double bb_rate_ = 0.0;
    double bb_power_ = 0.0;
    double bb_threshold_ = 0.0;
    std::vector<double> iot_beta_;
    std::vector<double> iot_threshold_;

    std::vector<AgentState> queue_;
    std::vector<AgentState> observed_;
    BroadbandBlockState block_;
    EnvironmentCounters counters_;
    long frame_ = 0;
};

/// Convenience constructor mirroring the usual reset-from-seed entry point.
inline Environment reset(const Scenario& scenario, const Deployment& deployment, std::uint64_t seed,
                         EnvironmentOptions options = {}) {
    return Environment(scenario, deployment, seed, options);
}

/// Append-only text log of frames: one row per IoT user that held a packet,
/// plus one broadband row per frame (user = -1, degree = uplink slots,
/// first_success_slot = number of decoded broadband slots).
class FrameLogWriter {
public:
    explicit FrameLogWriter(std::ostream& os) : os_(os) {
        os_ << "# schema: hetaccess.frame_log v1\n"
            << "frame\tuser\tdegree\tfirst_success_slot\tfate\tlatency\trepetitions\n";
    }

    void append(const FrameResult& r) {
        os_ << r.frame << "\t-1\t" << r.broadband_slot_success.size() << '\t' << r.broadband_successes
            << "\tbroadband\t0\t0\n";
        for (std::size_t j = 0; j < r.iot.size(); ++j) {
            const auto& u = r.iot[j];
            if (!u.had_packet()) continue;
            os_ << r.frame << '\t' << j << '\t' << u.degree << '\t' << u.first_success_slot << '\t'
                << to_string(u.fate) << '\t' << u.observed.latency << '\t' << u.observed.repetitions << '\n';
        }
    }

private:
    std::ostream& os_;
};

}  // namespace hetaccess
