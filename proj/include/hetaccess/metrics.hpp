#pragma once

#include <algorithm>
#include <cstdint>
#include <istream>
#include <numeric>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "hetaccess/agents/reward.hpp"

namespace hetaccess::metrics {

/// A packet that left its queue, attributed to the frame it terminated in.
struct PacketRecord {
    long frame = 0;
    int user = 0;
    bool delivered = false;
    int latency = 0;  // slots
    int repetitions = 0;
    double reward = 0.0;

    bool operator==(const PacketRecord&) const = default;
};

enum class Outcome { delivered, dropped };

struct LatencySample {
    int user = 0;
    double latency_ms = 0.0;
    Outcome outcome = Outcome::delivered;
};

inline std::vector<LatencySample> latency_samples(std::span<const PacketRecord> packets, double slot_duration) {
    std::vector<LatencySample> out;
    out.reserve(packets.size());
    for (const auto& p : packets)
        out.push_back({p.user, p.latency * slot_duration * 1e3, p.delivered ? Outcome::delivered : Outcome::dropped});
    return out;
}

struct CdfPoint {
    double x = 0.0;
    double cdf = 0.0;
};

/// Empirical latency CDF. Dropped packets count in the denominator but never
/// below any grid point, so the curve plateaus at the delivery ratio.
inline std::vector<CdfPoint> latency_cdf(std::span<const LatencySample> samples, std::span<const double> grid) {
    if (samples.empty()) throw std::invalid_argument("latency_cdf: no samples");
    std::vector<double> delivered;
    for (const auto& s : samples)
        if (s.outcome == Outcome::delivered) delivered.push_back(s.latency_ms);
    std::sort(delivered.begin(), delivered.end());
    std::vector<CdfPoint> out;
    out.reserve(grid.size());
    for (double x : grid) {
        const auto n = std::upper_bound(delivered.begin(), delivered.end(), x) - delivered.begin();
        out.push_back({x, double(n) / double(samples.size())});
    }
    return out;
}

/// Throughput r_b K / (E[F] T_F) in bit/s, with T_F counted in slots.
inline double throughput(double rate, int block_len, std::span<const int> frames_per_block, int frame_length) {
    if (frames_per_block.empty()) throw std::invalid_argument("throughput: no completed blocks");
    double sum = 0.0;
    for (int f : frames_per_block) sum += f;
    const double mean = sum / double(frames_per_block.size());
    return rate * block_len / (mean * frame_length);
}

inline double energy_efficiency(double throughput_bps, double power_w) {
    if (!(power_w > 0.0)) throw std::invalid_argument("energy_efficiency: power must be positive");
    return throughput_bps / power_w;
}

struct RewardPoint {
    long frame_end = 0;  // exclusive end of the window
    double mean_reward = 0.0;
    long packets = 0;
};

/// Mean terminal reward per packet over consecutive windows of `window`
/// frames covering [begin, end). Windows with no terminating packet are
/// omitted. Records must be in frame order.
inline std::vector<RewardPoint> avg_reward_per_packet(std::span<const PacketRecord> packets, long window, long begin,
                                                      long end) {
    if (window <= 0) throw std::invalid_argument("avg_reward_per_packet: window must be positive");
    std::vector<RewardPoint> out;
    auto it = std::lower_bound(packets.begin(), packets.end(), begin,
                               [](const PacketRecord& p, long f) { return p.frame < f; });
    for (long start = begin; start < end; start += window) {
        const long stop = std::min(end, start + window);
        double sum = 0.0;
        long n = 0;
        for (; it != packets.end() && it->frame < stop; ++it) {
            sum += it->reward;
            ++n;
        }
        if (n > 0) out.push_back({stop, sum / double(n), n});
    }
    return out;
}

/// Mean terminal reward of packets ending in [begin, end).
inline double mean_reward(std::span<const PacketRecord> packets, long begin, long end) {
    double sum = 0.0;
    long n = 0;
    for (const auto& p : packets) {
        if (p.frame < begin || p.frame >= end) continue;
        sum += p.reward;
        ++n;
    }
    return n > 0 ? sum / double(n) : 0.0;
}

/// Packet terminations recovered from a frame log written by FrameLogWriter.
inline std::vector<PacketRecord> read_frame_log(std::istream& is) {
    std::vector<PacketRecord> out;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#' || line.rfind("frame", 0) == 0) continue;
        std::istringstream in(line);
        long frame = 0;
        int user = 0, degree = 0, slot = 0, latency = 0, reps = 0;
        std::string fate;
        if (!(in >> frame >> user >> degree >> slot >> fate >> latency >> reps))
            throw std::runtime_error("read_frame_log: malformed row '" + line + "'");
        if (fate != "delivered" && fate != "dropped") continue;
        const bool ok = fate == "delivered";
        out.push_back({frame, user, ok, latency, reps, agents::reward(latency, reps, ok)});
    }
    return out;
}

/// Everything persisted for one replication of one scheme.
struct RunArtifacts {
    std::string scheme;
    std::string mode;
    int num_iot = 0;
    double iot_fraction = 0.0;  // B2 / B, 0 under sharing
    int deadline = 0;
    int replication = 0;
    std::uint64_t seed = 0;
    double broadband_distance = 0.0;
    double broadband_rate = 0.0;
    double broadband_power = 0.0;
    std::vector<int> frames_per_block;  // inference phase
    double mean_frames_per_block = 0.0;
    double throughput = 0.0;
    double energy_efficiency = 0.0;
    double training_reward = 0.0;
    double inference_reward = 0.0;
    long delivered = 0;
    long dropped = 0;
    long accepted = 0;
    long discarded = 0;
    long in_flight = 0;
    std::vector<RewardPoint> training_curve;
    std::vector<LatencySample> inference_latency;
    std::uint64_t table_fingerprint_before = 0;  // at the start of inference
    std::uint64_t table_fingerprint_after = 0;

    double reliability() const {
        const long n = delivered + dropped;
        return n > 0 ? double(delivered) / double(n) : 0.0;
    }
};

}  // namespace hetaccess::metrics
