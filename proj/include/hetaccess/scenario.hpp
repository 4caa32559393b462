#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "hetaccess/rng.hpp"

namespace hetaccess {

/// Raised when a configuration violates an invariant. `field()` names the
/// offending key so the CLI can report it in its machine-readable error line.
class ConfigError : public std::invalid_argument {
public:
    ConfigError(std::string field, const std::string& what)
        : std::invalid_argument(field + ": " + what), field_(std::move(field)) {}
    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

enum class AccessMode { slicing, sharing };

inline const char* to_string(AccessMode m) { return m == AccessMode::slicing ? "slicing" : "sharing"; }

inline AccessMode parse_access_mode(const std::string& s) {
    if (s == "slicing" || s == "Slicing") return AccessMode::slicing;
    if (s == "sharing" || s == "Sharing") return AccessMode::sharing;
    throw ConfigError("band.mode", "expected 'slicing' or 'sharing', got '" + s + "'");
}

/// Sub-band index w. Sub-band 1 is broadband-only, 2 is IoT-only, 3 is shared.
enum class SubBand : int { broadband = 1, iot = 2, shared = 3 };

/// Link and traffic constants of one experiment. Defaults are the reference
/// values used throughout the project (1 MHz band, 10-slot frames, 200 mW).
struct SystemParams {
    double bandwidth_total = 1e6;          // Hz
    double slot_duration = 1e-3;           // s
    int frame_length = 10;                 // slots, last one is feedback
    double carrier_freq = 2e9;             // Hz
    double pathloss_exponent = 2.6;
    double antenna_gain_tx = 10.0;
    double antenna_gain_rx = 10.0;
    double noise_temperature = 190.0;      // K
    double noise_figure_db = 5.0;
    double max_power = 0.2;                // W
    int iot_packet_bytes = 128;
    double iot_arrival_prob = 0.1;         // per slot
    int broadband_block_len = 32;          // source packets per block
    double broadband_max_rate = 5e6;       // bit/s
    double broadband_target_erasure = 0.1;
    int latency_deadline = 50;             // slots
    int num_iot = 10;

    int uplink_slots() const noexcept { return frame_length - 1; }

    bool operator==(const SystemParams&) const = default;
};

struct BandPlan {
    AccessMode mode = AccessMode::slicing;
    double b1 = 0.5e6;
    double b2 = 0.5e6;
    double b3 = 0.0;
    /// alpha: sub-band of each user, index 0 is the broadband user and
    /// 1..J the IoT users. Left empty, it is derived from `mode`.
    std::vector<SubBand> allocation;

    bool operator==(const BandPlan&) const = default;

    static BandPlan slicing(double total, double iot_fraction) {
        return BandPlan{AccessMode::slicing, total * (1.0 - iot_fraction), total * iot_fraction, 0.0, {}};
    }
    static BandPlan sharing(double total) { return BandPlan{AccessMode::sharing, 0.0, 0.0, total, {}}; }
};

inline constexpr double kBroadbandMinDistance = 35.0;
inline constexpr double kBroadbandMaxDistance = 75.0;
inline constexpr double kIotMinDistance = 100.0;
inline constexpr double kIotMaxDistance = 400.0;

struct Deployment {
    double broadband_distance = 0.0;
    std::vector<double> iot_distances;
    std::uint64_t rng_seed = 0;

    bool operator==(const Deployment&) const = default;
};

/// A validated, immutable experiment configuration.
class Scenario {
public:
    const SystemParams& params() const noexcept { return params_; }
    const BandPlan& plan() const noexcept { return plan_; }
    AccessMode mode() const noexcept { return plan_.mode; }
    int num_iot() const noexcept { return params_.num_iot; }

    double band_width(SubBand w) const noexcept {
        switch (w) {
            case SubBand::broadband: return plan_.b1;
            case SubBand::iot: return plan_.b2;
            case SubBand::shared: return plan_.b3;
        }
        return 0.0;
    }
    SubBand broadband_band() const noexcept { return plan_.allocation.front(); }
    SubBand iot_band(int user) const { return plan_.allocation.at(static_cast<std::size_t>(user) + 1); }

    bool operator==(const Scenario&) const = default;

    friend Scenario validate(const SystemParams& params, BandPlan plan);

private:
    Scenario(SystemParams p, BandPlan b) : params_(std::move(p)), plan_(std::move(b)) {}

    SystemParams params_;
    BandPlan plan_;
};

namespace detail {

inline void require_positive(double v, const char* field) {
    if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(field, "must be strictly positive");
}

inline void require_probability(double v, const char* field) {
    if (!(v >= 0.0 && v <= 1.0)) throw ConfigError(field, "must lie in [0, 1]");
}

}  // namespace detail

/// Checks every invariant of the parameter set and band plan and returns the
/// frozen scenario. The allocation is derived from the mode when absent.
inline Scenario validate(const SystemParams& p, BandPlan plan) {
    using detail::require_positive;
    using detail::require_probability;

    require_positive(p.bandwidth_total, "system.bandwidth_total");
    require_positive(p.slot_duration, "system.slot_duration");
    require_positive(p.carrier_freq, "system.carrier_freq");
    require_positive(p.pathloss_exponent, "system.pathloss_exponent");
    require_positive(p.antenna_gain_tx, "system.antenna_gain_tx");
    require_positive(p.antenna_gain_rx, "system.antenna_gain_rx");
    require_positive(p.noise_temperature, "system.noise_temperature");
    require_positive(p.max_power, "system.max_power");
    require_positive(p.broadband_max_rate, "system.broadband_max_rate");
    if (!std::isfinite(p.noise_figure_db)) throw ConfigError("system.noise_figure_db", "must be finite");
    if (p.frame_length < 2) throw ConfigError("system.frame_length", "need at least one uplink and one feedback slot");
    if (p.iot_packet_bytes <= 0) throw ConfigError("system.iot_packet_bytes", "must be strictly positive");
    if (p.broadband_block_len <= 0) throw ConfigError("system.broadband_block_len", "must be strictly positive");
    if (p.num_iot < 0) throw ConfigError("system.num_iot", "must be non-negative");
    require_probability(p.iot_arrival_prob, "system.iot_arrival_prob");
    require_probability(p.broadband_target_erasure, "system.broadband_target_erasure");
    if (p.broadband_target_erasure <= 0.0 || p.broadband_target_erasure >= 1.0)
        throw ConfigError("system.broadband_target_erasure", "must lie strictly inside (0, 1)");
    if (p.latency_deadline < p.frame_length)
        throw ConfigError("system.latency_deadline", "must be at least one frame long");

    if (plan.b1 < 0.0) throw ConfigError("band.b1", "must be non-negative");
    if (plan.b2 < 0.0) throw ConfigError("band.b2", "must be non-negative");
    if (plan.b3 < 0.0) throw ConfigError("band.b3", "must be non-negative");
    const double sum = plan.b1 + plan.b2 + plan.b3;
    if (std::abs(sum - p.bandwidth_total) > 1e-9 * p.bandwidth_total)
        throw ConfigError("band", "b1 + b2 + b3 must equal system.bandwidth_total");

    const std::size_t users = static_cast<std::size_t>(p.num_iot) + 1;
    std::vector<SubBand> expected(users);
    if (plan.mode == AccessMode::slicing) {
        if (plan.b3 != 0.0) throw ConfigError("band.b3", "must be 0 under slicing");
        require_positive(plan.b1, "band.b1");
        require_positive(plan.b2, "band.b2");
        expected.assign(users, SubBand::iot);
        expected[0] = SubBand::broadband;
    } else {
        if (plan.b1 != 0.0) throw ConfigError("band.b1", "must be 0 under sharing");
        if (plan.b2 != 0.0) throw ConfigError("band.b2", "must be 0 under sharing");
        expected.assign(users, SubBand::shared);
    }
    if (plan.allocation.empty()) {
        plan.allocation = std::move(expected);
    } else if (plan.allocation != expected) {
        throw ConfigError("band.allocation", std::string("does not match mode ") + to_string(plan.mode));
    }
    return Scenario(p, std::move(plan));
}

/// Places the broadband user uniformly in [35, 75] m and each IoT user
/// uniformly in [100, 400] m.
inline Deployment sample_deployment(const Scenario& scenario, Rng& rng, std::uint64_t seed_tag = 0) {
    std::uniform_real_distribution<double> bb(kBroadbandMinDistance, kBroadbandMaxDistance);
    std::uniform_real_distribution<double> iot(kIotMinDistance, kIotMaxDistance);
    Deployment d;
    d.rng_seed = seed_tag;
    d.broadband_distance = bb(rng);
    d.iot_distances.reserve(static_cast<std::size_t>(scenario.num_iot()));
    for (int j = 0; j < scenario.num_iot(); ++j) d.iot_distances.push_back(iot(rng));
    return d;
}

inline Deployment sample_deployment(const Scenario& scenario, std::uint64_t seed) {
    Rng rng(seed);
    return sample_deployment(scenario, rng, seed);
}

}  // namespace hetaccess
