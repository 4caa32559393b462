#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>
#include <span>
#include <stdexcept>

#include "hetaccess/rng.hpp"
#include "hetaccess/scenario.hpp"

namespace hetaccess::phy {

inline constexpr double kBoltzmann = 1.380649e-23;    // J/K
inline constexpr double kSpeedOfLight = 299792458.0;  // m/s

/// Mean channel power gain beta = Gt Gr (c / 4 pi fc)^2 d^-eta.
inline double pathloss_gain(double distance, const SystemParams& p) {
    if (!(distance > 0.0)) throw std::domain_error("pathloss_gain: distance must be positive");
    const double lambda_term = kSpeedOfLight / (4.0 * std::numbers::pi * p.carrier_freq);
    return p.antenna_gain_tx * p.antenna_gain_rx * lambda_term * lambda_term *
           std::pow(distance, -p.pathloss_exponent);
}

/// |h|^2 of a Rayleigh-faded link with mean `beta`.
inline double sample_channel_power(double beta, Rng& rng) {
    if (!(beta > 0.0)) throw std::domain_error("sample_channel_power: beta must be positive");
    std::exponential_distribution<double> unit(1.0);
    return beta * unit(rng);
}

/// Thermal noise power k T 10^(NF/10) W over a band of the given width.
inline double noise_power(double width, const SystemParams& p) {
    if (!(width > 0.0)) throw std::domain_error("noise_power: width must be positive");
    return kBoltzmann * p.noise_temperature * std::pow(10.0, p.noise_figure_db / 10.0) * width;
}

inline double sinr(double target, std::span<const double> interferers, double noise) {
    const double interference = std::accumulate(interferers.begin(), interferers.end(), 0.0);
    return target / (interference + noise);
}

/// Minimum SINR for decoding at `rate` bit/s over `width` Hz.
inline double decode_threshold(double rate, double width) {
    if (!(width > 0.0)) throw std::domain_error("decode_threshold: width must be positive");
    if (rate < 0.0) throw std::domain_error("decode_threshold: rate must be non-negative");
    return std::exp2(rate / width) - 1.0;
}

struct LinkBudget {
    double beta = 0.0;
    double noise_power = 0.0;
    double tx_power = 0.0;
    double rate = 0.0;
    double sinr_threshold = 0.0;
};

inline LinkBudget make_link_budget(double beta, double width, double tx_power, double rate, const SystemParams& p) {
    return LinkBudget{beta, noise_power(width, p), tx_power, rate, decode_threshold(rate, width)};
}

/// Pr(SINR >= threshold) for a lone Rayleigh-faded transmission.
inline double interference_free_success_prob(const LinkBudget& b) {
    if (!(b.tx_power > 0.0) || !(b.beta > 0.0))
        throw std::domain_error("interference_free_success_prob: needs positive power and gain");
    return std::exp(-b.sinr_threshold * b.noise_power / (b.beta * b.tx_power));
}

/// -ln(1 - eps): the mean SNR fraction at which Rayleigh erasure equals eps.
inline double erasure_margin(double target_erasure) { return -std::log1p(-target_erasure); }

/// Largest broadband rate that meets the target erasure at P <= Pmax,
/// clamped to the configured maximum rate.
inline double select_broadband_rate(const SystemParams& p, double beta_b, double width) {
    if (!(beta_b > 0.0)) throw std::domain_error("select_broadband_rate: beta must be positive");
    const double snr = erasure_margin(p.broadband_target_erasure) * beta_b * p.max_power / noise_power(width, p);
    return std::min(p.broadband_max_rate, width * std::log2(1.0 + snr));
}

/// Transmit power that makes the interference-free erasure probability of the
/// broadband link equal to its target, capped at Pmax.
inline double broadband_power(double rate, double beta_b, double width, const SystemParams& p) {
    if (!(rate > 0.0)) throw std::domain_error("broadband_power: rate must be positive");
    if (!(beta_b > 0.0)) return p.max_power;
    const double needed = decode_threshold(rate, width) * noise_power(width, p) /
                          (beta_b * erasure_margin(p.broadband_target_erasure));
    return std::min(needed, p.max_power);
}

/// IoT payload rate: one packet of L bytes per slot.
inline double iot_rate(const SystemParams& p) { return 8.0 * p.iot_packet_bytes / p.slot_duration; }

}  // namespace hetaccess::phy
