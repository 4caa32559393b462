#pragma once

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>
#include <string>
#include <string_view>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "hetaccess/scenario.hpp"

namespace hetaccess::config {

using Tree = boost::property_tree::ptree;

inline Tree parse(const std::string& text) {
    Tree t;
    std::istringstream in(text);
    try {
        boost::property_tree::read_ini(in, t);
    } catch (const boost::property_tree::ini_parser_error& e) {
        throw ConfigError("config", e.message() + " (line " + std::to_string(e.line()) + ")");
    }
    return t;
}

inline Tree load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config", "cannot open '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
}

/// Applies `section.key=value`. Overrides always win over file values.
inline void apply_override(Tree& t, std::string_view assignment) {
    const auto eq = assignment.find('=');
    const auto dot = assignment.find('.');
    if (eq == std::string_view::npos || dot == std::string_view::npos || dot > eq)
        throw ConfigError("override", "expected section.key=value, got '" + std::string(assignment) + "'");
    t.put(std::string(assignment.substr(0, eq)), std::string(assignment.substr(eq + 1)));
}

inline std::string format_double(double v) {
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}

namespace detail {

template <class T>
T get(const Tree& t, const std::string& path, T fallback) {
    const auto node = t.get_optional<std::string>(path);
    if (!node) return fallback;
    std::istringstream in(*node);
    T value{};
    in >> value;
    if (in.fail() || !(in >> std::ws).eof()) throw ConfigError(path, "cannot parse '" + *node + "'");
    return value;
}

inline void reject_unknown(const Tree& t, const std::string& section, const std::set<std::string>& known) {
    const auto child = t.get_child_optional(section);
    if (!child) return;
    for (const auto& [key, _] : *child)
        if (!known.contains(key)) throw ConfigError(section + "." + key, "unknown key");
}

}  // namespace detail

inline const std::set<std::string>& system_keys() {
    static const std::set<std::string> keys{
        "bandwidth_total",   "slot_duration",      "frame_length",      "carrier_freq",
        "pathloss_exponent", "antenna_gain_tx",    "antenna_gain_rx",   "noise_temperature",
        "noise_figure_db",   "max_power",          "iot_packet_bytes",  "iot_arrival_prob",
        "broadband_block_len", "broadband_max_rate", "broadband_target_erasure", "latency_deadline",
        "num_iot"};
    return keys;
}

inline SystemParams system_params(const Tree& t) {
    detail::reject_unknown(t, "system", system_keys());
    using detail::get;
    SystemParams d;
    SystemParams p;
    p.bandwidth_total = get(t, "system.bandwidth_total", d.bandwidth_total);
    p.slot_duration = get(t, "system.slot_duration", d.slot_duration);
    p.frame_length = get(t, "system.frame_length", d.frame_length);
    p.carrier_freq = get(t, "system.carrier_freq", d.carrier_freq);
    p.pathloss_exponent = get(t, "system.pathloss_exponent", d.pathloss_exponent);
    p.antenna_gain_tx = get(t, "system.antenna_gain_tx", d.antenna_gain_tx);
    p.antenna_gain_rx = get(t, "system.antenna_gain_rx", d.antenna_gain_rx);
    p.noise_temperature = get(t, "system.noise_temperature", d.noise_temperature);
    p.noise_figure_db = get(t, "system.noise_figure_db", d.noise_figure_db);
    p.max_power = get(t, "system.max_power", d.max_power);
    p.iot_packet_bytes = get(t, "system.iot_packet_bytes", d.iot_packet_bytes);
    p.iot_arrival_prob = get(t, "system.iot_arrival_prob", d.iot_arrival_prob);
    p.broadband_block_len = get(t, "system.broadband_block_len", d.broadband_block_len);
    p.broadband_max_rate = get(t, "system.broadband_max_rate", d.broadband_max_rate);
    p.broadband_target_erasure = get(t, "system.broadband_target_erasure", d.broadband_target_erasure);
    p.latency_deadline = get(t, "system.latency_deadline", d.latency_deadline);
    p.num_iot = get(t, "system.num_iot", d.num_iot);
    return p;
}

/// Band plan from the [band] section. Either give b1/b2/b3 directly or, under
/// slicing, `iot_fraction` = B2/B.
inline BandPlan band_plan(const Tree& t, double bandwidth_total) {
    detail::reject_unknown(t, "band", {"mode", "b1", "b2", "b3", "iot_fraction"});
    const auto mode = parse_access_mode(t.get<std::string>("band.mode", "slicing"));
    BandPlan plan = mode == AccessMode::slicing ? BandPlan::slicing(bandwidth_total, 0.5)
                                                : BandPlan::sharing(bandwidth_total);
    if (const auto frac = t.get_optional<std::string>("band.iot_fraction")) {
        if (mode != AccessMode::slicing) throw ConfigError("band.iot_fraction", "only meaningful under slicing");
        const double f = detail::get(t, "band.iot_fraction", 0.5);
        if (!(f > 0.0 && f < 1.0)) throw ConfigError("band.iot_fraction", "must lie in (0, 1)");
        plan = BandPlan::slicing(bandwidth_total, f);
    }
    plan.b1 = detail::get(t, "band.b1", plan.b1);
    plan.b2 = detail::get(t, "band.b2", plan.b2);
    plan.b3 = detail::get(t, "band.b3", plan.b3);
    return plan;
}

inline Scenario scenario(const Tree& t) {
    const auto p = system_params(t);
    return validate(p, band_plan(t, p.bandwidth_total));
}

inline void write_scenario(Tree& t, const Scenario& s) {
    const auto& p = s.params();
    const auto put = [&t](const std::string& k, double v) { t.put(k, format_double(v)); };
    put("system.bandwidth_total", p.bandwidth_total);
    put("system.slot_duration", p.slot_duration);
    t.put("system.frame_length", p.frame_length);
    put("system.carrier_freq", p.carrier_freq);
    put("system.pathloss_exponent", p.pathloss_exponent);
    put("system.antenna_gain_tx", p.antenna_gain_tx);
    put("system.antenna_gain_rx", p.antenna_gain_rx);
    put("system.noise_temperature", p.noise_temperature);
    put("system.noise_figure_db", p.noise_figure_db);
    put("system.max_power", p.max_power);
    t.put("system.iot_packet_bytes", p.iot_packet_bytes);
    put("system.iot_arrival_prob", p.iot_arrival_prob);
    t.put("system.broadband_block_len", p.broadband_block_len);
    put("system.broadband_max_rate", p.broadband_max_rate);
    put("system.broadband_target_erasure", p.broadband_target_erasure);
    t.put("system.latency_deadline", p.latency_deadline);
    t.put("system.num_iot", p.num_iot);
    t.put("band.mode", to_string(s.mode()));
    put("band.b1", s.plan().b1);
    put("band.b2", s.plan().b2);
    put("band.b3", s.plan().b3);
}

inline std::string to_ini(const Tree& t) {
    std::ostringstream os;
    boost::property_tree::write_ini(os, t);
    return os.str();
}

inline std::string to_ini(const Scenario& s) {
    Tree t;
    write_scenario(t, s);
    return to_ini(t);
}

}  // namespace hetaccess::config
