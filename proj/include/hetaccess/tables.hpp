#pragma once

#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "hetaccess/metrics.hpp"
#include "hetaccess/stats.hpp"

// Delimited-text tables consumed by the plotting tools. Every table starts
// with a "# schema: <name> v<version>" line followed by a tab-separated
// header. Columns are only ever appended under a new version.

namespace hetaccess::metrics {

inline std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

namespace detail {

inline void expect_header(std::istream& is, const std::string& schema, const std::string& header) {
    std::string line;
    if (!std::getline(is, line) || line != "# schema: " + schema)
        throw std::runtime_error("expected schema '" + schema + "', got '" + line + "'");
    if (!std::getline(is, line) || line != header)
        throw std::runtime_error("column mismatch for " + schema + ": '" + line + "'");
}

// Scenario coordinates shared by several tables.
using Key = std::tuple<std::string, std::string, int, double, int>;

inline Key key_of(const RunArtifacts& a) { return {a.scheme, a.mode, a.num_iot, a.iot_fraction, a.deadline}; }

// Groups indices by key, in order of first appearance.
inline std::vector<std::pair<Key, std::vector<std::size_t>>> group(std::span<const RunArtifacts> runs) {
    std::vector<std::pair<Key, std::vector<std::size_t>>> out;
    std::map<Key, std::size_t> where;
    for (std::size_t i = 0; i < runs.size(); ++i) {
        const auto k = key_of(runs[i]);
        auto [it, fresh] = where.emplace(k, out.size());
        if (fresh) out.push_back({k, {}});
        out[it->second].second.push_back(i);
    }
    return out;
}

inline std::string key_columns(const Key& k) {
    return std::get<0>(k) + '\t' + std::get<1>(k) + '\t' + std::to_string(std::get<2>(k)) + '\t' +
           fmt(std::get<3>(k)) + '\t' + std::to_string(std::get<4>(k));
}

}  // namespace detail

// ---- summary: one row per replication ------------------------------------

inline constexpr const char* kSummarySchema = "hetaccess.summary v1";
inline constexpr const char* kSummaryHeader =
    "scheme\tmode\tnum_iot\tiot_fraction\tdeadline\treplication\tseed\tbroadband_distance\tbroadband_rate\t"
    "broadband_power\tblocks\tmean_frames_per_block\tthroughput\tenergy_efficiency\ttraining_reward\t"
    "inference_reward\tdelivered\tdropped\treliability";

inline void write_summary(std::ostream& os, std::span<const RunArtifacts> runs) {
    os << "# schema: " << kSummarySchema << '\n' << kSummaryHeader << '\n';
    for (const auto& a : runs) {
        os << detail::key_columns(detail::key_of(a)) << '\t' << a.replication << '\t' << a.seed << '\t'
           << fmt(a.broadband_distance) << '\t' << fmt(a.broadband_rate) << '\t' << fmt(a.broadband_power) << '\t'
           << a.frames_per_block.size() << '\t' << fmt(a.mean_frames_per_block) << '\t' << fmt(a.throughput) << '\t'
           << fmt(a.energy_efficiency) << '\t' << fmt(a.training_reward) << '\t' << fmt(a.inference_reward) << '\t'
           << a.delivered << '\t' << a.dropped << '\t' << fmt(a.reliability()) << '\n';
    }
}

/// Reads back the scalar fields of a summary table.
inline std::vector<RunArtifacts> read_summary(std::istream& is) {
    detail::expect_header(is, kSummarySchema, kSummaryHeader);
    std::vector<RunArtifacts> out;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::istringstream in(line);
        RunArtifacts a;
        std::size_t blocks = 0;
        double reliability = 0.0;
        if (!(in >> a.scheme >> a.mode >> a.num_iot >> a.iot_fraction >> a.deadline >> a.replication >> a.seed >>
              a.broadband_distance >> a.broadband_rate >> a.broadband_power >> blocks >> a.mean_frames_per_block >>
              a.throughput >> a.energy_efficiency >> a.training_reward >> a.inference_reward >> a.delivered >>
              a.dropped >> reliability))
            throw std::runtime_error("summary: malformed row '" + line + "'");
        out.push_back(std::move(a));
    }
    return out;
}

// ---- latency CDF: pooled over the replications of a scenario ---------------

inline constexpr const char* kLatencyCdfSchema = "hetaccess.latency_cdf v1";
inline constexpr const char* kLatencyCdfHeader = "scheme\tmode\tnum_iot\tiot_fraction\tdeadline\tlatency_ms\tcdf";

/// Grid points every slot from 0 to the deadline.
inline std::vector<double> slot_grid_ms(int deadline, double slot_duration) {
    std::vector<double> g;
    for (int l = 0; l <= deadline; ++l) g.push_back(l * slot_duration * 1e3);
    return g;
}

inline void write_latency_cdf(std::ostream& os, std::span<const RunArtifacts> runs, double slot_duration) {
    os << "# schema: " << kLatencyCdfSchema << '\n' << kLatencyCdfHeader << '\n';
    for (const auto& [key, idx] : detail::group(runs)) {
        std::vector<LatencySample> pooled;
        for (auto i : idx) pooled.insert(pooled.end(), runs[i].inference_latency.begin(), runs[i].inference_latency.end());
        if (pooled.empty()) continue;
        const auto grid = slot_grid_ms(std::get<4>(key), slot_duration);
        for (const auto& pt : latency_cdf(pooled, grid))
            os << detail::key_columns(key) << '\t' << fmt(pt.x) << '\t' << fmt(pt.cdf) << '\n';
    }
}

// ---- training reward curve: pooled per window ------------------------------

inline constexpr const char* kRewardCurveSchema = "hetaccess.reward_curve v1";
inline constexpr const char* kRewardCurveHeader =
    "scheme\tmode\tnum_iot\tiot_fraction\tdeadline\tframe_end\tmean_reward\tpackets\treplications";

inline void write_reward_curve(std::ostream& os, std::span<const RunArtifacts> runs) {
    os << "# schema: " << kRewardCurveSchema << '\n' << kRewardCurveHeader << '\n';
    for (const auto& [key, idx] : detail::group(runs)) {
        std::map<long, std::tuple<double, long, int>> windows;  // frame_end -> (reward sum, packets, runs)
        for (auto i : idx)
            for (const auto& p : runs[i].training_curve) {
                auto& [sum, n, r] = windows[p.frame_end];
                sum += p.mean_reward * double(p.packets);
                n += p.packets;
                r += 1;
            }
        for (const auto& [end, w] : windows) {
            const auto& [sum, n, r] = w;
            os << detail::key_columns(key) << '\t' << end << '\t' << fmt(sum / double(n)) << '\t' << n << '\t' << r
               << '\n';
        }
    }
}

// ---- operating points: throughput / EE vs IoT reward -----------------------

struct OperatingPoint {
    std::string scheme;
    std::string mode;
    std::string axis;  // "none" for a plain run
    double axis_value = 0.0;
    int num_iot = 0;
    double iot_fraction = 0.0;
    int deadline = 0;
    stats::Summary throughput;
    stats::Summary energy_efficiency;
    stats::Summary reward;
    stats::Summary reliability;
};

inline std::vector<OperatingPoint> operating_points(std::span<const RunArtifacts> runs, const std::string& axis,
                                                    double axis_value) {
    std::vector<OperatingPoint> out;
    for (const auto& [key, idx] : detail::group(runs)) {
        std::vector<double> s, e, r, q;
        for (auto i : idx) {
            s.push_back(runs[i].throughput);
            e.push_back(runs[i].energy_efficiency);
            r.push_back(runs[i].inference_reward);
            q.push_back(runs[i].reliability());
        }
        out.push_back({std::get<0>(key), std::get<1>(key), axis, axis_value, std::get<2>(key), std::get<3>(key),
                       std::get<4>(key), stats::summarize(s), stats::summarize(e), stats::summarize(r),
                       stats::summarize(q)});
    }
    return out;
}

inline constexpr const char* kTradeoffSchema = "hetaccess.tradeoff v1";
inline constexpr const char* kTradeoffHeader =
    "scheme\tmode\taxis\taxis_value\tnum_iot\tiot_fraction\tdeadline\treplications\tthroughput_mean\t"
    "throughput_sd\tee_mean\tee_sd\treward_mean\treward_sd\treliability_mean";

inline void write_tradeoff(std::ostream& os, std::span<const OperatingPoint> points) {
    os << "# schema: " << kTradeoffSchema << '\n' << kTradeoffHeader << '\n';
    for (const auto& p : points)
        os << p.scheme << '\t' << p.mode << '\t' << p.axis << '\t' << fmt(p.axis_value) << '\t' << p.num_iot << '\t'
           << fmt(p.iot_fraction) << '\t' << p.deadline << '\t' << p.reward.n << '\t' << fmt(p.throughput.mean) << '\t'
           << fmt(p.throughput.sd) << '\t' << fmt(p.energy_efficiency.mean) << '\t' << fmt(p.energy_efficiency.sd)
           << '\t' << fmt(p.reward.mean) << '\t' << fmt(p.reward.sd) << '\t' << fmt(p.reliability.mean) << '\n';
}

inline std::vector<OperatingPoint> read_tradeoff(std::istream& is) {
    detail::expect_header(is, kTradeoffSchema, kTradeoffHeader);
    std::vector<OperatingPoint> out;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::istringstream in(line);
        OperatingPoint p;
        std::size_t n = 0;
        if (!(in >> p.scheme >> p.mode >> p.axis >> p.axis_value >> p.num_iot >> p.iot_fraction >> p.deadline >> n >>
              p.throughput.mean >> p.throughput.sd >> p.energy_efficiency.mean >> p.energy_efficiency.sd >>
              p.reward.mean >> p.reward.sd >> p.reliability.mean))
            throw std::runtime_error("tradeoff: malformed row '" + line + "'");
        p.throughput.n = p.energy_efficiency.n = p.reward.n = p.reliability.n = n;
        out.push_back(std::move(p));
    }
    return out;
}

// ---- report: per-scenario means with a paired test against a baseline ------

inline constexpr const char* kReportSchema = "hetaccess.report v1";
inline constexpr const char* kReportHeader =
    "scheme\tmode\tnum_iot\tiot_fraction\tdeadline\treplications\treward_mean\treward_sd\tthroughput_mean\t"
    "ee_mean\treliability_mean\tbaseline\tdiff_mean\tp_greater";

/// Pairs replications by index within the same scenario coordinates. The
/// p-value is for "scheme beats baseline" and is empty when not applicable.
inline void write_report(std::ostream& os, std::span<const RunArtifacts> runs, const std::string& baseline) {
    os << "# schema: " << kReportSchema << '\n' << kReportHeader << '\n';
    const auto groups = detail::group(runs);
    const auto find_baseline = [&](const detail::Key& k) -> const std::vector<std::size_t>* {
        for (const auto& [other, idx] : groups)
            if (std::get<0>(other) == baseline && std::get<1>(other) == std::get<1>(k) &&
                std::get<2>(other) == std::get<2>(k) && std::get<3>(other) == std::get<3>(k) &&
                std::get<4>(other) == std::get<4>(k))
                return &idx;
        return nullptr;
    };
    for (const auto& [key, idx] : groups) {
        std::vector<double> r, s, e, q;
        std::map<int, double> by_rep;
        for (auto i : idx) {
            r.push_back(runs[i].inference_reward);
            s.push_back(runs[i].throughput);
            e.push_back(runs[i].energy_efficiency);
            q.push_back(runs[i].reliability());
            by_rep[runs[i].replication] = runs[i].inference_reward;
        }
        const auto R = stats::summarize(r);
        os << detail::key_columns(key) << '\t' << R.n << '\t' << fmt(R.mean) << '\t' << fmt(R.sd) << '\t'
           << fmt(stats::summarize(s).mean) << '\t' << fmt(stats::summarize(e).mean) << '\t'
           << fmt(stats::summarize(q).mean);
        const auto* base = baseline.empty() || std::get<0>(key) == baseline ? nullptr : find_baseline(key);
        std::vector<double> a, b;
        if (base)
            for (auto i : *base)
                if (auto it = by_rep.find(runs[i].replication); it != by_rep.end()) {
                    a.push_back(it->second);
                    b.push_back(runs[i].inference_reward);
                }
        if (a.size() >= 2) {
            const auto t = stats::paired_t_greater(a, b);
            os << '\t' << baseline << '\t' << fmt(t.estimate) << '\t' << fmt(t.p_value) << '\n';
        } else {
            os << "\t-\t-\t-\n";
        }
    }
}

}  // namespace hetaccess::metrics
