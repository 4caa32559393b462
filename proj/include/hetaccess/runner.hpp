#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "hetaccess/agents/irsa.hpp"
#include "hetaccess/agents/q_learning.hpp"
#include "hetaccess/agents/reward.hpp"
#include "hetaccess/agents/single_user_model.hpp"
#include "hetaccess/agents/value_iteration.hpp"
#include "hetaccess/config.hpp"
#include "hetaccess/env.hpp"
#include "hetaccess/metrics.hpp"
#include "hetaccess/rng.hpp"
#include "hetaccess/scenario.hpp"
#include "hetaccess/tables.hpp"

namespace hetaccess::runner {

enum class Scheme { VI, QL, QLPlusVI, DoQL, DoQLPlusVI, IRSA };

inline const char* to_string(Scheme s) {
    switch (s) {
        case Scheme::VI: return "VI";
        case Scheme::QL: return "QL";
        case Scheme::QLPlusVI: return "QLPlusVI";
        case Scheme::DoQL: return "DoQL";
        case Scheme::DoQLPlusVI: return "DoQLPlusVI";
        case Scheme::IRSA: return "IRSA";
    }
    return "?";
}

inline const std::vector<Scheme>& all_schemes() {
    static const std::vector<Scheme> v{Scheme::VI,   Scheme::QL,         Scheme::QLPlusVI,
                                       Scheme::DoQL, Scheme::DoQLPlusVI, Scheme::IRSA};
    return v;
}

inline Scheme parse_scheme(const std::string& s) {
    for (auto x : all_schemes())
        if (s == to_string(x)) return x;
    throw ConfigError("experiment.scheme", "unknown scheme '" + s + "'");
}

inline bool is_learning(Scheme s) { return s != Scheme::VI && s != Scheme::IRSA; }
inline bool is_double(Scheme s) { return s == Scheme::DoQL || s == Scheme::DoQLPlusVI; }
inline bool needs_vi(Scheme s) { return s == Scheme::VI || s == Scheme::QLPlusVI || s == Scheme::DoQLPlusVI; }

enum class SweepAxis { none, iot_fraction, num_iot, deadline };

inline const char* to_string(SweepAxis a) {
    switch (a) {
        case SweepAxis::none: return "none";
        case SweepAxis::iot_fraction: return "iot_fraction";
        case SweepAxis::num_iot: return "num_iot";
        case SweepAxis::deadline: return "deadline";
    }
    return "?";
}

inline SweepAxis parse_sweep_axis(const std::string& s) {
    for (auto a : {SweepAxis::none, SweepAxis::iot_fraction, SweepAxis::num_iot, SweepAxis::deadline})
        if (s == to_string(a)) return a;
    throw ConfigError("experiment.sweep_axis", "unknown axis '" + s + "'");
}

struct ExperimentSpec {
    SystemParams params;
    BandPlan plan;
    Scheme scheme = Scheme::DoQL;
    long training_frames = 5000;
    long inference_frames = 100000;
    int replications = 100;
    std::uint64_t base_seed = 1;
    agents::LearningParams learning;
    agents::IrsaPlacement irsa_placement = agents::IrsaPlacement::random;
    long reward_window = 100;
    double vi_tolerance = 1e-9;
    SweepAxis sweep_axis = SweepAxis::none;
    std::vector<double> sweep_values;

    Scenario scenario() const { return validate(params, plan); }
};

/// Throws ConfigError for an inconsistent spec; returns warnings.
inline std::vector<std::string> check(const ExperimentSpec& spec) {
    (void)spec.scenario();
    if (spec.replications < 1) throw ConfigError("experiment.replications", "must be at least 1");
    if (spec.training_frames < 0) throw ConfigError("experiment.training_frames", "must be nonnegative");
    if (spec.inference_frames < 1) throw ConfigError("experiment.inference_frames", "must be at least 1");
    if (spec.reward_window < 1) throw ConfigError("experiment.reward_window", "must be at least 1");
    const auto& l = spec.learning;
    if (!(l.learning_rate >= 0.0 && l.learning_rate <= 1.0)) throw ConfigError("learning.learning_rate", "outside [0, 1]");
    if (!(l.discount >= 0.0 && l.discount < 1.0)) throw ConfigError("learning.discount", "outside [0, 1)");
    if (!(l.temperature_start > 0.0)) throw ConfigError("learning.temperature_start", "must be positive");
    if (!(l.temperature_end > 0.0)) throw ConfigError("learning.temperature_end", "must be positive");
    std::vector<std::string> warnings;
    if (!is_learning(spec.scheme) && spec.training_frames > 0)
        warnings.push_back(std::string(to_string(spec.scheme)) + " does not train; training frames are ignored");
    return warnings;
}

// ---- configuration --------------------------------------------------------

inline ExperimentSpec experiment_spec(const config::Tree& t) {
    using config::detail::get;
    ExperimentSpec spec;
    const auto sc = config::scenario(t);
    spec.params = sc.params();
    spec.plan = sc.plan();
    spec.plan.allocation.clear();

    config::detail::reject_unknown(t, "learning",
                                   {"learning_rate", "discount", "temperature_start", "temperature_end",
                                    "anneal_frames", "double_q_rule"});
    auto& l = spec.learning;
    l.learning_rate = get(t, "learning.learning_rate", l.learning_rate);
    l.discount = get(t, "learning.discount", l.discount);
    l.temperature_start = get(t, "learning.temperature_start", l.temperature_start);
    l.temperature_end = get(t, "learning.temperature_end", l.temperature_end);
    l.anneal_frames = get(t, "learning.anneal_frames", l.anneal_frames);
    const auto rule = t.get<std::string>("learning.double_q_rule", "printed");
    if (rule == "printed") l.double_q_rule = agents::DoubleQRule::printed;
    else if (rule == "van_hasselt") l.double_q_rule = agents::DoubleQRule::van_hasselt;
    else throw ConfigError("learning.double_q_rule", "expected printed or van_hasselt, got '" + rule + "'");

    config::detail::reject_unknown(t, "experiment",
                                   {"scheme", "training_frames", "inference_frames", "replications", "base_seed",
                                    "reward_window", "irsa_placement", "vi_tolerance", "sweep_axis", "sweep_values"});
    spec.scheme = parse_scheme(t.get<std::string>("experiment.scheme", "DoQL"));
    spec.training_frames = get(t, "experiment.training_frames", spec.training_frames);
    spec.inference_frames = get(t, "experiment.inference_frames", spec.inference_frames);
    spec.replications = get(t, "experiment.replications", spec.replications);
    spec.base_seed = get(t, "experiment.base_seed", spec.base_seed);
    spec.reward_window = get(t, "experiment.reward_window", spec.reward_window);
    spec.vi_tolerance = get(t, "experiment.vi_tolerance", spec.vi_tolerance);
    try {
        spec.irsa_placement = agents::parse_irsa_placement(t.get<std::string>("experiment.irsa_placement", "random"));
    } catch (const std::invalid_argument& e) {
        throw ConfigError("experiment.irsa_placement", e.what());
    }
    spec.sweep_axis = parse_sweep_axis(t.get<std::string>("experiment.sweep_axis", "none"));
    if (const auto values = t.get_optional<std::string>("experiment.sweep_values")) {
        std::string v = *values;
        std::replace(v.begin(), v.end(), ',', ' ');
        std::istringstream in(v);
        double x = 0.0;
        while (in >> x) spec.sweep_values.push_back(x);
        if (!in.eof()) throw ConfigError("experiment.sweep_values", "cannot parse '" + *values + "'");
    }
    return spec;
}

/// Full configuration echo; parsing it back yields the same spec.
inline std::string to_ini(const ExperimentSpec& spec) {
    config::Tree t;
    config::write_scenario(t, spec.scenario());
    const auto put = [&t](const std::string& k, double v) { t.put(k, config::format_double(v)); };
    put("learning.learning_rate", spec.learning.learning_rate);
    put("learning.discount", spec.learning.discount);
    put("learning.temperature_start", spec.learning.temperature_start);
    put("learning.temperature_end", spec.learning.temperature_end);
    t.put("learning.anneal_frames", spec.learning.anneal_frames);
    t.put("learning.double_q_rule",
          spec.learning.double_q_rule == agents::DoubleQRule::printed ? "printed" : "van_hasselt");
    t.put("experiment.scheme", to_string(spec.scheme));
    t.put("experiment.training_frames", spec.training_frames);
    t.put("experiment.inference_frames", spec.inference_frames);
    t.put("experiment.replications", spec.replications);
    t.put("experiment.base_seed", spec.base_seed);
    t.put("experiment.reward_window", spec.reward_window);
    put("experiment.vi_tolerance", spec.vi_tolerance);
    t.put("experiment.irsa_placement", agents::to_string(spec.irsa_placement));
    t.put("experiment.sweep_axis", to_string(spec.sweep_axis));
    std::string values;
    for (double v : spec.sweep_values) values += (values.empty() ? "" : ",") + config::format_double(v);
    if (!values.empty()) t.put("experiment.sweep_values", values);
    return config::to_ini(t);
}

// ---- seeds ----------------------------------------------------------------

/// Deployment of replication `rep`; shared by every scheme.
inline std::uint64_t deployment_seed(const ExperimentSpec& spec, int rep) {
    return derive_seed(spec.base_seed, std::uint64_t(rep));
}

/// Channel and arrival realizations of replication `rep`; shared by every scheme.
inline std::uint64_t environment_seed(const ExperimentSpec& spec, int rep) {
    return derive_seed(spec.base_seed, std::uint64_t(rep), "environment");
}

/// Exploration and IRSA sampling; private to a scheme.
inline std::uint64_t policy_seed(const ExperimentSpec& spec, int rep) {
    return derive_seed(spec.base_seed, std::uint64_t(rep), std::string("policy:") + to_string(spec.scheme));
}

// ---- per-replication controller -------------------------------------------

/// The J independent decision makers of one scheme.
class Controller {
public:
    Controller(const ExperimentSpec& spec, const Scenario& scenario, const Deployment& deployment)
        : scheme_(spec.scheme),
          learning_(spec.learning),
          placement_(spec.irsa_placement),
          space_(scenario.params().frame_length, scenario.params().latency_deadline),
          irsa_(agents::DegreeDistribution::reference()) {
        const int J = scenario.num_iot();
        for (int j = 0; j < J; ++j) {
            if (scheme_ == Scheme::IRSA) break;
            std::optional<agents::ValueSolution> vi;
            if (needs_vi(scheme_)) {
                const auto model = agents::build_single_user_model(scenario, deployment.iot_distances[std::size_t(j)]);
                vi = agents::value_iteration(model, learning_.discount, spec.vi_tolerance);
            }
            if (scheme_ == Scheme::VI) {
                policies_.push_back(vi->policy);
                continue;
            }
            tables_.emplace_back(space_);
            if (vi) agents::vi_initialize(tables_.back(), *vi);
        }
        if (scheme_ != Scheme::VI) policies_.assign(std::size_t(is_learning(scheme_) ? J : 0), agents::Policy(space_));
    }

    Scheme scheme() const noexcept { return scheme_; }
    bool frozen() const noexcept { return frozen_; }
    const std::vector<agents::QTablePair>& tables() const noexcept { return tables_; }
    const std::vector<agents::Policy>& policies() const noexcept { return policies_; }

    /// Chooses this frame's actions. `actions` receives the chosen degree
    /// index per user (0 for an empty queue).
    std::vector<ReplicaPlacement> act(const Environment& env, long frame, Rng& rng, std::vector<int>& actions) {
        const int J = env.num_iot();
        std::vector<ReplicaPlacement> out(static_cast<std::size_t>(J));
        actions.assign(std::size_t(J), 0);
        const double tau = agents::temperature(learning_, frame);
        for (int j = 0; j < J; ++j) {
            const auto s = env.state(j);
            if (s.empty()) continue;
            int a = 0;
            if (scheme_ == Scheme::IRSA) {
                out[std::size_t(j)] = agents::irsa_action(irsa_, env.max_degree(j), rng, placement_);
                actions[std::size_t(j)] = out[std::size_t(j)].degree();
                continue;
            }
            if (scheme_ == Scheme::VI || frozen_) {
                a = policies_[std::size_t(j)].action(s);
            } else if (is_double(scheme_)) {
                a = agents::softmax_select(tables_[std::size_t(j)], s, tau, rng);
            } else {
                a = agents::softmax_select(tables_[std::size_t(j)].q1.row(s), tau, rng);
            }
            actions[std::size_t(j)] = a;
            out[std::size_t(j)] = ReplicaPlacement::consecutive(a);
        }
        return out;
    }

    void learn(const FrameResult& r, const std::vector<int>& actions, Rng& rng) {
        if (!is_learning(scheme_) || frozen_) return;
        for (std::size_t j = 0; j < r.iot.size(); ++j) {
            const auto& u = r.iot[j];
            if (!u.had_packet()) continue;
            const agents::Transition t{u.before, actions[j], u.observed, agents::reward(u.observed), u.terminal()};
            if (is_double(scheme_)) agents::doql_update(tables_[j], t, learning_, rng);
            else agents::ql_update(tables_[j].q1, t, learning_);
        }
    }

    /// Ends training: greedy policies from the tables, no further updates.
    void freeze() {
        if (frozen_) return;
        frozen_ = true;
        if (!is_learning(scheme_)) return;
        for (std::size_t j = 0; j < tables_.size(); ++j)
            policies_[j] = is_double(scheme_) ? agents::extract_policy(tables_[j]) : agents::extract_policy(tables_[j].q1);
    }

    std::uint64_t fingerprint() const {
        std::uint64_t h = 0;
        for (const auto& t : tables_) h = mix64(h ^ agents::fingerprint(t));
        return h;
    }

    /// Single-table schemes keep Q2 untouched; the checkpoint mirrors Q1.
    agents::QTablePair checkpoint(std::size_t user) const {
        auto q = tables_.at(user);
        if (!is_double(scheme_)) q.q2 = q.q1;
        return q;
    }

private:
    Scheme scheme_;
    agents::LearningParams learning_;
    agents::IrsaPlacement placement_;
    agents::StateSpace space_;
    agents::DegreeDistribution irsa_;
    std::vector<agents::QTablePair> tables_;  // single-table schemes use q1 only
    std::vector<agents::Policy> policies_;
    bool frozen_ = false;
};

struct ReplicationOutputs {
    std::optional<std::filesystem::path> qtable_dir;
    std::optional<std::filesystem::path> frame_log_dir;
};

inline std::string replication_tag(const ExperimentSpec& spec, int rep) {
    return std::string(to_string(spec.scheme)) + "_rep" + std::to_string(rep);
}

inline metrics::RunArtifacts run_replication(const ExperimentSpec& spec, int rep,
                                             const ReplicationOutputs& outputs = {}) {
    const Scenario scenario = spec.scenario();
    const auto& p = scenario.params();
    const auto deployment = sample_deployment(scenario, deployment_seed(spec, rep));
    Environment env(scenario, deployment, environment_seed(spec, rep));
    Controller ctl(spec, scenario, deployment);
    Rng rng(policy_seed(spec, rep));

    metrics::RunArtifacts art;
    art.scheme = to_string(spec.scheme);
    art.mode = to_string(scenario.mode());
    art.num_iot = scenario.num_iot();
    art.iot_fraction = scenario.mode() == AccessMode::slicing ? scenario.plan().b2 / p.bandwidth_total : 0.0;
    art.deadline = p.latency_deadline;
    art.replication = rep;
    art.seed = deployment_seed(spec, rep);
    art.broadband_distance = deployment.broadband_distance;
    art.broadband_rate = env.broadband_rate();
    art.broadband_power = env.broadband_power();

    const auto collect = [](const FrameResult& r, std::vector<metrics::PacketRecord>& out) {
        for (std::size_t j = 0; j < r.iot.size(); ++j) {
            const auto& u = r.iot[j];
            if (!u.terminal()) continue;
            out.push_back({r.frame, int(j), u.fate == PacketFate::delivered, u.observed.latency, u.observed.repetitions,
                           agents::reward(u.observed)});
        }
    };

    std::vector<int> actions;
    const long training = is_learning(spec.scheme) ? spec.training_frames : 0;
    std::vector<metrics::PacketRecord> train_packets;
    for (long f = 0; f < training; ++f) {
        const auto placements = ctl.act(env, f, rng, actions);
        const auto r = env.step_frame(std::span<const ReplicaPlacement>(placements));
        ctl.learn(r, actions, rng);
        collect(r, train_packets);
    }
    art.training_curve = metrics::avg_reward_per_packet(train_packets, spec.reward_window, 0, training);
    art.training_reward = metrics::mean_reward(train_packets, 0, training);

    ctl.freeze();
    art.table_fingerprint_before = ctl.fingerprint();
    env.restart_broadband_block();
    const auto counters_before = env.counters();

    std::ofstream log_file;
    std::optional<FrameLogWriter> log;
    if (outputs.frame_log_dir) {
        log_file.open(*outputs.frame_log_dir / (replication_tag(spec, rep) + ".tsv"));
        if (!log_file) throw std::runtime_error("cannot write frame log in " + outputs.frame_log_dir->string());
        log.emplace(log_file);
    }

    std::vector<metrics::PacketRecord> packets;
    const long start = env.frame_index();
    for (long f = 0; f < spec.inference_frames; ++f) {
        const auto placements = ctl.act(env, training + f, rng, actions);
        const auto r = env.step_frame(std::span<const ReplicaPlacement>(placements));
        ctl.learn(r, actions, rng);  // no-op once frozen
        collect(r, packets);
        if (log) log->append(r);
    }
    art.table_fingerprint_after = ctl.fingerprint();

    art.inference_reward = metrics::mean_reward(packets, start, env.frame_index());
    art.inference_latency = metrics::latency_samples(packets, p.slot_duration);
    art.frames_per_block = env.broadband_block().frames_per_block;
    if (!art.frames_per_block.empty()) {
        art.throughput = metrics::throughput(art.broadband_rate, p.broadband_block_len, art.frames_per_block,
                                             p.frame_length);
        double sum = 0.0;
        for (int x : art.frames_per_block) sum += x;
        art.mean_frames_per_block = sum / double(art.frames_per_block.size());
        art.energy_efficiency = metrics::energy_efficiency(art.throughput, art.broadband_power);
    }
    const auto& c = env.counters();
    art.delivered = c.delivered - counters_before.delivered;
    art.dropped = c.dropped - counters_before.dropped;
    art.accepted = c.accepted - counters_before.accepted;
    art.discarded = c.discarded - counters_before.discarded;
    art.in_flight = c.in_flight();

    if (outputs.qtable_dir && is_learning(spec.scheme)) {
        for (std::size_t j = 0; j < ctl.tables().size(); ++j) {
            std::ofstream os(*outputs.qtable_dir / (replication_tag(spec, rep) + "_user" + std::to_string(j) + ".tsv"));
            if (!os) throw std::runtime_error("cannot write Q-table checkpoint in " + outputs.qtable_dir->string());
            agents::write_qtables(os, ctl.checkpoint(j));
        }
    }
    if (art.table_fingerprint_before != art.table_fingerprint_after)
        throw std::logic_error("inference modified the Q-tables of " + replication_tag(spec, rep));
    return art;
}

// ---- parallel execution ---------------------------------------------------

/// Runs `count` independent tasks on `jobs` workers; results land at their
/// task index, so the output order never depends on scheduling.
template <class Result, class Task>
std::vector<Result> parallel_map(int count, int jobs, Task task) {
    std::vector<Result> results(std::size_t(std::max(count, 0)));
    std::atomic<int> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    const auto worker = [&] {
        for (int i = next++; i < count; i = next++) {
            try {
                results[std::size_t(i)] = task(i);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                next = count;
            }
        }
    };
    const int n = std::clamp(jobs, 1, std::max(count, 1));
    std::vector<std::thread> pool;
    for (int w = 1; w < n; ++w) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
    return results;
}

inline std::vector<metrics::RunArtifacts> run(const ExperimentSpec& spec, int jobs = 1,
                                              const ReplicationOutputs& outputs = {}) {
    check(spec);
    return parallel_map<metrics::RunArtifacts>(spec.replications, jobs,
                                               [&](int rep) { return run_replication(spec, rep, outputs); });
}

/// The experiment at one sweep point.
inline ExperimentSpec at_sweep_point(const ExperimentSpec& spec, double value) {
    ExperimentSpec s = spec;
    switch (spec.sweep_axis) {
        case SweepAxis::none: break;
        case SweepAxis::iot_fraction:
            if (spec.plan.mode != AccessMode::slicing)
                throw ConfigError("experiment.sweep_axis", "iot_fraction sweeps need slicing");
            if (!(value > 0.0 && value < 1.0))
                throw ConfigError("experiment.sweep_values", "iot_fraction " + config::format_double(value) +
                                                                 " outside (0, 1)");
            s.plan = BandPlan::slicing(spec.params.bandwidth_total, value);
            break;
        case SweepAxis::num_iot:
            if (value < 0 || value != double(int(value)))
                throw ConfigError("experiment.sweep_values", "num_iot must be a nonnegative integer");
            s.params.num_iot = int(value);
            break;
        case SweepAxis::deadline:
            if (value < 1 || value != double(int(value)))
                throw ConfigError("experiment.sweep_values", "deadline must be a positive integer");
            s.params.latency_deadline = int(value);
            break;
    }
    s.plan.allocation.clear();
    return s;
}

struct SweepResult {
    std::vector<metrics::OperatingPoint> points;
    std::vector<metrics::RunArtifacts> runs;  // all points, in axis order
};

/// One full run per axis value. Sharing has no band split to sweep and yields
/// a single operating point.
inline SweepResult sweep(const ExperimentSpec& spec, int jobs = 1, const ReplicationOutputs& outputs = {}) {
    if (spec.sweep_axis == SweepAxis::none || spec.sweep_values.empty())
        throw ConfigError("experiment.sweep_values", "a sweep needs an axis and at least one value");
    std::vector<double> values = spec.sweep_values;
    if (spec.sweep_axis == SweepAxis::iot_fraction && spec.plan.mode == AccessMode::sharing) values.clear();

    std::vector<ExperimentSpec> specs;
    for (double v : values) specs.push_back(at_sweep_point(spec, v));
    if (values.empty()) {
        specs.push_back(spec);
        specs.back().sweep_axis = SweepAxis::none;
    }
    for (const auto& s : specs) check(s);

    const int per = spec.replications;
    auto runs = parallel_map<metrics::RunArtifacts>(int(specs.size()) * per, jobs, [&](int i) {
        return run_replication(specs[std::size_t(i / per)], i % per, outputs);
    });

    SweepResult out;
    for (std::size_t k = 0; k < specs.size(); ++k) {
        const std::span<const metrics::RunArtifacts> part(runs.data() + k * std::size_t(per), std::size_t(per));
        const bool plain = values.empty();
        auto pts = metrics::operating_points(part, plain ? "none" : to_string(spec.sweep_axis), plain ? 0.0 : values[k]);
        out.points.insert(out.points.end(), pts.begin(), pts.end());
    }
    out.runs = std::move(runs);
    return out;
}

// ---- artifact persistence -------------------------------------------------

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + path.string());
    os << text;
}

template <class Writer>
void write_table(const std::filesystem::path& path, Writer&& writer) {
    std::ostringstream os;
    writer(os);
    write_text(path, os.str());
}

/// summary.tsv, latency_cdf.tsv, reward_curve.tsv and tradeoff.tsv.
inline void write_run_tables(const std::filesystem::path& dir, std::span<const metrics::RunArtifacts> runs,
                             std::span<const metrics::OperatingPoint> points, double slot_duration) {
    write_table(dir / "summary.tsv", [&](std::ostream& os) { metrics::write_summary(os, runs); });
    write_table(dir / "latency_cdf.tsv", [&](std::ostream& os) { metrics::write_latency_cdf(os, runs, slot_duration); });
    write_table(dir / "reward_curve.tsv", [&](std::ostream& os) { metrics::write_reward_curve(os, runs); });
    write_table(dir / "tradeoff.tsv", [&](std::ostream& os) { metrics::write_tradeoff(os, points); });
}

}  // namespace hetaccess::runner
