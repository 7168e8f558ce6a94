#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "criot/csv.hpp"
#include "criot/region.hpp"
#include "criot/simulator.hpp"

namespace criot::app {

/// Thrown for unreadable or malformed configuration; the CLI maps it to exit code 2.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct SimOptions {
    std::int64_t horizon_slots = 1'000'000;
    std::optional<std::int64_t> warmup_slots;  // default: 10% of the horizon
    std::uint64_t seed = 1;
    int replications = 1;
    int batches = 20;

    std::int64_t warmup() const { return warmup_slots.value_or(horizon_slots / 10); }
};

struct SweepSpec {
    SweepAxis axis = SweepAxis::Detection;
    std::vector<double> grid;
    SweepTarget target = SweepTarget::BetaCritical;
    double tol = 1e-3;
};

struct CompareSpec {
    std::vector<double> lambdas;
};

struct EmitFlags {
    bool stationary = false;
    bool matrix = false;
};

struct RunConfig {
    SystemParams params;
    Constraints constraints;
    SimOptions sim;
    std::optional<SweepSpec> sweep;
    std::optional<CompareSpec> compare;
    EmitFlags emit;
    std::filesystem::path out_dir = ".";
    // Set when radii come from the uniform-disk layout rather than an explicit list.
    std::optional<double> charging_radius;
};

/// Flat command-line overrides applied on top of the config file.
struct Overrides {
    std::optional<double> mu_on, mu_off, beta, lambda, slot, p_d, p_f, theta, xi;
    std::optional<int> nodes, capacity, replications;
    std::optional<std::int64_t> horizon, warmup;
    std::optional<std::uint64_t> seed;
    std::optional<std::filesystem::path> out_dir;
};

namespace detail {

using nlohmann::json;

template <typename T>
void read(const json& obj, const char* key, T& dst) {
    if (!obj.contains(key)) return;
    try {
        dst = obj.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config key '") + key + "': " + e.what());
    }
}

template <typename T>
void read(const json& obj, const char* key, std::optional<T>& dst) {
    if (!obj.contains(key)) return;
    T v{};
    read(obj, key, v);
    dst = v;
}

inline const json& section(const json& root, const char* key) {
    static const json empty = json::object();
    if (!root.contains(key)) return empty;
    const auto& s = root.at(key);
    if (!s.is_object()) throw ConfigError(std::string("config section '") + key + "' must be an object");
    return s;
}

inline SweepAxis parse_axis(const std::string& s) {
    if (s == "detection" || s == "p_d") return SweepAxis::Detection;
    if (s == "false-alarm" || s == "false_alarm" || s == "p_f") return SweepAxis::FalseAlarm;
    throw ConfigError("sweep.axis must be 'detection' or 'false-alarm', got '" + s + "'");
}

inline SweepTarget parse_target(const std::string& s) {
    if (s == "beta_c") return SweepTarget::BetaCritical;
    if (s == "lambda_c") return SweepTarget::LambdaCritical;
    throw ConfigError("sweep.target must be 'beta_c' or 'lambda_c', got '" + s + "'");
}

}  // namespace detail

/// Reads the key-tree config. Missing keys keep the reference defaults.
inline RunConfig parse_config(const nlohmann::json& root) {
    using detail::read;
    using detail::section;
    if (!root.is_object()) throw ConfigError("config root must be an object");

    RunConfig cfg;
    auto& p = cfg.params;
    p = reference_params();
    p.power.node_radii.clear();

    const auto& pnp = section(root, "pnp");
    read(pnp, "mu_on", p.pnp.mu_on);
    read(pnp, "mu_off", p.pnp.mu_off);
    std::optional<double> beta;
    read(pnp, "beta", beta);
    if (beta) {
        if (pnp.contains("mu_off")) throw ConfigError("pnp: give either mu_off or beta, not both");
        if (!(*beta > 0.0 && *beta < 1.0)) throw ConfigError("pnp.beta must lie strictly inside (0,1)");
        p.pnp.mu_off = mu_off_for_beta(p.pnp.mu_on, *beta);
    }

    const auto& traffic = section(root, "traffic");
    read(traffic, "nodes", p.traffic.nodes);
    read(traffic, "lambda", p.traffic.lambda);
    read(traffic, "capacity", p.traffic.capacity);
    read(traffic, "slot", p.traffic.slot);

    const auto& sensing = section(root, "sensing");
    read(sensing, "p_detect", p.sensing.p_detect);
    read(sensing, "p_false_alarm", p.sensing.p_false_alarm);

    const auto& policy = section(root, "policy");
    read(policy, "theta_idle", p.policy.theta_idle);
    read(policy, "xi_charge", p.policy.xi_charge);

    const auto& power = section(root, "power");
    read(power, "p_charge_min", p.power.p_charge_min);
    read(power, "p_max", p.power.p_max);
    read(power, "energy_per_packet", p.power.energy_per_packet);
    read(power, "pathloss_exponent", p.power.pathloss_exponent);
    read(power, "node_radii", p.power.node_radii);
    read(power, "charging_radius", cfg.charging_radius);
    std::optional<double> scale;
    read(power, "radius_scale", scale);
    if (p.power.node_radii.empty() && !cfg.charging_radius) cfg.charging_radius = 1000.0;
    if (!p.power.node_radii.empty() && power.contains("charging_radius")) {
        throw ConfigError("power: give either node_radii or charging_radius, not both");
    }
    p.power.radius_scale = scale.value_or(cfg.charging_radius.value_or(1.0));

    const auto& constraints = section(root, "constraints");
    read(constraints, "max_drop", cfg.constraints.max_drop);
    read(constraints, "max_interference", cfg.constraints.max_interference);

    const auto& sim = section(root, "simulation");
    read(sim, "horizon_slots", cfg.sim.horizon_slots);
    read(sim, "warmup_slots", cfg.sim.warmup_slots);
    read(sim, "seed", cfg.sim.seed);
    read(sim, "replications", cfg.sim.replications);
    read(sim, "batches", cfg.sim.batches);

    if (root.contains("sweep")) {
        const auto& sw = section(root, "sweep");
        SweepSpec spec;
        std::string axis = "detection", target = "beta_c";
        read(sw, "axis", axis);
        read(sw, "target", target);
        read(sw, "grid", spec.grid);
        read(sw, "tol", spec.tol);
        spec.axis = detail::parse_axis(axis);
        spec.target = detail::parse_target(target);
        cfg.sweep = spec;
    }
    if (root.contains("compare")) {
        CompareSpec spec;
        read(section(root, "compare"), "lambda_grid", spec.lambdas);
        cfg.compare = spec;
    }
    const auto& emit = section(root, "emit");
    read(emit, "stationary", cfg.emit.stationary);
    read(emit, "matrix", cfg.emit.matrix);
    return cfg;
}

inline RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    nlohmann::json root;
    try {
        root = nlohmann::json::parse(in, nullptr, true, /*ignore_comments=*/true);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("malformed config " + path.string() + ": " + e.what());
    }
    return parse_config(root);
}

/// Applies overrides, lays out radii if needed and validates the result.
inline void finalize(RunConfig& cfg, const Overrides& o) {
    auto& p = cfg.params;
    if (o.mu_on) p.pnp.mu_on = *o.mu_on;
    if (o.mu_off) p.pnp.mu_off = *o.mu_off;
    if (o.beta) {
        if (o.mu_off) throw ConfigError("--beta and --mu-off are mutually exclusive");
        if (!(*o.beta > 0.0 && *o.beta < 1.0)) throw ConfigError("--beta must lie strictly inside (0,1)");
        p.pnp.mu_off = mu_off_for_beta(p.pnp.mu_on, *o.beta);
    }
    if (o.lambda) p.traffic.lambda = *o.lambda;
    if (o.slot) p.traffic.slot = *o.slot;
    if (o.nodes) p.traffic.nodes = *o.nodes;
    if (o.capacity) p.traffic.capacity = *o.capacity;
    if (o.p_d) p.sensing.p_detect = *o.p_d;
    if (o.p_f) p.sensing.p_false_alarm = *o.p_f;
    if (o.theta) p.policy.theta_idle = *o.theta;
    if (o.xi) p.policy.xi_charge = *o.xi;
    if (o.seed) cfg.sim.seed = *o.seed;
    if (o.replications) cfg.sim.replications = *o.replications;
    if (o.horizon) cfg.sim.horizon_slots = *o.horizon;
    if (o.warmup) cfg.sim.warmup_slots = *o.warmup;
    if (o.out_dir) cfg.out_dir = *o.out_dir;

    if (cfg.charging_radius) {
        if (p.traffic.nodes < 1) throw ConfigError("traffic.nodes must be at least 1");
        p.power.node_radii = uniform_disk_radii(p.traffic.nodes, *cfg.charging_radius);
    }
    try {
        validate(p);
        validate(cfg.constraints);
    } catch (const InvalidParameter& e) {
        throw ConfigError(e.what());
    }
}

struct CommandResult {
    std::vector<std::filesystem::path> files;
    std::string summary;
};

namespace detail {

inline std::string state_label(const State& s) {
    return std::to_string(s.queue) + "_" + std::to_string(to_int(s.phase)) + "_" + std::to_string(to_int(s.action));
}

inline SimConfig sim_config(const RunConfig& cfg, const SystemParams& params, std::uint64_t seed) {
    SimConfig sc;
    sc.params = params;
    sc.horizon_slots = cfg.sim.horizon_slots;
    sc.warmup_slots = cfg.sim.warmup();
    sc.seed = seed;
    sc.replications = cfg.sim.replications;
    sc.batches = cfg.sim.batches;
    try {
        validate(sc);
    } catch (const InvalidParameter& e) {
        throw ConfigError(e.what());
    }
    return sc;
}

}  // namespace detail

inline const std::vector<std::string>& metrics_header() {
    static const std::vector<std::string> h{
        "beta",      "offered_load", "carried_load", "p_b",          "w_paper",
        "w_slot_avg", "p_i",         "charge_mass",  "p_th",         "p_th_clamped",
        "p_th_node", "max_drop",     "max_interference", "p_max",    "feasible"};
    return h;
}

/// analyze: metrics.csv, plus stationary.csv / matrix.csv when requested.
inline CommandResult cmd_analyze(const RunConfig& cfg) {
    const auto a = analyze(cfg.params, cfg.constraints);
    const auto& r = a.report;
    using csv::number;

    csv::Table metrics(metrics_header());
    metrics.row({number(r.beta), number(r.offered_load), number(r.carried_load), number(r.drop_prob),
                 number(r.wait_paper), number(r.wait_slot_avg), number(r.interference_prob),
                 number(r.charge_decision_mass), number(r.power.total), number(r.power.clamped),
                 number(r.power.per_node), number(cfg.constraints.max_drop),
                 number(cfg.constraints.max_interference), number(cfg.params.power.p_max),
                 csv::boolean(r.feasible.value_or(false))});
    csv::OutputSet out;
    out.add("metrics.csv", metrics.str());

    const auto& space = a.matrix.space();
    if (cfg.emit.stationary) {
        csv::Table t({"index", "queue", "phase", "action", "probability"});
        for (std::size_t i = 0; i < space.size(); ++i) {
            const auto s = space.state(i);
            t.row({std::to_string(i), std::to_string(s.queue), std::to_string(to_int(s.phase)),
                   std::to_string(to_int(s.action)), number(a.stationary[i])});
        }
        out.add("stationary.csv", t.str());
    }
    if (cfg.emit.matrix) {
        std::vector<std::string> header{"from"};
        for (std::size_t j = 0; j < space.size(); ++j) header.push_back(detail::state_label(space.state(j)));
        csv::Table t(header);
        const auto& m = a.matrix.probabilities();
        for (std::size_t i = 0; i < space.size(); ++i) {
            std::vector<std::string> row{detail::state_label(space.state(i))};
            for (std::size_t j = 0; j < space.size(); ++j) {
                row.push_back(number(m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))));
            }
            t.row(row);
        }
        out.add("matrix.csv", t.str());
    }

    std::ostringstream s;
    s << "P_B=" << number(r.drop_prob) << " P_I=" << number(r.interference_prob)
      << " W(paper-eq12)=" << number(r.wait_paper) << "s W(slot-average)=" << number(r.wait_slot_avg)
      << "s P_th=" << number(r.power.total) << "W feasible=" << csv::boolean(r.feasible.value_or(false));
    return {out.commit(cfg.out_dir), s.str()};
}

/// simulate: sim.csv with one row per replication and a pooled row.
inline CommandResult cmd_simulate(const RunConfig& cfg, unsigned workers = default_workers()) {
    const auto sc = detail::sim_config(cfg, cfg.params, cfg.sim.seed);
    const auto report = run_simulation(sc, workers);
    using csv::number;

    csv::Table t({"replication", "seed", "generator", "measured_slots", "generated", "admitted", "dropped",
                  "served", "drop_prob", "drop_prob_se", "mean_sojourn", "mean_sojourn_se", "interference",
                  "interference_se", "carried_load", "charge_fraction", "on_fraction"});
    auto emit = [&](const SimResult& r, const std::string& label) {
        t.row({label, std::to_string(r.seed), report.generator, std::to_string(r.measured_slots),
               std::to_string(r.counts.generated), std::to_string(r.counts.admitted),
               std::to_string(r.counts.dropped), std::to_string(r.counts.served), number(r.drop_prob.value),
               number(r.drop_prob.std_error), number(r.mean_sojourn.value), number(r.mean_sojourn.std_error),
               number(r.interference.value), number(r.interference.std_error), number(r.carried_load),
               number(r.charge_fraction), number(r.on_fraction.value)});
    };
    for (const auto& r : report.replications) emit(r, std::to_string(r.replication));
    SimResult pooled = report.pooled;
    pooled.seed = cfg.sim.seed;
    emit(pooled, "pooled");

    csv::OutputSet out;
    out.add("sim.csv", t.str());
    std::ostringstream s;
    s << "replications=" << report.replications.size() << " generator=" << report.generator
      << " seed=" << cfg.sim.seed << " P_B=" << number(report.pooled.drop_prob.value)
      << " P_I=" << number(report.pooled.interference.value)
      << " mean_sojourn=" << number(report.pooled.mean_sojourn.value) << "s";
    return {out.commit(cfg.out_dir), s.str()};
}

/// sweep: sweep.csv, one row per grid value in input order.
inline CommandResult cmd_sweep(const RunConfig& cfg, unsigned workers = default_workers()) {
    if (!cfg.sweep) throw ConfigError("sweep requires a 'sweep' block in the config");
    const auto& spec = *cfg.sweep;
    if (spec.grid.empty()) throw ConfigError("sweep.grid must not be empty");
    if (!(spec.tol > 0.0)) throw ConfigError("sweep.tol must be positive");
    for (double v : spec.grid) {
        if (!(v >= 0.0 && v <= 1.0)) throw ConfigError("sweep.grid values must lie in [0,1]");
    }
    const auto rows = sweep(cfg.params, cfg.constraints, spec.axis, spec.grid, spec.target, spec.tol, workers);
    using csv::number;

    csv::Table t({"axis_name", "axis_value", "critical_name", "critical_value", "p_b", "p_i", "w_paper",
                  "w_slot_avg", "p_th", "feasible"});
    for (const auto& row : rows) {
        const auto& c = row.critical;
        t.row({to_string(row.axis), number(row.axis_value), to_string(row.target),
               c.value ? number(*c.value) : "none", number(c.report.drop_prob), number(c.report.interference_prob),
               number(c.report.wait_paper), number(c.report.wait_slot_avg), number(c.report.power.total),
               csv::boolean(c.report.feasible.value_or(false))});
    }
    csv::OutputSet out;
    out.add("sweep.csv", t.str());
    return {out.commit(cfg.out_dir), std::to_string(rows.size()) + " sweep rows"};
}

/// compare: compare.csv with the simulated sojourn, the collision-aware chain
/// and the synchronized baseline over a lambda grid.
inline CommandResult cmd_compare(const RunConfig& cfg, unsigned workers = default_workers()) {
    if (!cfg.compare) throw ConfigError("compare requires a 'compare' block in the config");
    const auto& lambdas = cfg.compare->lambdas;
    if (lambdas.empty()) throw ConfigError("compare.lambda_grid must not be empty");
    for (double l : lambdas) {
        if (!(l > 0.0)) throw ConfigError("compare.lambda_grid values must be positive");
    }

    struct Point {
        double sim = 0, full = 0, sync = 0;
    };
    std::vector<Point> points(lambdas.size());
    std::vector<SimConfig> configs;
    for (std::size_t k = 0; k < lambdas.size(); ++k) {
        configs.push_back(detail::sim_config(cfg, with_lambda(cfg.params, lambdas[k]), derive_seed(cfg.sim.seed, k)));
    }
    parallel_for(lambdas.size(), workers, [&](std::size_t k) {
        const auto params = with_lambda(cfg.params, lambdas[k]);
        points[k].sim = run_simulation(configs[k], 1).pooled.mean_sojourn.value;
        points[k].full = analyze(params).report.wait(kArbitratedWait);
        points[k].sync = synchronized_baseline(params).report.wait(kArbitratedWait);
    });

    using csv::number;
    csv::Table t({"lambda", "w_sim", "w_full_model", "w_sync_baseline"});
    for (std::size_t k = 0; k < lambdas.size(); ++k) {
        t.row({number(lambdas[k]), number(points[k].sim), number(points[k].full), number(points[k].sync)});
    }
    csv::OutputSet out;
    out.add("compare.csv", t.str());
    return {out.commit(cfg.out_dir), std::to_string(lambdas.size()) + " compare rows"};
}

}  // namespace criot::app
