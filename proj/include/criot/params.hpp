#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "criot/errors.hpp"

namespace criot {

/// Primary-network phase observed at a slot boundary.
enum class Phase : std::uint8_t { Off = 0, On = 1 };

/// Access-point action committed for one slot.
enum class Action : std::uint8_t { Idle = 0, Serve = 1, Charge = 2 };

inline constexpr int to_int(Phase p) noexcept { return static_cast<int>(p); }
inline constexpr int to_int(Action a) noexcept { return static_cast<int>(a); }

/// Exponential ON/OFF activity of the primary network. Rates are in 1/s;
/// mean ON duration is 1/mu_on, mean OFF duration is 1/mu_off.
struct PnpModel {
    double mu_on = 1.0;
    double mu_off = 1.0;
};

/// The representative sensor: n nodes of Poisson rate lambda feeding one
/// buffer of `capacity` packets, drained at most one packet per slot.
struct TrafficModel {
    int nodes = 20;
    double lambda = 0.001;  // packets / s / node
    int capacity = 10;
    double slot = 1.0;  // seconds

    /// Aggregate arrival rate of the representative sensor.
    double aggregate_rate() const noexcept { return nodes * lambda; }
    /// Mean arrivals per slot, n*lambda*d.
    double arrivals_per_slot() const noexcept { return nodes * lambda * slot; }
};

struct SensingModel {
    double p_detect = 0.9;
    double p_false_alarm = 0.1;
};

struct PolicyModel {
    double theta_idle = 0.2;
    double xi_charge = 0.5;
};

/// Microwave power-transfer budget of one access point. Radii are divided by
/// `radius_scale` before the pathloss exponent is applied.
struct PowerModel {
    double p_charge_min = 50e-6;       // W
    double p_max = 10.0;               // W
    double energy_per_packet = 400e-6; // J
    double pathloss_exponent = 2.0;
    double radius_scale = 1.0;         // m
    std::vector<double> node_radii;    // m
};

struct SystemParams {
    PnpModel pnp;
    TrafficModel traffic;
    SensingModel sensing;
    PolicyModel policy;
    PowerModel power;
};

namespace detail {

inline void require(bool ok, const std::string& msg) {
    if (!ok) throw InvalidParameter(msg);
}

inline bool is_probability(double p) noexcept { return p >= 0.0 && p <= 1.0; }

}  // namespace detail

inline void validate(const PnpModel& pnp) {
    detail::require(std::isfinite(pnp.mu_on) && pnp.mu_on > 0.0, "mu_on must be positive");
    detail::require(std::isfinite(pnp.mu_off) && pnp.mu_off > 0.0, "mu_off must be positive");
}

inline void validate(const TrafficModel& t) {
    detail::require(t.nodes >= 1, "node count must be at least 1");
    detail::require(std::isfinite(t.lambda) && t.lambda >= 0.0, "lambda must be non-negative");
    detail::require(t.capacity >= 1, "buffer capacity must be at least 1");
    detail::require(std::isfinite(t.slot) && t.slot > 0.0, "slot duration must be positive");
}

inline void validate(const SensingModel& s) {
    detail::require(detail::is_probability(s.p_detect), "p_detect must lie in [0,1]");
    detail::require(detail::is_probability(s.p_false_alarm), "p_false_alarm must lie in [0,1]");
}

inline void validate(const PolicyModel& p) {
    detail::require(detail::is_probability(p.theta_idle), "theta_idle must lie in [0,1]");
    detail::require(detail::is_probability(p.xi_charge), "xi_charge must lie in [0,1]");
}

inline void validate(const PowerModel& p, int nodes) {
    detail::require(p.p_charge_min > 0.0, "p_charge_min must be positive");
    detail::require(p.p_max > 0.0, "p_max must be positive");
    detail::require(p.energy_per_packet > 0.0, "energy_per_packet must be positive");
    detail::require(p.pathloss_exponent >= 0.0, "pathloss_exponent must be non-negative");
    detail::require(p.radius_scale > 0.0, "radius_scale must be positive");
    detail::require(!p.node_radii.empty(), "node_radii must not be empty");
    detail::require(static_cast<int>(p.node_radii.size()) == nodes,
                    "node_radii length (" + std::to_string(p.node_radii.size()) +
                        ") must equal the node count (" + std::to_string(nodes) + ")");
    for (double r : p.node_radii) detail::require(r > 0.0, "every node radius must be positive");
}

inline void validate(const SystemParams& p) {
    validate(p.pnp);
    validate(p.traffic);
    validate(p.sensing);
    validate(p.policy);
    validate(p.power, p.traffic.nodes);
}

/// Deterministic radii for `nodes` nodes spread uniformly over a disk:
/// the (k + 1/2)/n quantiles of the radial distance law r = R*sqrt(U).
inline std::vector<double> uniform_disk_radii(int nodes, double charging_radius) {
    detail::require(nodes >= 1, "node count must be at least 1");
    detail::require(charging_radius > 0.0, "charging radius must be positive");
    std::vector<double> radii(static_cast<std::size_t>(nodes));
    for (int k = 0; k < nodes; ++k) {
        radii[static_cast<std::size_t>(k)] = charging_radius * std::sqrt((k + 0.5) / nodes);
    }
    return radii;
}

/// mu_off giving activity factor `beta` when mu_on is held fixed.
inline double mu_off_for_beta(double mu_on, double beta) {
    detail::require(beta > 0.0 && beta < 1.0, "beta must lie strictly inside (0,1)");
    return mu_on * beta / (1.0 - beta);
}

/// Reference operating point: K=10, d=1 s, n=20, P_D=0.9, P_F=0.1,
/// theta=0.2, xi=0.5, beta=0.5 with mu_on=mu_off=1/s, lambda=0.001/s,
/// P_c=50 uW, P_m=10 W, m=400 uJ, 1 km charging radius.
inline SystemParams reference_params() {
    SystemParams p;
    p.pnp = {1.0, 1.0};
    p.traffic = {20, 0.001, 10, 1.0};
    p.sensing = {0.9, 0.1};
    p.policy = {0.2, 0.5};
    p.power.p_charge_min = 50e-6;
    p.power.p_max = 10.0;
    p.power.energy_per_packet = 400e-6;
    p.power.pathloss_exponent = 2.0;
    p.power.radius_scale = 1000.0;
    p.power.node_radii = uniform_disk_radii(p.traffic.nodes, 1000.0);
    return p;
}

}  // namespace criot
