#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "criot/stationary.hpp"

namespace criot {

namespace detail {

inline constexpr double kClampTol = 1e-9;

// Values within kClampTol of [0,1] are clamped; anything further is a bug.
inline double clamp_probability(double v, const char* what) {
    if (!(v >= -kClampTol && v <= 1.0 + kClampTol)) {
        throw MetricOutOfRange(std::string(what) + " = " + std::to_string(v) + " lies outside [0,1]");
    }
    return std::clamp(v, 0.0, 1.0);
}

inline double mass(const StationaryDistribution& mu, const StateSpace& space, const State& s) {
    return mu[space.index(s)];
}

}  // namespace detail

/// Long-run fraction of slots that clear a packet: an OFF-start serve slot
/// whose OFF period lasts the whole slot.
inline double carried_load(const StationaryDistribution& mu, const StateSpace& space,
                           const SlotTransitionKernel& kernel) {
    double serving = 0.0;
    for (int i = 1; i <= space.capacity(); ++i) {
        serving += detail::mass(mu, space, {i, Phase::Off, Action::Serve});
    }
    return detail::clamp_probability(kernel.off_persist * serving, "carried load");
}

/// P_B = 1 - rho_c / rho with the per-slot offered load rho = n*lambda*d.
inline double packet_drop_probability(double rho_c, const TrafficModel& traffic) {
    if (rho_c < 0.0) throw InvalidParameter("carried load must be non-negative");
    const double offered = traffic.arrivals_per_slot();
    if (!(offered > 0.0)) throw UndefinedLoad("no offered traffic: drop probability is undefined");
    return detail::clamp_probability(1.0 - rho_c / offered, "drop probability");
}

/// kappa_i as printed omits the arrivals between slot start and departure;
/// the arrival-weighted variant composes them in.
enum class DepartureVariant { PaperLiteral, ArrivalWeighted };

inline const char* to_string(DepartureVariant v) noexcept {
    return v == DepartureVariant::PaperLiteral ? "paper-literal" : "arrival-weighted";
}

/// Queue-length laws around departures and arrivals.
/// kappa/delta/gamma range over [0,K-1]; epsilon over [0,K].
struct DepartureDistributions {
    std::vector<double> kappa;
    std::vector<double> delta;
    std::vector<double> gamma;
    std::vector<double> epsilon;
};

inline DepartureDistributions departure_distributions(const StationaryDistribution& mu,
                                                      const StateSpace& space,
                                                      const SlotTransitionKernel& kernel,
                                                      const TrafficModel& traffic, double p_b,
                                                      DepartureVariant variant) {
    const int cap = space.capacity();
    DepartureDistributions dd;
    dd.kappa.assign(static_cast<std::size_t>(cap), 0.0);
    for (int i = 0; i < cap; ++i) {
        double acc = 0.0;
        for (int j = 1; j <= i + 1; ++j) {
            const double m = detail::mass(mu, space, {j, Phase::Off, Action::Serve});
            if (variant == DepartureVariant::PaperLiteral) {
                acc += m;
            } else {
                // i packets remain after clearing one when min(j + k, K) = i + 1.
                const double arrivals = (i == cap - 1) ? arrival_tail(traffic, i - j + 1)
                                                       : arrival_pmf(traffic, i - j + 1);
                acc += m * arrivals;
            }
        }
        dd.kappa[static_cast<std::size_t>(i)] = kernel.off_persist * acc;
    }

    double total = 0.0;
    for (double k : dd.kappa) total += k;
    if (!(total > 0.0)) throw DegenerateDistribution("no successful departures: kappa sums to zero");

    dd.delta.resize(dd.kappa.size());
    for (std::size_t i = 0; i < dd.kappa.size(); ++i) dd.delta[i] = dd.kappa[i] / total;
    dd.gamma = dd.delta;
    dd.epsilon.resize(static_cast<std::size_t>(cap) + 1);
    for (std::size_t i = 0; i < dd.gamma.size(); ++i) dd.epsilon[i] = (1.0 - p_b) * dd.gamma[i];
    dd.epsilon.back() = p_b;
    return dd;
}

/// Slot-start queue-length marginal p_i = sum over (phase, action).
inline std::vector<double> queue_marginal(const StationaryDistribution& mu, const StateSpace& space) {
    std::vector<double> marginal(static_cast<std::size_t>(space.capacity()) + 1, 0.0);
    for (std::size_t idx = 0; idx < space.size(); ++idx) {
        marginal[static_cast<std::size_t>(space.state(idx).queue)] += mu[idx];
    }
    return marginal;
}

inline double mean_queue_length(const StationaryDistribution& mu, const StateSpace& space) {
    const auto marginal = queue_marginal(mu, space);
    double mean = 0.0;
    for (std::size_t i = 0; i < marginal.size(); ++i) mean += static_cast<double>(i) * marginal[i];
    return mean;
}

enum class WaitEstimator {
    /// P_B/(n lambda (1-P_B)) + (1/(n lambda)) sum delta_i, as printed.
    PaperEq12,
    /// Little's law on the slot-start mean queue length.
    SlotAverage,
};

inline const char* to_string(WaitEstimator e) noexcept {
    return e == WaitEstimator::PaperEq12 ? "paper-eq12" : "slot-average";
}

/// Mean waiting time in seconds.
inline double waiting_time(const DepartureDistributions& dd, const StationaryDistribution& mu,
                           const StateSpace& space, double p_b, const TrafficModel& traffic,
                           WaitEstimator estimator) {
    const double rate = traffic.aggregate_rate();
    const double effective = rate * (1.0 - p_b);
    if (!(effective > 0.0)) throw UndefinedWait("no admitted traffic: waiting time is undefined");
    if (estimator == WaitEstimator::PaperEq12) {
        double delta_sum = 0.0;
        for (double d : dd.delta) delta_sum += d;
        return p_b / effective + delta_sum / rate;
    }
    return mean_queue_length(mu, space) / effective;
}

/// Stationary mass of slots where the primary network is ON at the slot start
/// while the access point serves or charges.
inline double interference_probability(const StationaryDistribution& mu, const StateSpace& space) {
    double p = detail::mass(mu, space, {0, Phase::On, Action::Charge});
    for (int i = 1; i <= space.capacity(); ++i) {
        p += detail::mass(mu, space, {i, Phase::On, Action::Serve});
        p += detail::mass(mu, space, {i, Phase::On, Action::Charge});
    }
    return detail::clamp_probability(p, "interference probability");
}

/// Stationary mass of slot-start charge decisions (any phase).
inline double charge_decision_mass(const StationaryDistribution& mu, const StateSpace& space) {
    double p = 0.0;
    for (std::size_t idx = 0; idx < space.size(); ++idx) {
        if (space.state(idx).action == Action::Charge) p += mu[idx];
    }
    return p;
}

struct PowerBudget {
    double per_node = 0.0;  // max(P_c, dynamic term), identical for every node
    double total = 0.0;         // sum_i P_th^i (r_i / scale)^alpha, unclamped
    double clamped = 0.0;       // min(P_m, total)
    bool feasible = false;      // total <= P_m
};

/// Long-run power balance: per-node P_th^i = max(P_c, m lambda (1-P_B) /
/// ((1-beta)(1-theta) xi)). A zero charging fraction needs infinite power.
inline PowerBudget required_power(const PowerModel& power, const TrafficModel& traffic,
                                  const PolicyModel& policy, double beta, double p_b) {
    if (power.node_radii.empty()) throw InvalidParameter("node_radii must not be empty");
    if (!(power.radius_scale > 0.0)) throw InvalidParameter("radius_scale must be positive");
    PowerBudget out;
    const double charge_fraction = (1.0 - beta) * (1.0 - policy.theta_idle) * policy.xi_charge;
    if (!(charge_fraction > 0.0)) {
        out.per_node = std::numeric_limits<double>::infinity();
        out.total = out.per_node;
        out.clamped = power.p_max;
        out.feasible = false;
        return out;
    }
    const double dynamic = power.energy_per_packet * traffic.lambda * (1.0 - p_b) / charge_fraction;
    out.per_node = std::max(power.p_charge_min, dynamic);
    for (double r : power.node_radii) {
        out.total += out.per_node * std::pow(r / power.radius_scale, power.pathloss_exponent);
    }
    out.clamped = std::min(power.p_max, out.total);
    out.feasible = out.total <= power.p_max;
    return out;
}

}  // namespace criot
