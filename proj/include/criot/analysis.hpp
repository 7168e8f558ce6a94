#pragma once

#include <limits>
#include <optional>

#include "criot/qos.hpp"

namespace criot {

/// QoS limits a feasible operating point must respect. The power cap P_m
/// lives in PowerModel.
struct Constraints {
    double max_drop = 0.1;
    double max_interference = 0.1;
};

inline void validate(const Constraints& c) {
    detail::require(detail::is_probability(c.max_drop), "max_drop must lie in [0,1]");
    detail::require(detail::is_probability(c.max_interference), "max_interference must lie in [0,1]");
}

/// Waiting-time estimator that tracks the simulated mean sojourn; the
/// acceptance suite re-derives this choice on every run.
inline constexpr WaitEstimator kArbitratedWait = WaitEstimator::SlotAverage;

/// Everything the chain says about one operating point. Undefined waiting
/// times (no admitted traffic, no departures) are NaN. With no offered
/// traffic nothing can be dropped, so drop_prob is reported as 0.
struct QosReport {
    double beta = 0.0;
    double offered_load = 0.0;  // n lambda d, packets per slot
    double carried_load = 0.0;
    double drop_prob = 0.0;
    double wait_paper = std::numeric_limits<double>::quiet_NaN();
    double wait_slot_avg = std::numeric_limits<double>::quiet_NaN();
    double interference_prob = 0.0;
    double charge_decision_mass = 0.0;
    PowerBudget power;
    std::optional<bool> feasible;
    double residual = 0.0;

    double wait(WaitEstimator e) const noexcept {
        return e == WaitEstimator::PaperEq12 ? wait_paper : wait_slot_avg;
    }
};

inline bool meets(const QosReport& r, const Constraints& c) noexcept {
    return r.drop_prob <= c.max_drop && r.interference_prob <= c.max_interference && r.power.feasible;
}

struct Analysis {
    TransitionMatrix matrix;
    StationaryDistribution stationary;
    SlotTransitionKernel kernel;
    QosReport report;
};

inline QosReport evaluate_report(const SystemParams& params, const StateSpace& space,
                                 const StationaryDistribution& mu, const SlotTransitionKernel& kernel,
                                 const std::optional<Constraints>& constraints) {
    QosReport r;
    r.beta = activity_factor(params.pnp);
    r.offered_load = params.traffic.arrivals_per_slot();
    r.carried_load = carried_load(mu, space, kernel);
    r.interference_prob = interference_probability(mu, space);
    r.charge_decision_mass = charge_decision_mass(mu, space);
    r.residual = mu.residual;
    if (r.offered_load > 0.0) {
        r.drop_prob = packet_drop_probability(r.carried_load, params.traffic);
        try {
            r.wait_slot_avg = waiting_time({}, mu, space, r.drop_prob, params.traffic,
                                           WaitEstimator::SlotAverage);
            const auto dd = departure_distributions(mu, space, kernel, params.traffic, r.drop_prob,
                                                    DepartureVariant::PaperLiteral);
            r.wait_paper = waiting_time(dd, mu, space, r.drop_prob, params.traffic,
                                        WaitEstimator::PaperEq12);
        } catch (const UndefinedWait&) {
        } catch (const DegenerateDistribution&) {
        }
    }
    r.power = required_power(params.power, params.traffic, params.policy, r.beta, r.drop_prob);
    if (constraints) r.feasible = meets(r, *constraints);
    return r;
}

/// Builds the chain, solves it and derives the full report.
inline Analysis analyze(const SystemParams& params,
                        const std::optional<Constraints>& constraints = std::nullopt,
                        ServiceModel model = ServiceModel::Collision) {
    if (constraints) validate(*constraints);
    auto matrix = build_transition_matrix(params, model);
    auto mu = stationary_distribution(matrix);
    const auto kernel = slot_kernel(params.pnp, params.traffic.slot);
    auto report = evaluate_report(params, matrix.space(), mu, kernel, constraints);
    return {std::move(matrix), std::move(mu), kernel, report};
}

}  // namespace criot
