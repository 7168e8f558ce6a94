#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "criot/analysis.hpp"
#include "criot/parallel.hpp"

namespace criot {

struct FeasibilityResult {
    bool feasible = false;
    QosReport report;
};

/// Feasible iff P_B <= max_drop, P_I <= max_interference and P_th <= P_m.
inline FeasibilityResult feasibility_check(const SystemParams& params, const Constraints& constraints) {
    const auto a = analyze(params, constraints);
    return {*a.report.feasible, a.report};
}

/// Outcome of a critical-value search. `value` is empty when the system is
/// infeasible even at the lower end of the search interval.
struct CriticalResult {
    std::optional<double> value;
    bool feasible_at_lower = false;
    bool anomaly = false;    // the guard scan was not a feasible prefix
    bool saturated = false;  // feasible up to the top of the search interval
    QosReport report;        // metrics at the critical value (or at the lower end)
};

inline constexpr int kGuardScanPoints = 32;

namespace detail {

// Largest x in [lo, hi] with feasible(x), assuming a feasible prefix. A
// 32-point scan checks that assumption first; if feasibility returns after
// failing, the search stays inside the first feasible run and flags it.
inline CriticalResult bisect_feasible_prefix(double lo, double hi, double tol,
                                             const std::function<FeasibilityResult(double)>& check) {
    CriticalResult out;
    const auto at_lo = check(lo);
    out.feasible_at_lower = at_lo.feasible;
    out.report = at_lo.report;
    if (!at_lo.feasible) return out;

    std::vector<double> grid(kGuardScanPoints);
    std::vector<bool> ok(kGuardScanPoints);
    for (int k = 0; k < kGuardScanPoints; ++k) {
        grid[static_cast<std::size_t>(k)] = lo + (hi - lo) * k / (kGuardScanPoints - 1);
        ok[static_cast<std::size_t>(k)] = k == 0 ? true : check(grid[static_cast<std::size_t>(k)]).feasible;
    }
    int first_bad = kGuardScanPoints;
    for (int k = 0; k < kGuardScanPoints; ++k) {
        if (!ok[static_cast<std::size_t>(k)]) {
            first_bad = k;
            break;
        }
    }
    for (int k = first_bad + 1; k < kGuardScanPoints; ++k) {
        if (ok[static_cast<std::size_t>(k)]) out.anomaly = true;
    }
    if (first_bad == kGuardScanPoints) {
        out.saturated = true;
        out.value = hi;
        out.report = check(hi).report;
        return out;
    }

    double good = grid[static_cast<std::size_t>(first_bad - 1)];
    double bad = grid[static_cast<std::size_t>(first_bad)];
    while (bad - good > tol) {
        const double mid = 0.5 * (good + bad);
        if (check(mid).feasible) {
            good = mid;
        } else {
            bad = mid;
        }
    }
    out.value = good;
    out.report = check(good).report;
    return out;
}

}  // namespace detail

/// Search interval for beta; mu_off is finite and positive at both ends.
inline constexpr double kBetaMin = 1e-6;
inline constexpr double kBetaMax = 1.0 - 1e-6;

/// Copy of `params` with activity factor `beta`, varying mu_off at fixed mu_on.
inline SystemParams with_beta(SystemParams params, double beta) {
    params.pnp.mu_off = mu_off_for_beta(params.pnp.mu_on, beta);
    return params;
}

inline SystemParams with_lambda(SystemParams params, double lambda) {
    params.traffic.lambda = lambda;
    return params;
}

/// Largest activity factor that keeps the cell feasible.
inline CriticalResult critical_beta(const SystemParams& params, const Constraints& constraints,
                                    double tol) {
    if (!(tol > 0.0)) throw InvalidParameter("tolerance must be positive");
    validate(params);
    validate(constraints);
    return detail::bisect_feasible_prefix(kBetaMin, kBetaMax, tol, [&](double beta) {
        return feasibility_check(with_beta(params, beta), constraints);
    });
}

/// Growth cap of the lambda bracket relative to its starting value.
inline constexpr double kLambdaBracketCap = 1048576.0;  // 2^20

/// Largest per-node packet rate that keeps the cell feasible. The upper end
/// of the bracket doubles from the configured lambda (or 1e-3 when that is
/// zero) until infeasible, capped at 2^20 times the start. None when even
/// lambda = tol is infeasible.
inline CriticalResult critical_lambda(const SystemParams& params, const Constraints& constraints,
                                      double tol) {
    if (!(tol > 0.0)) throw InvalidParameter("tolerance must be positive");
    validate(params);
    validate(constraints);
    auto check = [&](double lambda) { return feasibility_check(with_lambda(params, lambda), constraints); };
    // An idle cell is not an operating point: if no positive rate down to tol
    // is feasible there is no critical rate.
    if (auto probe = check(tol); !probe.feasible) {
        CriticalResult out;
        out.feasible_at_lower = check(0.0).feasible;
        out.report = std::move(probe.report);
        return out;
    }
    const double start = params.traffic.lambda > 0.0 ? params.traffic.lambda : 1e-3;
    double hi = start;
    while (check(hi).feasible && hi < start * kLambdaBracketCap) hi *= 2.0;
    return detail::bisect_feasible_prefix(0.0, hi, tol, check);
}

enum class SweepAxis { Detection, FalseAlarm };
enum class SweepTarget { BetaCritical, LambdaCritical };

inline const char* to_string(SweepAxis a) noexcept { return a == SweepAxis::Detection ? "p_d" : "p_f"; }
inline const char* to_string(SweepTarget t) noexcept {
    return t == SweepTarget::BetaCritical ? "beta_c" : "lambda_c";
}

struct SweepRow {
    SweepAxis axis = SweepAxis::Detection;
    double axis_value = 0.0;
    SweepTarget target = SweepTarget::BetaCritical;
    CriticalResult critical;
};

/// One critical-value search per grid value, evaluated concurrently; rows
/// come back in input order.
inline std::vector<SweepRow> sweep(const SystemParams& params, const Constraints& constraints,
                                   SweepAxis axis, const std::vector<double>& grid, SweepTarget target,
                                   double tol, unsigned workers = default_workers()) {
    for (double v : grid) {
        if (!(v >= 0.0 && v <= 1.0)) throw InvalidParameter("sweep grid values must lie in [0,1]");
    }
    std::vector<SweepRow> rows(grid.size());
    parallel_for(grid.size(), workers, [&](std::size_t k) {
        SystemParams p = params;
        if (axis == SweepAxis::Detection) {
            p.sensing.p_detect = grid[k];
        } else {
            p.sensing.p_false_alarm = grid[k];
        }
        SweepRow row{axis, grid[k], target, {}};
        row.critical = target == SweepTarget::BetaCritical ? critical_beta(p, constraints, tol)
                                                           : critical_lambda(p, constraints, tol);
        rows[k] = std::move(row);
    });
    return rows;
}

/// Comparison model that assumes the access point and the primary network
/// never overlap inside a slot: OFF-start service completes whenever the
/// slot ends in OFF, and sensing is perfect.
inline Analysis synchronized_baseline(SystemParams params,
                                      const std::optional<Constraints>& constraints = std::nullopt) {
    params.sensing.p_detect = 1.0;
    params.sensing.p_false_alarm = 0.0;
    auto matrix = build_transition_matrix(params, ServiceModel::Synchronized);
    auto mu = stationary_distribution(matrix);
    auto kernel = slot_kernel(params.pnp, params.traffic.slot);
    // A slot clears whenever it starts and ends in OFF.
    SlotTransitionKernel effective = kernel;
    effective.off_persist = kernel.a00;
    auto report = evaluate_report(params, matrix.space(), mu, effective, constraints);
    return {std::move(matrix), std::move(mu), kernel, report};
}

struct PolicyChoice {
    PolicyModel policy;
    QosReport report;
};

/// Grid search over (theta, xi): the feasible pair with the smallest drop
/// probability, ties broken by lower interference. Empty if none is feasible.
inline std::optional<PolicyChoice> best_policy(const SystemParams& params, const Constraints& constraints,
                                               const std::vector<double>& thetas,
                                               const std::vector<double>& xis,
                                               unsigned workers = default_workers()) {
    std::vector<std::optional<PolicyChoice>> cells(thetas.size() * xis.size());
    parallel_for(cells.size(), workers, [&](std::size_t k) {
        SystemParams p = params;
        p.policy = {thetas[k / xis.size()], xis[k % xis.size()]};
        const auto res = feasibility_check(p, constraints);
        if (res.feasible) cells[k] = PolicyChoice{p.policy, res.report};
    });
    std::optional<PolicyChoice> best;
    for (const auto& c : cells) {
        if (!c) continue;
        if (!best || c->report.drop_prob < best->report.drop_prob ||
            (c->report.drop_prob == best->report.drop_prob &&
             c->report.interference_prob < best->report.interference_prob)) {
            best = c;
        }
    }
    return best;
}

}  // namespace criot
