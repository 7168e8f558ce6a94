#pragma once

#include <algorithm>
#include <array>
#include <cmath>

#include "criot/params.hpp"

namespace criot {

/// Fraction of time the primary network is ON, mu_off / (mu_on + mu_off).
inline double activity_factor(const PnpModel& pnp) {
    validate(pnp);
    return pnp.mu_off / (pnp.mu_on + pnp.mu_off);
}

/// Phase law of the primary network across one slot of length d.
/// `aXY` is P(phase Y at slot end | phase X at slot start); the persistence
/// fields are the probabilities that the starting period covers the whole slot.
struct SlotTransitionKernel {
    double a00 = 1.0;
    double a01 = 0.0;
    double a10 = 0.0;
    double a11 = 1.0;
    double off_persist = 1.0;
    double on_persist = 1.0;

    double phase(Phase from, Phase to) const noexcept {
        if (from == Phase::Off) return to == Phase::Off ? a00 : a01;
        return to == Phase::Off ? a10 : a11;
    }
};

inline SlotTransitionKernel slot_kernel(const PnpModel& pnp, double slot_d) {
    validate(pnp);
    if (!(slot_d >= 0.0) || !std::isfinite(slot_d)) {
        throw InvalidParameter("slot duration must be finite and non-negative");
    }
    const double total = pnp.mu_on + pnp.mu_off;
    // expm1 keeps the switching mass exact when total*d is small.
    const double decay = -std::expm1(-total * slot_d);  // 1 - e^{-(mu_on+mu_off) d}

    SlotTransitionKernel k;
    k.a10 = pnp.mu_on * decay / total;
    k.a11 = 1.0 - k.a10;
    k.a01 = pnp.mu_off * decay / total;
    k.a00 = 1.0 - k.a01;
    k.off_persist = std::min(std::exp(-pnp.mu_off * slot_d), k.a00);
    k.on_persist = std::min(std::exp(-pnp.mu_on * slot_d), k.a11);
    return k;
}

namespace detail {

inline double log_factorial(int k) noexcept {
    double s = 0.0;
    for (int i = 2; i <= k; ++i) s += std::log(static_cast<double>(i));
    return s;
}

inline double poisson_pmf(double mean, int k) noexcept {
    if (k < 0) return 0.0;
    if (mean <= 0.0) return k == 0 ? 1.0 : 0.0;
    return std::exp(k * std::log(mean) - mean - log_factorial(k));
}

inline double poisson_tail(double mean, int k_min) noexcept {
    if (k_min <= 0) return 1.0;
    if (mean <= 0.0) return 0.0;
    if (k_min > mean) {
        // Sum upward; terms decay geometrically once past the mode.
        double term = poisson_pmf(mean, k_min);
        double sum = 0.0;
        for (int k = k_min; term > 0.0; ++k) {
            sum += term;
            if (term < sum * 1e-18) break;
            term *= mean / (k + 1);
        }
        return std::min(sum, 1.0);
    }
    double head = 0.0;
    for (int k = 0; k < k_min; ++k) head += poisson_pmf(mean, k);
    return std::max(0.0, 1.0 - head);
}

}  // namespace detail

/// A(d,k): probability of k arrivals at the representative sensor in one slot.
/// Zero for negative k.
inline double arrival_pmf(const TrafficModel& traffic, int k) {
    return detail::poisson_pmf(traffic.arrivals_per_slot(), k);
}

/// Probability of at least k_min arrivals in one slot.
inline double arrival_tail(const TrafficModel& traffic, int k_min) {
    return detail::poisson_tail(traffic.arrivals_per_slot(), k_min);
}

/// Probability mass over {Idle, Serve, Charge}, indexed by to_int(Action).
struct ActionPmf {
    std::array<double, 3> p{1.0, 0.0, 0.0};

    double operator[](Action a) const noexcept { return p[static_cast<std::size_t>(to_int(a))]; }
};

/// Slot-start decision law given the true phase. The channel is perceived
/// free with probability 1-P_F (OFF) or 1-P_D (ON); a free slot is left idle
/// with probability theta, otherwise charged with probability xi, otherwise
/// served. With an empty queue the serve branch becomes idle.
inline ActionPmf decision_distribution(Phase phase_at_sense, const SensingModel& sensing,
                                       const PolicyModel& policy, bool queue_empty) {
    const double perceived_free =
        phase_at_sense == Phase::Off ? 1.0 - sensing.p_false_alarm : 1.0 - sensing.p_detect;
    const double used = perceived_free * (1.0 - policy.theta_idle);
    ActionPmf out;
    const double charge = used * policy.xi_charge;
    const double serve = queue_empty ? 0.0 : used * (1.0 - policy.xi_charge);
    out.p = {1.0 - charge - serve, serve, charge};
    return out;
}

}  // namespace criot
