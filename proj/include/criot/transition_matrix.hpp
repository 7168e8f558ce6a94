#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "criot/kernel.hpp"
#include "criot/state_space.hpp"

namespace criot {

/// How a serve slot that starts in OFF resolves.
enum class ServiceModel {
    /// The packet clears only if the OFF period covers the whole slot; a
    /// mid-slot resumption of the primary network wastes the slot.
    Collision,
    /// Phase changes inside a slot are ignored: the packet clears whenever
    /// the phase is OFF at the slot end.
    Synchronized,
};

/// One way a slot can play out for the phase process, with its probability.
struct ServiceOutcome {
    Phase end_phase;
    bool cleared;
    double weight;
};

/// Phase/service outcomes of one slot from a source phase and action.
inline std::vector<ServiceOutcome> service_outcomes(const SlotTransitionKernel& kernel, Phase phase,
                                                    Action action,
                                                    ServiceModel model = ServiceModel::Collision) {
    if (phase == Phase::Off && action == Action::Serve) {
        if (model == ServiceModel::Synchronized) {
            return {{Phase::Off, true, kernel.a00}, {Phase::On, false, kernel.a01}};
        }
        return {{Phase::Off, true, kernel.off_persist},
                {Phase::Off, false, std::max(0.0, kernel.a00 - kernel.off_persist)},
                {Phase::On, false, kernel.a01}};
    }
    return {{Phase::Off, false, kernel.phase(phase, Phase::Off)},
            {Phase::On, false, kernel.phase(phase, Phase::On)}};
}

class TransitionMatrix {
public:
    TransitionMatrix(StateSpace space, Eigen::MatrixXd probs)
        : space_(space), probs_(std::move(probs)) {}

    const StateSpace& space() const noexcept { return space_; }
    const Eigen::MatrixXd& probabilities() const noexcept { return probs_; }
    std::size_t size() const noexcept { return space_.size(); }

    double operator()(const State& from, const State& to) const {
        return probs_(static_cast<Eigen::Index>(space_.index(from)),
                      static_cast<Eigen::Index>(space_.index(to)));
    }

    /// Largest |row sum - 1| over all rows.
    double max_row_defect() const {
        return (probs_.rowwise().sum().array() - 1.0).abs().maxCoeff();
    }

private:
    StateSpace space_;
    Eigen::MatrixXd probs_;
};

/// Populates the slot-to-slot transition matrix. Each entry is
///   (phase/service outcome weight) x (arrival mass) x (destination decision pmf),
/// where arrivals fill the buffer up to K before a cleared packet leaves at
/// the slot end, so j = min(i + k, K) - cleared.
inline TransitionMatrix build_transition_matrix(const SystemParams& params,
                                                ServiceModel model = ServiceModel::Collision) {
    validate(params);
    const TrafficModel& traffic = params.traffic;
    const int cap = traffic.capacity;
    const StateSpace space(cap);
    const auto kernel = slot_kernel(params.pnp, traffic.slot);
    const auto n = static_cast<Eigen::Index>(space.size());

    // Decision pmfs depend only on (phase, empty queue).
    ActionPmf decide[2][2];
    for (int ph = 0; ph < 2; ++ph) {
        for (int empty = 0; empty < 2; ++empty) {
            decide[ph][empty] = decision_distribution(static_cast<Phase>(ph), params.sensing,
                                                      params.policy, empty == 1);
        }
    }

    // Arrival mass landing the buffer at j before any departure, from i.
    auto fill_mass = [&](int i, int j) {
        if (j < i) return 0.0;
        if (j == cap) return arrival_tail(traffic, cap - i);
        return arrival_pmf(traffic, j - i);
    };

    Eigen::MatrixXd probs = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index row = 0; row < n; ++row) {
        const State src = space.state(static_cast<std::size_t>(row));
        for (const auto& outcome : service_outcomes(kernel, src.phase, src.action, model)) {
            if (outcome.weight == 0.0) continue;
            const int shift = outcome.cleared ? 1 : 0;
            for (int filled = src.queue; filled <= cap; ++filled) {
                const double mass = outcome.weight * fill_mass(src.queue, filled);
                if (mass == 0.0) continue;
                const int j = filled - shift;
                const ActionPmf& pmf = decide[to_int(outcome.end_phase)][j == 0 ? 1 : 0];
                for (int a = 0; a < 3; ++a) {
                    const State dst{j, outcome.end_phase, static_cast<Action>(a)};
                    if (!is_valid(dst, cap)) continue;  // serve mass is already zero here
                    probs(row, static_cast<Eigen::Index>(space.index(dst))) += mass * pmf.p[static_cast<std::size_t>(a)];
                }
            }
        }
    }
    return TransitionMatrix(space, std::move(probs));
}

}  // namespace criot
