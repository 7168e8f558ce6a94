#pragma once

#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "criot/transition_matrix.hpp"

namespace criot {

enum class SolveMethod { Direct, PowerIteration };

inline const char* to_string(SolveMethod m) noexcept {
    return m == SolveMethod::Direct ? "direct" : "power-iteration";
}

/// Fixed point mu = mu P of a row-stochastic matrix.
struct StationaryDistribution {
    std::vector<double> probs;
    double residual = 0.0;  // max |mu P - mu|
    SolveMethod method = SolveMethod::Direct;
    int iterations = 0;

    double operator[](std::size_t idx) const { return probs.at(idx); }
};

struct SolverOptions {
    double stochastic_tol = 1e-10;
    double residual_tol = 1e-10;
    double power_tol = 1e-12;
    int power_max_iterations = 1'000'000;
};

namespace detail {

inline double stationary_residual(const Eigen::MatrixXd& p, const Eigen::VectorXd& mu) {
    return ((p.transpose() * mu) - mu).cwiseAbs().maxCoeff();
}

// Clamp round-off negatives, zero states no transition enters, renormalize.
inline void clean_distribution(Eigen::VectorXd& mu, const Eigen::MatrixXd& p) {
    mu = mu.cwiseMax(0.0);
    for (Eigen::Index j = 0; j < p.cols(); ++j) {
        if ((p.col(j).array() == 0.0).all()) mu(j) = 0.0;
    }
    const double total = mu.sum();
    if (total > 0.0) mu /= total;
}

inline void check_stochastic(const Eigen::MatrixXd& p, double tol) {
    if (p.rows() != p.cols() || p.rows() == 0) {
        throw InvalidParameter("transition matrix must be square and non-empty");
    }
    if (!p.allFinite()) throw InvalidParameter("transition matrix has non-finite entries");
    if (p.minCoeff() < -tol || p.maxCoeff() > 1.0 + tol) {
        throw InvalidParameter("transition matrix entries must lie in [0,1]");
    }
    const double defect = (p.rowwise().sum().array() - 1.0).abs().maxCoeff();
    if (defect > tol) {
        throw InvalidParameter("transition matrix is not row-stochastic (row defect " +
                               std::to_string(defect) + ")");
    }
}

}  // namespace detail

/// Solves mu P = mu, sum(mu) = 1. The direct route replaces the last balance
/// equation with the normalization row and runs a full-pivot LU; a lazy power
/// iteration mu <- mu (I + P) / 2 takes over if that system is singular or the
/// answer misses the residual tolerance. Reducible chains are fine as long as
/// the stationary law is unique; transient states come out at zero.
inline StationaryDistribution stationary_distribution(const Eigen::MatrixXd& p,
                                                      const SolverOptions& opts = {}) {
    detail::check_stochastic(p, opts.stochastic_tol);
    const Eigen::Index n = p.rows();

    Eigen::MatrixXd system = p.transpose() - Eigen::MatrixXd::Identity(n, n);
    system.row(n - 1).setOnes();
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
    rhs(n - 1) = 1.0;

    Eigen::FullPivLU<Eigen::MatrixXd> lu(system);
    if (lu.isInvertible()) {
        Eigen::VectorXd mu = lu.solve(rhs);
        detail::clean_distribution(mu, p);
        const double residual = detail::stationary_residual(p, mu);
        if (mu.allFinite() && residual <= opts.residual_tol) {
            return {std::vector<double>(mu.data(), mu.data() + n), residual, SolveMethod::Direct, 0};
        }
    }

    Eigen::VectorXd mu = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
    const Eigen::MatrixXd lazy_t = 0.5 * (p.transpose() + Eigen::MatrixXd::Identity(n, n));
    double step = 0.0;
    for (int it = 1; it <= opts.power_max_iterations; ++it) {
        Eigen::VectorXd next = lazy_t * mu;
        next /= next.sum();
        step = (next - mu).cwiseAbs().maxCoeff();
        mu.swap(next);
        if (step <= opts.power_tol) {
            detail::clean_distribution(mu, p);
            const double residual = detail::stationary_residual(p, mu);
            if (residual <= opts.residual_tol) {
                return {std::vector<double>(mu.data(), mu.data() + n), residual,
                        SolveMethod::PowerIteration, it};
            }
        }
    }
    throw NoConvergence("stationary power iteration did not converge",
                        detail::stationary_residual(p, mu));
}

inline StationaryDistribution stationary_distribution(const TransitionMatrix& matrix,
                                                      const SolverOptions& opts = {}) {
    return stationary_distribution(matrix.probabilities(), opts);
}

}  // namespace criot
