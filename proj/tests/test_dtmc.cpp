#include <cmath>
#include <set>

#include <gtest/gtest.h>

#include "appendix_oracle.hpp"
#include "criot/errors.hpp"
#include "criot/kernel.hpp"
#include "criot/stationary.hpp"
#include "criot/transition_matrix.hpp"
#include "generators.hpp"

using namespace criot;

namespace {

// (1,0,1) -> (0,0,2) at the reference point: e^{-1} * e^{-0.02} * 0.36.
constexpr double kServeToChargeEntry = 0.12981417846230822;

double queue_mass(const StationaryDistribution& mu, const StateSpace& space, int from) {
    double m = 0.0;
    for (std::size_t k = 0; k < space.size(); ++k) {
        if (space.state(k).queue >= from) m += mu.probs[k];
    }
    return m;
}

double on_mass(const StationaryDistribution& mu, const StateSpace& space) {
    double m = 0.0;
    for (std::size_t k = 0; k < space.size(); ++k) {
        if (space.state(k).phase == Phase::On) m += mu.probs[k];
    }
    return m;
}

}  // namespace

TEST(StateSpace, SizeAndBijection) {
    for (int cap : {1, 2, 5, 10, 25}) {
        const StateSpace space(cap);
        EXPECT_EQ(space.size(), static_cast<std::size_t>(6 * cap + 4));
        std::set<std::size_t> seen;
        for (int i = 0; i <= cap; ++i) {
            for (Phase ph : {Phase::Off, Phase::On}) {
                for (Action a : {Action::Idle, Action::Serve, Action::Charge}) {
                    const State s{i, ph, a};
                    if (!is_valid(s, cap)) {
                        EXPECT_THROW(space.index(s), InvalidParameter);
                        continue;
                    }
                    const auto idx = space.index(s);
                    EXPECT_LT(idx, space.size());
                    EXPECT_EQ(space.state(idx), s);
                    seen.insert(idx);
                }
            }
        }
        EXPECT_EQ(seen.size(), space.size());
    }
}

TEST(StateSpace, CanonicalOrderAndErrors) {
    const StateSpace space(3);
    EXPECT_EQ(space.state(0), (State{0, Phase::Off, Action::Idle}));
    EXPECT_EQ(space.state(1), (State{0, Phase::Off, Action::Charge}));
    EXPECT_EQ(space.state(2), (State{0, Phase::On, Action::Idle}));
    EXPECT_EQ(space.state(3), (State{0, Phase::On, Action::Charge}));
    EXPECT_EQ(space.state(4), (State{1, Phase::Off, Action::Idle}));
    EXPECT_EQ(space.state(21), (State{3, Phase::On, Action::Charge}));
    EXPECT_FALSE(is_valid({0, Phase::Off, Action::Serve}, 3));
    EXPECT_FALSE(is_valid({4, Phase::Off, Action::Idle}, 3));
    EXPECT_FALSE(is_valid({-1, Phase::Off, Action::Idle}, 3));
    EXPECT_THROW(space.state(22), InvalidParameter);
    EXPECT_THROW(StateSpace(0), InvalidParameter);
}

TEST(Matrix, ReferenceServeToChargeEntry) {
    const auto m = build_transition_matrix(reference_params());
    EXPECT_NEAR(m({1, Phase::Off, Action::Serve}, {0, Phase::Off, Action::Charge}), kServeToChargeEntry, 1e-15);
}

TEST(Matrix, ReferenceIsStochastic) {
    const auto m = build_transition_matrix(reference_params());
    EXPECT_EQ(m.size(), 64u);
    EXPECT_LE(m.max_row_defect(), 1e-12);
    EXPECT_GE(m.probabilities().minCoeff(), 0.0);
}

TEST(Matrix, ServingOnNeverClears) {
    const auto p = reference_params();
    const auto m = build_transition_matrix(p);
    for (int i = 1; i <= p.traffic.capacity; ++i) {
        for (Phase ph : {Phase::Off, Phase::On}) {
            for (Action a : {Action::Idle, Action::Serve, Action::Charge}) {
                if (ph == Phase::Off && a == Action::Serve) continue;
                for (Action b : {Action::Idle, Action::Serve, Action::Charge}) {
                    for (Phase q : {Phase::Off, Phase::On}) {
                        const State dst{i - 1, q, b};
                        if (is_valid(dst, p.traffic.capacity)) EXPECT_EQ(m({i, ph, a}, dst), 0.0);
                    }
                }
            }
        }
    }
}

TEST(MatrixProperty, RowsSumToOne) {
    gen::Source src(21);
    const int caps[] = {1, 2, 5, 10, 25};
    for (int t = 0; t < 500; ++t) {
        auto p = gen::system(src);
        p.traffic.capacity = caps[t % 5];
        const auto m = build_transition_matrix(p);
        SCOPED_TRACE(testing::Message() << "trial " << t << " K=" << p.traffic.capacity);
        EXPECT_LE(m.max_row_defect(), 1e-12);
        EXPECT_GE(m.probabilities().minCoeff(), 0.0);
        EXPECT_LE(m.probabilities().maxCoeff(), 1.0);
    }
}

TEST(MatrixProperty, MatchesLiteralClassesSmallBuffers) {
    gen::Source src(22);
    for (int t = 0; t < 300; ++t) {
        auto p = gen::system(src);
        p.traffic.capacity = 2 + t % 4;  // literal classes are only distinct from K = 2 on
        const auto built = build_transition_matrix(p).probabilities();
        const auto literal = oracle::Literal(p).matrix();
        SCOPED_TRACE(testing::Message() << "trial " << t << " K=" << p.traffic.capacity);
        EXPECT_LE((built - literal).cwiseAbs().maxCoeff(), 1e-12);
    }
}

TEST(MatrixProperty, SynchronizedDiffersOnlyInServeRows) {
    gen::Source src(23);
    for (int t = 0; t < 100; ++t) {
        const auto p = gen::interior_system(src, 6);
        const auto a = build_transition_matrix(p, ServiceModel::Collision);
        const auto b = build_transition_matrix(p, ServiceModel::Synchronized);
        EXPECT_LE(b.max_row_defect(), 1e-12);
        for (std::size_t r = 0; r < a.size(); ++r) {
            const State s = a.space().state(r);
            if (s.phase == Phase::Off && s.action == Action::Serve) continue;
            const auto ri = static_cast<Eigen::Index>(r);
            EXPECT_EQ((a.probabilities().row(ri) - b.probabilities().row(ri)).cwiseAbs().maxCoeff(), 0.0);
        }
    }
}

TEST(ServiceOutcomes, WeightsAndModels) {
    const auto k = slot_kernel({1.0, 1.0}, 1.0);
    const auto collision = service_outcomes(k, Phase::Off, Action::Serve);
    ASSERT_EQ(collision.size(), 3u);
    EXPECT_TRUE(collision[0].cleared);
    EXPECT_EQ(collision[0].weight, k.off_persist);
    EXPECT_NEAR(collision[0].weight + collision[1].weight + collision[2].weight, 1.0, 1e-15);

    const auto sync = service_outcomes(k, Phase::Off, Action::Serve, ServiceModel::Synchronized);
    ASSERT_EQ(sync.size(), 2u);
    EXPECT_TRUE(sync[0].cleared);
    EXPECT_EQ(sync[0].weight, k.a00);

    for (const auto& o : service_outcomes(k, Phase::On, Action::Serve)) EXPECT_FALSE(o.cleared);
}

TEST(Matrix, RejectsInvalidParams) {
    auto p = reference_params();
    p.sensing.p_detect = -0.2;
    EXPECT_THROW(build_transition_matrix(p), InvalidParameter);
}

TEST(Stationary, TwoStateSwap) {
    Eigen::MatrixXd p(2, 2);
    p << 0.0, 1.0, 1.0, 0.0;
    const auto mu = stationary_distribution(p);
    EXPECT_NEAR(mu.probs[0], 0.5, 1e-15);
    EXPECT_NEAR(mu.probs[1], 0.5, 1e-15);
}

TEST(Stationary, TwoStateAsymmetric) {
    Eigen::MatrixXd p(2, 2);
    p << 0.9, 0.1, 0.3, 0.7;
    const auto mu = stationary_distribution(p);
    EXPECT_NEAR(mu.probs[0], 0.75, 1e-14);
    EXPECT_EQ(mu.method, SolveMethod::Direct);
}

TEST(Stationary, RejectsNonStochastic) {
    Eigen::MatrixXd p(2, 2);
    p << 0.5, 0.6, 0.3, 0.7;
    EXPECT_THROW(stationary_distribution(p), InvalidParameter);
    Eigen::MatrixXd q(2, 3);
    q.setConstant(1.0 / 3.0);
    EXPECT_THROW(stationary_distribution(q), InvalidParameter);
    Eigen::MatrixXd r(2, 2);
    r << 1.2, -0.2, 0.5, 0.5;
    EXPECT_THROW(stationary_distribution(r), InvalidParameter);
}

TEST(Stationary, FallsBackToPowerIteration) {
    // Two closed classes: the LU system is singular, so the power iteration
    // answers (with the mixture reached from the uniform start).
    Eigen::MatrixXd p(2, 2);
    p << 1.0, 0.0, 0.0, 1.0;
    const auto mu = stationary_distribution(p);
    EXPECT_EQ(mu.method, SolveMethod::PowerIteration);
    EXPECT_NEAR(mu.probs[0] + mu.probs[1], 1.0, 1e-15);
}

TEST(Stationary, ReportsNoConvergence) {
    Eigen::MatrixXd p(3, 3);
    p << 0.2, 0.5, 0.3, 0.1, 0.1, 0.8, 0.6, 0.2, 0.2;
    SolverOptions opts;
    opts.residual_tol = -1.0;  // unreachable
    opts.power_max_iterations = 5;
    try {
        stationary_distribution(p, opts);
        FAIL() << "expected NoConvergence";
    } catch (const NoConvergence& e) {
        EXPECT_GE(e.residual(), 0.0);
    }
}

TEST(Stationary, PeriodicChainWithTransientState) {
    Eigen::MatrixXd p(3, 3);
    p << 0.0, 1.0, 0.0, 1.0, 0.0, 0.0, 0.5, 0.0, 0.5;
    const auto mu = stationary_distribution(p);
    EXPECT_NEAR(mu.probs[0], 0.5, 1e-12);
    EXPECT_NEAR(mu.probs[2], 0.0, 1e-12);
}

TEST(Stationary, NoTrafficEmptiesQueue) {
    auto p = reference_params();
    p.traffic.lambda = 0.0;
    const auto m = build_transition_matrix(p);
    const auto mu = stationary_distribution(m);
    EXPECT_LE(queue_mass(mu, m.space(), 1), 1e-12);
    EXPECT_NEAR(on_mass(mu, m.space()), 0.5, 1e-12);
}

TEST(Stationary, NoServiceFillsQueue) {
    auto p = reference_params();
    p.policy.theta_idle = 1.0;
    const auto m = build_transition_matrix(p);
    const auto mu = stationary_distribution(m);
    EXPECT_NEAR(queue_mass(mu, m.space(), p.traffic.capacity), 1.0, 1e-10);
}

TEST(StationaryProperty, PhaseMarginalIsActivityFactor) {
    gen::Source src(24);
    for (int t = 0; t < 200; ++t) {
        const auto p = gen::interior_system(src);
        const auto m = build_transition_matrix(p);
        const auto mu = stationary_distribution(m);
        SCOPED_TRACE(testing::Message() << "trial " << t);
        EXPECT_NEAR(on_mass(mu, m.space()), activity_factor(p.pnp), 1e-8);
        EXPECT_LE(mu.residual, 1e-10);
        double total = 0.0;
        for (double v : mu.probs) {
            EXPECT_GE(v, 0.0);
            total += v;
        }
        EXPECT_NEAR(total, 1.0, 1e-12);
    }
}

TEST(StationaryProperty, MatchesLeastSquaresOnLiteralMatrix) {
    gen::Source src(25);
    for (int t = 0; t < 100; ++t) {
        auto p = gen::interior_system(src);
        p.traffic.capacity = 2 + t % 2;
        const auto literal = oracle::Literal(p).matrix();
        const Eigen::VectorXd expected = oracle::stationary_least_squares(literal);
        const auto mu = stationary_distribution(build_transition_matrix(p));
        for (Eigen::Index k = 0; k < expected.size(); ++k) {
            // Two different factorizations; allow for the conditioning of I - P.
            EXPECT_NEAR(mu.probs[static_cast<std::size_t>(k)], expected(k), 1e-10) << "trial " << t;
        }
    }
}
