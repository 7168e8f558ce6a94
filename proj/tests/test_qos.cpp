#include <cmath>
#include <limits>

#include <gtest/gtest.h>

#include "appendix_oracle.hpp"
#include "criot/analysis.hpp"
#include "criot/errors.hpp"
#include "criot/qos.hpp"
#include "generators.hpp"

using namespace criot;

namespace {

double poisson(double mean, int k) {
    if (k < 0) return 0.0;
    if (mean == 0.0) return k == 0 ? 1.0 : 0.0;
    return std::exp(-mean) * std::pow(mean, k) / std::tgamma(k + 1.0);
}

}  // namespace

TEST(QosOracle, MetricsFromLiteralChain) {
    // Drop and interference probabilities re-derived by hand from a
    // stationary law obtained on the literal matrix by least squares.
    gen::Source src(31);
    for (int t = 0; t < 100; ++t) {
        auto p = gen::interior_system(src);
        p.traffic.capacity = 2 + t % 2;
        const int K = p.traffic.capacity;
        const oracle::Literal lit(p);
        const Eigen::VectorXd v = oracle::stationary_least_squares(lit.matrix());
        const StateSpace space(K);
        auto at = [&](int i, Phase ph, Action a) { return v(static_cast<Eigen::Index>(space.index({i, ph, a}))); };

        double serving = 0.0, interfering = at(0, Phase::On, Action::Charge);
        for (int i = 1; i <= K; ++i) {
            serving += at(i, Phase::Off, Action::Serve);
            interfering += at(i, Phase::On, Action::Serve) + at(i, Phase::On, Action::Charge);
        }
        const double p_b = 1.0 - lit.f_off * serving / lit.mean;
        const auto r = analyze(p).report;
        SCOPED_TRACE(testing::Message() << "trial " << t);
        EXPECT_NEAR(r.drop_prob, p_b, 1e-10);
        EXPECT_NEAR(r.interference_prob, interfering, 1e-12);
        EXPECT_NEAR(r.carried_load, lit.f_off * serving, 1e-12);
    }
}

TEST(Qos, ReferenceOperatingPoint) {
    const auto r = analyze(reference_params(), Constraints{}).report;
    EXPECT_DOUBLE_EQ(r.beta, 0.5);
    EXPECT_DOUBLE_EQ(r.offered_load, 0.02);
    EXPECT_GT(r.drop_prob, 0.0);
    EXPECT_LT(r.drop_prob, 1e-4);
    EXPECT_GT(r.interference_prob, 0.0);
    EXPECT_LT(r.interference_prob, 0.1);
    EXPECT_TRUE(*r.feasible);
    EXPECT_LE(r.residual, 1e-10);
}

TEST(Qos, PaperWaitIsInverseAdmittedRate) {
    gen::Source src(32);
    for (int t = 0; t < 200; ++t) {
        const auto p = gen::interior_system(src);
        const auto r = analyze(p).report;
        const double admitted = p.traffic.aggregate_rate() * (1.0 - r.drop_prob);
        EXPECT_NEAR(r.wait_paper * admitted, 1.0, 1e-12) << "trial " << t;
    }
}

TEST(Qos, SlotAverageWaitIsLittlesLaw) {
    const auto p = reference_params();
    const auto a = analyze(p);
    const auto marginal = queue_marginal(a.stationary, a.matrix.space());
    double total = 0.0, mean = 0.0;
    for (std::size_t i = 0; i < marginal.size(); ++i) {
        total += marginal[i];
        mean += static_cast<double>(i) * marginal[i];
    }
    EXPECT_NEAR(total, 1.0, 1e-12);
    EXPECT_NEAR(mean_queue_length(a.stationary, a.matrix.space()), mean, 1e-15);
    EXPECT_NEAR(a.report.wait_slot_avg, mean / (p.traffic.aggregate_rate() * (1.0 - a.report.drop_prob)), 1e-12);
}

TEST(Departures, LemmaAndNormalization) {
    gen::Source src(33);
    for (int t = 0; t < 200; ++t) {
        const auto p = gen::interior_system(src);
        const auto a = analyze(p);
        for (auto variant : {DepartureVariant::PaperLiteral, DepartureVariant::ArrivalWeighted}) {
            const auto dd = departure_distributions(a.stationary, a.matrix.space(), a.kernel, p.traffic,
                                                    a.report.drop_prob, variant);
            const auto K = static_cast<std::size_t>(p.traffic.capacity);
            ASSERT_EQ(dd.kappa.size(), K);
            ASSERT_EQ(dd.epsilon.size(), K + 1);
            double sd = 0.0, se = 0.0;
            for (std::size_t i = 0; i < K; ++i) {
                sd += dd.delta[i];
                EXPECT_EQ(dd.gamma[i], dd.delta[i]);
                EXPECT_NEAR(dd.epsilon[i], (1.0 - a.report.drop_prob) * dd.gamma[i], 1e-15);
            }
            for (double e : dd.epsilon) se += e;
            EXPECT_NEAR(sd, 1.0, 1e-12);
            EXPECT_NEAR(se, 1.0, 1e-12);
            EXPECT_EQ(dd.epsilon[K], a.report.drop_prob);
        }
    }
}

TEST(Departures, ArrivalWeightedMassIsCarriedLoad) {
    gen::Source src(34);
    for (int t = 0; t < 200; ++t) {
        const auto p = gen::interior_system(src);
        const auto a = analyze(p);
        const auto dd = departure_distributions(a.stationary, a.matrix.space(), a.kernel, p.traffic,
                                                a.report.drop_prob, DepartureVariant::ArrivalWeighted);
        double total = 0.0;
        for (double k : dd.kappa) total += k;
        EXPECT_NEAR(total, a.report.carried_load, 1e-12);

        // Brute force: clear one packet out of min(j + k, K) for every j, k.
        const int K = p.traffic.capacity;
        const double mean = p.traffic.arrivals_per_slot();
        std::vector<double> brute(static_cast<std::size_t>(K), 0.0);
        for (int j = 1; j <= K; ++j) {
            const double m = a.stationary[a.matrix.space().index({j, Phase::Off, Action::Serve})];
            for (int k = 0; k < 200; ++k) {
                brute[static_cast<std::size_t>(std::min(j + k, K) - 1)] += a.kernel.off_persist * m * poisson(mean, k);
            }
        }
        for (int i = 0; i < K; ++i) {
            EXPECT_NEAR(dd.kappa[static_cast<std::size_t>(i)], brute[static_cast<std::size_t>(i)], 1e-12);
        }
    }
}

TEST(Departures, LiteralKappaIsCumulative) {
    const auto p = reference_params();
    const auto a = analyze(p);
    const auto dd = departure_distributions(a.stationary, a.matrix.space(), a.kernel, p.traffic,
                                            a.report.drop_prob, DepartureVariant::PaperLiteral);
    for (std::size_t i = 1; i < dd.kappa.size(); ++i) EXPECT_GE(dd.kappa[i], dd.kappa[i - 1]);
    EXPECT_NEAR(dd.kappa.back(), a.report.carried_load, 1e-15);
}

TEST(Departures, SingleSlotBuffer) {
    auto p = reference_params();
    p.traffic.capacity = 1;
    const auto a = analyze(p);
    for (auto variant : {DepartureVariant::PaperLiteral, DepartureVariant::ArrivalWeighted}) {
        const auto dd = departure_distributions(a.stationary, a.matrix.space(), a.kernel, p.traffic,
                                                a.report.drop_prob, variant);
        ASSERT_EQ(dd.kappa.size(), 1u);
        EXPECT_NEAR(dd.kappa[0], a.report.carried_load, 1e-15);
        EXPECT_EQ(dd.delta[0], 1.0);
    }
}

TEST(QosDegenerate, NoService) {
    auto p = reference_params();
    p.policy.theta_idle = 1.0;
    const auto a = analyze(p);
    EXPECT_EQ(a.report.carried_load, 0.0);
    EXPECT_EQ(a.report.drop_prob, 1.0);
    EXPECT_EQ(a.report.interference_prob, 0.0);
    EXPECT_TRUE(std::isnan(a.report.wait_paper));
    EXPECT_TRUE(std::isnan(a.report.wait_slot_avg));
    EXPECT_TRUE(std::isinf(a.report.power.total));
    EXPECT_FALSE(a.report.power.feasible);
    EXPECT_THROW(departure_distributions(a.stationary, a.matrix.space(), a.kernel, p.traffic, 1.0,
                                         DepartureVariant::PaperLiteral),
                 DegenerateDistribution);
    EXPECT_THROW(waiting_time({}, a.stationary, a.matrix.space(), 1.0, p.traffic, WaitEstimator::SlotAverage),
                 UndefinedWait);
}

TEST(QosDegenerate, NoTraffic) {
    auto p = reference_params();
    p.traffic.lambda = 0.0;
    const auto a = analyze(p);
    EXPECT_NEAR(a.report.carried_load, 0.0, 1e-15);
    EXPECT_EQ(a.report.drop_prob, 0.0);
    EXPECT_TRUE(std::isnan(a.report.wait_slot_avg));
    EXPECT_THROW(packet_drop_probability(0.0, p.traffic), UndefinedLoad);
    EXPECT_THROW(packet_drop_probability(-0.1, reference_params().traffic), InvalidParameter);
}

TEST(QosDegenerate, AlwaysFalseAlarm) {
    auto p = reference_params();
    p.sensing.p_false_alarm = 1.0;
    EXPECT_NEAR(analyze(p).report.drop_prob, 1.0, 1e-12);
}

TEST(QosDegenerate, PerfectDetectionNeverInterferes) {
    gen::Source src(35);
    for (int t = 0; t < 100; ++t) {
        auto p = gen::interior_system(src);
        p.sensing.p_detect = 1.0;
        EXPECT_EQ(analyze(p).report.interference_prob, 0.0);
    }
}

TEST(QosProperty, DropProbabilityIgnoresDetection) {
    // A slot that starts ON clears nothing whatever the action, so P_D only
    // moves interference.
    gen::Source src(36);
    for (int t = 0; t < 100; ++t) {
        auto p = gen::interior_system(src);
        p.sensing.p_false_alarm = 0.0;
        p.sensing.p_detect = 1.0;
        const auto ideal = analyze(p).report;
        p.sensing.p_detect = src.uniform(0.0, 1.0);
        const auto noisy = analyze(p).report;
        EXPECT_NEAR(ideal.carried_load, noisy.carried_load, 1e-12);
        EXPECT_LE(ideal.interference_prob, noisy.interference_prob);
    }
}

TEST(QosProperty, MonotoneInLoad) {
    auto p = reference_params();
    QosReport prev;
    bool first = true;
    for (double lambda : {0.0005, 0.001, 0.002, 0.003, 0.004, 0.006, 0.01}) {
        p.traffic.lambda = lambda;
        const auto r = analyze(p).report;
        if (!first) {
            EXPECT_GE(r.drop_prob, prev.drop_prob);
            EXPECT_GE(r.interference_prob, prev.interference_prob);
            EXPECT_GE(r.wait_slot_avg, prev.wait_slot_avg);
            EXPECT_LE(r.wait_paper, prev.wait_paper);
        }
        prev = r;
        first = false;
    }
}

TEST(Clamp, ToleranceBand) {
    EXPECT_EQ(detail::clamp_probability(1.0 + 1e-12, "x"), 1.0);
    EXPECT_EQ(detail::clamp_probability(-1e-12, "x"), 0.0);
    EXPECT_EQ(detail::clamp_probability(0.25, "x"), 0.25);
    EXPECT_THROW(detail::clamp_probability(1.0 + 1e-6, "x"), MetricOutOfRange);
    EXPECT_THROW(detail::clamp_probability(-1e-6, "x"), MetricOutOfRange);
    EXPECT_THROW(detail::clamp_probability(std::nan(""), "x"), MetricOutOfRange);
}

TEST(Power, FloorDominatesAtLightLoad) {
    PowerModel pm;
    pm.radius_scale = 1.0;
    pm.node_radii.assign(20, 1.0);
    const auto b = required_power(pm, {20, 0.001, 10, 1.0}, {0.2, 0.5}, 0.5, 0.0);
    EXPECT_DOUBLE_EQ(b.per_node, 50e-6);
    EXPECT_NEAR(b.total, 1e-3, 1e-18);
    EXPECT_TRUE(b.feasible);
    EXPECT_EQ(b.clamped, b.total);
}

TEST(Power, DynamicTermAtHeavyLoad) {
    PowerModel pm;
    pm.node_radii.assign(4, 1.0);
    const auto b = required_power(pm, {4, 0.1, 10, 1.0}, {0.2, 0.5}, 0.5, 0.0);
    EXPECT_NEAR(b.per_node, 200e-6, 1e-18);
    EXPECT_NEAR(b.total, 800e-6, 1e-18);
}

TEST(Power, PathLossAndClamp) {
    PowerModel pm;
    pm.p_max = 1e-3;
    pm.radius_scale = 10.0;
    pm.node_radii = {10.0, 20.0};
    const auto b = required_power(pm, {2, 0.001, 10, 1.0}, {0.2, 0.5}, 0.5, 0.0);
    EXPECT_NEAR(b.total, 50e-6 * (1.0 + 4.0), 1e-18);
    EXPECT_TRUE(b.feasible);
    pm.node_radii = {100.0, 200.0};
    const auto far = required_power(pm, {2, 0.001, 10, 1.0}, {0.2, 0.5}, 0.5, 0.0);
    EXPECT_FALSE(far.feasible);
    EXPECT_EQ(far.clamped, pm.p_max);
}

TEST(Power, NoChargingNeedsInfinitePower) {
    PowerModel pm;
    pm.node_radii.assign(2, 1.0);
    for (PolicyModel pol : {PolicyModel{1.0, 0.5}, PolicyModel{0.2, 0.0}}) {
        const auto b = required_power(pm, {2, 0.001, 10, 1.0}, pol, 0.5, 0.0);
        EXPECT_TRUE(std::isinf(b.per_node));
        EXPECT_FALSE(b.feasible);
    }
    EXPECT_TRUE(std::isinf(required_power(pm, {2, 0.001, 10, 1.0}, {0.2, 0.5}, 1.0, 0.0).total));
    pm.node_radii.clear();
    EXPECT_THROW(required_power(pm, {2, 0.001, 10, 1.0}, {0.2, 0.5}, 0.5, 0.0), InvalidParameter);
}

TEST(PowerProperty, Monotone) {
    gen::Source src(37);
    PowerModel pm;
    pm.p_charge_min = 1e-12;  // keep the dynamic term in charge
    pm.node_radii.assign(5, 1.0);
    for (int t = 0; t < 1000; ++t) {
        const TrafficModel tr{5, src.log_uniform(1e-4, 1.0), 10, 1.0};
        const PolicyModel pol{src.uniform(0.0, 0.9), src.uniform(0.05, 1.0)};
        const double beta = src.uniform(0.0, 0.95), pb = src.uniform(0.0, 0.9);
        const double base = required_power(pm, tr, pol, beta, pb).total;
        const double f = src.uniform(1.0, 1.1);
        EXPECT_GE(required_power(pm, {5, tr.lambda * f, 10, 1.0}, pol, beta, pb).total, base);
        EXPECT_GE(required_power(pm, tr, pol, std::min(beta * f + 1e-3, 0.99), pb).total, base);
        EXPECT_GE(required_power(pm, tr, {std::min(pol.theta_idle * f + 1e-3, 0.99), pol.xi_charge}, beta, pb).total, base);
        EXPECT_LE(required_power(pm, tr, {pol.theta_idle, std::min(pol.xi_charge * f, 1.0)}, beta, pb).total, base);
        EXPECT_LE(required_power(pm, tr, pol, beta, std::min(pb * f + 1e-3, 1.0)).total, base);
    }
}

TEST(Constraints, Validation) {
    EXPECT_NO_THROW(validate(Constraints{0.0, 0.0}));
    EXPECT_THROW(validate(Constraints{-0.1, 0.1}), InvalidParameter);
    EXPECT_THROW(validate(Constraints{0.1, 1.5}), InvalidParameter);
    QosReport r;
    r.power.feasible = true;
    r.drop_prob = 0.1;
    r.interference_prob = 0.1;
    EXPECT_TRUE(meets(r, Constraints{}));
    r.interference_prob = 0.1000001;
    EXPECT_FALSE(meets(r, Constraints{}));
}
