#include <gtest/gtest.h>

#include <cmath>

#include "msar/filter.hpp"
#include "msar/model.hpp"
#include "msar/simulate.hpp"
#include "test_util.hpp"

using namespace msar;
using testutil::ar1_loglik;

TEST(ValidateModel, CleanReferenceModel) {
    const auto report = validate_model(testutil::stability_reference());
    EXPECT_TRUE(report.clean()) << report.joined();
}

TEST(ValidateModel, BadRowSumReported) {
    Eigen::MatrixXd a(2, 2);
    a << 0.9, 0.2, 0.2, 0.8;
    Eigen::VectorXd b = Eigen::VectorXd::Zero(2), rho = Eigen::VectorXd::Ones(2);
    const auto report = validate_model(make_linear_model(a, b, rho, 1.0));
    ASSERT_FALSE(report.clean());
    EXPECT_NE(report.joined().find("row 1 sums to 1.1"), std::string::npos) << report.joined();
}

TEST(ValidateModel, NonpositiveSigmaReported) {
    auto spec = testutil::stability_reference();
    spec.noise = NoiseSpec::gaussian_shared(0.0);
    const auto report = validate_model(spec);
    ASSERT_FALSE(report.clean());
    EXPECT_NE(report.joined().find("noise scale must be positive"), std::string::npos);
}

TEST(ValidateModel, DimensionMismatchesReported) {
    Eigen::MatrixXd a(2, 2);
    a << 0.9, 0.1, 0.2, 0.8;
    ModelSpec spec{TransitionMatrix(a),
                   RegimeParams::linear(Eigen::VectorXd::Zero(3), Eigen::VectorXd::Ones(3)),
                   NoiseSpec::gaussian_shared(1.0), std::nullopt, MeanFamily{}};
    EXPECT_FALSE(validate_model(spec).clean());

    auto bad_init = testutil::stability_reference();
    bad_init.initial = Eigen::VectorXd::Constant(2, 0.7);
    EXPECT_FALSE(validate_model(bad_init).clean());
}

TEST(RegimeMean, LinearExamples) {
    Eigen::MatrixXd a(2, 2);
    a << 0.9, 0.1, 0.2, 0.8;
    Eigen::VectorXd b(2), rho(2);
    b << 1.0, 0.0;
    rho << 0.5, 1.2;
    const auto spec = make_linear_model(a, b, rho, 1.0);
    EXPECT_DOUBLE_EQ(regime_mean(2.0, 0, spec), 2.0);
    EXPECT_DOUBLE_EQ(regime_mean(-1.0, 1, spec), -1.2);

    Eigen::VectorXd b2(2), rho2(2);
    b2 << 3.0, 3.0;
    rho2 << 0.7, -0.4;
    const auto intercept_only = make_linear_model(a, b2, rho2, 1.0);
    EXPECT_DOUBLE_EQ(regime_mean(0.0, 0, intercept_only), 3.0);
    EXPECT_DOUBLE_EQ(regime_mean(0.0, 1, intercept_only), 3.0);

    EXPECT_THROW(regime_mean(0.0, 2, spec), ArgumentError);
}

TEST(RegimeMean, AffineInPrevValue) {
    const auto spec = testutil::estimation_reference();
    Rng rng(11);
    for (int t = 0; t < 200; ++t) {
        const double y1 = rng.normal(0, 3), y2 = rng.normal(0, 3);
        const double alpha = rng.uniform();
        for (int i = 0; i < 2; ++i) {
            const double lhs = regime_mean(alpha * y1 + (1 - alpha) * y2, i, spec);
            const double rhs = alpha * regime_mean(y1, i, spec) +
                               (1 - alpha) * regime_mean(y2, i, spec);
            EXPECT_NEAR(lhs, rhs, 1e-12 * std::max(1.0, std::abs(rhs)));
        }
    }
}

TEST(RegimeMean, SublinearityEnvelope) {
    const auto spec = testutil::estimation_reference();
    Rng rng(12);
    for (int t = 0; t < 500; ++t) {
        const double y = rng.normal(0, 5);
        for (int i = 0; i < 2; ++i) {
            const double env = std::abs(spec.regimes.slope(i)) * std::abs(y) +
                               std::abs(spec.regimes.intercept(i));
            EXPECT_LE(std::abs(regime_mean(y, i, spec)), env + 1e-12);
        }
    }
}

TEST(EmissionLogdensity, StandardNormalValues) {
    const auto spec = testutil::ar1_model(0.5, 1.0, 1.0);
    const double at_mean = emission_logdensity(regime_mean(2.0, 0, spec), 2.0, 0, spec);
    EXPECT_NEAR(at_mean, -0.91893853320467274, 1e-14);
    const double at_one_sigma = emission_logdensity(regime_mean(2.0, 0, spec) + 1.0, 2.0, 0, spec);
    EXPECT_NEAR(at_one_sigma, -0.91893853320467274 - 0.5, 1e-14);
}

TEST(EmissionLogdensity, SumMatchesAr1ClosedForm) {
    const auto spec = testutil::ar1_model(0.6, -0.3, 0.8);
    const auto path = simulate_path(spec, 50, 0.7, 77);
    double total = 0.0;
    for (std::size_t k = 1; k < path.y.size(); ++k)
        total += emission_logdensity(path.y[k], path.y[k - 1], 0, spec);
    EXPECT_NEAR(total, ar1_loglik(path.y, 0.6, -0.3, 0.8), 1e-10);
}

TEST(EmissionLogdensity, IntegratesToOne) {
    const auto spec = testutil::estimation_reference();
    // Simpson's rule over mean +- 12 sigma.
    for (const double y_prev : {-3.0, 0.0, 2.5}) {
        for (int regime = 0; regime < 2; ++regime) {
            const double mu = regime_mean(y_prev, regime, spec);
            const double lo = mu - 12.0, hi = mu + 12.0;
            const int steps = 4000;  // even
            const double h = (hi - lo) / steps;
            double sum = 0.0;
            for (int i = 0; i <= steps; ++i) {
                const double w = (i == 0 || i == steps) ? 1.0 : (i % 2 ? 4.0 : 2.0);
                sum += w * std::exp(emission_logdensity(lo + i * h, y_prev, regime, spec));
            }
            EXPECT_NEAR(sum * h / 3.0, 1.0, 1e-6);
        }
    }
}

TEST(CustomFamily, UsableInSimulationAndFiltering) {
    Eigen::MatrixXd a(2, 2);
    a << 0.9, 0.1, 0.2, 0.8;
    Eigen::MatrixXd theta(2, 2);
    theta << -0.5, 0.8, 0.5, 0.8;  // columns: level, gain
    MeanFamily family;
    family.name = "tanh";
    family.fn = [](double y_prev, const Eigen::VectorXd& t) {
        return t[0] + t[1] * std::tanh(y_prev);
    };
    family.envelope_rho = Eigen::VectorXd::Constant(2, 0.8);
    family.envelope_b = Eigen::VectorXd::Constant(2, 0.5);
    ModelSpec spec{TransitionMatrix(a), RegimeParams(theta), NoiseSpec::gaussian_shared(1.0),
                   std::nullopt, family};
    ASSERT_TRUE(validate_model(spec).clean());

    const auto path = simulate_path(spec, 100, 0.0, 5);
    EXPECT_EQ(path.y.size(), 101u);
    EXPECT_TRUE(std::isfinite(log_likelihood(spec, path.y)));
}

TEST(ModelTypes, TransitionMatrixCachesDelta) {
    Eigen::MatrixXd a(2, 2);
    a << 0.9, 0.1, 0.2, 0.8;
    EXPECT_DOUBLE_EQ(TransitionMatrix(a).delta(), 0.1);
    EXPECT_THROW(TransitionMatrix(Eigen::MatrixXd::Zero(2, 3)), ArgumentError);
}
