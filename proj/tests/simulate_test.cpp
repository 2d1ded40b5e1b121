#include <gtest/gtest.h>

#include <cmath>

#include "msar/simulate.hpp"
#include "msar/stability.hpp"
#include "test_util.hpp"

using namespace msar;

TEST(SimulatePath, DegenerateNoiseReproducesIntercept) {
    const auto spec = testutil::ar1_model(0.0, 3.5, 1e-12);
    const auto path = simulate_path(spec, 50, 0.0, 9);
    for (std::size_t k = 1; k < path.y.size(); ++k) EXPECT_NEAR(path.y[k], 3.5, 1e-10);
}

TEST(SimulatePath, DeterministicGivenSeed) {
    const auto spec = testutil::estimation_reference();
    const auto a = simulate_path_stationary(spec, 500, 1234);
    const auto b = simulate_path_stationary(spec, 500, 1234);
    ASSERT_EQ(a.y.size(), b.y.size());
    for (std::size_t k = 0; k < a.y.size(); ++k) EXPECT_EQ(a.y[k], b.y[k]);
    EXPECT_EQ(a.x, b.x);

    const auto c = simulate_path_stationary(spec, 500, 1235);
    bool differs = false;
    for (std::size_t k = 0; k < a.y.size(); ++k)
        if (a.y[k] != c.y[k]) differs = true;
    EXPECT_TRUE(differs);
}

TEST(SimulatePath, Ar1StationaryMean) {
    const auto spec = testutil::ar1_model(0.5, 1.0, 1.0);
    const int n = 100000;
    const auto path = simulate_path_stationary(spec, n, 2024);
    double mean = 0.0;
    for (int k = 1; k <= n; ++k) mean += path.y[k];
    mean /= n;
    // Long-run se of the mean: sigma / (1 - rho) / sqrt(n).
    const double se = 1.0 / 0.5 / std::sqrt(static_cast<double>(n));
    EXPECT_NEAR(mean, 2.0, 3.0 * se);
}

TEST(SimulatePath, RegimesLieInRangeAndArgumentsChecked) {
    const auto spec = testutil::estimation_reference();
    const auto path = simulate_path(spec, 200, 0.0, 3);
    ASSERT_EQ(path.x.size(), 200u);
    for (int x : path.x) {
        EXPECT_GE(x, 0);
        EXPECT_LT(x, 2);
    }
    EXPECT_THROW(simulate_path(spec, 0, 0.0, 3), ArgumentError);
}

TEST(SimulatePath, OccupationFrequenciesMatchStationaryLaw) {
    const auto spec = testutil::estimation_reference();
    const int n = 100000;
    const auto path = simulate_path_stationary(spec, n, 99);
    const auto mu = stationary_distribution(spec.transition);
    Eigen::VectorXd freq = Eigen::VectorXd::Zero(2);
    for (int x : path.x) freq[x] += 1.0;
    freq /= n;
    const double tol = 5.0 / std::sqrt(static_cast<double>(n));
    EXPECT_NEAR(freq[0], mu[0], tol);
    EXPECT_NEAR(freq[1], mu[1], tol);
}

TEST(SimulatePath, EmpiricalMomentBoundedForStableSpec) {
    const auto spec = testutil::stability_reference();  // radius(Q_1) < 1
    const auto path = simulate_path_stationary(spec, 100000, 17);
    double lo = 1e300, hi = 0.0;
    double acc = 0.0;
    int count = 0;
    for (int k = 1; k <= 100000; ++k) {
        acc += std::abs(path.y[k]);
        ++count;
        if (count == 1000 || count == 10000 || count == 100000) {
            const double m1 = acc / count;
            lo = std::min(lo, m1);
            hi = std::max(hi, m1);
        }
    }
    EXPECT_LT(hi / lo, 1.5);  // no drift of the first absolute moment
}

TEST(SimulateAndrews, RecursionAndGeometricSumExamples) {
    // q = 1: innovations are all ones, y_n = 2 (1 - 2^{-n}).
    const auto ones = simulate_andrews(0.5, 1.0, 20, 4);
    for (int k = 1; k <= 20; ++k) {
        EXPECT_NEAR(ones.y[k], 2.0 * (1.0 - std::pow(2.0, -k)), 1e-15);
        EXPECT_LT(ones.y[k], 2.0);
    }
    // q = 0: no innovations.
    const auto zeros = simulate_andrews(0.5, 0.0, 20, 4);
    for (double v : zeros.y) EXPECT_EQ(v, 0.0);

    // Innovations recovered from the path drive the direct recursion:
    // with e = (1, 0, 1) the first values are 1, 0.5, 1.25.
    const auto path = simulate_andrews(0.5, 0.5, 200, 11);
    std::vector<double> e;
    for (int k = 1; k <= 200; ++k) {
        const double innov = path.y[k] - 0.5 * path.y[k - 1];
        EXPECT_TRUE(std::abs(innov) < 1e-12 || std::abs(innov - 1.0) < 1e-12);
        e.push_back(innov > 0.5 ? 1.0 : 0.0);
    }
    EXPECT_NEAR(path.y[3], e[2] + 0.5 * e[1] + 0.25 * e[0], 1e-15);
    const std::vector<double> manual{1, 0, 1};
    double y = 0.0;
    for (double innov : manual) y = 0.5 * y + innov;
    EXPECT_DOUBLE_EQ(y, 1.25);
}

TEST(SimulateAndrews, PathConfinedToDyadicInterval) {
    for (const double rho : {0.3, 0.5}) {
        const auto path = simulate_andrews(rho, 0.5, 5000, 21);
        const double bound = 1.0 / (1.0 - rho);
        for (double v : path.y) {
            EXPECT_GE(v, 0.0);
            EXPECT_LE(v, bound + 1e-12);
            EXPECT_LE(v, 2.0 + 1e-12);
        }
    }
}

TEST(SimulateAndrews, DomainErrors) {
    EXPECT_THROW(simulate_andrews(0.6, 0.5, 10, 1), DomainError);
    EXPECT_THROW(simulate_andrews(0.0, 0.5, 10, 1), DomainError);
    EXPECT_THROW(simulate_andrews(0.5, 1.5, 10, 1), DomainError);
}
