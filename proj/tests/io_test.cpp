#include <gtest/gtest.h>

#include <sstream>

#include "msar/io.hpp"
#include "test_util.hpp"

using namespace msar;

TEST(ModelJson, RoundTripIsExact) {
    auto spec = testutil::estimation_reference();
    spec.initial = Eigen::VectorXd::Constant(2, 0.5);
    const auto back = model_from_json(model_to_json(spec));
    for (int i = 0; i < 2; ++i) {
        EXPECT_EQ(back.regimes.intercept(i), spec.regimes.intercept(i));
        EXPECT_EQ(back.regimes.slope(i), spec.regimes.slope(i));
        for (int j = 0; j < 2; ++j) EXPECT_EQ(back.transition(i, j), spec.transition(i, j));
    }
    EXPECT_EQ(back.noise.sigma[0], spec.noise.sigma[0]);
    ASSERT_TRUE(back.initial.has_value());
    EXPECT_EQ((*back.initial)[0], 0.5);

    // Non-representable decimals survive the JSON round trip bit-exactly.
    auto odd = testutil::ar1_model(1.0 / 3.0, 0.1, 0.7);
    const auto odd_back = model_from_json(model_to_json(odd));
    EXPECT_EQ(odd_back.regimes.slope(0), 1.0 / 3.0);
}

TEST(ModelJson, PerRegimeSigmaAndErrors) {
    auto spec = testutil::estimation_reference();
    Eigen::VectorXd s(2);
    s << 0.7, 1.3;
    spec.noise = NoiseSpec::gaussian_per_regime(s);
    const auto back = model_from_json(model_to_json(spec));
    EXPECT_FALSE(back.noise.shared_sigma());
    EXPECT_EQ(back.noise.sigma_for(1), 1.3);

    EXPECT_THROW(model_from_json(json::parse(R"({"m": 2})")), ArgumentError);
    EXPECT_THROW(model_from_json(json::parse(
                     R"({"m":2,"transition":[[1.0]],"regimes":[],"sigma":1.0})")),
                 ArgumentError);
}

TEST(PathCsv, RoundTripIsLossless) {
    const auto spec = testutil::estimation_reference();
    const auto path = simulate_path_stationary(spec, 30, 91);
    std::stringstream ss;
    write_path_csv(path, ss);
    const Path back = read_path_csv(ss);
    ASSERT_EQ(back.y.size(), path.y.size());
    for (std::size_t k = 0; k < path.y.size(); ++k) EXPECT_EQ(back.y[k], path.y[k]);
    ASSERT_EQ(back.x, path.x);
}

TEST(PathCsv, WithheldRegimesGiveEmptyColumn) {
    const auto spec = testutil::estimation_reference();
    const auto path = simulate_path_stationary(spec, 10, 92);
    std::stringstream ss;
    write_path_csv(path, ss, /*with_regimes=*/false);
    const Path back = read_path_csv(ss);
    EXPECT_TRUE(back.x.empty());
    ASSERT_EQ(back.y.size(), path.y.size());
    for (std::size_t k = 0; k < path.y.size(); ++k) EXPECT_EQ(back.y[k], path.y[k]);
}

TEST(ExperimentConfigJson, RoundTripPreservesFields) {
    ExperimentConfig config;
    config.kind = ExperimentKind::LrtCalibration;
    config.model = testutil::estimation_reference();
    config.sample_sizes = {500, 1000};
    config.replicates = 7;
    config.seed = 99;
    config.method = "simplex";
    config.init = "multistart";
    config.starts = 4;
    const auto back = experiment_config_from_json(experiment_config_to_json(config));
    EXPECT_EQ(back.kind, config.kind);
    EXPECT_EQ(back.sample_sizes, config.sample_sizes);
    EXPECT_EQ(back.replicates, 7);
    EXPECT_EQ(back.seed, 99u);
    EXPECT_EQ(back.method, "simplex");
    EXPECT_EQ(back.init, "multistart");
    EXPECT_EQ(back.starts, 4);
    EXPECT_EQ(back.model.regimes.slope(1), 0.9);
}

TEST(FormatDouble, SeventeenDigitsRoundTrip) {
    for (const double v : {1.0 / 3.0, 8.3220676536431313, -1e-17, 0.1}) {
        EXPECT_EQ(std::stod(format_double(v)), v);
    }
}
