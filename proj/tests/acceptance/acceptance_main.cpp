// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. Thresholds are fixed here; configurations (seeds, grids) are the
// documented defaults of the shipped experiments.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "msar/asymptotics.hpp"
#include "msar/estimate.hpp"
#include "msar/filter.hpp"
#include "msar/simulate.hpp"
#include "msar/stability.hpp"
#include "../test_util.hpp"

using namespace msar;

namespace {

struct Outcome {
    bool pass;
    std::string detail;
};

int g_failures = 0;

void report(int id, const std::string& name, const std::function<Outcome()>& body) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome out;
    try {
        out = body();
    } catch (const std::exception& e) {
        out = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%s criterion %2d: %-24s  %s  [%.1fs]\n", out.pass ? "PASS" : "FAIL", id,
                name.c_str(), out.detail.c_str(), secs);
    std::fflush(stdout);
    if (!out.pass) ++g_failures;
}

// --- 1. Filter-oracle equivalence -----------------------------------------

Outcome filter_oracle_equivalence() {
    Rng rng(101);
    double worst = 0.0;
    for (int t = 0; t < 200; ++t) {
        const int m = t % 2 == 0 ? 2 : 3;
        const int n = 2 + t % 7;
        const auto spec = testutil::random_model(rng, m);
        const auto path = simulate_path(spec, n, rng.normal(0, 1), rng.next_u64());
        const double lf = log_likelihood(spec, path.y);
        const double lb = brute_force_loglik(spec, path.y);
        worst = std::max(worst, std::abs(lf - lb) / std::abs(lb));
    }
    char buf[128];
    std::snprintf(buf, sizeof(buf), "max rel diff %.2e (limit 1e-10) over 200 instances", worst);
    return {worst < 1e-10, buf};
}

// --- 2. Forgetting bound ---------------------------------------------------

Outcome forgetting_bound() {
    Rng rng(202);
    int bound_violations = 0;
    double worst_slope_excess = -1e300;
    int slopes_fitted = 0;
    const std::vector<int> lags{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    for (int t = 0; t < 100; ++t) {
        Eigen::MatrixXd a(2, 2);
        const double p = 0.06 + 0.29 * rng.uniform();
        const double q = 0.06 + 0.29 * rng.uniform();
        a << 1 - p, p, q, 1 - q;
        const double delta = TransitionMatrix(a).delta();
        Eigen::VectorXd b(2), rho(2);
        // Moderate regime separation keeps the windowed gaps above the
        // numeric floor for several lags, so the decay slope is fittable.
        b << -0.5 - rng.uniform(), 0.5 + rng.uniform();
        rho << 0.1 + 0.5 * rng.uniform(), 0.1 + 0.5 * rng.uniform();
        const auto spec = make_linear_model(a, b, rho, 1.0);
        const auto path = simulate_path_stationary(spec, 200, rng.next_u64());
        const auto records = forgetting_sweep(spec, path.y, lags);

        std::vector<double> max_gap(lags.size(), 0.0);
        for (const auto& rec : records) {
            if (rec.gap > rec.bound) ++bound_violations;
            max_gap[rec.k - 1 - rec.l - 1] = std::max(max_gap[rec.k - 1 - rec.l - 1], rec.gap);
        }
        // Least-squares slope of log max-gap against the window lag.
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        int count = 0;
        for (std::size_t g = 0; g < lags.size(); ++g) {
            if (max_gap[g] < 1e-13) continue;
            const double x = lags[g], yv = std::log(max_gap[g]);
            sx += x; sy += yv; sxx += x * x; sxy += x * yv;
            ++count;
        }
        if (count >= 4) {
            const double slope = (count * sxy - sx * sy) / (count * sxx - sx * sx);
            worst_slope_excess = std::max(worst_slope_excess, slope - std::log(1.0 - delta));
            ++slopes_fitted;
        }
    }
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "violations %d/19100, worst slope excess %.3f (limit 0.1), %d slopes fitted",
                  bound_violations, worst_slope_excess, slopes_fitted);
    return {bound_violations == 0 && worst_slope_excess <= 0.1 && slopes_fitted >= 90, buf};
}

// --- 3. Stability checker --------------------------------------------------

Outcome stability_checker() {
    Rng rng(303);
    double worst = 0.0;
    for (int t = 0; t < 1000; ++t) {
        Eigen::MatrixXd a(2, 2);
        const double p = 0.05 + 0.9 * rng.uniform();
        const double q = 0.05 + 0.9 * rng.uniform();
        a << p, 1 - p, 1 - q, q;
        Eigen::VectorXd rho(2);
        rho << 0.1 + 1.5 * rng.uniform(), 0.1 + 1.5 * rng.uniform();
        const double s = 1.0 + (t % 3);
        Eigen::MatrixXd qs(2, 2);
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) qs(i, j) = std::pow(rho[j], s) * a(i, j);
        const double power = spectral_radius_qs(TransitionMatrix(a), rho, s);
        worst = std::max(worst, std::abs(power - testutil::perron_root_2x2(qs)));
    }

    const auto rep = check_stability(testutil::stability_reference(), 1.0);
    const double gamma_expected = (2.0 / 3.0) * std::log(0.5) + (1.0 / 3.0) * std::log(1.2);
    Eigen::MatrixXd q1(2, 2);
    q1 << 0.45, 0.12, 0.10, 0.96;
    const double radius_expected = testutil::perron_root_2x2(q1);
    const bool reference_ok = std::abs(rep.gamma - gamma_expected) < 1e-12 &&
                              std::abs(rep.spectral_radius - radius_expected) < 1e-9 &&
                              rep.stable;
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "max |power-closed| %.2e (limit 1e-9); gamma %.4f radius %.5f", worst,
                  rep.gamma, rep.spectral_radius);
    return {worst < 1e-9 && reference_ok, buf};
}

// --- 4. Degenerate-model equivalence ---------------------------------------

Outcome degenerate_model_equivalence() {
    Rng rng(404);
    double worst = 0.0;
    for (int t = 0; t < 50; ++t) {
        const double rho = -0.9 + 1.8 * rng.uniform();
        const double b = -1.0 + 2.0 * rng.uniform();
        const double sigma = 0.5 + 1.5 * rng.uniform();
        const auto spec = testutil::ar1_model(rho, b, sigma);
        const auto path = simulate_path(spec, 200, rng.normal(0, 1), rng.next_u64());
        const double lf = log_likelihood(spec, path.y);
        const double lc = testutil::ar1_loglik(path.y, rho, b, sigma);
        worst = std::max(worst, std::abs(lf - lc) / std::abs(lc));
    }
    char buf[128];
    std::snprintf(buf, sizeof(buf), "max rel diff %.2e (limit 1e-12) over 50 datasets", worst);
    return {worst < 1e-12, buf};
}

// --- 5. Consistency ----------------------------------------------------------

Outcome consistency() {
    ExperimentConfig config;
    config.kind = ExperimentKind::Consistency;
    config.model = testutil::estimation_reference();
    config.sample_sizes = {500, 2000, 8000};
    config.replicates = 50;
    config.seed = 20240501;
    const auto rep = run_consistency(config);

    bool ratios_ok = true;
    double lo = 1e300, hi = -1e300;
    for (Eigen::Index c = 0; c < rep.error_ratio_last.size(); ++c) {
        const double r = rep.error_ratio_last[c];
        lo = std::min(lo, r);
        hi = std::max(hi, r);
        if (!(r >= 0.3 && r <= 0.9)) ratios_ok = false;
    }
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "decreasing=%d, ratio range [%.2f, %.2f] (limits [0.3, 0.9]), failed %d",
                  static_cast<int>(rep.errors_decreasing), lo, hi, rep.failed);
    return {rep.errors_decreasing && ratios_ok && rep.ok, buf};
}

// --- 6. Normality ------------------------------------------------------------

Outcome normality() {
    ExperimentConfig ar1;
    ar1.kind = ExperimentKind::Normality;
    ar1.model = testutil::ar1_model(0.5, 1.0, 1.0);
    ar1.sample_sizes = {2000};
    ar1.replicates = 500;
    ar1.seed = 20240601;
    const auto rep1 = run_normality(ar1);
    const double ks1 = rep1.ks_distance.maxCoeff();

    ExperimentConfig two;
    two.kind = ExperimentKind::Normality;
    two.model = testutil::estimation_reference();
    two.sample_sizes = {4000};
    two.replicates = 300;
    two.seed = 20240602;
    const auto rep2 = run_normality(two);
    const double ks2 = rep2.ks_distance.maxCoeff();

    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "AR(1) max KS %.3f (limit 0.08, excl %d); 2-regime max KS %.3f (limit 0.12, excl %d)",
                  ks1, rep1.excluded_count, ks2, rep2.excluded_count);
    return {ks1 < 0.08 && ks2 < 0.12 && rep1.ok && rep2.ok, buf};
}

// --- 7. LRT calibration and power -------------------------------------------

Outcome lrt_calibration() {
    Eigen::MatrixXd a(2, 2);
    a << 0.9, 0.1, 0.2, 0.8;
    Eigen::VectorXd b(2);
    b << -1.0, 1.0;

    ExperimentConfig null_config;
    null_config.kind = ExperimentKind::LrtCalibration;
    null_config.model = make_linear_model(a, b, Eigen::VectorXd::Zero(2), 1.0);
    null_config.sample_sizes = {2000};
    null_config.replicates = 400;
    null_config.seed = 20240701;
    const auto null_rep = run_lrt_calibration(null_config);

    ExperimentConfig power_config = null_config;
    Eigen::VectorXd rho(2);
    rho << 0.0, 0.8;
    power_config.model = make_linear_model(a, b, rho, 1.0);
    power_config.seed = 20240702;
    const auto power_rep = run_lrt_calibration(power_config);

    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "null rejection %.3f (limits [0.02, 0.09]); power %.3f (limit > 0.95)",
                  null_rep.rate95, power_rep.rate95);
    return {null_rep.rate95 >= 0.02 && null_rep.rate95 <= 0.09 && power_rep.rate95 > 0.95 &&
                null_rep.ok && power_rep.ok,
            buf};
}

// --- 8. Likelihood convergence ----------------------------------------------

Outcome loglik_convergence() {
    // Log-spaced grid over [1e3, 1e5]; its last half spans [1e4, 1e5].
    std::vector<int> grid;
    for (int i = 0; i <= 14; ++i) {
        const int n = static_cast<int>(std::llround(1000.0 * std::pow(100.0, i / 14.0)));
        if (grid.empty() || n > grid.back()) grid.push_back(n);
    }
    ExperimentConfig config;
    config.kind = ExperimentKind::LoglikConvergence;
    config.model = testutil::estimation_reference();
    config.sample_sizes = grid;
    config.seed = 20240801;
    const auto rep1 = run_loglik_convergence(config);

    config.seed = 20240802;
    const auto rep2 = run_loglik_convergence(config);
    const double seed_gap = std::abs(rep1.tail_value - rep2.tail_value);

    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "tail oscillation %.4f (limit 0.02); |seed gap| %.4f (limit 0.05)",
                  rep1.tail_oscillation, seed_gap);
    return {rep1.tail_oscillation < 0.02 && seed_gap < 0.05, buf};
}

// --- 9. Mixing separation -----------------------------------------------------

Outcome mixing_separation() {
    ExperimentConfig stable;
    stable.kind = ExperimentKind::MixingProbe;
    Eigen::MatrixXd a(2, 2);
    a << 0.7, 0.3, 0.3, 0.7;
    Eigen::VectorXd b(2), rho(2);
    b << -0.5, 0.5;
    rho << 0.1, 0.4;
    stable.model = make_linear_model(a, b, rho, 1.0);
    stable.sample_sizes = {100000};
    stable.lag = 10;
    stable.seed = 20240901;
    const auto stable_rep = run_mixing_probe(stable);

    ExperimentConfig andrews;
    andrews.kind = ExperimentKind::MixingProbe;
    andrews.andrews = true;
    andrews.andrews_rho = 0.5;
    andrews.andrews_q = 0.5;
    andrews.model = testutil::ar1_model(0.0, 0.0, 1.0);  // unused
    andrews.sample_sizes = {100000};
    andrews.lag = 10;
    andrews.seed = 20240902;
    for (int d = 1; d <= 9; ++d) andrews.thresholds.push_back(0.2 * d);
    andrews.thresholds.push_back(1.0);  // the dyadic cut
    const auto andrews_rep = run_mixing_probe(andrews);

    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "stable probe %.4f (limit < 0.02); Andrews probe %.4f (limit > 0.05)",
                  stable_rep.probe, andrews_rep.probe);
    return {stable_rep.probe < 0.02 && andrews_rep.probe > 0.05, buf};
}

// --- 10. EM ascent and agreement ----------------------------------------------

Outcome em_ascent_agreement() {
    const auto truth = testutil::estimation_reference();
    double worst_decrease = 0.0;
    double worst_gap = 0.0;
    for (int t = 0; t < 20; ++t) {
        const std::uint64_t seed = Rng::stream(20241001, t).next_u64();
        const auto path = simulate_path_stationary(truth, 1500, seed);
        EmOptions em_opt;
        em_opt.compute_information = false;
        em_opt.tol = 1e-11;
        em_opt.max_iter = 4000;
        const auto em = em_fit(path.y, truth, em_opt);
        for (std::size_t i = 1; i < em.trace.loglik_trace.size(); ++i)
            worst_decrease = std::max(
                worst_decrease, em.trace.loglik_trace[i - 1] - em.trace.loglik_trace[i]);

        FitOptions nm_opt;
        nm_opt.init = truth;
        nm_opt.compute_information = false;
        nm_opt.restarts = 3;
        const auto nm = fit_mle(path.y, 2, nm_opt);
        worst_gap = std::max(worst_gap, std::abs(em.loglik_at_max - nm.loglik_at_max));
    }
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "worst EM decrease %.2e (limit 1e-10); worst |EM-NM| %.2e nats (limit 1e-4)",
                  worst_decrease, worst_gap);
    return {worst_decrease <= 1e-10 && worst_gap <= 1e-4, buf};
}

}  // namespace

int main() {
    std::printf("msar acceptance suite\n");
    report(1, "filter-oracle", filter_oracle_equivalence);
    report(2, "forgetting-bound", forgetting_bound);
    report(3, "stability-checker", stability_checker);
    report(4, "degenerate-ar1", degenerate_model_equivalence);
    report(5, "consistency", consistency);
    report(6, "normality", normality);
    report(7, "lrt-calibration", lrt_calibration);
    report(8, "loglik-convergence", loglik_convergence);
    report(9, "mixing-separation", mixing_separation);
    report(10, "em-ascent-agreement", em_ascent_agreement);
    if (g_failures) std::printf("%d criterion(s) FAILED\n", g_failures);
    else std::printf("all criteria passed\n");
    return g_failures;
}
