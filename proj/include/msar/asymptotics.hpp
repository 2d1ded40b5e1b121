#pragma once

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>

#include "msar/estimate.hpp"
#include "msar/filter.hpp"
#include "msar/simulate.hpp"
#include "msar/stats.hpp"

namespace msar {

enum class ExperimentKind { Consistency, Normality, LrtCalibration, LoglikConvergence, MixingProbe };

inline const char* to_string(ExperimentKind k) {
    switch (k) {
        case ExperimentKind::Consistency: return "consistency";
        case ExperimentKind::Normality: return "normality";
        case ExperimentKind::LrtCalibration: return "lrt-calibration";
        case ExperimentKind::LoglikConvergence: return "loglik-convergence";
        default: return "mixing-probe";
    }
}

/// Configuration of one Monte Carlo experiment. Reports are deterministic
/// functions of this struct: replicate r uses the RNG substream (seed, r).
struct ExperimentConfig {
    ExperimentKind kind = ExperimentKind::Consistency;
    ModelSpec model;                 // true model psi* (or mixing-probe source)
    std::vector<int> sample_sizes;   // n grid; the loglik-convergence evaluation grid
    int replicates = 2;
    std::uint64_t seed = 1;
    int threads = 1;
    int burn_in = 500;

    // Estimation settings used by consistency/normality/LRT replicates.
    std::string method = "em";       // "em" | "simplex"
    std::string init = "truth";      // "truth" | "multistart"
    int starts = 10;
    SigmaMode sigma_mode = SigmaMode::Shared;

    // Loglik-convergence: models to evaluate (psi* is always included first).
    std::vector<ModelSpec> extra_eval_models;

    // Mixing probe settings.
    int lag = 10;
    std::vector<double> thresholds;  // empty: deciles of the path plus 1.0
    bool andrews = false;
    double andrews_rho = 0.5;
    double andrews_q = 0.5;
};

inline void validate_config(const ExperimentConfig& config) {
    if (config.replicates < 2) throw ArgumentError("experiment: replicates must be >= 2");
    if (config.sample_sizes.empty()) throw ArgumentError("experiment: sample size grid empty");
    for (std::size_t i = 1; i < config.sample_sizes.size(); ++i)
        if (config.sample_sizes[i] <= config.sample_sizes[i - 1])
            throw ArgumentError("experiment: sample sizes must be strictly increasing");
    if (config.threads < 1) throw ArgumentError("experiment: threads must be >= 1");
}

struct ReplicateRecord {
    int n = 0;
    int replicate = 0;
    bool ok = true;
    bool excluded = false;
    std::string note;
    Eigen::VectorXd estimate;   // natural coordinates
    Eigen::VectorXd abs_error;  // natural coordinates
    Eigen::VectorXd z;          // standardized estimates, unconstrained coordinates
    double statistic = std::numeric_limits<double>::quiet_NaN();
    double value = std::numeric_limits<double>::quiet_NaN();
};

struct ExperimentReport {
    ExperimentKind kind = ExperimentKind::Consistency;
    std::vector<std::string> coord_names;    // natural coordinates
    std::vector<std::string> uncoord_names;  // unconstrained coordinates
    std::vector<ReplicateRecord> records;

    // Consistency summary.
    std::vector<int> ns;
    Eigen::MatrixXd median_abs_error;  // |ns| x p
    Eigen::VectorXd error_ratio_last;  // per coordinate, med(n_last)/med(n_prev)
    bool errors_decreasing = false;

    // Normality summary.
    Eigen::VectorXd ks_distance, skewness, kurtosis;

    // LRT summary.
    double rate90 = std::numeric_limits<double>::quiet_NaN();
    double rate95 = std::numeric_limits<double>::quiet_NaN();
    double rate99 = std::numeric_limits<double>::quiet_NaN();
    std::vector<double> qq_probs, qq_empirical, qq_theoretical;

    // Loglik-convergence summary.
    double tail_oscillation = std::numeric_limits<double>::quiet_NaN();
    double tail_value = std::numeric_limits<double>::quiet_NaN();

    // Mixing summary.
    double probe = std::numeric_limits<double>::quiet_NaN();

    int included = 0, excluded_count = 0, failed = 0;
    double failed_fraction = 0.0;
    bool ok = true;  // false when > 20% of fits failed
    double wall_seconds = 0.0;
    std::string version;
    std::uint64_t seed = 0;
};

namespace detail {

inline void run_replicates(int total, int threads, const std::function<void(int)>& body) {
    if (threads <= 1) {
        for (int r = 0; r < total; ++r) body(r);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    const int workers = std::min(threads, total);
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&]() {
            for (int r = next.fetch_add(1); r < total; r = next.fetch_add(1)) body(r);
        });
    }
    for (auto& t : pool) t.join();
}

/// One estimation run per the experiment's settings. Truth-initialized EM is
/// the default; the simplex route goes through fit_mle.
inline FitResult fit_replicate(const std::vector<double>& y, const ExperimentConfig& config,
                               SlopeMode slope_mode, bool want_information) {
    const int m = config.model.regime_count();
    if (config.method == "simplex") {
        FitOptions opt;
        opt.slope_mode = slope_mode;
        opt.sigma_mode = config.sigma_mode;
        opt.starts = config.starts;
        opt.seed = config.seed;
        opt.compute_information = want_information;
        if (config.init == "truth") opt.init = config.model;
        return fit_mle(y, m, opt);
    }
    EmOptions opt;
    opt.slope_mode = slope_mode;
    opt.sigma_mode = config.sigma_mode;
    opt.compute_information = want_information;
    if (config.init == "truth") return em_fit(y, config.model, opt);
    // Multistart EM: run from seeded starts, keep the best final likelihood.
    const ParamLayout layout{m, slope_mode, config.sigma_mode};
    const auto starts = default_starts(y, layout, config.starts, config.seed);
    FitResult best;
    bool have = false;
    for (const auto& s : starts) {
        EmOptions o = opt;
        o.compute_information = false;
        try {
            FitResult fit = em_fit(y, constrain(s, layout), o);
            if (!have || fit.loglik_at_max > best.loglik_at_max) {
                best = std::move(fit);
                have = true;
            }
        } catch (const Error&) {
            continue;  // a start degenerated; others may survive
        }
    }
    if (!have) throw OptimizationError("multistart EM: every start failed");
    if (want_information)
        attach_information(best, score_and_information(best.psi_hat, y, best.layout),
                           static_cast<int>(y.size()) - 1);
    return best;
}

inline void finalize_counts(ExperimentReport& rep) {
    for (const auto& r : rep.records) {
        if (!r.ok) ++rep.failed;
        else if (r.excluded) ++rep.excluded_count;
        else ++rep.included;
    }
    const std::size_t total = rep.records.size();
    rep.failed_fraction = total ? static_cast<double>(rep.failed) / total : 0.0;
    rep.ok = rep.failed_fraction <= 0.20;
}

inline std::string msar_version() {
#ifdef MSAR_VERSION
    return MSAR_VERSION;
#else
    return "dev";
#endif
}

}  // namespace detail

/// Simulate/fit/canonicalize over the sample-size grid; per replicate the
/// longest path is simulated once and fits run on its prefixes, so errors
/// across n share randomness (which stabilizes the decay diagnostics).
inline ExperimentReport run_consistency(const ExperimentConfig& config) {
    validate_config(config);
    require_valid(config.model);
    if (!check_stability(config.model, 1.0).stable)
        throw ArgumentError("run_consistency: true model fails the stability checklist");
    const auto t0 = std::chrono::steady_clock::now();

    const ParamLayout layout{config.model.regime_count(), SlopeMode::Free, config.sigma_mode};
    ExperimentReport rep;
    rep.kind = ExperimentKind::Consistency;
    rep.seed = config.seed;
    rep.version = detail::msar_version();
    rep.coord_names = layout.natural_names();
    rep.uncoord_names = layout.names();
    rep.ns = config.sample_sizes;

    const Eigen::VectorXd truth = natural_params(config.model, layout);
    const int p = static_cast<int>(truth.size());
    const int grid = static_cast<int>(config.sample_sizes.size());
    const int n_max = config.sample_sizes.back();

    rep.records.assign(static_cast<std::size_t>(grid) * config.replicates, ReplicateRecord{});
    detail::run_replicates(config.replicates, config.threads, [&](int r) {
        const std::uint64_t path_seed = Rng::stream(config.seed, r).next_u64();
        const Path full = simulate_path_stationary(config.model, n_max, path_seed, config.burn_in);
        for (int gi = 0; gi < grid; ++gi) {
            const int n = config.sample_sizes[gi];
            ReplicateRecord& rec = rep.records[static_cast<std::size_t>(gi) * config.replicates + r];
            rec.n = n;
            rec.replicate = r;
            std::vector<double> y(full.y.begin(), full.y.begin() + n + 1);
            try {
                const FitResult fit = detail::fit_replicate(y, config, SlopeMode::Free, false);
                rec.estimate = natural_params(fit.psi_hat, layout);
                rec.abs_error = (rec.estimate - truth).cwiseAbs();
            } catch (const Error& e) {
                rec.ok = false;
                rec.note = e.what();
            }
        }
    });

    rep.median_abs_error.resize(grid, p);
    for (int gi = 0; gi < grid; ++gi) {
        for (int c = 0; c < p; ++c) {
            std::vector<double> errs;
            for (int r = 0; r < config.replicates; ++r) {
                const auto& rec = rep.records[static_cast<std::size_t>(gi) * config.replicates + r];
                if (rec.ok) errs.push_back(rec.abs_error[c]);
            }
            rep.median_abs_error(gi, c) =
                errs.empty() ? std::numeric_limits<double>::quiet_NaN() : median(errs);
        }
    }
    rep.errors_decreasing = true;
    for (int gi = 1; gi < grid; ++gi)
        for (int c = 0; c < p; ++c)
            if (!(rep.median_abs_error(gi, c) < rep.median_abs_error(gi - 1, c)))
                rep.errors_decreasing = false;
    rep.error_ratio_last.resize(p);
    for (int c = 0; c < p; ++c)
        rep.error_ratio_last[c] =
            grid >= 2 ? rep.median_abs_error(grid - 1, c) / rep.median_abs_error(grid - 2, c)
                      : std::numeric_limits<double>::quiet_NaN();

    detail::finalize_counts(rep);
    rep.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rep;
}

/// Standardized estimates z = sqrt(n) J(psi_hat)^{1/2} (v_hat - v*) per
/// replicate at a single n, with per-coordinate sup-distance of the
/// empirical CDF to the standard normal. Replicates with a singular
/// information estimate (condition number > 1e10 or negative spectrum) are
/// excluded and counted.
inline ExperimentReport run_normality(const ExperimentConfig& config) {
    validate_config(config);
    require_valid(config.model);
    if (config.sample_sizes.size() != 1)
        throw ArgumentError("run_normality: exactly one sample size expected");
    const auto t0 = std::chrono::steady_clock::now();

    const int n = config.sample_sizes.front();
    const ParamLayout layout{config.model.regime_count(), SlopeMode::Free, config.sigma_mode};
    ExperimentReport rep;
    rep.kind = ExperimentKind::Normality;
    rep.seed = config.seed;
    rep.version = detail::msar_version();
    rep.coord_names = layout.natural_names();
    rep.uncoord_names = layout.names();
    rep.ns = config.sample_sizes;

    const Eigen::VectorXd v_star = unconstrain(conform_to_layout(config.model, layout), layout);
    const int p = static_cast<int>(v_star.size());

    rep.records.assign(config.replicates, ReplicateRecord{});
    detail::run_replicates(config.replicates, config.threads, [&](int r) {
        ReplicateRecord& rec = rep.records[r];
        rec.n = n;
        rec.replicate = r;
        const std::uint64_t path_seed = Rng::stream(config.seed, r).next_u64();
        try {
            const Path path = simulate_path_stationary(config.model, n, path_seed, config.burn_in);
            const FitResult fit = detail::fit_replicate(path.y, config, SlopeMode::Free, true);
            rec.estimate = natural_params(fit.psi_hat, layout);
            if (fit.information_flagged) {
                rec.excluded = true;
                rec.note = "information estimate singular or indefinite";
                return;
            }
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(fit.information);
            const Eigen::VectorXd lam = es.eigenvalues();
            Eigen::MatrixXd sqrt_j =
                es.eigenvectors() * lam.cwiseSqrt().asDiagonal() * es.eigenvectors().transpose();
            const Eigen::VectorXd v_hat = unconstrain(fit.psi_hat, layout);
            rec.z = std::sqrt(static_cast<double>(n)) * (sqrt_j * (v_hat - v_star));
        } catch (const Error& e) {
            rec.ok = false;
            rec.note = e.what();
        }
    });

    rep.ks_distance.resize(p);
    rep.skewness.resize(p);
    rep.kurtosis.resize(p);
    for (int c = 0; c < p; ++c) {
        std::vector<double> zs;
        for (const auto& rec : rep.records)
            if (rec.ok && !rec.excluded) zs.push_back(rec.z[c]);
        if (zs.size() < 2) {
            rep.ks_distance[c] = std::numeric_limits<double>::quiet_NaN();
            rep.skewness[c] = rep.kurtosis[c] = std::numeric_limits<double>::quiet_NaN();
            continue;
        }
        rep.ks_distance[c] = ks_distance_to_normal(zs);
        rep.skewness[c] = sample_skewness(zs);
        rep.kurtosis[c] = sample_kurtosis(zs);
    }

    detail::finalize_counts(rep);
    rep.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rep;
}

/// Per replicate: fit the zero-slope null and the tied-slope full model,
/// record the likelihood-ratio statistic, and compare exceedance rates with
/// the chi-square(1) quantiles 2.706 / 3.841 / 6.635. With a null true model
/// (all slopes zero) this calibrates the test; with nonzero slopes in the
/// generator it measures power.
inline ExperimentReport run_lrt_calibration(const ExperimentConfig& config) {
    validate_config(config);
    require_valid(config.model);
    if (config.sample_sizes.size() != 1)
        throw ArgumentError("run_lrt_calibration: exactly one sample size expected");
    const auto t0 = std::chrono::steady_clock::now();

    const int n = config.sample_sizes.front();
    ExperimentReport rep;
    rep.kind = ExperimentKind::LrtCalibration;
    rep.seed = config.seed;
    rep.version = detail::msar_version();
    rep.ns = config.sample_sizes;

    bool null_true = true;
    for (int i = 0; i < config.model.regime_count(); ++i)
        if (std::abs(config.model.regimes.slope(i)) > 0.0) null_true = false;

    rep.records.assign(config.replicates, ReplicateRecord{});
    detail::run_replicates(config.replicates, config.threads, [&](int r) {
        ReplicateRecord& rec = rep.records[r];
        rec.n = n;
        rec.replicate = r;
        const std::uint64_t path_seed = Rng::stream(config.seed, r).next_u64();
        try {
            const Path path = simulate_path_stationary(config.model, n, path_seed, config.burn_in);
            const FitResult null_fit =
                detail::fit_replicate(path.y, config, SlopeMode::Zero, false);
            const FitResult full_fit =
                detail::fit_replicate(path.y, config, SlopeMode::Tied, false);
            rec.statistic = lrt_statistic(path.y, full_fit, null_fit);
        } catch (const Error& e) {
            rec.ok = false;
            rec.note = e.what();
        }
    });

    std::vector<double> stats;
    for (const auto& rec : rep.records)
        if (rec.ok) stats.push_back(rec.statistic);
    if (!stats.empty()) {
        auto rate = [&stats](double cut) {
            int c = 0;
            for (double s : stats)
                if (s > cut) ++c;
            return static_cast<double>(c) / static_cast<double>(stats.size());
        };
        rep.rate90 = rate(2.706);
        rep.rate95 = rate(3.841);
        rep.rate99 = rate(6.635);
        rep.qq_probs = {0.5, 0.75, 0.9, 0.95, 0.975, 0.99};
        for (double q : rep.qq_probs) {
            rep.qq_empirical.push_back(quantile(stats, q));
            rep.qq_theoretical.push_back(chi2_1_quantile(q));
        }
    }
    if (!null_true && !rep.records.empty())
        rep.records.front().note = "power run: generator slopes are not all zero";

    detail::finalize_counts(rep);
    rep.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rep;
}

/// One long path; n^{-1} l_n recorded along the sample-size grid for psi*
/// and any extra evaluation points. Records use replicate = model index.
/// The tail oscillation is max - min over the last half of the grid.
inline ExperimentReport run_loglik_convergence(const ExperimentConfig& config) {
    require_valid(config.model);
    if (config.sample_sizes.empty())
        throw ArgumentError("run_loglik_convergence: empty evaluation grid");
    for (std::size_t i = 1; i < config.sample_sizes.size(); ++i)
        if (config.sample_sizes[i] <= config.sample_sizes[i - 1])
            throw ArgumentError("run_loglik_convergence: grid must be strictly increasing");
    const auto t0 = std::chrono::steady_clock::now();

    ExperimentReport rep;
    rep.kind = ExperimentKind::LoglikConvergence;
    rep.seed = config.seed;
    rep.version = detail::msar_version();
    rep.ns = config.sample_sizes;

    const int n_max = config.sample_sizes.back();
    const std::uint64_t path_seed = Rng::stream(config.seed, 0).next_u64();
    const Path path = simulate_path_stationary(config.model, n_max, path_seed, config.burn_in);

    std::vector<ModelSpec> models{config.model};
    models.insert(models.end(), config.extra_eval_models.begin(),
                  config.extra_eval_models.end());

    for (std::size_t mi = 0; mi < models.size(); ++mi) {
        require_valid(models[mi]);
        FilterState st = filter_init(models[mi]);
        std::size_t next_grid = 0;
        for (int k = 1; k <= n_max; ++k) {
            filter_step(st, path.y[k - 1], path.y[k], models[mi]);
            if (next_grid < config.sample_sizes.size() && k == config.sample_sizes[next_grid]) {
                ReplicateRecord rec;
                rec.n = k;
                rec.replicate = static_cast<int>(mi);
                rec.value = st.loglik / k;
                rep.records.push_back(std::move(rec));
                ++next_grid;
            }
        }
    }

    // Tail diagnostics for psi* (model index 0).
    std::vector<double> tail;
    const std::size_t grid = config.sample_sizes.size();
    for (std::size_t gi = grid - (grid + 1) / 2; gi < grid; ++gi) tail.push_back(rep.records[gi].value);
    double lo = tail.front(), hi = tail.front();
    for (double v : tail) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    rep.tail_oscillation = hi - lo;
    rep.tail_value = rep.records[grid - 1].value;

    detail::finalize_counts(rep);
    rep.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rep;
}

/// Truncated Bartlett-weighted autocovariance sum
/// gamma_0 + 2 sum_{k=1}^{B} (1 - k/(B+1)) gamma_k. "auto" bandwidth is
/// floor(1.3 len^{1/3}).
struct LongRunVariance {
    double value = 0.0;
    int bandwidth = 0;
    bool flagged = false;  // nonpositive estimate (possible at small lengths)
};

inline LongRunVariance long_run_variance(const std::vector<double>& series, int bandwidth) {
    const int len = static_cast<int>(series.size());
    if (bandwidth < 0) throw ArgumentError("long_run_variance: bandwidth must be >= 0");
    if (len < 10 * std::max(1, bandwidth))
        throw ArgumentError("long_run_variance: series length must be >= 10 x bandwidth");
    const double mean = mean_of(series);
    auto acov = [&](int k) {
        double s = 0.0;
        for (int t = 0; t + k < len; ++t) s += (series[t] - mean) * (series[t + k] - mean);
        return s / len;
    };
    LongRunVariance out;
    out.bandwidth = bandwidth;
    out.value = acov(0);
    for (int k = 1; k <= bandwidth; ++k)
        out.value += 2.0 * (1.0 - static_cast<double>(k) / (bandwidth + 1)) * acov(k);
    out.flagged = !(out.value > 0.0);
    return out;
}

inline LongRunVariance long_run_variance_auto(const std::vector<double>& series) {
    const int b = static_cast<int>(1.3 * std::cbrt(static_cast<double>(series.size())));
    return long_run_variance(series, b);
}

/// Empirical lower bound on the alpha-mixing coefficient at `lag`:
/// the maximum absolute covariance over indicator pairs 1{y_t <= a} against
/// 1{y_{t+lag} <= b} and against the dyadic-remainder cuts
/// 1{(2^lag y_{t+lag}) mod 2 <= b}. The remainder family recovers the
/// shifted-out past of dyadic recursions (slope 1/2, Bernoulli innovations),
/// which no plain half-line can see at this lag; for mixing processes both
/// families' covariances vanish, so the probe stays a valid lower bound.
inline double mixing_probe(const std::vector<double>& y, int lag,
                           const std::vector<double>& thresholds) {
    if (lag < 1 || lag > 60) throw ArgumentError("mixing_probe: lag must be in [1, 60]");
    const int len = static_cast<int>(y.size());
    if (len < 100 * lag) throw ArgumentError("mixing_probe: path length must be >= 100 x lag");
    if (thresholds.empty()) throw ArgumentError("mixing_probe: empty threshold grid");

    const int t_count = len - lag;
    const double scale = std::ldexp(1.0, lag);
    std::vector<double> rem(t_count);
    for (int t = 0; t < t_count; ++t) rem[t] = std::fmod(y[t + lag] * scale, 2.0);

    double best = 0.0;
    std::vector<char> u(t_count);
    for (double a : thresholds) {
        double mu_u = 0.0;
        for (int t = 0; t < t_count; ++t) {
            u[t] = y[t] <= a ? 1 : 0;
            mu_u += u[t];
        }
        mu_u /= t_count;
        for (double b : thresholds) {
            double mu_v = 0.0, mu_w = 0.0, uv = 0.0, uw = 0.0;
            for (int t = 0; t < t_count; ++t) {
                const char v = y[t + lag] <= b ? 1 : 0;
                const char w = rem[t] <= b ? 1 : 0;
                mu_v += v;
                mu_w += w;
                if (u[t]) {
                    uv += v;
                    uw += w;
                }
            }
            mu_v /= t_count;
            mu_w /= t_count;
            uv /= t_count;
            uw /= t_count;
            best = std::max(best, std::abs(uv - mu_u * mu_v));
            best = std::max(best, std::abs(uw - mu_u * mu_w));
        }
    }
    return best;
}

inline double mixing_probe(const Path& path, int lag, const std::vector<double>& thresholds) {
    return mixing_probe(path.y, lag, thresholds);
}

/// Runs the mixing probe on a simulated stable path or on the Andrews
/// counterexample path, per config.
inline ExperimentReport run_mixing_probe(const ExperimentConfig& config) {
    if (config.sample_sizes.empty())
        throw ArgumentError("run_mixing_probe: sample size required");
    const auto t0 = std::chrono::steady_clock::now();

    ExperimentReport rep;
    rep.kind = ExperimentKind::MixingProbe;
    rep.seed = config.seed;
    rep.version = detail::msar_version();
    rep.ns = {config.sample_sizes.front()};

    const int n = config.sample_sizes.front();
    const std::uint64_t path_seed = Rng::stream(config.seed, 0).next_u64();
    Path path;
    if (config.andrews) {
        path = simulate_andrews(config.andrews_rho, config.andrews_q, n, path_seed);
    } else {
        require_valid(config.model);
        path = simulate_path_stationary(config.model, n, path_seed, config.burn_in);
    }

    std::vector<double> grid = config.thresholds;
    if (grid.empty()) {
        for (int d = 1; d <= 9; ++d) grid.push_back(quantile(path.y, d / 10.0));
        grid.push_back(1.0);  // the dyadic cut
    }
    rep.probe = mixing_probe(path.y, config.lag, grid);

    ReplicateRecord rec;
    rec.n = n;
    rec.replicate = 0;
    rec.value = rep.probe;
    rep.records.push_back(std::move(rec));

    detail::finalize_counts(rep);
    rep.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rep;
}

/// One estimation run with an experiment config's settings (method, init,
/// starts, sigma mode); the slope structure is chosen per call.
inline FitResult fit_series(const std::vector<double>& y, const ExperimentConfig& config,
                            SlopeMode slope_mode, bool want_information) {
    return detail::fit_replicate(y, config, slope_mode, want_information);
}

/// Dispatch by configured kind.
inline ExperimentReport run_experiment(const ExperimentConfig& config) {
    switch (config.kind) {
        case ExperimentKind::Consistency: return run_consistency(config);
        case ExperimentKind::Normality: return run_normality(config);
        case ExperimentKind::LrtCalibration: return run_lrt_calibration(config);
        case ExperimentKind::LoglikConvergence: return run_loglik_convergence(config);
        default: return run_mixing_probe(config);
    }
}

}  // namespace msar
