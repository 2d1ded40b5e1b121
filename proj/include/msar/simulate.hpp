#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "msar/model.hpp"
#include "msar/rng.hpp"
#include "msar/stability.hpp"

namespace msar {

/// A simulated or observed series y_0..y_n with the latent regimes x_1..x_n
/// (0-based regime indices; empty when withheld).
struct Path {
    std::vector<double> y;
    std::vector<int> x;
    std::uint64_t seed = 0;
    int burn_in = 0;
};

namespace detail {

inline double draw_innovation(const ModelSpec& spec, int regime, Rng& rng) {
    if (spec.noise.gaussian()) return rng.normal(0.0, spec.noise.sigma_for(regime));
    return spec.noise.custom_sampler(rng);
}

inline Path simulate_impl(const ModelSpec& spec, int n, double y_start, std::uint64_t seed,
                          int burn_in) {
    if (n < 1) throw ArgumentError("simulate_path: n must be >= 1");
    if (burn_in < 0) throw ArgumentError("simulate_path: burn_in must be >= 0");
    require_valid(spec);

    Rng rng(seed);
    const Eigen::VectorXd init = effective_initial(spec);

    Path path;
    path.seed = seed;
    path.burn_in = burn_in;
    path.y.reserve(n + 1);
    path.x.reserve(n);

    double y = y_start;
    int x = rng.categorical(init);
    // Per step: innovation first, then the next regime draw. Fixed order so
    // paths are reproducible across builds.
    for (int k = 0; k < burn_in; ++k) {
        y = regime_mean(y, x, spec) + draw_innovation(spec, x, rng);
        x = rng.categorical(spec.transition.entries().row(x).transpose());
    }
    path.y.push_back(y);
    for (int k = 1; k <= n; ++k) {
        path.y.push_back(regime_mean(y, x, spec) + draw_innovation(spec, x, rng));
        path.x.push_back(x);
        y = path.y.back();
        x = rng.categorical(spec.transition.entries().row(x).transpose());
    }
    return path;
}

}  // namespace detail

/// Simulates y_1..y_n from y_0 = y0, drawing X_1 from the initial regime
/// distribution and X_k | X_{k-1} from the transition rows. Reproducible
/// given (spec, n, y0, seed, burn_in).
inline Path simulate_path(const ModelSpec& spec, int n, double y0, std::uint64_t seed,
                          int burn_in = 0) {
    return detail::simulate_impl(spec, n, y0, seed, burn_in);
}

/// Approximate stationary start: runs burn_in discarded steps from y = 0.
/// Geometric ergodicity makes the residual initialization bias negligible at
/// the default burn_in of 500.
inline Path simulate_path_stationary(const ModelSpec& spec, int n, std::uint64_t seed,
                                     int burn_in = 500) {
    return detail::simulate_impl(spec, n, 0.0, seed, burn_in);
}

/// The non-mixing counterexample: Y_n = rho Y_{n-1} + e_n with Bernoulli(q)
/// innovations, Y_0 = 0, and every regime sharing the same slope. For
/// rho <= 1/2 the path is confined to [0, 1/(1-rho)] (checked on every step).
inline Path simulate_andrews(double rho, double q, int n, std::uint64_t seed) {
    if (!(rho > 0.0 && rho <= 0.5))
        throw DomainError("simulate_andrews: rho must lie in (0, 1/2]");
    if (!(q >= 0.0 && q <= 1.0))
        throw DomainError("simulate_andrews: q must lie in [0, 1]");
    if (n < 1) throw ArgumentError("simulate_andrews: n must be >= 1");

    Rng rng(seed);
    Path path;
    path.seed = seed;
    path.y.reserve(n + 1);
    path.x.reserve(n);
    const double bound = 1.0 / (1.0 - rho) + 1e-12;

    double y = 0.0;
    path.y.push_back(y);
    int x = rng.bernoulli(0.5) ? 1 : 0;  // two cosmetic regimes, both slope rho
    for (int k = 1; k <= n; ++k) {
        y = rho * y + (rng.bernoulli(q) ? 1.0 : 0.0);
        if (!(y >= 0.0 && y <= bound))
            throw NumericError("simulate_andrews: path escaped [0, 1/(1-rho)]");
        path.y.push_back(y);
        path.x.push_back(x);
        x = rng.bernoulli(0.5) ? 1 : 0;
    }
    return path;
}

}  // namespace msar
