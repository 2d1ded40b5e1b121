#pragma once

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "msar/errors.hpp"
#include "msar/model.hpp"

namespace msar {

enum class Verdict { Pass, Fail, NotCheckable };

inline const char* to_string(Verdict v) {
    switch (v) {
        case Verdict::Pass: return "pass";
        case Verdict::Fail: return "fail";
        default: return "not-checkable";
    }
}

/// Support-graph entries below this are treated as structural zeros when
/// testing irreducibility.
inline constexpr double kSupportTol = 1e-15;

namespace detail {

inline std::vector<bool> reachable(const Eigen::MatrixXd& a, bool transpose) {
    const int m = static_cast<int>(a.rows());
    std::vector<bool> seen(m, false);
    std::vector<int> stack{0};
    seen[0] = true;
    while (!stack.empty()) {
        const int i = stack.back();
        stack.pop_back();
        for (int j = 0; j < m; ++j) {
            const double w = transpose ? a(j, i) : a(i, j);
            if (w > kSupportTol && !seen[j]) {
                seen[j] = true;
                stack.push_back(j);
            }
        }
    }
    return seen;
}

}  // namespace detail

/// True when the support graph of A is strongly connected.
inline bool irreducible(const TransitionMatrix& a) {
    const auto fwd = detail::reachable(a.entries(), false);
    const auto bwd = detail::reachable(a.entries(), true);
    for (int i = 0; i < a.size(); ++i)
        if (!fwd[i] || !bwd[i]) return false;
    return true;
}

/// Solves mu A = mu, sum mu = 1 for an irreducible chain.
///
/// Throws AmbiguityError when the chain is reducible (the stationary law is
/// then not unique in general). The residual ||mu A - mu||_inf is checked
/// against 1e-10.
inline Eigen::VectorXd stationary_distribution(const TransitionMatrix& a) {
    const int m = a.size();
    if (!irreducible(a))
        throw AmbiguityError(
            "stationary_distribution: chain is reducible; stationary law not unique");
    Eigen::MatrixXd sys = a.entries().transpose() - Eigen::MatrixXd::Identity(m, m);
    sys.row(m - 1).setOnes();
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m);
    rhs[m - 1] = 1.0;
    Eigen::VectorXd mu = sys.fullPivLu().solve(rhs);
    for (int i = 0; i < m; ++i)
        if (mu[i] < 0.0 && mu[i] > -1e-12) mu[i] = 0.0;
    mu /= mu.sum();
    const double residual = ((mu.transpose() * a.entries()).transpose() - mu)
                                .cwiseAbs()
                                .maxCoeff();
    if (residual > 1e-10)
        throw NumericError("stationary_distribution: residual " + std::to_string(residual));
    return mu;
}

/// gamma = sum_i mu_i log rho_i, the averaged log contraction rate.
inline double lyapunov_gamma(const Eigen::VectorXd& rho, const Eigen::VectorXd& mu) {
    if (rho.size() != mu.size())
        throw ArgumentError("lyapunov_gamma: rho and mu size mismatch");
    double g = 0.0;
    for (Eigen::Index i = 0; i < rho.size(); ++i) {
        if (!(rho[i] > 0.0)) throw DomainError("lyapunov_gamma: rho entries must be positive");
        g += mu[i] * std::log(rho[i]);
    }
    return g;
}

/// Spectral radius of Q_s with entries rho_j^s a_ij, by power iteration.
///
/// Q_s is nonnegative, so iteration from a positive start vector converges to
/// the Perron root. A diagonal shift of 1e-8 (subtracted from the result)
/// guards against periodic support patterns. Stops when successive Rayleigh
/// estimates differ by < 1e-12 and the eigen-residual is small, or fails with
/// ConvergenceError carrying the last estimate after 1e5 iterations.
inline double spectral_radius_qs(const TransitionMatrix& a, const Eigen::VectorXd& rho,
                                 double s) {
    const int m = a.size();
    if (rho.size() != m) throw ArgumentError("spectral_radius_qs: rho size mismatch");
    if (!(s >= 1.0)) throw DomainError("spectral_radius_qs: moment order s must be >= 1");
    for (int j = 0; j < m; ++j)
        if (!(rho[j] > 0.0)) throw DomainError("spectral_radius_qs: rho entries must be positive");

    Eigen::MatrixXd q(m, m);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) q(i, j) = std::pow(rho[j], s) * a(i, j);

    const double shift = 1e-8;
    Eigen::MatrixXd b = q + shift * Eigen::MatrixXd::Identity(m, m);
    Eigen::VectorXd v = Eigen::VectorXd::Constant(m, 1.0 / std::sqrt(static_cast<double>(m)));
    double lambda = 0.0;
    const int max_iter = 100000;
    for (int it = 0; it < max_iter; ++it) {
        const Eigen::VectorXd w = b * v;
        const double next = v.dot(w);
        const double wn = w.norm();
        if (wn == 0.0) return 0.0;  // zero matrix (possible only if shift were 0)
        const Eigen::VectorXd vn = w / wn;
        const double residual = (b * vn - next * vn).cwiseAbs().maxCoeff();
        const bool settled = std::abs(next - lambda) < 1e-12 &&
                             residual < 1e-10 * std::max(1.0, std::abs(next));
        lambda = next;
        v = vn;
        if (settled) return lambda - shift;
    }
    throw ConvergenceError("spectral_radius_qs: power iteration did not settle",
                           lambda - shift);
}

/// Aggregated stability report: the E1-E7 checklist plus the moment
/// criterion radius(Q_s) < 1.
struct StabilityReport {
    Eigen::VectorXd mu;
    double gamma = std::numeric_limits<double>::quiet_NaN();
    double spectral_radius = std::numeric_limits<double>::quiet_NaN();
    double moment_order = 1.0;
    std::map<std::string, Verdict> conditions;
    bool stable = false;
    std::vector<std::string> notes;
};

/// Runs the full checklist for a validated spec.
///
/// For the linear family the sublinearity constants are |slope_i| and
/// |intercept_i|; custom families must carry envelope constants. E5-E7 hold
/// by construction for Gaussian noise.
inline StabilityReport check_stability(const ModelSpec& spec, double s) {
    require_valid(spec);
    StabilityReport rep;
    rep.moment_order = s;
    const int m = spec.regime_count();

    // Sublinearity envelope (E3).
    Eigen::VectorXd env_rho(m), env_b(m);
    bool have_envelope = true;
    if (spec.family.linear()) {
        for (int i = 0; i < m; ++i) {
            env_rho[i] = std::abs(spec.regimes.slope(i));
            env_b[i] = std::abs(spec.regimes.intercept(i));
        }
    } else if (spec.family.envelope_rho.size() == m && spec.family.envelope_b.size() == m) {
        env_rho = spec.family.envelope_rho;
        env_b = spec.family.envelope_b;
        rep.notes.push_back("custom family: using registered envelope constants");
    } else {
        have_envelope = false;
        rep.notes.push_back("custom family without envelope constants: E3/E4/Q_s not checkable");
    }

    // E1: positive recurrence of a finite chain == irreducibility.
    const bool irr = irreducible(spec.transition);
    rep.conditions["E1"] = irr ? Verdict::Pass : Verdict::Fail;
    if (irr) rep.mu = stationary_distribution(spec.transition);

    // E2: continuity of the mean maps.
    rep.conditions["E2"] = spec.family.linear() ? Verdict::Pass : Verdict::NotCheckable;
    if (!spec.family.linear())
        rep.notes.push_back("continuity of a custom family is not verified");

    rep.conditions["E3"] = have_envelope ? Verdict::Pass : Verdict::NotCheckable;

    // E4: gamma < 0. Needs positive envelope slopes and mu.
    const bool rho_positive = have_envelope && (env_rho.array() > 0.0).all();
    if (irr && rho_positive) {
        rep.gamma = lyapunov_gamma(env_rho, rep.mu);
        rep.conditions["E4"] = rep.gamma < 0.0 ? Verdict::Pass : Verdict::Fail;
    } else {
        rep.conditions["E4"] = Verdict::NotCheckable;
        if (have_envelope && !rho_positive)
            rep.notes.push_back("some sublinearity constant is zero: log rho_i undefined");
    }

    // E5/E6/E7: innovation moment, density, and positivity conditions.
    if (spec.noise.gaussian()) {
        rep.conditions["E5"] = Verdict::Pass;
        rep.conditions["E6"] = Verdict::Pass;
        rep.conditions["E7"] = Verdict::Pass;
        if (!spec.noise.shared_sigma())
            rep.notes.push_back("per-regime noise scales: densities differ across regimes");
    } else {
        rep.conditions["E5"] = Verdict::NotCheckable;
        rep.conditions["E6"] = Verdict::Pass;  // a density was supplied
        rep.conditions["E7"] = Verdict::NotCheckable;
    }

    // Moment criterion: radius(Q_s) < 1.
    if (irr && rho_positive) {
        rep.spectral_radius = spectral_radius_qs(spec.transition, env_rho, s);
        rep.conditions["Q_s"] = rep.spectral_radius < 1.0 ? Verdict::Pass : Verdict::Fail;
        rep.notes.push_back("power iteration on Q_s + 1e-8 I, shift subtracted");
    } else {
        rep.conditions["Q_s"] = Verdict::NotCheckable;
    }

    rep.stable = true;
    for (const auto& [name, verdict] : rep.conditions)
        if (verdict != Verdict::Pass) rep.stable = false;
    return rep;
}

/// Initial regime distribution of a spec: the explicit vector when present,
/// otherwise the stationary distribution of the transition matrix.
inline Eigen::VectorXd effective_initial(const ModelSpec& spec) {
    if (spec.initial) return *spec.initial;
    return stationary_distribution(spec.transition);
}

}  // namespace msar
