#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "msar/errors.hpp"
#include "msar/stats.hpp"

namespace msar {

inline constexpr double kRowSumTol = 1e-12;

/// Row-stochastic m x m regime transition matrix with the minimum entry
/// (delta, the forgetting rate driver) cached at construction.
///
/// Construction only enforces shape; numeric invariants (entries in [0,1],
/// unit row sums) are checked by validate_model so that bad inputs can be
/// reported rather than thrown.
class TransitionMatrix {
public:
    /// Default: the trivial one-regime chain.
    TransitionMatrix() : TransitionMatrix(Eigen::MatrixXd::Constant(1, 1, 1.0)) {}

    explicit TransitionMatrix(Eigen::MatrixXd entries) : a_(std::move(entries)) {
        if (a_.rows() < 1 || a_.rows() != a_.cols())
            throw ArgumentError("TransitionMatrix: entries must be square with m >= 1");
        delta_ = a_.minCoeff();
    }

    static TransitionMatrix uniform(int m) {
        return TransitionMatrix(Eigen::MatrixXd::Constant(m, m, 1.0 / m));
    }

    int size() const { return static_cast<int>(a_.rows()); }
    double operator()(int i, int j) const { return a_(i, j); }
    const Eigen::MatrixXd& entries() const { return a_; }

    /// delta = min_{i,j} a_ij; positive delta is what makes the filter forget.
    double delta() const { return delta_; }

private:
    Eigen::MatrixXd a_;
    double delta_;
};

/// Per-regime parameter rows. For the linear family each row is
/// (intercept b_i, slope rho_i); custom families may use any row dimension.
class RegimeParams {
public:
    RegimeParams() : p_(Eigen::MatrixXd::Zero(1, 2)) {}

    explicit RegimeParams(Eigen::MatrixXd params) : p_(std::move(params)) {
        if (p_.rows() < 1 || p_.cols() < 1)
            throw ArgumentError("RegimeParams: need at least one regime and one parameter");
    }

    static RegimeParams linear(const Eigen::VectorXd& intercepts,
                               const Eigen::VectorXd& slopes) {
        if (intercepts.size() != slopes.size())
            throw ArgumentError("RegimeParams::linear: intercept/slope size mismatch");
        Eigen::MatrixXd p(intercepts.size(), 2);
        p.col(0) = intercepts;
        p.col(1) = slopes;
        return RegimeParams(std::move(p));
    }

    int count() const { return static_cast<int>(p_.rows()); }
    int dim() const { return static_cast<int>(p_.cols()); }

    double intercept(int i) const { return p_(i, 0); }
    double slope(int i) const { return p_(i, 1); }
    Eigen::VectorXd row(int i) const { return p_.row(i).transpose(); }
    const Eigen::MatrixXd& matrix() const { return p_; }
    Eigen::MatrixXd& matrix() { return p_; }

private:
    Eigen::MatrixXd p_;
};

/// Innovation specification. Gaussian with shared or per-regime scale is the
/// built-in, fully estimable choice; a custom density/sampler pair may be
/// registered for simulation and filtering (sigma is ignored in that case).
struct NoiseSpec {
    Eigen::VectorXd sigma = Eigen::VectorXd::Constant(1, 1.0);  // size 1 (shared) or m
    std::function<double(double)> custom_logpdf;  // log density of the innovation
    std::function<double(class Rng&)> custom_sampler;

    static NoiseSpec gaussian_shared(double s) {
        NoiseSpec n;
        n.sigma = Eigen::VectorXd::Constant(1, s);
        return n;
    }
    static NoiseSpec gaussian_per_regime(Eigen::VectorXd s) {
        NoiseSpec n;
        n.sigma = std::move(s);
        return n;
    }

    bool gaussian() const { return !custom_logpdf; }
    bool shared_sigma() const { return sigma.size() == 1; }
    double sigma_for(int regime) const {
        return shared_sigma() ? sigma[0] : sigma[regime];
    }
};

/// Conditional-mean family r(y_prev, theta_i). Empty fn means the built-in
/// linear map rho_i * y_prev + b_i. Custom families must supply sublinearity
/// envelope constants (|r(y,theta_i)| <= envelope_rho_i |y| + envelope_b_i)
/// before the stability checker can evaluate them.
struct MeanFamily {
    std::string name = "linear";
    std::function<double(double, const Eigen::VectorXd&)> fn;
    Eigen::VectorXd envelope_rho;
    Eigen::VectorXd envelope_b;

    bool linear() const { return !fn; }
};

/// Complete model instance: psi = (theta, A) plus the noise specification.
/// Immutable by convention after validation; safe to share across threads.
struct ModelSpec {
    TransitionMatrix transition;
    RegimeParams regimes;
    NoiseSpec noise;
    /// Empty means "use the stationary distribution of `transition`".
    std::optional<Eigen::VectorXd> initial;
    MeanFamily family;

    int regime_count() const { return transition.size(); }
};

inline ModelSpec make_linear_model(Eigen::MatrixXd transition, Eigen::VectorXd intercepts,
                                   Eigen::VectorXd slopes, double sigma,
                                   std::optional<Eigen::VectorXd> initial = std::nullopt) {
    return ModelSpec{TransitionMatrix(std::move(transition)),
                     RegimeParams::linear(intercepts, slopes),
                     NoiseSpec::gaussian_shared(sigma), std::move(initial), MeanFamily{}};
}

struct ValidationReport {
    std::vector<std::string> violations;
    bool clean() const { return violations.empty(); }
    std::string joined() const {
        std::string out;
        for (const auto& v : violations) {
            if (!out.empty()) out += "; ";
            out += v;
        }
        return out;
    }
};

/// Checks every model invariant and reports all violations (never throws).
inline ValidationReport validate_model(const ModelSpec& spec) {
    ValidationReport report;
    auto add = [&report](std::string msg) { report.violations.push_back(std::move(msg)); };

    const int m = spec.regime_count();
    const Eigen::MatrixXd& a = spec.transition.entries();
    for (int i = 0; i < m; ++i) {
        double row_sum = 0.0;
        for (int j = 0; j < m; ++j) {
            const double v = a(i, j);
            if (!(v >= 0.0 && v <= 1.0))
                add("transition entry (" + std::to_string(i + 1) + "," + std::to_string(j + 1) +
                    ") = " + std::to_string(v) + " outside [0,1]");
            row_sum += v;
        }
        if (std::abs(row_sum - 1.0) > kRowSumTol)
            add("row " + std::to_string(i + 1) + " sums to " + std::to_string(row_sum));
    }
    if (std::abs(spec.transition.delta() - a.minCoeff()) > 0.0)
        add("cached delta does not equal the minimum transition entry");

    if (spec.regimes.count() != m)
        add("regime parameter count " + std::to_string(spec.regimes.count()) +
            " does not match m = " + std::to_string(m));
    if (spec.family.linear() && spec.regimes.dim() != 2)
        add("linear family requires per-regime (intercept, slope) pairs");
    if (!spec.family.linear() && !spec.family.fn)
        add("custom family '" + spec.family.name + "' has no mean function registered");

    if (spec.noise.gaussian()) {
        const auto& s = spec.noise.sigma;
        if (s.size() != 1 && s.size() != m)
            add("noise scale vector must have size 1 or m");
        for (Eigen::Index i = 0; i < s.size(); ++i)
            if (!(s[i] > 0.0)) add("noise scale must be positive");
    } else if (!spec.noise.custom_sampler) {
        add("custom noise must register a sampler");
    }

    if (spec.initial) {
        const Eigen::VectorXd& mu = *spec.initial;
        if (mu.size() != m) {
            add("initial distribution size " + std::to_string(mu.size()) +
                " does not match m = " + std::to_string(m));
        } else {
            double sum = 0.0;
            for (int i = 0; i < m; ++i) {
                if (mu[i] < 0.0) add("initial distribution has a negative entry");
                sum += mu[i];
            }
            if (std::abs(sum - 1.0) > kRowSumTol)
                add("initial distribution sums to " + std::to_string(sum));
        }
    }

    if (spec.family.envelope_rho.size() != 0 && spec.family.envelope_rho.size() != m)
        add("envelope_rho must have one constant per regime");
    if (spec.family.envelope_b.size() != 0 && spec.family.envelope_b.size() != m)
        add("envelope_b must have one constant per regime");
    return report;
}

inline void require_valid(const ModelSpec& spec) {
    const auto report = validate_model(spec);
    if (!report.clean()) throw ArgumentError("invalid model: " + report.joined());
}

/// Conditional mean r(y_prev, theta_regime).
inline double regime_mean(double y_prev, int regime, const ModelSpec& spec) {
    if (regime < 0 || regime >= spec.regime_count())
        throw ArgumentError("regime_mean: regime index out of range");
    if (spec.family.linear())
        return spec.regimes.slope(regime) * y_prev + spec.regimes.intercept(regime);
    return spec.family.fn(y_prev, spec.regimes.row(regime));
}

/// log p(Y_k = y | Y_{k-1} = y_prev, X_k = regime).
inline double emission_logdensity(double y, double y_prev, int regime, const ModelSpec& spec) {
    const double r = y - regime_mean(y_prev, regime, spec);
    if (spec.noise.gaussian()) {
        const double s = spec.noise.sigma_for(regime);
        const double z = r / s;
        return -0.5 * kLog2Pi - std::log(s) - 0.5 * z * z;
    }
    const double v = spec.noise.custom_logpdf(r);
    if (std::isnan(v)) throw NumericError("custom noise density returned NaN");
    return v;
}

namespace detail {

/// Fills out[i] = emission_logdensity(y, y_prev, i, spec) without allocation.
inline void emission_logdensities(double y, double y_prev, const ModelSpec& spec,
                                  Eigen::VectorXd& out) {
    const int m = spec.regime_count();
    if (out.size() != m) out.resize(m);
    if (spec.family.linear() && spec.noise.gaussian()) {
        for (int i = 0; i < m; ++i) {
            const double s = spec.noise.sigma_for(i);
            const double z =
                (y - spec.regimes.slope(i) * y_prev - spec.regimes.intercept(i)) / s;
            out[i] = -0.5 * kLog2Pi - std::log(s) - 0.5 * z * z;
        }
        return;
    }
    for (int i = 0; i < m; ++i) out[i] = emission_logdensity(y, y_prev, i, spec);
}

}  // namespace detail
}  // namespace msar
