#pragma once

#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "msar/model.hpp"
#include "msar/stability.hpp"
#include "msar/stats.hpp"

namespace msar {

/// Running state of the prediction filter.
///
/// `predictive` is P(X_k | Y_{0:k-1}), `filtered` is P(X_{k-1} | Y_{0:k-1});
/// `step` is the 1-based index k of the next observation to absorb. Both
/// vectors are explicitly renormalized every step.
struct FilterState {
    Eigen::VectorXd predictive;
    Eigen::VectorXd filtered;
    double loglik = 0.0;
    int step = 1;
};

/// Starts the filter from an explicit regime distribution.
inline FilterState filter_init(const ModelSpec& spec, Eigen::VectorXd initial) {
    if (initial.size() != spec.regime_count())
        throw ArgumentError("filter_init: initial distribution size mismatch");
    FilterState st;
    st.predictive = std::move(initial);
    st.filtered = st.predictive;
    return st;
}

/// Starts the filter from the spec's initial distribution (default: the
/// stationary law of the transition matrix).
inline FilterState filter_init(const ModelSpec& spec) {
    return filter_init(spec, effective_initial(spec));
}

/// Absorbs one observation pair (y_prev, y) and returns the step's
/// log-density contribution D_k = log sum_i P(X_k=i | past) p(y | y_prev, i).
///
/// All mixing is done in log space with a max shift, so residuals tens of
/// sigmas out do not underflow the mixture.
inline double filter_step(FilterState& state, double y_prev, double y, const ModelSpec& spec) {
    const int m = spec.regime_count();
    Eigen::VectorXd logw(m);
    detail::emission_logdensities(y, y_prev, spec, logw);
    for (int i = 0; i < m; ++i) {
        const double p = state.predictive[i];
        logw[i] += p > 0.0 ? std::log(p) : -std::numeric_limits<double>::infinity();
    }
    const double mx = logw.maxCoeff();
    if (!std::isfinite(mx))
        throw NumericError("filter step " + std::to_string(state.step) +
                           ": predictive density underflowed");
    double sum = 0.0;
    for (int i = 0; i < m; ++i) {
        const double w = std::exp(logw[i] - mx);
        state.filtered[i] = w;
        sum += w;
    }
    const double d = mx + std::log(sum);
    state.filtered /= sum;

    // Predictive for X_{k+1}: row vector times A, then renormalize.
    const Eigen::MatrixXd& a = spec.transition.entries();
    for (int j = 0; j < m; ++j) {
        double acc = 0.0;
        for (int i = 0; i < m; ++i) acc += state.filtered[i] * a(i, j);
        state.predictive[j] = acc;
    }
    state.predictive /= state.predictive.sum();

    state.loglik += d;
    state.step += 1;
    return d;
}

/// l_n(psi) = sum_k log p(y_k | y_{0:k-1}) folded over the series, starting
/// the filter from `initial`.
inline double log_likelihood(const ModelSpec& spec, const std::vector<double>& y,
                             Eigen::VectorXd initial) {
    if (y.size() < 2) throw ArgumentError("log_likelihood: need at least y_0 and y_1");
    FilterState st = filter_init(spec, std::move(initial));
    for (std::size_t k = 1; k < y.size(); ++k) filter_step(st, y[k - 1], y[k], spec);
    return st.loglik;
}

inline double log_likelihood(const ModelSpec& spec, const std::vector<double>& y) {
    require_valid(spec);
    return log_likelihood(spec, y, effective_initial(spec));
}

/// Per-step terms D_1..D_n of the likelihood decomposition.
inline std::vector<double> per_step_terms(const ModelSpec& spec, const std::vector<double>& y,
                                          Eigen::VectorXd initial) {
    if (y.size() < 2) throw ArgumentError("per_step_terms: need at least y_0 and y_1");
    FilterState st = filter_init(spec, std::move(initial));
    std::vector<double> d;
    d.reserve(y.size() - 1);
    for (std::size_t k = 1; k < y.size(); ++k) d.push_back(filter_step(st, y[k - 1], y[k], spec));
    return d;
}

inline std::vector<double> per_step_terms(const ModelSpec& spec, const std::vector<double>& y) {
    return per_step_terms(spec, y, effective_initial(spec));
}

/// Exact marginal log-likelihood by enumerating all m^n regime paths and
/// mixing the joint densities in log space. Independent of the filter code
/// path; guarded to m^n <= 1e7.
inline double brute_force_loglik(const ModelSpec& spec, const std::vector<double>& y) {
    require_valid(spec);
    if (y.size() < 2) throw ArgumentError("brute_force_loglik: need at least y_0 and y_1");
    const int m = spec.regime_count();
    const int n = static_cast<int>(y.size()) - 1;
    if (n * std::log(static_cast<double>(m)) > std::log(1e7))
        throw GuardError("brute_force_loglik: m^n exceeds 1e7");

    const Eigen::VectorXd init = effective_initial(spec);
    Eigen::MatrixXd logdens(n, m);  // logdens(k-1, i) = log p(y_k | y_{k-1}, i)
    Eigen::VectorXd row(m);
    for (int k = 1; k <= n; ++k) {
        detail::emission_logdensities(y[k], y[k - 1], spec, row);
        logdens.row(k - 1) = row.transpose();
    }
    Eigen::MatrixXd loga = spec.transition.entries().array().max(0.0).log().matrix();
    Eigen::VectorXd loginit(m);
    for (int i = 0; i < m; ++i)
        loginit[i] = init[i] > 0.0 ? std::log(init[i]) : -std::numeric_limits<double>::infinity();

    std::vector<int> x(n, 0);
    // Streaming log-sum-exp over all paths.
    double mx = -std::numeric_limits<double>::infinity();
    double scaled_sum = 0.0;
    while (true) {
        double lp = loginit[x[0]] + logdens(0, x[0]);
        for (int k = 1; k < n; ++k) lp += loga(x[k - 1], x[k]) + logdens(k, x[k]);
        if (std::isfinite(lp)) {
            if (lp <= mx) {
                scaled_sum += std::exp(lp - mx);
            } else {
                scaled_sum = scaled_sum * std::exp(mx - lp) + 1.0;
                mx = lp;
            }
        }
        int pos = n - 1;
        while (pos >= 0 && x[pos] == m - 1) x[pos--] = 0;
        if (pos < 0) break;
        ++x[pos];
    }
    if (!std::isfinite(mx)) throw NumericError("brute_force_loglik: all paths have zero density");
    return mx + std::log(scaled_sum);
}

/// One windowed-versus-full comparison of the per-step term D_k, with the
/// total-variation forgetting bound 2 delta^{-1} (1-delta)^{k-1-l}.
struct ForgettingRecord {
    int k = 0;
    int l = 0;
    double d_k0 = 0.0;  // per-step term with the full history y_{0:k}
    double d_kl = 0.0;  // per-step term with the window y_{l:k} only
    double gap = 0.0;
    double bound = 0.0;
};

namespace detail {

/// Per-step term at the end of a filter run over y[first..k] started from
/// `initial` (y[first] plays the role of the conditioning origin).
inline double window_last_term(const ModelSpec& spec, const std::vector<double>& y, int first,
                               int k, const Eigen::VectorXd& initial) {
    FilterState st = filter_init(spec, initial);
    double d = 0.0;
    for (int t = first + 1; t <= k; ++t) d = filter_step(st, y[t - 1], y[t], spec);
    return d;
}

}  // namespace detail

/// Computes D_{k,0} (filter started at the origin) and D_{k,l} (filter
/// re-initialized with the model's initial distribution at time l) for one
/// (k, l) pair, plus their gap and the forgetting bound.
inline ForgettingRecord windowed_step_terms(const ModelSpec& spec, const std::vector<double>& y,
                                            int k, int l) {
    require_valid(spec);
    const int n = static_cast<int>(y.size()) - 1;
    if (!(0 <= l && l < k && k <= n))
        throw ArgumentError("windowed_step_terms: need 0 <= l < k <= n");
    const double delta = spec.transition.delta();
    if (!(delta > 0.0))
        throw DomainError("forgetting bound requires min a_{ij} > 0");

    const Eigen::VectorXd init = effective_initial(spec);
    ForgettingRecord rec;
    rec.k = k;
    rec.l = l;
    rec.d_k0 = detail::window_last_term(spec, y, 0, k, init);
    rec.d_kl = detail::window_last_term(spec, y, l, k, init);
    rec.gap = std::abs(rec.d_kl - rec.d_k0);
    rec.bound = 2.0 / delta * std::pow(1.0 - delta, k - 1 - l);
    return rec;
}

/// Sweep of windowed records: for each window length g in `lags`, every k
/// with l = k - 1 - g >= 0. The full-history terms are computed once.
inline std::vector<ForgettingRecord> forgetting_sweep(const ModelSpec& spec,
                                                      const std::vector<double>& y,
                                                      const std::vector<int>& lags) {
    require_valid(spec);
    const int n = static_cast<int>(y.size()) - 1;
    const double delta = spec.transition.delta();
    if (!(delta > 0.0))
        throw DomainError("forgetting bound requires min a_{ij} > 0");
    const Eigen::VectorXd init = effective_initial(spec);
    const std::vector<double> d_full = per_step_terms(spec, y, init);

    std::vector<ForgettingRecord> out;
    for (int g : lags) {
        if (g < 1) throw ArgumentError("forgetting_sweep: lags must be >= 1");
        for (int k = g + 1; k <= n; ++k) {
            const int l = k - 1 - g;
            ForgettingRecord rec;
            rec.k = k;
            rec.l = l;
            rec.d_k0 = d_full[k - 1];
            rec.d_kl = detail::window_last_term(spec, y, l, k, init);
            rec.gap = std::abs(rec.d_kl - rec.d_k0);
            rec.bound = 2.0 / delta * std::pow(1.0 - delta, g);
            out.push_back(rec);
        }
    }
    return out;
}

namespace detail {

/// One normalized forward-backward pass. Row k-1 of each matrix refers to
/// step k (observations y_1..y_n). `ghat` holds emission densities scaled by
/// exp(-gmax_k); `chat` are the correspondingly scaled step normalizers, so
/// D_k = log(chat_k) + gmax_k.
struct ForwardBackward {
    Eigen::MatrixXd predictive;  // n x m
    Eigen::MatrixXd filtered;    // n x m
    Eigen::MatrixXd backward;    // n x m (normalized)
    Eigen::MatrixXd ghat;        // n x m
    Eigen::VectorXd chat;        // n
    Eigen::VectorXd gmax;        // n
    double loglik = 0.0;
};

inline ForwardBackward forward_backward(const ModelSpec& spec, const std::vector<double>& y,
                                        const Eigen::VectorXd& initial) {
    const int m = spec.regime_count();
    const int n = static_cast<int>(y.size()) - 1;
    if (n < 1) throw ArgumentError("forward_backward: need at least y_0 and y_1");

    ForwardBackward fb;
    fb.predictive.resize(n, m);
    fb.filtered.resize(n, m);
    fb.backward.resize(n, m);
    fb.ghat.resize(n, m);
    fb.chat.resize(n);
    fb.gmax.resize(n);

    Eigen::VectorXd logg(m), pred = initial;
    const Eigen::MatrixXd& a = spec.transition.entries();
    for (int k = 1; k <= n; ++k) {
        emission_logdensities(y[k], y[k - 1], spec, logg);
        const double mx = logg.maxCoeff();
        fb.gmax[k - 1] = mx;
        double sum = 0.0;
        for (int i = 0; i < m; ++i) {
            const double g = std::exp(logg[i] - mx);
            fb.ghat(k - 1, i) = g;
            const double w = pred[i] * g;
            fb.filtered(k - 1, i) = w;
            sum += w;
        }
        if (!(sum > 0.0) || !std::isfinite(sum))
            throw NumericError("forward_backward: step " + std::to_string(k) + " underflowed");
        fb.predictive.row(k - 1) = pred.transpose();
        fb.chat[k - 1] = sum;
        fb.filtered.row(k - 1) /= sum;
        fb.loglik += std::log(sum) + mx;
        for (int j = 0; j < m; ++j) {
            double acc = 0.0;
            for (int i = 0; i < m; ++i) acc += fb.filtered(k - 1, i) * a(i, j);
            pred[j] = acc;
        }
        pred /= pred.sum();
    }

    fb.backward.row(n - 1).setOnes();
    for (int k = n - 1; k >= 1; --k) {
        for (int i = 0; i < m; ++i) {
            double acc = 0.0;
            for (int j = 0; j < m; ++j)
                acc += a(i, j) * fb.ghat(k, j) * fb.backward(k, j);
            fb.backward(k - 1, i) = acc / fb.chat[k];
        }
    }
    return fb;
}

}  // namespace detail

/// Smoothed regime probabilities P(X_k = i | Y_{0:n}) for k = 1..n, via the
/// normalized backward recursion combined with the filtered distributions.
inline Eigen::MatrixXd smoothed_regime_probabilities(const ModelSpec& spec,
                                                     const std::vector<double>& y) {
    require_valid(spec);
    const auto fb = detail::forward_backward(spec, y, effective_initial(spec));
    Eigen::MatrixXd s = fb.filtered.cwiseProduct(fb.backward);
    for (Eigen::Index k = 0; k < s.rows(); ++k) s.row(k) /= s.row(k).sum();
    return s;
}

}  // namespace msar
