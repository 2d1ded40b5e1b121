#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <limits>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include <Eigen/Dense>

#include "msar/filter.hpp"
#include "msar/model.hpp"
#include "msar/nelder_mead.hpp"
#include "msar/rng.hpp"

namespace msar {

/// Slope structure of the fitted family: one slope per regime, a single
/// shared slope, or all slopes pinned to zero (the LRT null).
enum class SlopeMode { Free, Tied, Zero };
enum class SigmaMode { Shared, PerRegime };

inline const char* to_string(SlopeMode m) {
    switch (m) {
        case SlopeMode::Free: return "free";
        case SlopeMode::Tied: return "tied";
        default: return "zero";
    }
}
inline const char* to_string(SigmaMode m) {
    return m == SigmaMode::Shared ? "shared" : "per-regime";
}

inline constexpr double kLogitClip = 30.0;
inline constexpr double kLogSigmaClip = 10.0;

/// Shape of the unconstrained parameter vector: m(m-1) transition logits
/// (last logit of each row pinned to 0), the regime-parameter block, then
/// log sigma (one entry, or m).
struct ParamLayout {
    int m = 1;
    SlopeMode slope_mode = SlopeMode::Free;
    SigmaMode sigma_mode = SigmaMode::Shared;

    int transition_dim() const { return m * (m - 1); }
    int regime_dim() const {
        switch (slope_mode) {
            case SlopeMode::Free: return 2 * m;
            case SlopeMode::Tied: return m + 1;
            default: return m;
        }
    }
    int sigma_dim() const { return sigma_mode == SigmaMode::Shared ? 1 : m; }
    int dim() const { return transition_dim() + regime_dim() + sigma_dim(); }

    /// Names of the unconstrained coordinates, in vector order.
    std::vector<std::string> names() const {
        std::vector<std::string> out;
        for (int i = 0; i < m; ++i)
            for (int j = 0; j + 1 < m; ++j)
                out.push_back("logit_a_" + std::to_string(i + 1) + "_" + std::to_string(j + 1));
        if (slope_mode == SlopeMode::Free) {
            for (int i = 0; i < m; ++i) {
                out.push_back("b_" + std::to_string(i + 1));
                out.push_back("rho_" + std::to_string(i + 1));
            }
        } else {
            for (int i = 0; i < m; ++i) out.push_back("b_" + std::to_string(i + 1));
            if (slope_mode == SlopeMode::Tied) out.push_back("rho");
        }
        if (sigma_mode == SigmaMode::Shared) {
            out.push_back("log_sigma");
        } else {
            for (int i = 0; i < m; ++i) out.push_back("log_sigma_" + std::to_string(i + 1));
        }
        return out;
    }

    /// Names of the natural coordinates reported by experiments:
    /// slopes, intercepts, sigma, then the free transition entries (j < m).
    std::vector<std::string> natural_names() const {
        std::vector<std::string> out;
        if (slope_mode == SlopeMode::Free) {
            for (int i = 0; i < m; ++i) out.push_back("rho_" + std::to_string(i + 1));
        } else if (slope_mode == SlopeMode::Tied) {
            out.push_back("rho");
        }
        for (int i = 0; i < m; ++i) out.push_back("b_" + std::to_string(i + 1));
        if (sigma_mode == SigmaMode::Shared) {
            out.push_back("sigma");
        } else {
            for (int i = 0; i < m; ++i) out.push_back("sigma_" + std::to_string(i + 1));
        }
        for (int i = 0; i < m; ++i)
            for (int j = 0; j + 1 < m; ++j)
                out.push_back("a_" + std::to_string(i + 1) + "_" + std::to_string(j + 1));
        return out;
    }
};

/// Maps any real vector to a valid ModelSpec. Transition rows go through a
/// softmax with the last logit pinned to 0 and logits clipped to +-30;
/// sigma through exp with log sigma clipped to [-10, 10]. The produced spec
/// carries the uniform initial distribution: the estimation objective pins
/// the filter start so both optimizers maximize the same function.
inline ModelSpec constrain(const Eigen::VectorXd& v, const ParamLayout& layout) {
    const int m = layout.m;
    if (v.size() != layout.dim()) throw ArgumentError("constrain: wrong vector dimension");

    Eigen::MatrixXd a(m, m);
    for (int i = 0; i < m; ++i) {
        Eigen::VectorXd logits = Eigen::VectorXd::Zero(m);
        for (int j = 0; j + 1 < m; ++j)
            logits[j] = std::clamp(v[i * (m - 1) + j], -kLogitClip, kLogitClip);
        const double mx = logits.maxCoeff();
        double sum = 0.0;
        for (int j = 0; j < m; ++j) {
            a(i, j) = std::exp(logits[j] - mx);
            sum += a(i, j);
        }
        a.row(i) /= sum;
    }

    const int off = layout.transition_dim();
    Eigen::VectorXd b(m), rho(m);
    if (layout.slope_mode == SlopeMode::Free) {
        for (int i = 0; i < m; ++i) {
            b[i] = v[off + 2 * i];
            rho[i] = v[off + 2 * i + 1];
        }
    } else {
        for (int i = 0; i < m; ++i) b[i] = v[off + i];
        const double shared = layout.slope_mode == SlopeMode::Tied ? v[off + m] : 0.0;
        rho.setConstant(shared);
    }

    const int soff = off + layout.regime_dim();
    Eigen::VectorXd sigma(layout.sigma_dim());
    for (int i = 0; i < sigma.size(); ++i)
        sigma[i] = std::exp(std::clamp(v[soff + i], -kLogSigmaClip, kLogSigmaClip));

    ModelSpec spec{TransitionMatrix(std::move(a)), RegimeParams::linear(b, rho),
                   layout.sigma_mode == SigmaMode::Shared
                       ? NoiseSpec::gaussian_shared(sigma[0])
                       : NoiseSpec::gaussian_per_regime(sigma),
                   Eigen::VectorXd::Constant(m, 1.0 / m), MeanFamily{}};
    return spec;
}

/// Inverse of constrain on the interior of the parameter space.
inline Eigen::VectorXd unconstrain(const ModelSpec& spec, const ParamLayout& layout) {
    const int m = layout.m;
    if (spec.regime_count() != m) throw ArgumentError("unconstrain: regime count mismatch");
    if (!spec.family.linear()) throw ArgumentError("unconstrain: linear family required");
    if (!spec.noise.gaussian()) throw ArgumentError("unconstrain: Gaussian noise required");

    Eigen::VectorXd v(layout.dim());
    const Eigen::MatrixXd& a = spec.transition.entries();
    auto safe_log = [](double x) {
        return x > 0.0 ? std::log(x) : -std::numeric_limits<double>::infinity();
    };
    for (int i = 0; i < m; ++i) {
        const double ref = safe_log(a(i, m - 1));
        for (int j = 0; j + 1 < m; ++j)
            v[i * (m - 1) + j] = std::clamp(safe_log(a(i, j)) - ref, -kLogitClip, kLogitClip);
    }

    const int off = layout.transition_dim();
    if (layout.slope_mode == SlopeMode::Free) {
        for (int i = 0; i < m; ++i) {
            v[off + 2 * i] = spec.regimes.intercept(i);
            v[off + 2 * i + 1] = spec.regimes.slope(i);
        }
    } else {
        for (int i = 0; i < m; ++i) v[off + i] = spec.regimes.intercept(i);
        if (layout.slope_mode == SlopeMode::Tied) {
            const double shared = spec.regimes.slope(0);
            for (int i = 1; i < m; ++i)
                if (std::abs(spec.regimes.slope(i) - shared) > 1e-8)
                    throw ArgumentError("unconstrain: tied layout requires equal slopes");
            v[off + m] = shared;
        } else {
            for (int i = 0; i < m; ++i)
                if (std::abs(spec.regimes.slope(i)) > 1e-12)
                    throw ArgumentError("unconstrain: zero layout requires zero slopes");
        }
    }

    const int soff = off + layout.regime_dim();
    if (layout.sigma_mode == SigmaMode::Shared) {
        if (!spec.noise.shared_sigma())
            throw ArgumentError("unconstrain: shared-sigma layout, per-regime spec");
        v[soff] = std::clamp(std::log(spec.noise.sigma[0]), -kLogSigmaClip, kLogSigmaClip);
    } else {
        for (int i = 0; i < m; ++i)
            v[soff + i] =
                std::clamp(std::log(spec.noise.sigma_for(i)), -kLogSigmaClip, kLogSigmaClip);
    }
    return v;
}

/// Natural-coordinate view (slopes, intercepts, sigma, free transition
/// entries) used for error reporting in experiments.
inline Eigen::VectorXd natural_params(const ModelSpec& spec, const ParamLayout& layout) {
    const int m = layout.m;
    std::vector<double> out;
    if (layout.slope_mode == SlopeMode::Free) {
        for (int i = 0; i < m; ++i) out.push_back(spec.regimes.slope(i));
    } else if (layout.slope_mode == SlopeMode::Tied) {
        out.push_back(spec.regimes.slope(0));
    }
    for (int i = 0; i < m; ++i) out.push_back(spec.regimes.intercept(i));
    if (layout.sigma_mode == SigmaMode::Shared) {
        out.push_back(spec.noise.sigma_for(0));
    } else {
        for (int i = 0; i < m; ++i) out.push_back(spec.noise.sigma_for(i));
    }
    for (int i = 0; i < m; ++i)
        for (int j = 0; j + 1 < m; ++j) out.push_back(spec.transition(i, j));
    return Eigen::Map<Eigen::VectorXd>(out.data(), static_cast<Eigen::Index>(out.size()));
}

/// Rebuilds a spec so it conforms to the requested slope/sigma structure
/// (tying averages the slopes; zeroing drops them). Used to adapt initial
/// points.
inline ModelSpec conform_to_layout(const ModelSpec& spec, const ParamLayout& layout) {
    const int m = layout.m;
    if (spec.regime_count() != m) throw ArgumentError("conform_to_layout: m mismatch");
    Eigen::VectorXd b(m), rho(m);
    for (int i = 0; i < m; ++i) b[i] = spec.regimes.intercept(i);
    if (layout.slope_mode == SlopeMode::Free) {
        for (int i = 0; i < m; ++i) rho[i] = spec.regimes.slope(i);
    } else if (layout.slope_mode == SlopeMode::Tied) {
        double mean_slope = 0.0;
        for (int i = 0; i < m; ++i) mean_slope += spec.regimes.slope(i);
        rho.setConstant(mean_slope / m);
    } else {
        rho.setZero();
    }
    NoiseSpec noise;
    if (layout.sigma_mode == SigmaMode::Shared) {
        double s = 0.0;
        for (int i = 0; i < m; ++i) s += spec.noise.sigma_for(i);
        noise = NoiseSpec::gaussian_shared(s / m);
    } else {
        Eigen::VectorXd sv(m);
        for (int i = 0; i < m; ++i) sv[i] = spec.noise.sigma_for(i);
        noise = NoiseSpec::gaussian_per_regime(sv);
    }
    return ModelSpec{spec.transition, RegimeParams::linear(b, rho), noise,
                     Eigen::VectorXd::Constant(m, 1.0 / m), MeanFamily{}};
}

struct OptimizerTrace {
    std::string method;
    int iterations = 0;
    long evaluations = 0;
    bool converged = false;
    bool clip_active = false;
    std::vector<double> loglik_trace;
    std::vector<std::string> warnings;
};

struct FitResult {
    ModelSpec psi_hat;
    ParamLayout layout;
    double loglik_at_max = -std::numeric_limits<double>::infinity();
    Eigen::MatrixXd information;      // J = -Hessian of n^{-1} l_n, unconstrained coords
    Eigen::MatrixXd information_opg;  // outer product of per-step score increments
    Eigen::VectorXd information_eigenvalues;
    bool information_flagged = false;
    Eigen::VectorXd standard_errors;  // sqrt(diag(J^{-1}) / n)
    OptimizerTrace trace;
    std::vector<int> label_permutation;
    std::size_t data_n = 0;
    std::uint64_t data_hash = 0;
};

namespace detail {

inline std::uint64_t fnv1a_hash(const std::vector<double>& y) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (double d : y) {
        std::uint64_t bits;
        static_assert(sizeof(bits) == sizeof(d));
        std::memcpy(&bits, &d, sizeof(bits));
        for (int i = 0; i < 8; ++i) {
            h ^= (bits >> (8 * i)) & 0xffULL;
            h *= 0x100000001b3ULL;
        }
    }
    return h;
}

}  // namespace detail

/// Sorts regimes lexicographically by (slope, intercept, sigma) and applies
/// the same permutation to the transition matrix rows and columns and to the
/// initial distribution; the likelihood is invariant under this relabeling.
/// perm[i] is the old index of the regime now labeled i. Exact key ties
/// throw TieError (the regimes are then indistinguishable).
inline std::pair<ModelSpec, std::vector<int>> canonicalize_labels(const ModelSpec& spec) {
    const int m = spec.regime_count();
    auto key = [&spec](int i) {
        std::vector<double> k;
        if (spec.family.linear()) {
            k.push_back(spec.regimes.slope(i));
            k.push_back(spec.regimes.intercept(i));
        } else {
            const Eigen::VectorXd r = spec.regimes.row(i);
            k.assign(r.data(), r.data() + r.size());
        }
        k.push_back(spec.noise.gaussian() ? spec.noise.sigma_for(i) : 0.0);
        return k;
    };
    std::vector<int> perm(m);
    for (int i = 0; i < m; ++i) perm[i] = i;
    std::stable_sort(perm.begin(), perm.end(),
                     [&key](int a, int b) { return key(a) < key(b); });
    for (int i = 0; i + 1 < m; ++i)
        if (key(perm[i]) == key(perm[i + 1]))
            throw TieError("canonicalize_labels: regimes are indistinguishable");

    Eigen::MatrixXd a(m, m), theta(m, spec.regimes.dim());
    for (int i = 0; i < m; ++i) {
        theta.row(i) = spec.regimes.matrix().row(perm[i]);
        for (int j = 0; j < m; ++j) a(i, j) = spec.transition(perm[i], perm[j]);
    }
    NoiseSpec noise = spec.noise;
    if (noise.sigma.size() == m) {
        Eigen::VectorXd s(m);
        for (int i = 0; i < m; ++i) s[i] = spec.noise.sigma[perm[i]];
        noise.sigma = s;
    }
    std::optional<Eigen::VectorXd> initial;
    if (spec.initial) {
        Eigen::VectorXd v(m);
        for (int i = 0; i < m; ++i) v[i] = (*spec.initial)[perm[i]];
        initial = v;
    }
    ModelSpec out{TransitionMatrix(std::move(a)), RegimeParams(std::move(theta)), noise,
                  initial, spec.family};
    return {out, perm};
}

/// Gradient of n^{-1} l_n, the negative-Hessian information estimate, and
/// the outer-product-of-gradients estimate, all in unconstrained coordinates
/// via central finite differences with per-coordinate step eps^(1/3).
struct ScoreInfo {
    Eigen::VectorXd gradient;
    Eigen::MatrixXd information;  // -Hessian of n^{-1} l_n
    Eigen::MatrixXd opg;
    Eigen::VectorXd eigenvalues;  // of `information`
};

inline ScoreInfo score_and_information(const ModelSpec& spec, const std::vector<double>& y,
                                       const ParamLayout& layout) {
    const Eigen::VectorXd v0 = unconstrain(spec, layout);
    const int p = static_cast<int>(v0.size());
    const int n = static_cast<int>(y.size()) - 1;
    if (n < 1) throw ArgumentError("score_and_information: need at least y_0 and y_1");
    const std::vector<std::string> names = layout.names();

    const double cbrt_eps = std::cbrt(std::numeric_limits<double>::epsilon());
    Eigen::VectorXd h(p);
    for (int i = 0; i < p; ++i) h[i] = cbrt_eps * std::max(1.0, std::abs(v0[i]));

    auto eval_terms = [&](const Eigen::VectorXd& v) {
        return per_step_terms(constrain(v, layout), y,
                              Eigen::VectorXd::Constant(layout.m, 1.0 / layout.m));
    };
    auto eval_mean = [&](const Eigen::VectorXd& v) {
        const auto terms = eval_terms(v);
        double s = 0.0;
        for (double t : terms) s += t;
        return s / n;
    };

    const double g0 = eval_mean(v0);
    Eigen::VectorXd gplus(p), gminus(p), gradient(p);
    Eigen::MatrixXd scores(n, p);  // per-step score increments
    for (int i = 0; i < p; ++i) {
        Eigen::VectorXd vp = v0, vm = v0;
        vp[i] += h[i];
        vm[i] -= h[i];
        const auto tp = eval_terms(vp);
        const auto tm = eval_terms(vm);
        double sp = 0.0, sm = 0.0;
        for (int k = 0; k < n; ++k) {
            scores(k, i) = (tp[k] - tm[k]) / (2.0 * h[i]);
            sp += tp[k];
            sm += tm[k];
        }
        gplus[i] = sp / n;
        gminus[i] = sm / n;
        gradient[i] = (gplus[i] - gminus[i]) / (2.0 * h[i]);
        if (!std::isfinite(gradient[i]))
            throw NumericError("score_and_information: non-finite difference in " + names[i]);
    }

    Eigen::MatrixXd hess(p, p);
    for (int i = 0; i < p; ++i)
        hess(i, i) = (gplus[i] - 2.0 * g0 + gminus[i]) / (h[i] * h[i]);
    for (int i = 0; i < p; ++i) {
        for (int j = i + 1; j < p; ++j) {
            Eigen::VectorXd vpp = v0, vpm = v0, vmp = v0, vmm = v0;
            vpp[i] += h[i]; vpp[j] += h[j];
            vpm[i] += h[i]; vpm[j] -= h[j];
            vmp[i] -= h[i]; vmp[j] += h[j];
            vmm[i] -= h[i]; vmm[j] -= h[j];
            const double d = (eval_mean(vpp) - eval_mean(vpm) - eval_mean(vmp) + eval_mean(vmm)) /
                             (4.0 * h[i] * h[j]);
            if (!std::isfinite(d))
                throw NumericError("score_and_information: non-finite difference in " +
                                   names[i] + "/" + names[j]);
            hess(i, j) = hess(j, i) = d;
        }
    }

    ScoreInfo out;
    out.gradient = gradient;
    out.information = -0.5 * (hess + hess.transpose());
    const Eigen::VectorXd mean_score = scores.colwise().mean();
    Eigen::MatrixXd centered = scores.rowwise() - mean_score.transpose();
    out.opg = centered.transpose() * centered / static_cast<double>(n);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(out.information);
    out.eigenvalues = es.eigenvalues();
    return out;
}

namespace detail {

/// Fills information/SE fields of a fit result from a ScoreInfo.
inline void attach_information(FitResult& fit, const ScoreInfo& si, int n) {
    fit.information = si.information;
    fit.information_opg = si.opg;
    fit.information_eigenvalues = si.eigenvalues;
    const double lmin = si.eigenvalues.minCoeff();
    const double lmax = si.eigenvalues.maxCoeff();
    fit.information_flagged =
        lmin < -1e-8 || lmin <= 0.0 || (lmax / lmin) > 1e10 || !std::isfinite(lmax);
    const int p = static_cast<int>(si.eigenvalues.size());
    fit.standard_errors = Eigen::VectorXd::Constant(p, std::numeric_limits<double>::quiet_NaN());
    if (!fit.information_flagged) {
        const Eigen::MatrixXd inv = si.information.inverse();
        for (int i = 0; i < p; ++i)
            fit.standard_errors[i] = std::sqrt(std::max(0.0, inv(i, i)) / n);
    }
}

inline bool clip_active(const Eigen::VectorXd& v, const ParamLayout& layout) {
    const double edge = 1e-9;
    for (int i = 0; i < layout.transition_dim(); ++i)
        if (std::abs(v[i]) >= kLogitClip - edge) return true;
    const int soff = layout.transition_dim() + layout.regime_dim();
    for (int i = soff; i < layout.dim(); ++i)
        if (std::abs(v[i]) >= kLogSigmaClip - edge) return true;
    return false;
}

/// Seeded multistart points around a global AR(1) least-squares fit.
inline std::vector<Eigen::VectorXd> default_starts(const std::vector<double>& y,
                                                   const ParamLayout& layout, int count,
                                                   std::uint64_t seed) {
    const int n = static_cast<int>(y.size()) - 1;
    double sx = 0, sz = 0, sxx = 0, sxz = 0;
    for (int k = 1; k <= n; ++k) {
        sx += y[k - 1];
        sz += y[k];
        sxx += y[k - 1] * y[k - 1];
        sxz += y[k - 1] * y[k];
    }
    const double det = n * sxx - sx * sx;
    double slope = 0.0, intercept = sz / n;
    if (std::abs(det) > 1e-12 * std::max(1.0, n * sxx)) {
        slope = (n * sxz - sx * sz) / det;
        intercept = (sz - slope * sx) / n;
    }
    double rss = 0.0;
    for (int k = 1; k <= n; ++k) {
        const double r = y[k] - slope * y[k - 1] - intercept;
        rss += r * r;
    }
    const double sd = std::max(1e-6, std::sqrt(rss / n));

    std::vector<Eigen::VectorXd> starts;
    for (int r = 0; r < count; ++r) {
        Rng rng = Rng::stream(seed, 9000 + static_cast<std::uint64_t>(r));
        const double scale = r == 0 ? 0.3 : 1.0;
        Eigen::VectorXd v = Eigen::VectorXd::Zero(layout.dim());
        for (int i = 0; i < layout.transition_dim(); ++i) v[i] = 0.5 * scale * rng.normal();
        const int off = layout.transition_dim();
        if (layout.slope_mode == SlopeMode::Free) {
            for (int i = 0; i < layout.m; ++i) {
                v[off + 2 * i] = intercept + 1.2 * scale * sd * rng.normal();
                v[off + 2 * i + 1] = std::clamp(slope + 0.4 * scale * rng.normal(), -1.4, 1.4);
            }
        } else {
            for (int i = 0; i < layout.m; ++i)
                v[off + i] = intercept + 1.2 * scale * sd * rng.normal();
            if (layout.slope_mode == SlopeMode::Tied)
                v[off + layout.m] = std::clamp(slope + 0.4 * scale * rng.normal(), -1.4, 1.4);
        }
        const int soff = off + layout.regime_dim();
        for (int i = soff; i < layout.dim(); ++i)
            v[i] = std::log(sd) + 0.3 * scale * rng.normal();
        starts.push_back(std::move(v));
    }
    return starts;
}

}  // namespace detail

struct FitOptions {
    SlopeMode slope_mode = SlopeMode::Free;
    SigmaMode sigma_mode = SigmaMode::Shared;
    int starts = 10;
    std::uint64_t seed = 0;
    double tol = 1e-8;
    int max_iter = 20000;
    int restarts = 2;
    std::optional<ModelSpec> init;
    bool compute_information = true;
    bool canonicalize = true;
};

namespace detail {

/// Common tail of both fitters: canonicalize, attach information, fingerprint.
inline FitResult finish_fit(ModelSpec psi, double loglik, const ParamLayout& layout,
                            OptimizerTrace trace, const std::vector<double>& y,
                            bool compute_information, bool canonicalize) {
    FitResult fit;
    fit.layout = layout;
    fit.loglik_at_max = loglik;
    fit.label_permutation.resize(layout.m);
    for (int i = 0; i < layout.m; ++i) fit.label_permutation[i] = i;
    if (canonicalize && layout.m > 1) {
        try {
            auto [canon, perm] = canonicalize_labels(psi);
            psi = canon;
            fit.label_permutation = perm;
        } catch (const TieError&) {
            trace.warnings.push_back("regimes tied exactly; labels left as found");
        }
    }
    trace.clip_active = clip_active(unconstrain(psi, layout), layout);
    fit.psi_hat = psi;
    fit.trace = std::move(trace);
    fit.data_n = y.size();
    fit.data_hash = fnv1a_hash(y);
    if (compute_information)
        attach_information(fit, score_and_information(psi, y, layout),
                           static_cast<int>(y.size()) - 1);
    return fit;
}

}  // namespace detail

/// Maximum-likelihood fit by the downhill simplex in unconstrained
/// coordinates. With no explicit init, `starts` seeded points around a
/// global AR(1) fit are tried and the best local maximum wins. The returned
/// model is canonicalized (sorted regime labels).
inline FitResult fit_mle(const std::vector<double>& y, int m, FitOptions opt = {}) {
    if (y.size() < 2) throw ArgumentError("fit_mle: need at least y_0 and y_1");
    const ParamLayout layout{m, opt.slope_mode, opt.sigma_mode};

    OptimizerTrace trace;
    trace.method = "simplex";
    if (static_cast<int>(y.size()) - 1 < 10 * layout.dim())
        trace.warnings.push_back("series shorter than 10 x dim(psi); estimates may be unstable");

    auto objective = [&](const Eigen::VectorXd& v) {
        return -log_likelihood(constrain(v, layout), y,
                               Eigen::VectorXd::Constant(m, 1.0 / m));
    };

    std::vector<Eigen::VectorXd> starts;
    if (opt.init) {
        starts.push_back(unconstrain(conform_to_layout(*opt.init, layout), layout));
    } else {
        starts = detail::default_starts(y, layout, opt.starts, opt.seed);
    }

    NelderMeadOptions nm;
    nm.tol = opt.tol;
    nm.max_iter = opt.max_iter;
    nm.restarts = opt.restarts;

    bool any_finite = false;
    double best = std::numeric_limits<double>::infinity();
    double best_init = std::numeric_limits<double>::infinity();
    Eigen::VectorXd best_x;
    bool best_converged = false;
    for (const auto& s : starts) {
        const double f0 = objective(s);
        best_init = std::min(best_init, f0);
        const NelderMeadResult r = nelder_mead_minimize(objective, s, nm);
        trace.iterations += r.iterations;
        trace.evaluations += r.evaluations + 1;
        trace.loglik_trace.push_back(-r.fmin);
        if (std::isfinite(r.fmin) && r.fmin < best) {
            best = r.fmin;
            best_x = r.x;
            best_converged = r.converged;
            any_finite = true;
        }
    }
    if (!any_finite || best > best_init)
        throw OptimizationError("fit_mle: no start improved the objective");
    trace.converged = best_converged;

    return detail::finish_fit(constrain(best_x, layout), -best, layout, std::move(trace), y,
                              opt.compute_information, opt.canonicalize);
}

struct EmOptions {
    SlopeMode slope_mode = SlopeMode::Free;
    SigmaMode sigma_mode = SigmaMode::Shared;
    int max_iter = 1000;
    double tol = 1e-9;
    bool compute_information = true;
    bool canonicalize = true;
};

/// Baum-Welch-style EM for the linear Gaussian family. The E-step uses the
/// forward-backward smoother; the M-step is weighted least squares per
/// regime (jointly with a shared slope in tied mode), weighted residual
/// variance for sigma, and row-normalized expected transition counts for A.
/// The likelihood trace is checked to be nondecreasing within 1e-10.
inline FitResult em_fit(const std::vector<double>& y, const ModelSpec& init,
                        EmOptions opt = {}) {
    if (y.size() < 2) throw ArgumentError("em_fit: need at least y_0 and y_1");
    if (!init.family.linear() || !init.noise.gaussian())
        throw ArgumentError("em_fit: requires the linear Gaussian family");
    const int m = init.regime_count();
    const int n = static_cast<int>(y.size()) - 1;
    const ParamLayout layout{m, opt.slope_mode, opt.sigma_mode};
    const Eigen::VectorXd uniform = Eigen::VectorXd::Constant(m, 1.0 / m);

    OptimizerTrace trace;
    trace.method = "em";
    if (n < 10 * layout.dim())
        trace.warnings.push_back("series shorter than 10 x dim(psi); estimates may be unstable");

    ModelSpec current = conform_to_layout(init, layout);
    double prev_l = -std::numeric_limits<double>::infinity();
    double l = prev_l;
    for (int iter = 0; iter < opt.max_iter; ++iter) {
        const auto fb = detail::forward_backward(current, y, uniform);
        l = fb.loglik;
        trace.loglik_trace.push_back(l);
        ++trace.iterations;
        ++trace.evaluations;
        if (iter > 0) {
            if (l < prev_l - 1e-10)
                throw NumericError("em_fit: likelihood decreased by " +
                                   std::to_string(prev_l - l));
            if (l - prev_l < opt.tol) {
                trace.converged = true;
                break;
            }
        }
        prev_l = l;

        // Smoothed occupation weights.
        Eigen::MatrixXd s = fb.filtered.cwiseProduct(fb.backward);
        for (int k = 0; k < n; ++k) s.row(k) /= s.row(k).sum();

        // Expected transition counts from pairwise smoothing.
        const Eigen::MatrixXd& a = current.transition.entries();
        Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(m, m);
        for (int k = 1; k < n; ++k) {
            for (int i = 0; i < m; ++i) {
                const double fi = fb.filtered(k - 1, i);
                if (fi == 0.0) continue;
                for (int j = 0; j < m; ++j)
                    counts(i, j) += fi * a(i, j) * fb.ghat(k, j) * fb.backward(k, j) / fb.chat[k];
            }
        }

        // Weighted sums for the regression M-step.
        Eigen::VectorXd W(m), Sx(m), Sy(m), Sxx(m), Sxy(m);
        W.setZero(); Sx.setZero(); Sy.setZero(); Sxx.setZero(); Sxy.setZero();
        for (int k = 1; k <= n; ++k) {
            const double x = y[k - 1], z = y[k];
            for (int i = 0; i < m; ++i) {
                const double w = s(k - 1, i);
                W[i] += w;
                Sx[i] += w * x;
                Sy[i] += w * z;
                Sxx[i] += w * x * x;
                Sxy[i] += w * x * z;
            }
        }
        for (int i = 0; i < m; ++i)
            if (W[i] < 1e-8)
                throw OptimizationError("em_fit: regime " + std::to_string(i + 1) +
                                        " received negligible weight; consider fewer regimes");

        Eigen::VectorXd b(m), rho(m);
        if (opt.slope_mode == SlopeMode::Free) {
            for (int i = 0; i < m; ++i) {
                const double det = W[i] * Sxx[i] - Sx[i] * Sx[i];
                if (std::abs(det) > 1e-12 * std::max(1.0, W[i] * Sxx[i])) {
                    b[i] = (Sxx[i] * Sy[i] - Sx[i] * Sxy[i]) / det;
                    rho[i] = (W[i] * Sxy[i] - Sx[i] * Sy[i]) / det;
                } else {
                    b[i] = Sy[i] / W[i];
                    rho[i] = 0.0;
                    trace.warnings.push_back("regime " + std::to_string(i + 1) +
                                             ": regressor degenerate, slope pinned to 0");
                }
            }
        } else if (opt.slope_mode == SlopeMode::Tied) {
            double num = 0.0, den = 0.0;
            for (int i = 0; i < m; ++i) {
                num += Sxy[i] - Sx[i] * Sy[i] / W[i];
                den += Sxx[i] - Sx[i] * Sx[i] / W[i];
            }
            double shared = 0.0;
            if (std::abs(den) > 1e-12 * std::max(1.0, Sxx.sum())) {
                shared = num / den;
            } else {
                trace.warnings.push_back("tied slope: regressor degenerate, slope pinned to 0");
            }
            rho.setConstant(shared);
            for (int i = 0; i < m; ++i) b[i] = (Sy[i] - shared * Sx[i]) / W[i];
        } else {
            rho.setZero();
            for (int i = 0; i < m; ++i) b[i] = Sy[i] / W[i];
        }

        // Weighted residual variance.
        Eigen::VectorXd rss = Eigen::VectorXd::Zero(m);
        for (int k = 1; k <= n; ++k) {
            for (int i = 0; i < m; ++i) {
                const double r = y[k] - rho[i] * y[k - 1] - b[i];
                rss[i] += s(k - 1, i) * r * r;
            }
        }
        const double sigma_floor = std::exp(-kLogSigmaClip);
        NoiseSpec noise;
        if (opt.sigma_mode == SigmaMode::Shared) {
            double v = rss.sum() / n;
            if (v < sigma_floor * sigma_floor) {
                v = sigma_floor * sigma_floor;
                trace.warnings.push_back("sigma hit the lower clip");
            }
            noise = NoiseSpec::gaussian_shared(std::sqrt(v));
        } else {
            Eigen::VectorXd sv(m);
            for (int i = 0; i < m; ++i) {
                double v = rss[i] / W[i];
                if (v < sigma_floor * sigma_floor) {
                    v = sigma_floor * sigma_floor;
                    trace.warnings.push_back("sigma hit the lower clip");
                }
                sv[i] = std::sqrt(v);
            }
            noise = NoiseSpec::gaussian_per_regime(sv);
        }

        Eigen::MatrixXd new_a(m, m);
        for (int i = 0; i < m; ++i) {
            const double rowsum = counts.row(i).sum();
            if (rowsum < 1e-12)
                throw OptimizationError("em_fit: regime " + std::to_string(i + 1) +
                                        " has no expected transitions; consider fewer regimes");
            new_a.row(i) = counts.row(i) / rowsum;
        }

        current = ModelSpec{TransitionMatrix(std::move(new_a)), RegimeParams::linear(b, rho),
                            noise, uniform, MeanFamily{}};
    }

    return detail::finish_fit(current, l, layout, std::move(trace), y,
                              opt.compute_information, opt.canonicalize);
}

/// Likelihood-ratio statistic -2 (l_null - l_full) for two fits of the same
/// data, clamped to zero within -1e-6 optimizer slack.
inline double lrt_statistic(const std::vector<double>& y, const FitResult& fit_full,
                            const FitResult& fit_null, std::string* warning = nullptr) {
    const std::uint64_t h = detail::fnv1a_hash(y);
    if (fit_full.data_n != y.size() || fit_null.data_n != y.size() ||
        fit_full.data_hash != h || fit_null.data_hash != h)
        throw ArgumentError("lrt_statistic: fits were not produced from this data");
    double stat = 2.0 * (fit_full.loglik_at_max - fit_null.loglik_at_max);
    if (stat < -1e-6)
        throw OptimizationError("lrt_statistic: null fit beats full fit beyond slack; refit");
    if (stat < 0.0) {
        if (warning) *warning = "statistic clamped to 0 from " + std::to_string(stat);
        stat = 0.0;
    }
    return stat;
}

}  // namespace msar
