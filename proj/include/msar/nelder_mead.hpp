#pragma once

#include <algorithm>
#include <functional>
#include <numeric>
#include <vector>

#include <Eigen/Dense>

#include "msar/errors.hpp"

namespace msar {

struct NelderMeadOptions {
    int max_iter = 20000;
    double tol = 1e-8;        // simplex spread |f_worst - f_best| for convergence
    double init_step = 0.25;  // initial simplex edge per coordinate
    int restarts = 2;         // rebuild the simplex around the incumbent, shrinking steps
};

struct NelderMeadResult {
    Eigen::VectorXd x;
    double fmin = 0.0;
    int iterations = 0;
    long evaluations = 0;
    bool converged = false;
};

/// Downhill simplex minimizer (reflection 1, expansion 2, contraction 1/2,
/// shrink 1/2). Restart rounds rebuild the simplex around the best point with
/// a tenth of the previous step, which tightens convergence on smooth
/// objectives.
inline NelderMeadResult nelder_mead_minimize(
    const std::function<double(const Eigen::VectorXd&)>& f, const Eigen::VectorXd& x0,
    const NelderMeadOptions& opt = {}) {
    const int n = static_cast<int>(x0.size());
    if (n < 1) throw ArgumentError("nelder_mead_minimize: empty parameter vector");

    NelderMeadResult res;
    res.x = x0;
    res.fmin = f(x0);
    res.evaluations = 1;

    double step = opt.init_step;
    for (int round = 0; round <= opt.restarts; ++round) {
        std::vector<Eigen::VectorXd> x(n + 1, res.x);
        std::vector<double> fx(n + 1);
        for (int i = 0; i < n; ++i) x[i + 1][i] += step;
        for (int i = 0; i <= n; ++i) {
            fx[i] = (i == 0) ? res.fmin : f(x[i]);
        }
        res.evaluations += n;

        std::vector<int> idx(n + 1);
        std::iota(idx.begin(), idx.end(), 0);
        bool settled = false;
        for (; res.iterations < opt.max_iter * (round + 1); ++res.iterations) {
            std::sort(idx.begin(), idx.end(), [&](int a, int b) { return fx[a] < fx[b]; });
            if (std::abs(fx[idx[n]] - fx[idx[0]]) <= opt.tol) {
                settled = true;
                break;
            }

            Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
            for (int i = 0; i < n; ++i) centroid += x[idx[i]];
            centroid /= static_cast<double>(n);

            const Eigen::VectorXd& worst = x[idx[n]];
            const Eigen::VectorXd xr = centroid + (centroid - worst);
            const double fr = f(xr);
            ++res.evaluations;

            if (fr < fx[idx[0]]) {
                const Eigen::VectorXd xe = centroid + 2.0 * (centroid - worst);
                const double fe = f(xe);
                ++res.evaluations;
                if (fe < fr) {
                    x[idx[n]] = xe;
                    fx[idx[n]] = fe;
                } else {
                    x[idx[n]] = xr;
                    fx[idx[n]] = fr;
                }
            } else if (fr < fx[idx[n - 1]]) {
                x[idx[n]] = xr;
                fx[idx[n]] = fr;
            } else {
                const bool outside = fr < fx[idx[n]];
                const Eigen::VectorXd base = outside ? xr : worst;
                const Eigen::VectorXd xc = centroid + 0.5 * (base - centroid);
                const double fc = f(xc);
                ++res.evaluations;
                if (fc < std::min(fr, fx[idx[n]])) {
                    x[idx[n]] = xc;
                    fx[idx[n]] = fc;
                } else {
                    for (int i = 1; i <= n; ++i) {
                        x[idx[i]] = x[idx[0]] + 0.5 * (x[idx[i]] - x[idx[0]]);
                        fx[idx[i]] = f(x[idx[i]]);
                    }
                    res.evaluations += n;
                }
            }
        }
        std::sort(idx.begin(), idx.end(), [&](int a, int b) { return fx[a] < fx[b]; });
        res.x = x[idx[0]];
        res.fmin = fx[idx[0]];
        res.converged = settled;
        step *= 0.1;
    }
    return res;
}

}  // namespace msar
