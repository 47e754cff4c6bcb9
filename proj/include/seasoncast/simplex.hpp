#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <vector>

namespace seasoncast {

struct SimplexOptions {
    int max_iterations = 200;
    double f_rel_tol = 1e-8;   // relative spread of objective values across the simplex
    double x_abs_tol = 1e-9;   // absolute spread of vertex coordinates
    double initial_step = 0.5;
};

struct SimplexResult {
    std::vector<double> x;
    double fmin = 0.0;
    int iterations = 0;
    bool converged = false;
    std::vector<double> best_trace;  // best objective after each iteration
};

/// Nelder-Mead downhill simplex minimizer. Deterministic: no randomness in the
/// vertex updates, so repeated calls with the same objective and start are
/// bitwise identical.
inline SimplexResult nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                                 std::vector<double> x0, SimplexOptions opt = {}) {
    const std::size_t n = x0.size();
    const double alpha = 1.0, gamma = 2.0, rho = 0.5, sigma = 0.5;

    std::vector<std::vector<double>> pts(n + 1, x0);
    for (std::size_t i = 0; i < n; ++i) {
        double step = opt.initial_step;
        if (std::abs(x0[i]) > 1.0) step *= std::abs(x0[i]);
        pts[i + 1][i] += step;
    }
    std::vector<double> fv(n + 1);
    for (std::size_t i = 0; i <= n; ++i) fv[i] = f(pts[i]);

    SimplexResult res;
    std::vector<std::size_t> order(n + 1);
    for (int it = 0; it < opt.max_iterations; ++it) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return fv[a] < fv[b]; });
        const std::size_t best = order[0], worst = order[n], second = order[n - 1];

        res.iterations = it + 1;
        res.best_trace.push_back(fv[best]);

        double fspread = fv[worst] - fv[best];
        double xspread = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            xspread = std::max(xspread, std::abs(pts[worst][i] - pts[best][i]));
        if (fspread <= opt.f_rel_tol * (std::abs(fv[best]) + 1.0) || xspread <= opt.x_abs_tol) {
            res.converged = true;
            break;
        }

        std::vector<double> centroid(n, 0.0);
        for (std::size_t k = 0; k <= n; ++k) {
            if (k == worst) continue;
            for (std::size_t i = 0; i < n; ++i) centroid[i] += pts[k][i];
        }
        for (std::size_t i = 0; i < n; ++i) centroid[i] /= static_cast<double>(n);

        auto blend = [&](double coef) {
            std::vector<double> p(n);
            for (std::size_t i = 0; i < n; ++i)
                p[i] = centroid[i] + coef * (pts[worst][i] - centroid[i]);
            return p;
        };

        std::vector<double> xr = blend(-alpha);
        double fr = f(xr);
        if (fr < fv[best]) {
            std::vector<double> xe = blend(-gamma);
            double fe = f(xe);
            if (fe < fr) {
                pts[worst] = std::move(xe);
                fv[worst] = fe;
            } else {
                pts[worst] = std::move(xr);
                fv[worst] = fr;
            }
        } else if (fr < fv[second]) {
            pts[worst] = std::move(xr);
            fv[worst] = fr;
        } else {
            std::vector<double> xc = blend(fr < fv[worst] ? -rho : rho);
            double fc = f(xc);
            if (fc < std::min(fr, fv[worst])) {
                pts[worst] = std::move(xc);
                fv[worst] = fc;
            } else {
                for (std::size_t k = 0; k <= n; ++k) {
                    if (k == best) continue;
                    for (std::size_t i = 0; i < n; ++i)
                        pts[k][i] = pts[best][i] + sigma * (pts[k][i] - pts[best][i]);
                    fv[k] = f(pts[k]);
                }
            }
        }
    }

    std::size_t ibest = 0;
    for (std::size_t i = 1; i <= n; ++i)
        if (fv[i] < fv[ibest]) ibest = i;
    res.x = pts[ibest];
    res.fmin = fv[ibest];
    return res;
}

}  // namespace seasoncast
