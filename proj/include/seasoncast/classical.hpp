#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "seasoncast/core.hpp"
#include "seasoncast/simplex.hpp"

namespace seasoncast::classical {

// ---------------------------------------------------------------------------
// Additive Holt-Winters seasonal smoothing
// ---------------------------------------------------------------------------

struct WintersState {
    double level = 0.0;
    double trend = 0.0;
    std::vector<double> seasonal;  // slot (t mod season_length) holds the latest index
    double alpha = 0.0, beta_t = 0.0, gamma = 0.0;
    int season_length = 0;
    long long t_end = 0;             // observations consumed
    double in_sample_mae = 0.0;
    std::vector<double> fitted;      // one-step predictions for t >= season_length
};

namespace detail {

/// One full pass of the additive recursions; returns the in-sample one-step
/// MAE over t >= season_length and optionally the final state/fitted values.
inline double winters_pass(const std::vector<double>& y, int L, double alpha, double beta_t,
                           double gamma, WintersState* out) {
    const int n = static_cast<int>(y.size());
    double mean1 = 0.0, mean2 = 0.0;
    for (int i = 0; i < L; ++i) mean1 += y[i];
    mean1 /= L;
    for (int i = L; i < 2 * L; ++i) mean2 += y[i];
    mean2 /= L;

    double level = mean1;
    double trend = (mean2 - mean1) / L;
    std::vector<double> seasonal(L);
    for (int i = 0; i < L; ++i) seasonal[i] = y[i] - mean1;

    double abs_err = 0.0;
    int n_err = 0;
    if (out) out->fitted.clear();
    for (int t = L; t < n; ++t) {
        const int slot = t % L;
        const double pred = level + trend + seasonal[slot];
        abs_err += std::abs(y[t] - pred);
        ++n_err;
        if (out) out->fitted.push_back(pred);
        const double prev_level = level;
        level = alpha * (y[t] - seasonal[slot]) + (1.0 - alpha) * (level + trend);
        trend = beta_t * (level - prev_level) + (1.0 - beta_t) * trend;
        seasonal[slot] = gamma * (y[t] - level) + (1.0 - gamma) * seasonal[slot];
    }
    const double mae = n_err > 0 ? abs_err / n_err : std::numeric_limits<double>::infinity();
    if (out) {
        out->level = level;
        out->trend = trend;
        out->seasonal = std::move(seasonal);
        out->alpha = alpha;
        out->beta_t = beta_t;
        out->gamma = gamma;
        out->season_length = L;
        out->t_end = n;
        out->in_sample_mae = mae;
    }
    return mae;
}

}  // namespace detail

/// Fits additive Holt-Winters on the transformed scale. Smoothing weights are
/// chosen by exhaustive grid search over {0.01, 0.08, ..., 0.99}^3 minimizing
/// the in-sample one-step MAE (first strict improvement wins ties).
inline WintersState winters_fit(const std::vector<double>& y, int season_length) {
    if (season_length < 1) throw std::invalid_argument("winters_fit: bad season length");
    if (y.size() < 2 * static_cast<std::size_t>(season_length))
        throw std::invalid_argument("winters_fit: need at least two full seasons");

    std::vector<double> grid;
    for (double v = 0.01; v <= 0.99 + 1e-12; v += 0.07) grid.push_back(v);

    double best_mae = std::numeric_limits<double>::infinity();
    double ba = grid[0], bb = grid[0], bg = grid[0];
    for (double a : grid)
        for (double b : grid)
            for (double g : grid) {
                double m = detail::winters_pass(y, season_length, a, b, g, nullptr);
                if (m < best_mae) {
                    best_mae = m;
                    ba = a;
                    bb = b;
                    bg = g;
                }
            }
    WintersState st;
    detail::winters_pass(y, season_length, ba, bb, bg, &st);
    return st;
}

/// h-step additive forecasts: level + h*trend + matching seasonal index.
inline std::vector<double> winters_forecast(const WintersState& st, int horizon = 32) {
    if (st.season_length == 0) throw std::invalid_argument("winters_forecast: unfitted state");
    std::vector<double> out(horizon);
    for (int h = 1; h <= horizon; ++h) {
        const int slot = static_cast<int>((st.t_end + h - 1) % st.season_length);
        out[h - 1] = st.level + h * st.trend + st.seasonal[slot];
    }
    return out;
}

inline nlohmann::json to_json(const WintersState& st) {
    return nlohmann::json{{"model", "winters"},
                          {"alpha", st.alpha},
                          {"beta", st.beta_t},
                          {"gamma", st.gamma},
                          {"season_length", st.season_length},
                          {"level", st.level},
                          {"trend", st.trend},
                          {"in_sample_mae", st.in_sample_mae}};
}

// ---------------------------------------------------------------------------
// Seasonal ARIMA(1,0,1)(0,1,1)_s by conditional sum of squares
// ---------------------------------------------------------------------------

struct ArimaFit {
    double phi = 0.0;    // AR(1)
    double theta = 0.0;  // MA(1)
    double Theta = 0.0;  // seasonal MA(1)
    double sigma2 = 0.0;
    double css = 0.0;
    int season_length = 0;
    bool clamped = false;  // optimizer ran into the invertibility bounds
};

/// y_t - y_{t-s}; requires length > s.
inline std::vector<double> seasonal_difference(const std::vector<double>& y, int s) {
    if (y.size() <= static_cast<std::size_t>(s))
        throw std::invalid_argument("seasonal_difference: series shorter than the season");
    std::vector<double> w(y.size() - s);
    for (std::size_t t = s; t < y.size(); ++t) w[t - s] = y[t] - y[t - s];
    return w;
}

/// Inverse of seasonal_difference given the first season of the original series.
inline std::vector<double> seasonal_integrate(const std::vector<double>& w,
                                              const std::vector<double>& head, int s) {
    if (head.size() != static_cast<std::size_t>(s))
        throw std::invalid_argument("seasonal_integrate: head must hold one full season");
    std::vector<double> y(head);
    y.reserve(head.size() + w.size());
    for (std::size_t t = 0; t < w.size(); ++t) y.push_back(w[t] + y[t]);
    return y;
}

namespace detail {

inline double clamp_coef(double v) { return std::min(std::max(v, -0.98), 0.98); }

/// Innovations of the multiplicative (1,0,1)(0,1,1)_s model on the
/// seasonally differenced series, pre-sample values set to zero:
///   e_t = w_t - phi w_{t-1} - theta e_{t-1} - Theta e_{t-s} - theta Theta e_{t-s-1}
inline std::vector<double> arima_innovations(const std::vector<double>& w, int s, double phi,
                                             double theta, double Theta) {
    const int n = static_cast<int>(w.size());
    std::vector<double> e(n);
    for (int t = 0; t < n; ++t) {
        double pred = 0.0;
        if (t >= 1) pred += phi * w[t - 1] + theta * e[t - 1];
        if (t >= s) pred += Theta * e[t - s];
        if (t >= s + 1) pred += theta * Theta * e[t - s - 1];
        e[t] = w[t] - pred;
    }
    return e;
}

inline double arima_css(const std::vector<double>& w, int s, double phi, double theta,
                        double Theta) {
    auto e = arima_innovations(w, s, phi, theta, Theta);
    double css = 0.0;
    for (double v : e) css += v * v;
    return css;
}

}  // namespace detail

/// Conditional-sum-of-squares fit on the transformed scale after seasonal
/// differencing at lag season_length. Simplex search from (0.1, 0.1, 0.1);
/// coefficients outside the invertibility bounds are clamped to +/-0.98 and
/// flagged.
inline ArimaFit arima_fit(const std::vector<double>& y, int season_length = 160) {
    if (y.size() <= 2 * static_cast<std::size_t>(season_length))
        throw std::invalid_argument("arima_fit: need more than two full seasons");
    const int s = season_length;
    std::vector<double> w = seasonal_difference(y, s);

    auto objective = [&](const std::vector<double>& t) {
        return detail::arima_css(w, s, detail::clamp_coef(t[0]), detail::clamp_coef(t[1]),
                                 detail::clamp_coef(t[2]));
    };
    SimplexOptions opt;
    opt.max_iterations = 300;
    opt.f_rel_tol = 1e-10;
    opt.initial_step = 0.2;
    SimplexResult sr = nelder_mead(objective, {0.1, 0.1, 0.1}, opt);

    ArimaFit fit;
    fit.clamped = std::abs(sr.x[0]) > 0.98 || std::abs(sr.x[1]) > 0.98 || std::abs(sr.x[2]) > 0.98;
    fit.phi = detail::clamp_coef(sr.x[0]);
    fit.theta = detail::clamp_coef(sr.x[1]);
    fit.Theta = detail::clamp_coef(sr.x[2]);
    fit.css = detail::arima_css(w, s, fit.phi, fit.theta, fit.Theta);
    fit.sigma2 = fit.css / static_cast<double>(w.size());
    fit.season_length = s;
    return fit;
}

/// In-sample one-step predictions on the original scale for t >= season_length.
inline std::vector<double> arima_fitted(const ArimaFit& fit, const std::vector<double>& y) {
    const int s = fit.season_length;
    std::vector<double> w = seasonal_difference(y, s);
    auto e = detail::arima_innovations(w, s, fit.phi, fit.theta, fit.Theta);
    std::vector<double> out(w.size());
    for (std::size_t t = 0; t < w.size(); ++t) out[t] = y[t] + (w[t] - e[t]);
    return out;
}

/// h-step forecasts: recursion on the differenced series with future
/// innovations zeroed, then the seasonal difference is integrated back.
inline std::vector<double> arima_forecast(const ArimaFit& fit, const std::vector<double>& y,
                                          int horizon = 32) {
    const int s = fit.season_length;
    if (y.size() <= static_cast<std::size_t>(s))
        throw std::invalid_argument("arima_forecast: series shorter than the season");
    std::vector<double> w = seasonal_difference(y, s);
    auto e = detail::arima_innovations(w, s, fit.phi, fit.theta, fit.Theta);
    const int n = static_cast<int>(w.size());

    std::vector<double> w_ext(w);
    std::vector<double> e_ext(e);
    w_ext.reserve(n + horizon);
    e_ext.reserve(n + horizon);
    for (int j = 0; j < horizon; ++j) {
        const int t = n + j;
        double pred = 0.0;
        auto e_at = [&](int idx) { return idx >= 0 && idx < n ? e_ext[idx] : 0.0; };
        if (t >= 1) pred += fit.phi * w_ext[t - 1] + fit.theta * e_at(t - 1);
        if (t >= s) pred += fit.Theta * e_at(t - s);
        if (t >= s + 1) pred += fit.theta * fit.Theta * e_at(t - s - 1);
        w_ext.push_back(pred);
        e_ext.push_back(0.0);
    }

    std::vector<double> y_ext(y);
    y_ext.reserve(y.size() + horizon);
    for (int j = 0; j < horizon; ++j)
        y_ext.push_back(w_ext[n + j] + y_ext[y.size() + j - s]);
    return std::vector<double>(y_ext.end() - horizon, y_ext.end());
}

inline nlohmann::json to_json(const ArimaFit& fit) {
    return nlohmann::json{{"model", "arima"},       {"phi", fit.phi},
                          {"theta", fit.theta},     {"seasonal_theta", fit.Theta},
                          {"sigma2", fit.sigma2},   {"css", fit.css},
                          {"season_length", fit.season_length}, {"clamped", fit.clamped}};
}

}  // namespace seasoncast::classical
