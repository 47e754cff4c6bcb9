#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "seasoncast/core.hpp"
#include "seasoncast/datagen.hpp"
#include "seasoncast/simplex.hpp"

namespace seasoncast::mixedmodel {

using datagen::p_group;

/// Covariance parameters of the doubly stochastic model: an AR(1) day effect
/// over the day counter and an AR(1) residual within each day.
struct CovParams {
    double sigma2_day = 0.0;
    double rho_day = 0.0;
    double sigma2_resid = 1.0;
    double rho_resid = 0.0;

    void validate() const {
        if (sigma2_day < 0.0 || sigma2_resid <= 0.0)
            throw std::invalid_argument("CovParams: variance bounds violated");
        if (!(std::abs(rho_day) < 1.0) || !(std::abs(rho_resid) < 1.0))
            throw std::invalid_argument("CovParams: correlations must lie in (-1,1)");
    }
};

/// Day-major complete-grid observation layout used by the covariance routines.
struct ObsLayout {
    std::vector<int> day_nums;  // one entry per day, strictly increasing
    int periods_per_day = 0;

    int n_obs() const { return static_cast<int>(day_nums.size()) * periods_per_day; }
    int n_days() const { return static_cast<int>(day_nums.size()); }
};

inline ObsLayout layout_of(const SkillSeries& s) {
    return ObsLayout{s.day_nums(), s.grid().periods_per_day};
}

/// Fixed-effect design: one column per day_of_week x period cell plus one per
/// p_group x holiday cell, no intercept.
struct FixedDesign {
    struct Column {
        enum class Kind { DowPeriod, HolidayGroup } kind = Kind::DowPeriod;
        DayOfWeek dow = DayOfWeek::Mon;
        int period = 0;  // for DowPeriod
        int pgroup = 0;  // for HolidayGroup

        std::string name() const {
            if (kind == Kind::DowPeriod)
                return std::string(to_string(dow)) + "*P" + std::to_string(period);
            return "HOL*G" + std::to_string(pgroup);
        }
    };

    Eigen::SparseMatrix<double> X;  // n x (dow*period + p_groups)
    std::vector<Column> columns;
    ObsLayout layout;

    int n_dow_period_columns() const {
        int c = 0;
        for (const auto& col : columns)
            if (col.kind == Column::Kind::DowPeriod) ++c;
        return c;
    }
};

inline FixedDesign build_fixed_design(const SkillSeries& series) {
    const PeriodGrid& grid = series.grid();
    const int P = grid.periods_per_day;
    const int W = grid.days_per_week;
    const int n_groups = datagen::n_p_groups(grid);
    const int p = W * P + n_groups;
    const int n = static_cast<int>(series.observations().size());

    FixedDesign design;
    design.layout = layout_of(series);
    design.columns.reserve(p);
    for (int d = 0; d < W; ++d)
        for (int per = 1; per <= P; ++per)
            design.columns.push_back({FixedDesign::Column::Kind::DowPeriod,
                                      static_cast<DayOfWeek>(d), per, 0});
    for (int g = 1; g <= n_groups; ++g)
        design.columns.push_back(
            {FixedDesign::Column::Kind::HolidayGroup, DayOfWeek::Mon, 0, g});

    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(static_cast<std::size_t>(n) * 2);
    int row = 0;
    for (const auto& o : series.observations()) {
        int dow_col = static_cast<int>(o.day_of_week) * P + (o.period - 1);
        trips.emplace_back(row, dow_col, 1.0);
        if (o.holiday) trips.emplace_back(row, W * P + p_group(o.period) - 1, 1.0);
        ++row;
    }
    design.X.resize(n, p);
    design.X.setFromTriplets(trips.begin(), trips.end());
    return design;
}

/// Dense marginal covariance V = ZGZ' + R. Intended for small instances and
/// oracle checks; the likelihood path never materializes it.
inline Eigen::MatrixXd marginal_covariance(const CovParams& cov, const ObsLayout& layout) {
    cov.validate();
    const int n = layout.n_obs();
    const int P = layout.periods_per_day;
    Eigen::MatrixXd V(n, n);
    for (int i = 0; i < n; ++i) {
        int di = i / P, pi = i % P;
        for (int j = 0; j <= i; ++j) {
            int dj = j / P, pj = j % P;
            double v = cov.sigma2_day *
                       std::pow(cov.rho_day, std::abs(layout.day_nums[di] - layout.day_nums[dj]));
            if (di == dj) v += cov.sigma2_resid * std::pow(cov.rho_resid, std::abs(pi - pj));
            V(i, j) = v;
            V(j, i) = v;
        }
    }
    return V;
}

namespace detail {

/// Sparse within-day tridiagonal T with R^-1 = T / ((1-rho^2) sigma2) blockwise.
inline Eigen::SparseMatrix<double> resid_precision_tridiag(const ObsLayout& layout,
                                                           double rho) {
    const int P = layout.periods_per_day;
    const int n = layout.n_obs();
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(static_cast<std::size_t>(n) * 3);
    for (int d = 0; d < layout.n_days(); ++d) {
        int o = d * P;
        if (P == 1) {
            trips.emplace_back(o, o, 1.0 - rho * rho);
            continue;
        }
        for (int i = 0; i < P; ++i) {
            double diag = (i == 0 || i == P - 1) ? 1.0 : 1.0 + rho * rho;
            trips.emplace_back(o + i, o + i, diag);
            if (i + 1 < P) {
                trips.emplace_back(o + i, o + i + 1, -rho);
                trips.emplace_back(o + i + 1, o + i, -rho);
            }
        }
    }
    Eigen::SparseMatrix<double> T(n, n);
    T.setFromTriplets(trips.begin(), trips.end());
    return T;
}

/// Tridiagonal inverse of the day-effect AR(1) correlation over gapped day
/// numbers, and its log-determinant.
inline void day_corr_inverse(const std::vector<int>& day_nums, double rho,
                             Eigen::MatrixXd& corr_inv, double& log_det_corr) {
    const int D = static_cast<int>(day_nums.size());
    corr_inv = Eigen::MatrixXd::Zero(D, D);
    log_det_corr = 0.0;
    std::vector<double> r(D > 1 ? D - 1 : 0);
    for (int k = 0; k + 1 < D; ++k) {
        r[k] = std::pow(rho, std::abs(day_nums[k + 1] - day_nums[k]));
        log_det_corr += std::log(1.0 - r[k] * r[k]);
    }
    for (int k = 0; k < D; ++k) {
        double left = (k > 0) ? 1.0 / (1.0 - r[k - 1] * r[k - 1]) : 1.0;
        double right = (k + 1 < D) ? 1.0 / (1.0 - r[k] * r[k]) : 1.0;
        corr_inv(k, k) = left + right - 1.0;
        if (k + 1 < D) {
            corr_inv(k, k + 1) = -r[k] / (1.0 - r[k] * r[k]);
            corr_inv(k + 1, k) = corr_inv(k, k + 1);
        }
    }
}

struct Evaluation {
    double loglik = -std::numeric_limits<double>::infinity();
    double log_det_A = 0.0;     // log|X'V^-1X| over the kept columns
    Eigen::VectorXd beta;       // full length, zeros for dropped columns
    std::vector<char> kept;     // per column
    Eigen::VectorXd blups;      // per day
    bool ok = false;
};

/// Profiled Gaussian loglikelihood via the day-block Woodbury identity:
/// V^-1 = R^-1 - R^-1 Z (G^-1 + Z'R^-1 Z)^-1 Z'R^-1, with R^-1 tridiagonal
/// per day and G^-1 tridiagonal over day gaps.
inline Evaluation evaluate_profile(const CovParams& cov, const Eigen::SparseMatrix<double>& X,
                                   const Eigen::VectorXd& y, const ObsLayout& layout,
                                   const std::vector<int>& kept_cols) {
    Evaluation ev;
    const int n = layout.n_obs();
    const int P = layout.periods_per_day;
    const int D = layout.n_days();
    const int p_full = static_cast<int>(X.cols());
    const int p = static_cast<int>(kept_cols.size());
    if (y.size() != n) throw std::invalid_argument("profile_loglik: y length mismatch");

    const double s2r = cov.sigma2_resid;
    const double rr = cov.rho_resid;
    const double resid_scale = 1.0 / ((1.0 - rr * rr) * s2r);

    Eigen::SparseMatrix<double> T = resid_precision_tridiag(layout, rr);

    Eigen::SparseMatrix<double> Xk(n, p);
    {
        std::vector<Eigen::Triplet<double>> trips;
        for (int j = 0; j < p; ++j)
            for (Eigen::SparseMatrix<double>::InnerIterator it(X, kept_cols[j]); it; ++it)
                trips.emplace_back(static_cast<int>(it.row()), j, it.value());
        Xk.setFromTriplets(trips.begin(), trips.end());
    }

    // R^-1 X and R^-1 y
    Eigen::SparseMatrix<double> RiX = (T * Xk) * resid_scale;
    Eigen::VectorXd Riy = (T * y) * resid_scale;

    // Day aggregation (Z' .) as per-day sums
    Eigen::MatrixXd ZtRiX = Eigen::MatrixXd::Zero(D, p);
    for (int j = 0; j < p; ++j)
        for (Eigen::SparseMatrix<double>::InnerIterator it(RiX, j); it; ++it)
            ZtRiX(static_cast<int>(it.row()) / P, j) += it.value();
    Eigen::VectorXd ZtRiy(D);
    for (int d = 0; d < D; ++d) ZtRiy(d) = Riy.segment(d * P, P).sum();

    // w = 1' R_d^-1 1, identical across days on a complete grid
    double ones_T_ones;
    if (P == 1)
        ones_T_ones = 1.0 - rr * rr;
    else
        ones_T_ones = 2.0 + (P - 2) * (1.0 + rr * rr) - 2.0 * (P - 1) * rr;
    const double w_day = ones_T_ones * resid_scale;

    const double s2d = cov.sigma2_day;
    Eigen::MatrixXd corr_inv;
    double log_det_corr = 0.0;
    day_corr_inverse(layout.day_nums, cov.rho_day, corr_inv, log_det_corr);

    // Guard against a vanishing day-effect variance: the correction term
    // disappears and V^-1 collapses to R^-1.
    const bool day_effect_active = s2d > 1e-300;
    Eigen::LDLT<Eigen::MatrixXd> M_ldlt;
    double log_det_M = 0.0;
    Eigen::MatrixXd M;
    if (day_effect_active) {
        M = corr_inv / s2d;
        M.diagonal().array() += w_day;
        M_ldlt.compute(M);
        if (M_ldlt.info() != Eigen::Success || (M_ldlt.vectorD().array() <= 0.0).any()) {
            // jitter-and-retry before reporting failure
            M.diagonal().array() += 1e-8 * M.diagonal().cwiseAbs().maxCoeff();
            M_ldlt.compute(M);
            if (M_ldlt.info() != Eigen::Success || (M_ldlt.vectorD().array() <= 0.0).any())
                return ev;
        }
        log_det_M = M_ldlt.vectorD().array().log().sum();
    }

    // A = X'V^-1 X and rhs = X'V^-1 y via the correction term
    Eigen::MatrixXd XtRiX = Eigen::MatrixXd(Xk.transpose() * RiX);
    Eigen::VectorXd XtRiy = Xk.transpose() * Riy;
    Eigen::MatrixXd A = XtRiX;
    Eigen::VectorXd rhs = XtRiy;
    Eigen::MatrixXd Minv_ZtRiX;
    Eigen::VectorXd Minv_ZtRiy;
    if (day_effect_active) {
        Minv_ZtRiX = M_ldlt.solve(ZtRiX);
        Minv_ZtRiy = M_ldlt.solve(ZtRiy);
        A.noalias() -= ZtRiX.transpose() * Minv_ZtRiX;
        rhs.noalias() -= ZtRiX.transpose() * Minv_ZtRiy;
    }

    Eigen::LDLT<Eigen::MatrixXd> A_ldlt(A);
    Eigen::VectorXd beta_k;
    double log_det_A;
    if (A_ldlt.info() == Eigen::Success && (A_ldlt.vectorD().array() > 0.0).all()) {
        beta_k = A_ldlt.solve(rhs);
        log_det_A = A_ldlt.vectorD().array().log().sum();
    } else {
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
        beta_k = qr.solve(rhs);
        log_det_A = qr.logAbsDeterminant();
    }
    if (!beta_k.allFinite()) return ev;

    // residual quadratic form r'V^-1 r
    Eigen::VectorXd r = y - Xk * beta_k;
    Eigen::VectorXd Rir = (T * r) * resid_scale;
    double quad = r.dot(Rir);
    Eigen::VectorXd ZtRir(D);
    for (int d = 0; d < D; ++d) ZtRir(d) = Rir.segment(d * P, P).sum();
    Eigen::VectorXd blups = Eigen::VectorXd::Zero(D);
    if (day_effect_active) {
        Eigen::VectorXd Minv_u = M_ldlt.solve(ZtRir);
        quad -= ZtRir.dot(Minv_u);
        blups = Minv_u;  // b_hat = (G^-1 + Z'R^-1Z)^-1 Z'R^-1 r
    }

    double log_det_R =
        D * (P * std::log(s2r) + (P - 1) * std::log(1.0 - rr * rr));
    double log_det_V = log_det_R;
    if (day_effect_active)
        log_det_V += D * std::log(s2d) + log_det_corr + log_det_M;

    double ll = -0.5 * (log_det_V + quad + n * std::log(2.0 * M_PI));
    if (!std::isfinite(ll)) return ev;

    ev.loglik = ll;
    ev.log_det_A = log_det_A;
    ev.beta = Eigen::VectorXd::Zero(p_full);
    for (int j = 0; j < p; ++j) ev.beta(kept_cols[j]) = beta_k(j);
    ev.kept.assign(p_full, 0);
    for (int j : kept_cols) ev.kept[j] = 1;
    ev.blups = blups;
    ev.ok = true;
    return ev;
}

/// Columns that are observed and linearly independent; dependent columns are
/// dropped in pivot order (their estimates stay zero).
inline std::vector<int> independent_columns(const Eigen::SparseMatrix<double>& X) {
    const int p = static_cast<int>(X.cols());
    std::vector<int> nonzero;
    for (int j = 0; j < p; ++j) {
        bool any = false;
        for (Eigen::SparseMatrix<double>::InnerIterator it(X, j); it; ++it)
            if (it.value() != 0.0) {
                any = true;
                break;
            }
        if (any) nonzero.push_back(j);
    }
    Eigen::MatrixXd G(nonzero.size(), nonzero.size());
    {
        Eigen::SparseMatrix<double> Xs(X.rows(), static_cast<int>(nonzero.size()));
        std::vector<Eigen::Triplet<double>> trips;
        for (std::size_t j = 0; j < nonzero.size(); ++j)
            for (Eigen::SparseMatrix<double>::InnerIterator it(X, nonzero[j]); it; ++it)
                trips.emplace_back(static_cast<int>(it.row()), static_cast<int>(j), it.value());
        Xs.setFromTriplets(trips.begin(), trips.end());
        G = Eigen::MatrixXd(Eigen::SparseMatrix<double>(Xs.transpose() * Xs));
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(G);
    qr.setThreshold(1e-10);
    const int rank = static_cast<int>(qr.rank());
    if (rank == static_cast<int>(nonzero.size())) return nonzero;
    std::vector<int> kept;
    auto perm = qr.colsPermutation().indices();
    std::vector<int> chosen(perm.size(), 0);
    for (int k = 0; k < rank; ++k) chosen[perm(k)] = 1;
    for (std::size_t j = 0; j < nonzero.size(); ++j)
        if (chosen[j]) kept.push_back(nonzero[j]);
    return kept;
}

}  // namespace detail

struct ProfileResult {
    double loglik = 0.0;
    Eigen::VectorXd beta;
};

/// GLS-profiled loglikelihood at fixed covariance parameters.
inline ProfileResult profile_loglik(const CovParams& cov, const Eigen::SparseMatrix<double>& X,
                                    const Eigen::VectorXd& y, const ObsLayout& layout) {
    cov.validate();
    auto kept = detail::independent_columns(X);
    auto ev = detail::evaluate_profile(cov, X, y, layout, kept);
    if (!ev.ok) throw NumericError("profile_loglik: covariance numerically non-positive-definite");
    return ProfileResult{ev.loglik, ev.beta};
}

struct MixedModelFit {
    std::vector<FixedDesign::Column> columns;
    Eigen::VectorXd beta;     // full column order, zeros where dropped
    std::vector<char> kept;   // per column
    CovParams cov;
    Eigen::VectorXd blups;    // one per training day
    std::vector<int> day_nums;
    int periods_per_day = 0;
    int days_per_week = 5;
    bool reml = true;
    double loglik = 0.0;        // maximized criterion (restricted when reml)
    std::vector<double> trace;  // best criterion value after each optimizer iteration
    bool converged = false;
    int iterations = 0;

    int column_index(FixedDesign::Column::Kind kind, DayOfWeek dow, int period,
                     int pgroup) const {
        for (std::size_t j = 0; j < columns.size(); ++j) {
            const auto& c = columns[j];
            if (c.kind != kind) continue;
            if (kind == FixedDesign::Column::Kind::DowPeriod) {
                if (c.dow == dow && c.period == period) return static_cast<int>(j);
            } else if (c.pgroup == pgroup) {
                return static_cast<int>(j);
            }
        }
        return -1;
    }
};

namespace detail {

struct ThetaMap {
    // internal parameterization: log variances, atanh correlations
    static CovParams to_params(const std::vector<double>& t) {
        auto clamp = [](double v, double lo, double hi) { return std::min(std::max(v, lo), hi); };
        CovParams c;
        c.sigma2_day = std::exp(clamp(t[0], -30.0, 30.0));
        c.rho_day = std::tanh(clamp(t[1], -7.0, 7.0));
        c.sigma2_resid = std::exp(clamp(t[2], -30.0, 30.0));
        c.rho_resid = std::tanh(clamp(t[3], -7.0, 7.0));
        return c;
    }
};

}  // namespace detail

struct FitOptions {
    int max_iterations = 150;
    double loglik_rel_tol = 1e-6;
    // REML keeps the day-effect variance honest: with 160 profiled cell means
    // and strong day correlation, the plain ML optimum sits far below the
    // generating variance.
    bool reml = true;
};

/// Restricted-maximum-likelihood fit of the doubly stochastic model. The 4
/// covariance parameters are optimized on the (log, atanh) scale by a
/// downhill simplex with the relative-loglikelihood stopping rule; beta is
/// profiled out by GLS at every step.
inline MixedModelFit fit(const SkillSeries& series, FitOptions opt = {}) {
    if (series.n_days() < 2 * series.grid().days_per_week)
        throw CoverageError("mixed model fit needs at least 2 weeks of data");

    FixedDesign design = build_fixed_design(series);
    const int n = design.layout.n_obs();
    Eigen::VectorXd y(n);
    {
        int i = 0;
        for (const auto& o : series.observations()) y(i++) = sqrt_transform(o.calls);
    }
    auto kept = detail::independent_columns(design.X);

    // starting point: split the OLS residual variance 10/90 with mild correlation
    CovParams start_cov{0.0, 0.0, 1.0, 0.0};
    auto ols = detail::evaluate_profile(start_cov, design.X, y, design.layout, kept);
    double s2 = 1e-8;
    if (ols.ok) {
        Eigen::VectorXd r = y - design.X * ols.beta;
        s2 = std::max(r.squaredNorm() / n, 1e-8);
    }
    std::vector<double> theta0 = {std::log(0.1 * s2), std::atanh(0.3), std::log(0.9 * s2),
                                  std::atanh(0.3)};

    auto objective = [&](const std::vector<double>& t) {
        CovParams c = detail::ThetaMap::to_params(t);
        auto ev = detail::evaluate_profile(c, design.X, y, design.layout, kept);
        if (!ev.ok) return 1e300;
        double obj = ev.loglik;
        if (opt.reml) obj -= 0.5 * ev.log_det_A;
        return -obj;
    };

    SimplexOptions sopt;
    sopt.max_iterations = opt.max_iterations;
    sopt.f_rel_tol = opt.loglik_rel_tol;
    sopt.initial_step = 0.5;
    SimplexResult sr = nelder_mead(objective, theta0, sopt);

    CovParams best = detail::ThetaMap::to_params(sr.x);
    auto ev = detail::evaluate_profile(best, design.X, y, design.layout, kept);
    if (!ev.ok) throw NumericError("mixed model fit: final evaluation failed");

    MixedModelFit fitted;
    fitted.columns = design.columns;
    fitted.beta = ev.beta;
    fitted.kept = ev.kept;
    fitted.cov = best;
    fitted.blups = ev.blups;
    fitted.day_nums = design.layout.day_nums;
    fitted.periods_per_day = design.layout.periods_per_day;
    fitted.days_per_week = series.grid().days_per_week;
    fitted.reml = opt.reml;
    fitted.loglik = opt.reml ? ev.loglik - 0.5 * ev.log_det_A : ev.loglik;
    fitted.trace.reserve(sr.best_trace.size());
    for (double f : sr.best_trace) fitted.trace.push_back(-f);
    fitted.converged = sr.converged;
    fitted.iterations = sr.iterations;
    return fitted;
}

/// Best linear unbiased predictors of the day effects given a fitted model.
inline std::vector<double> blup_day_effects(const MixedModelFit& fit, const SkillSeries& series) {
    FixedDesign design = build_fixed_design(series);
    Eigen::VectorXd y(design.layout.n_obs());
    {
        int i = 0;
        for (const auto& o : series.observations()) y(i++) = sqrt_transform(o.calls);
    }
    std::vector<int> kept;
    for (std::size_t j = 0; j < fit.kept.size(); ++j)
        if (fit.kept[j]) kept.push_back(static_cast<int>(j));
    auto ev = detail::evaluate_profile(fit.cov, design.X, y, design.layout, kept);
    if (!ev.ok) throw NumericError("blup_day_effects: evaluation failed");
    return std::vector<double>(ev.blups.data(), ev.blups.data() + ev.blups.size());
}

/// Transformed-scale fitted values X beta + Z b_hat for every training row.
inline std::vector<double> fitted_values(const MixedModelFit& fit, const SkillSeries& series) {
    FixedDesign design = build_fixed_design(series);
    Eigen::VectorXd fx = design.X * fit.beta;
    std::vector<double> out(fx.size());
    const int P = fit.periods_per_day;
    for (int i = 0; i < fx.size(); ++i) out[i] = fx(i) + fit.blups(i / P);
    return out;
}

struct TargetDayMeta {
    int day_num = 0;
    DayOfWeek day_of_week = DayOfWeek::Mon;
    bool holiday = false;
};

/// Day-ahead forecast: fixed-effect cell means plus the last BLUP decayed by
/// rho_day across the day-counter gap, back-transformed to counts.
inline ForecastRecord forecast_next_day(const MixedModelFit& fit, const SkillSeries& series,
                                        const TargetDayMeta& meta) {
    const int P = fit.periods_per_day;
    ForecastRecord rec;
    rec.model = ModelTag::DoublyStoch;
    rec.skill = series.skill();
    rec.target_day = meta.day_num;
    rec.predictions.resize(P);
    rec.degraded = !fit.converged;

    const int gap = meta.day_num - fit.day_nums.back();
    if (gap < 1) throw std::invalid_argument("forecast_next_day: target must follow the window");
    const double carry =
        fit.blups.size() > 0 ? std::pow(fit.cov.rho_day, gap) * fit.blups(fit.blups.size() - 1)
                             : 0.0;

    for (int p = 1; p <= P; ++p) {
        double mean = 0.0;
        int jc = fit.column_index(FixedDesign::Column::Kind::DowPeriod, meta.day_of_week, p, 0);
        if (jc >= 0 && fit.kept[jc]) {
            mean += fit.beta(jc);
        } else {
            rec.degraded = true;  // unseen cell: p_group/holiday terms only
        }
        if (meta.holiday) {
            int jg = fit.column_index(FixedDesign::Column::Kind::HolidayGroup, DayOfWeek::Mon, 0,
                                      p_group(p));
            if (jg >= 0 && fit.kept[jg])
                mean += fit.beta(jg);
            else
                rec.degraded = true;
        }
        rec.predictions[p - 1] = inverse_transform(mean + carry);
    }
    rec.validate();
    return rec;
}

inline nlohmann::json to_json(const MixedModelFit& fit) {
    nlohmann::json beta = nlohmann::json::object();
    for (std::size_t j = 0; j < fit.columns.size(); ++j)
        if (fit.kept[j]) beta[fit.columns[j].name()] = fit.beta(static_cast<int>(j));
    nlohmann::json j{
        {"model", "doubly_stoch"},
        {"beta", beta},
        {"cov",
         {{"sigma2_day", fit.cov.sigma2_day},
          {"rho_day", fit.cov.rho_day},
          {"sigma2_resid", fit.cov.sigma2_resid},
          {"rho_resid", fit.cov.rho_resid}}},
        {"loglik", fit.loglik},
        {"reml", fit.reml},
        {"converged", fit.converged},
        {"iterations", fit.iterations},
        {"blups", std::vector<double>(fit.blups.data(), fit.blups.data() + fit.blups.size())},
        {"loglik_trace", fit.trace},
    };
    return j;
}

}  // namespace seasoncast::mixedmodel
