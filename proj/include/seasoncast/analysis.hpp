#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "seasoncast/core.hpp"
#include "seasoncast/stats.hpp"

namespace seasoncast::analysis {

/// 1/WAPE, the regression response that tames the right skew.
inline double reciprocal_transform(double wape_value) {
    if (wape_value <= 0.0) throw std::domain_error("reciprocal_transform: wape must be > 0");
    return 1.0 / wape_value;
}

// ---------------------------------------------------------------------------
// Categorical designs (reference-level dummy coding, first level dropped)
// ---------------------------------------------------------------------------

struct FactorDef {
    std::string name;
    std::vector<std::string> levels;  // sorted; levels[0] is the reference
};

struct TermGroup {
    std::string source;
    std::vector<int> cols;
};

struct ModelMatrix {
    Eigen::MatrixXd X;  // first column is the intercept
    std::vector<std::string> col_names;
    std::vector<TermGroup> groups;
};

namespace detail {

inline std::vector<std::string> sorted_levels(const std::vector<std::vector<std::string>>& rows,
                                              int col) {
    std::set<std::string> s;
    for (const auto& r : rows) s.insert(r[col]);
    return std::vector<std::string>(s.begin(), s.end());
}

/// Cross product of per-factor non-reference level choices for one term.
inline void enumerate_term_cells(const std::vector<FactorDef>& defs,
                                 const std::vector<int>& term,
                                 std::vector<std::vector<int>>& cells) {
    cells.clear();
    for (int f : term)
        if (defs[f].levels.size() < 2) return;  // single-level factor: nothing to code
    std::vector<int> cur(term.size(), 1);
    while (true) {
        cells.push_back(cur);
        int k = static_cast<int>(term.size()) - 1;
        while (k >= 0) {
            if (++cur[k] < static_cast<int>(defs[term[k]].levels.size())) break;
            cur[k] = 1;
            --k;
        }
        if (k < 0) break;
    }
}

}  // namespace detail

/// Builds a dummy-coded design with intercept. `values(i, f)` returns row i's
/// level of factor f; terms are lists of factor indices (mains, interactions).
inline ModelMatrix build_model_matrix(
    int n_rows, const std::vector<FactorDef>& defs,
    const std::vector<std::vector<int>>& terms,
    const std::function<const std::string&(int, int)>& values) {
    ModelMatrix mm;
    std::vector<std::vector<double>> cols;
    mm.col_names.push_back("intercept");
    cols.emplace_back(n_rows, 1.0);

    for (const auto& term : terms) {
        TermGroup group;
        for (std::size_t k = 0; k < term.size(); ++k) {
            group.source += (k ? "*" : "") + defs[term[k]].name;
        }
        std::vector<std::vector<int>> cells;
        detail::enumerate_term_cells(defs, term, cells);
        for (const auto& cell : cells) {
            std::string name;
            std::vector<double> col(n_rows, 1.0);
            for (std::size_t k = 0; k < term.size(); ++k) {
                const auto& level = defs[term[k]].levels[cell[k]];
                name += (k ? "*" : "") + defs[term[k]].name + "=" + level;
                for (int i = 0; i < n_rows; ++i)
                    if (values(i, term[k]) != level) col[i] = 0.0;
            }
            group.cols.push_back(static_cast<int>(cols.size()));
            mm.col_names.push_back(name);
            cols.push_back(std::move(col));
        }
        mm.groups.push_back(std::move(group));
    }

    mm.X.resize(n_rows, static_cast<int>(cols.size()));
    for (std::size_t j = 0; j < cols.size(); ++j)
        for (int i = 0; i < n_rows; ++i) mm.X(i, static_cast<int>(j)) = cols[j][i];
    return mm;
}

// ---------------------------------------------------------------------------
// Joint mean + loglinear variance model
// ---------------------------------------------------------------------------

struct LoglinVarFit {
    Eigen::VectorXd mean_coefs;
    Eigen::VectorXd var_coefs;  // log sigma^2 = Xv * var_coefs
    Eigen::MatrixXd mean_cov;   // (Xm' W Xm)^-1 at the fitted weights
    double loglik = 0.0;
    bool converged = false;
    int iterations = 0;

    double predict_mean(const Eigen::VectorXd& xm) const { return xm.dot(mean_coefs); }
    double predict_sd(const Eigen::VectorXd& xv) const {
        return std::exp(0.5 * xv.dot(var_coefs));
    }
};

namespace detail {

inline double loglin_loglik(const Eigen::VectorXd& e2, const Eigen::VectorXd& log_s2) {
    const int n = static_cast<int>(e2.size());
    double ll = 0.0;
    for (int i = 0; i < n; ++i) ll += -0.5 * (log_s2(i) + e2(i) * std::exp(-log_s2(i)));
    return ll - 0.5 * n * std::log(2.0 * M_PI);
}

}  // namespace detail

/// Gaussian maximum likelihood with a linear mean and loglinear variance,
/// by alternating weighted least squares for the mean and Fisher scoring
/// (with step halving) for the variance coefficients.
inline LoglinVarFit fit_loglin_var(const Eigen::MatrixXd& Xm, const Eigen::MatrixXd& Xv,
                                   const Eigen::VectorXd& y, double rel_tol = 1e-8,
                                   int max_iter = 200) {
    const int n = static_cast<int>(y.size());
    if (Xm.rows() != n || Xv.rows() != n)
        throw std::invalid_argument("fit_loglin_var: design row mismatch");

    LoglinVarFit fit;
    Eigen::VectorXd a =
        (Xm.transpose() * Xm).ldlt().solve(Xm.transpose() * y);
    Eigen::VectorXd e = y - Xm * a;
    Eigen::VectorXd g = Eigen::VectorXd::Zero(Xv.cols());
    g(0) = std::log(std::max(e.squaredNorm() / n, 1e-12));

    Eigen::MatrixXd XvtXv = Xv.transpose() * Xv;
    Eigen::LDLT<Eigen::MatrixXd> Xv_ldlt(XvtXv);

    double ll = detail::loglin_loglik(e.cwiseProduct(e), Xv * g);
    for (int it = 1; it <= max_iter; ++it) {
        fit.iterations = it;

        // weighted least squares for the mean at fixed variances
        Eigen::VectorXd log_s2 = (Xv * g).cwiseMax(-300.0).cwiseMin(300.0);
        Eigen::VectorXd w = (-log_s2).array().exp().matrix();
        Eigen::MatrixXd XtW = Xm.transpose() * w.asDiagonal();
        Eigen::MatrixXd A = XtW * Xm;
        a = A.ldlt().solve(XtW * y);
        e = y - Xm * a;
        Eigen::VectorXd e2 = e.cwiseProduct(e);

        // scoring step for the variance coefficients, halved until it helps
        Eigen::VectorXd score_resid = (e2.array() * (-log_s2).array().exp() - 1.0).matrix();
        Eigen::VectorXd delta = Xv_ldlt.solve(Xv.transpose() * score_resid);
        double base_ll = detail::loglin_loglik(e2, Xv * g);
        double step = 1.0;
        double new_ll = base_ll;
        Eigen::VectorXd g_new = g;
        for (int h = 0; h < 30; ++h) {
            Eigen::VectorXd cand = g + step * delta;
            double cand_ll = detail::loglin_loglik(e2, (Xv * cand).cwiseMax(-300.0).cwiseMin(300.0));
            if (std::isfinite(cand_ll) && cand_ll >= base_ll - 1e-12) {
                g_new = cand;
                new_ll = cand_ll;
                break;
            }
            step *= 0.5;
        }
        g = g_new;

        if (std::abs(new_ll - ll) <= rel_tol * (std::abs(new_ll) + 1.0)) {
            ll = new_ll;
            fit.converged = true;
            break;
        }
        ll = new_ll;
    }

    Eigen::VectorXd log_s2 = (Xv * g).cwiseMax(-300.0).cwiseMin(300.0);
    Eigen::VectorXd w = (-log_s2).array().exp().matrix();
    Eigen::MatrixXd XtW = Xm.transpose() * w.asDiagonal();
    Eigen::MatrixXd A = XtW * Xm;
    a = A.ldlt().solve(XtW * y);
    e = y - Xm * a;
    fit.mean_coefs = a;
    fit.var_coefs = g;
    fit.mean_cov = A.ldlt().solve(Eigen::MatrixXd::Identity(A.rows(), A.cols()));
    fit.loglik = detail::loglin_loglik(e.cwiseProduct(e), Xv * g);
    return fit;
}

struct LrTestResult {
    double chi2 = 0.0;
    double p = 1.0;
};

/// Likelihood ratio test of nested variance designs.
inline LrTestResult lr_test_variance(const LoglinVarFit& full, const LoglinVarFit& reduced,
                                     int df) {
    double chi2 = 2.0 * (full.loglik - reduced.loglik);
    if (chi2 < -1e-6)
        throw NumericError("lr_test_variance: full model fits worse than the reduced one");
    chi2 = std::max(chi2, 0.0);
    return {chi2, stats::chi_square_sf(chi2, df)};
}

/// Upper prediction bound for WAPE through the reciprocal response:
/// 1 / (mu - z * sd) of 1/WAPE. Estimation variance of mu is excluded.
inline double wape_upper_pi(double mu_recip, double sd_recip, double level = 0.95) {
    const double z = stats::normal_quantile(0.5 * (1.0 + level));
    const double lower = mu_recip - z * sd_recip;
    if (lower <= 0.0)
        throw std::domain_error("wape_upper_pi: lower bound of 1/WAPE crosses zero");
    return 1.0 / lower;
}

// ---------------------------------------------------------------------------
// Wilcoxon signed rank
// ---------------------------------------------------------------------------

struct WilcoxonResult {
    double w_plus = 0.0;
    double p_two_sided = 1.0;
    int n_used = 0;
    bool exact = false;
    bool degenerate = false;  // every difference was zero
};

/// Signed-rank test with average ranks for ties; exact enumeration for
/// n <= 12, normal approximation with tie and continuity corrections beyond.
inline WilcoxonResult wilcoxon_signed_rank(const std::vector<double>& diffs) {
    std::vector<double> d;
    for (double v : diffs)
        if (v != 0.0) d.push_back(v);
    WilcoxonResult res;
    res.n_used = static_cast<int>(d.size());
    if (d.empty()) {
        res.degenerate = true;
        return res;
    }
    const int n = res.n_used;

    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](int a, int b) { return std::abs(d[a]) < std::abs(d[b]); });
    std::vector<double> rank(n);
    std::vector<double> tie_sizes;
    for (int i = 0; i < n;) {
        int j = i;
        while (j < n && std::abs(d[order[j]]) == std::abs(d[order[i]])) ++j;
        double avg = 0.5 * (i + 1 + j);  // average of ranks i+1 .. j
        for (int k = i; k < j; ++k) rank[order[k]] = avg;
        tie_sizes.push_back(j - i);
        i = j;
    }
    double w_plus = 0.0;
    for (int i = 0; i < n; ++i)
        if (d[i] > 0.0) w_plus += rank[i];
    res.w_plus = w_plus;

    if (n <= 12) {
        res.exact = true;
        const std::uint32_t total = 1u << n;
        std::uint32_t count_le = 0, count_ge = 0;
        for (std::uint32_t mask = 0; mask < total; ++mask) {
            double s = 0.0;
            for (int i = 0; i < n; ++i)
                if (mask & (1u << i)) s += rank[i];
            if (s <= w_plus + 1e-9) ++count_le;
            if (s >= w_plus - 1e-9) ++count_ge;
        }
        double p = 2.0 * std::min(count_le, count_ge) / static_cast<double>(total);
        res.p_two_sided = std::min(1.0, p);
    } else {
        const double mean = n * (n + 1) / 4.0;
        double tie_corr = 0.0;
        for (double t : tie_sizes) tie_corr += t * t * t - t;
        const double var = n * (n + 1) * (2.0 * n + 1) / 24.0 - tie_corr / 48.0;
        const double sd = std::sqrt(std::max(var, 1e-12));
        double z = 0.0;
        if (w_plus > mean) z = (w_plus - mean - 0.5) / sd;
        if (w_plus < mean) z = (w_plus - mean + 0.5) / sd;
        res.p_two_sided = std::min(1.0, 2.0 * (1.0 - stats::normal_cdf(std::abs(z))));
    }
    return res;
}

struct PairedComparison {
    double median_diff = 0.0;  // A - B
    double p = 1.0;
    double win_rate_b = 0.5;  // ties count half
    int n = 0;
};

/// Paired per-cell comparison of two models' WAPEs; positive medians favor B.
inline PairedComparison paired_comparison(const std::vector<double>& wape_a,
                                          const std::vector<double>& wape_b) {
    if (wape_a.size() != wape_b.size() || wape_a.empty())
        throw CoverageError("paired_comparison: models must share scored cells");
    const int n = static_cast<int>(wape_a.size());
    std::vector<double> diffs(n);
    int wins = 0, ties = 0;
    for (int i = 0; i < n; ++i) {
        diffs[i] = wape_a[i] - wape_b[i];
        if (diffs[i] > 0) ++wins;
        if (diffs[i] == 0) ++ties;
    }
    std::vector<double> sorted(diffs);
    std::sort(sorted.begin(), sorted.end());
    PairedComparison pc;
    pc.n = n;
    pc.median_diff = (n % 2 == 1) ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
    pc.p = wilcoxon_signed_rank(diffs).p_two_sided;
    pc.win_rate_b = (wins + 0.5 * ties) / n;
    return pc;
}

// ---------------------------------------------------------------------------
// Experiment analysis driver (Figures 8-11 layouts)
// ---------------------------------------------------------------------------

struct RunRow {
    std::string model_type, nlayers, mixed_cheat, nnodes, kernel_l2, split, file;
    double wape = 0.0;
    std::string status = "ok";
};

struct TestRow {
    std::string source;
    int df = 0;
    double chi2 = 0.0;
    double p = 1.0;
};

struct ProfileRow {
    std::string model_type, nlayers, mixed_cheat, nnodes, kernel_l2;
    double mean_recip = 0.0;
    double sd_recip = 0.0;
    std::optional<double> upper_pi;  // absent when the interval is undefined
};

struct HistogramBin {
    double lo = 0.0, hi = 0.0;
    int count = 0;
};

struct AnalysisReport {
    std::vector<TestRow> variance_tests;
    std::vector<TestRow> mean_tests;         // full model, Wald chi-square
    std::vector<TestRow> mean_tests_pruned;  // after dropping weak interactions
    std::vector<ProfileRow> profile;
    int best_row = -1;  // index into profile
    double pi_level = 0.95;
    std::vector<HistogramBin> wape_hist, recip_hist;
    int excluded_rows = 0;  // non-ok status or non-positive wape
    bool mean_fit_converged = false;
    bool var_fit_converged = false;
};

namespace detail {

inline std::vector<HistogramBin> histogram(const std::vector<double>& v, int bins) {
    std::vector<HistogramBin> out;
    if (v.empty()) return out;
    double lo = *std::min_element(v.begin(), v.end());
    double hi = *std::max_element(v.begin(), v.end());
    if (hi <= lo) hi = lo + 1.0;
    out.resize(bins);
    for (int b = 0; b < bins; ++b) {
        out[b].lo = lo + (hi - lo) * b / bins;
        out[b].hi = lo + (hi - lo) * (b + 1) / bins;
    }
    for (double x : v) {
        int b = std::min(bins - 1, static_cast<int>((x - lo) / (hi - lo) * bins));
        out[b].count += 1;
    }
    return out;
}

}  // namespace detail

struct AnalyzeOptions {
    double pi_level = 0.95;
    double prune_threshold = 0.05;
};

/// Full pipeline over a runs table: reciprocal response, loglinear-variance
/// fit, per-factor variance LR tests, Wald tests of the mean terms, interaction
/// pruning, and the upper-PI profile with its argmin configuration.
inline AnalysisReport analyze_runs(const std::vector<RunRow>& rows_in,
                                   AnalyzeOptions opt = {}) {
    AnalysisReport rep;
    rep.pi_level = opt.pi_level;

    std::vector<RunRow> rows;
    for (const auto& r : rows_in) {
        if (r.status != "ok" || !(r.wape > 0.0) || !std::isfinite(r.wape)) {
            rep.excluded_rows += 1;
            continue;
        }
        rows.push_back(r);
    }
    if (rows.size() < 10) throw CoverageError("analyze_runs: too few usable rows");
    const int n = static_cast<int>(rows.size());

    Eigen::VectorXd y(n);
    std::vector<double> wapes(n);
    for (int i = 0; i < n; ++i) {
        wapes[i] = rows[i].wape;
        y(i) = reciprocal_transform(rows[i].wape);
    }
    rep.wape_hist = detail::histogram(wapes, 20);
    {
        std::vector<double> recips(y.data(), y.data() + n);
        rep.recip_hist = detail::histogram(recips, 20);
    }

    // factor definitions: 5 experimental factors then the two blocks
    auto value_of = [](const RunRow& r, int f) -> const std::string& {
        switch (f) {
            case 0: return r.model_type;
            case 1: return r.nlayers;
            case 2: return r.mixed_cheat;
            case 3: return r.nnodes;
            case 4: return r.kernel_l2;
            case 5: return r.split;
            default: return r.file;
        }
    };
    static const char* kNames[] = {"model.type", "nlayers",      "mixed.cheat", "nnodes",
                                   "kernel.L2.reg", "split",     "file"};
    std::vector<FactorDef> defs(7);
    for (int f = 0; f < 7; ++f) {
        defs[f].name = kNames[f];
        std::set<std::string> lv;
        for (const auto& r : rows) lv.insert(value_of(r, f));
        defs[f].levels.assign(lv.begin(), lv.end());
    }
    auto values = [&](int i, int f) -> const std::string& { return value_of(rows[i], f); };

    // mean terms: every subset of the multi-level experimental factors, then blocks
    auto multi_level = [&](const std::vector<int>& term) {
        for (int f : term)
            if (defs[f].levels.size() < 2) return false;
        return true;
    };
    std::vector<std::vector<int>> mean_terms;
    for (int mask = 1; mask < 32; ++mask) {
        std::vector<int> term;
        for (int f = 0; f < 5; ++f)
            if (mask & (1 << f)) term.push_back(f);
        if (multi_level(term)) mean_terms.push_back(term);
    }
    std::stable_sort(mean_terms.begin(), mean_terms.end(),
                     [](const auto& a, const auto& b) { return a.size() < b.size(); });
    const std::size_t n_experimental_terms = mean_terms.size();
    bool multi_split = defs[5].levels.size() > 1;
    bool multi_file = defs[6].levels.size() > 1;
    if (multi_split) mean_terms.push_back({5});
    if (multi_file) mean_terms.push_back({6});
    if (multi_split && multi_file) mean_terms.push_back({5, 6});

    std::vector<std::vector<int>> var_terms;
    for (int f = 0; f < 5; ++f)
        if (defs[f].levels.size() >= 2) var_terms.push_back({f});
    if (multi_file) var_terms.push_back({6});
    if (multi_split) var_terms.push_back({5});

    ModelMatrix Xm = build_model_matrix(n, defs, mean_terms, values);
    ModelMatrix Xv = build_model_matrix(n, defs, var_terms, values);

    LoglinVarFit full = fit_loglin_var(Xm.X, Xv.X, y);
    rep.mean_fit_converged = full.converged;
    rep.var_fit_converged = full.converged;

    // variance LR tests: drop one variance factor at a time
    for (std::size_t t = 0; t < var_terms.size(); ++t) {
        std::vector<std::vector<int>> reduced_terms;
        for (std::size_t u = 0; u < var_terms.size(); ++u)
            if (u != t) reduced_terms.push_back(var_terms[u]);
        ModelMatrix Xv_red = build_model_matrix(n, defs, reduced_terms, values);
        LoglinVarFit red = fit_loglin_var(Xm.X, Xv_red.X, y);
        int df = static_cast<int>(Xv.groups[t].cols.size());
        double chi2 = std::max(0.0, 2.0 * (full.loglik - red.loglik));
        rep.variance_tests.push_back(
            {Xv.groups[t].source, df, chi2, stats::chi_square_sf(chi2, df)});
    }

    // Wald chi-square tests for the mean terms
    auto wald_tests = [&](const ModelMatrix& mm, const LoglinVarFit& fit) {
        std::vector<TestRow> out;
        for (const auto& g : mm.groups) {
            const int k = static_cast<int>(g.cols.size());
            Eigen::VectorXd ag(k);
            Eigen::MatrixXd Cg(k, k);
            for (int a = 0; a < k; ++a) {
                ag(a) = fit.mean_coefs(g.cols[a]);
                for (int b = 0; b < k; ++b) Cg(a, b) = fit.mean_cov(g.cols[a], g.cols[b]);
            }
            double chi2 = ag.dot(Cg.ldlt().solve(ag));
            chi2 = std::max(chi2, 0.0);
            out.push_back({g.source, k, chi2, stats::chi_square_sf(chi2, k)});
        }
        return out;
    };
    rep.mean_tests = wald_tests(Xm, full);

    // prune experimental interactions that fail the threshold
    std::vector<std::vector<int>> pruned_terms;
    for (std::size_t t = 0; t < mean_terms.size(); ++t) {
        bool experimental_interaction = t < n_experimental_terms && mean_terms[t].size() >= 2;
        if (experimental_interaction && rep.mean_tests[t].p >= opt.prune_threshold) continue;
        pruned_terms.push_back(mean_terms[t]);
    }
    ModelMatrix Xm_pruned = build_model_matrix(n, defs, pruned_terms, values);
    LoglinVarFit pruned = fit_loglin_var(Xm_pruned.X, Xv.X, y);
    rep.mean_tests_pruned = wald_tests(Xm_pruned, pruned);

    // profile over the experimental grid at reference blocking levels
    std::vector<int> grid_shape;
    for (int f = 0; f < 5; ++f) grid_shape.push_back(static_cast<int>(defs[f].levels.size()));
    std::vector<int> idx(5, 0);
    auto xm_for = [&](const ModelMatrix& mm, const std::vector<std::string>& lv) {
        Eigen::VectorXd x = Eigen::VectorXd::Zero(mm.X.cols());
        x(0) = 1.0;
        for (int j = 1; j < mm.X.cols(); ++j) {
            // column names look like "f=a*g=b"; set 1 when every clause holds
            const std::string& nm = mm.col_names[j];
            bool on = true;
            std::size_t pos = 0;
            while (pos < nm.size()) {
                std::size_t star = nm.find('*', pos);
                std::string clause = nm.substr(pos, star == std::string::npos ? star : star - pos);
                std::size_t eq = clause.rfind('=');
                std::string fname = clause.substr(0, eq);
                std::string flevel = clause.substr(eq + 1);
                int fi = -1;
                for (int f = 0; f < 7; ++f)
                    if (fname == kNames[f]) fi = f;
                if (fi < 0 || fi >= 5 || lv[fi] != flevel) {
                    on = false;
                    break;
                }
                if (star == std::string::npos) break;
                pos = star + 1;
            }
            x(j) = on ? 1.0 : 0.0;
        }
        return x;
    };

    const double z = stats::normal_quantile(0.5 * (1.0 + opt.pi_level));
    while (true) {
        std::vector<std::string> lv(5);
        for (int f = 0; f < 5; ++f) lv[f] = defs[f].levels[idx[f]];
        ProfileRow pr;
        pr.model_type = lv[0];
        pr.nlayers = lv[1];
        pr.mixed_cheat = lv[2];
        pr.nnodes = lv[3];
        pr.kernel_l2 = lv[4];
        Eigen::VectorXd xm = xm_for(Xm_pruned, lv);
        Eigen::VectorXd xv = xm_for(Xv, lv);
        pr.mean_recip = pruned.predict_mean(xm);
        pr.sd_recip = pruned.predict_sd(xv);
        double lower = pr.mean_recip - z * pr.sd_recip;
        if (lower > 0.0) pr.upper_pi = 1.0 / lower;
        rep.profile.push_back(std::move(pr));

        int k = 4;
        while (k >= 0) {
            if (++idx[k] < grid_shape[k]) break;
            idx[k] = 0;
            --k;
        }
        if (k < 0) break;
    }

    // argmin of the upper PI; ties prefer fewer nodes, then fewer layers
    for (std::size_t i = 0; i < rep.profile.size(); ++i) {
        if (!rep.profile[i].upper_pi) continue;
        if (rep.best_row < 0) {
            rep.best_row = static_cast<int>(i);
            continue;
        }
        const auto& cur = rep.profile[i];
        const auto& best = rep.profile[rep.best_row];
        double diff = *cur.upper_pi - *best.upper_pi;
        if (diff < -1e-12) {
            rep.best_row = static_cast<int>(i);
        } else if (std::abs(diff) <= 1e-12) {
            auto complexity = [](const ProfileRow& r) {
                return std::stoi(r.nnodes) * 10 + std::stoi(r.nlayers);
            };
            if (complexity(cur) < complexity(best)) rep.best_row = static_cast<int>(i);
        }
    }
    if (rep.best_row < 0) throw NumericError("analyze_runs: every profile row is undefined");
    return rep;
}

// ---------------------------------------------------------------------------
// Report writers
// ---------------------------------------------------------------------------

inline void write_tests_csv(std::ostream& os, const std::vector<TestRow>& tests) {
    os << "source,df,chisquare,p\n";
    for (const auto& t : tests)
        os << t.source << ',' << t.df << ',' << t.chi2 << ',' << t.p << "\n";
}

inline void write_profile_csv(std::ostream& os, const AnalysisReport& rep) {
    os << "model.type,nlayers,mixed.cheat,nnodes,kernel.L2.reg,"
          "mean_recip_wape,sd_recip_wape,upper_pi_wape\n";
    for (const auto& r : rep.profile) {
        os << r.model_type << ',' << r.nlayers << ',' << r.mixed_cheat << ',' << r.nnodes << ','
           << r.kernel_l2 << ',' << r.mean_recip << ',' << r.sd_recip << ',';
        if (r.upper_pi)
            os << *r.upper_pi;
        else
            os << "undefined";
        os << "\n";
    }
}

inline void write_histogram_csv(std::ostream& os, const std::vector<HistogramBin>& bins) {
    os << "bin_low,bin_high,count\n";
    for (const auto& b : bins) os << b.lo << ',' << b.hi << ',' << b.count << "\n";
}

inline nlohmann::json selection_json(const AnalysisReport& rep) {
    const auto& best = rep.profile[rep.best_row];
    return nlohmann::json{
        {"criterion", "upper_pi_wape"},
        {"level", rep.pi_level},
        {"best",
         {{"model.type", best.model_type},
          {"nlayers", best.nlayers},
          {"mixed.cheat", best.mixed_cheat},
          {"nnodes", best.nnodes},
          {"kernel.L2.reg", best.kernel_l2}}},
        {"mean_recip_wape", best.mean_recip},
        {"sd_recip_wape", best.sd_recip},
        {"upper_pi_wape", best.upper_pi ? *best.upper_pi : 0.0},
        {"excluded_rows", rep.excluded_rows},
    };
}

}  // namespace seasoncast::analysis
