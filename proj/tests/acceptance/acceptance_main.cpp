// Acceptance suite: runs every gate criterion at its stated tolerance and
// prints one PASS/FAIL line per criterion. Exit code = number of failures.

#include <Eigen/Dense>
#include <chrono>
#include <cstdio>
#include <random>
#include <set>
#include <sstream>

#include "seasoncast/analysis.hpp"
#include "seasoncast/classical.hpp"
#include "seasoncast/datagen.hpp"
#include "seasoncast/harness.hpp"
#include "seasoncast/mixedmodel.hpp"
#include "seasoncast/neural.hpp"

using namespace seasoncast;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;

    void require(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            if (!detail.empty()) detail += "; ";
            detail += what;
        }
    }
    void note(const std::string& what) {
        if (!detail.empty()) detail += "; ";
        detail += what;
    }
};

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.4g", v);
    return buf;
}

SkillSeries doubly_stochastic_series(std::uint64_t seed, int n_weeks, double peak = 20.0) {
    datagen::SimConfig cfg;
    cfg.grid = PeriodGrid{5, 32};
    cfg.n_weeks = n_weeks;
    cfg.seed = seed;
    cfg.base_surface = datagen::default_surface(cfg.grid, peak);
    cfg.sigma_day = 0.3;
    cfg.rho_day = 0.8;
    cfg.sigma_resid = 0.5;
    cfg.rho_resid = 0.4;
    return datagen::simulate_skill(cfg, "s");
}

// -------------------------------------------------------------------------
// 1. worked-example fidelity
// -------------------------------------------------------------------------
Outcome criterion1() {
    Outcome out;
    using namespace seasoncast::neural;
    {
        Eigen::MatrixXd W1(1, 1), W2(1, 1);
        Eigen::VectorXd b1(1), b2(1), x(1);
        W1 << 0.5323;
        b1 << 0.4046;
        W2 << 3.3923;
        b2 << -0.6354;
        x << 1.0;
        double v = dense_layer(W2, b2, dense_layer(W1, b1, x, Activation::Tanh, 0.5),
                               Activation::Identity)(0);
        out.require(std::abs(v - 0.847) < 5e-4, "one-node network gave " + fmt(v));
    }
    {
        Eigen::MatrixXd W1(1, 2), W2(2, 1), W3(1, 1);
        Eigen::VectorXd b1(2), b2(1), b3(1), x(1);
        W1 << -0.8785, 0.4124;
        b1 << -0.3633, -0.0824;
        W2 << -0.7382, 0.3057;
        b2 << 0.2416;
        W3 << 4.9517;
        b3 << -0.8200;
        x << 1.0;
        auto h2 = dense_layer(W1, b1, x, Activation::Tanh, 0.5);
        auto h1 = dense_layer(W2, b2, h2, Activation::Tanh, 0.5);
        double v = dense_layer(W3, b3, h1, Activation::Identity)(0);
        out.require(std::abs(v - 0.843) < 5e-4, "two-layer network gave " + fmt(v));
    }
    {
        Eigen::MatrixXd Wx(1, 1), U(1, 1);
        Eigen::VectorXd b(1), x(1), s0(1);
        Wx << 0.5323;
        U << 0.0;
        b << 0.4046;
        x << 1.0;
        s0 << 0.0;
        double v = simple_rnn_step(Wx, U, b, x, s0, Activation::Tanh, 0.5)(0);
        out.require(std::abs(v - 0.44) < 5e-3, "rnn state gave " + fmt(v));
    }
    return out;
}

// -------------------------------------------------------------------------
// 2. gradient correctness against central finite differences
// -------------------------------------------------------------------------
Outcome criterion2() {
    Outcome out;
    using namespace seasoncast::neural;
    double worst = 0.0;
    for (CellType type : {CellType::Dense, CellType::SimpleRnn, CellType::Gru, CellType::Lstm}) {
        for (std::uint64_t seed = 1; seed <= 10; ++seed) {
            NetworkConfig cfg;
            cfg.model_type = type;
            cfg.nlayers = 2;
            cfg.nnodes = 4;
            cfg.kernel_l2 = (seed % 2) ? 0.0 : 1e-4;
            cfg.seed = seed;
            const int in = 3, T = 4;
            Network net(cfg, in);
            Rng rng(mix_seed(seed, 177));
            // a generic point: zero biases would leave dead-relu rows exactly
            // on the activation kink
            for (auto& l : net.layers())
                for (int i = 0; i < l.b.size(); ++i) l.b(i) = rng.normal(0.0, 0.3);
            Eigen::MatrixXd X(T, in);
            Eigen::VectorXd y(T);
            for (int t = 0; t < T; ++t) {
                for (int j = 0; j < in; ++j) X(t, j) = rng.normal(0.0, 1.0);
                y(t) = 3.0 + rng.normal(0.0, 0.5);
            }
            net.loss_with_grads(X, y);
            const double eps = 1e-5;
            for (auto& l : net.layers()) {
                std::vector<std::pair<double*, double>> entries;
                for (int i = 0; i < l.W.size(); ++i) entries.push_back({l.W.data() + i, l.gW(i)});
                if (l.type != CellType::Dense)
                    for (int i = 0; i < l.U.size(); ++i)
                        entries.push_back({l.U.data() + i, l.gU(i)});
                for (int i = 0; i < l.b.size(); ++i) entries.push_back({l.b.data() + i, l.gb(i)});
                for (auto [ptr, ga] : entries) {
                    const double orig = *ptr;
                    *ptr = orig + eps;
                    double up = net.loss_only(X, y);
                    *ptr = orig - eps;
                    double dn = net.loss_only(X, y);
                    *ptr = orig;
                    double gf = (up - dn) / (2 * eps);
                    double rel = std::abs(ga - gf) / std::max({std::abs(ga), std::abs(gf), 1e-3});
                    worst = std::max(worst, rel);
                }
            }
        }
    }
    out.require(worst < 1e-4, "worst relative gradient error " + fmt(worst));
    out.note("worst rel err " + fmt(worst) + " over dense/elman/gru/lstm x 10 seeds");
    return out;
}

// -------------------------------------------------------------------------
// 3. mixed-model recovery and the dense likelihood oracle
// -------------------------------------------------------------------------
Outcome criterion3() {
    Outcome out;

    // dense multivariate-normal oracle on a 2-day x 4-period instance
    {
        const int P = 4;
        std::vector<int> obs_day, obs_period;
        for (int d : {1, 2})
            for (int p = 1; p <= P; ++p) {
                obs_day.push_back(d);
                obs_period.push_back(p);
            }
        Eigen::MatrixXd X(8, 2);
        Eigen::VectorXd y(8);
        std::mt19937 gen(3);
        std::normal_distribution<double> nd(0.0, 1.0);
        for (int i = 0; i < 8; ++i) {
            X(i, 0) = 1.0;
            X(i, 1) = (obs_period[i] <= 2) ? 1.0 : 0.0;
            y(i) = 3.0 + 0.5 * X(i, 1) + 0.3 * nd(gen);
        }
        mixedmodel::CovParams cov{0.5, 0.6, 0.8, 0.3};
        auto got = mixedmodel::profile_loglik(cov, X.sparseView(), y,
                                              mixedmodel::ObsLayout{{1, 2}, P});
        Eigen::MatrixXd V(8, 8);
        for (int i = 0; i < 8; ++i)
            for (int j = 0; j < 8; ++j) {
                double v =
                    cov.sigma2_day * std::pow(cov.rho_day, std::abs(obs_day[i] - obs_day[j]));
                if (obs_day[i] == obs_day[j])
                    v += cov.sigma2_resid *
                         std::pow(cov.rho_resid, std::abs(obs_period[i] - obs_period[j]));
                V(i, j) = v;
            }
        Eigen::LDLT<Eigen::MatrixXd> ldlt(V);
        Eigen::MatrixXd A = X.transpose() * ldlt.solve(X);
        Eigen::VectorXd beta = A.ldlt().solve(X.transpose() * ldlt.solve(y));
        Eigen::VectorXd r = y - X * beta;
        double want = -0.5 * (ldlt.vectorD().array().log().sum() + r.dot(ldlt.solve(r)) +
                              8 * std::log(2.0 * M_PI));
        out.require(std::abs(got.loglik - want) < 1e-8,
                    "dense oracle mismatch " + fmt(std::abs(got.loglik - want)));
    }

    // parameter recovery at the pinned generator settings
    std::vector<double> s2d, rd, s2r, rr;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        auto s = doubly_stochastic_series(7000 + seed, 15);
        auto fit = mixedmodel::fit(s);
        s2d.push_back(fit.cov.sigma2_day);
        rd.push_back(fit.cov.rho_day);
        s2r.push_back(fit.cov.sigma2_resid);
        rr.push_back(fit.cov.rho_resid);
    }
    const double m_s2d = median(s2d), m_rd = median(rd), m_s2r = median(s2r), m_rr = median(rr);
    out.note("medians: sigma2_day " + fmt(m_s2d) + " (truth 0.09), rho_day " + fmt(m_rd) +
             " (truth 0.8), sigma2_resid " + fmt(m_s2r) + " (truth 0.25), rho_resid " +
             fmt(m_rr) + " (truth 0.4)");
    out.require(std::abs(m_s2d - 0.09) / 0.09 <= 0.05,
                "sigma2_day median off by " + fmt(std::abs(m_s2d - 0.09) / 0.09 * 100) + "% rel");
    out.require(std::abs(m_s2r - 0.25) / 0.25 <= 0.05,
                "sigma2_resid median off by " + fmt(std::abs(m_s2r - 0.25) / 0.25 * 100) +
                    "% rel");
    out.require(std::abs(m_rd - 0.8) <= 0.1,
                "rho_day median off by " + fmt(std::abs(m_rd - 0.8)));
    out.require(std::abs(m_rr - 0.4) <= 0.1,
                "rho_resid median off by " + fmt(std::abs(m_rr - 0.4)));
    return out;
}

// -------------------------------------------------------------------------
// 4. classical oracles
// -------------------------------------------------------------------------
std::vector<double> gen_arima(int n_seasons, int s, double phi, double theta, double Theta,
                              unsigned seed) {
    std::mt19937 gen(seed);
    std::normal_distribution<double> nd(0.0, 1.0);
    const int nw = (n_seasons - 1) * s;
    std::vector<double> e(nw), w(nw);
    for (int t = 0; t < nw; ++t) {
        e[t] = nd(gen);
        double v = e[t];
        if (t >= 1) v += phi * w[t - 1] + theta * e[t - 1];
        if (t >= s) v += Theta * e[t - s];
        if (t >= s + 1) v += theta * Theta * e[t - s - 1];
        w[t] = v;
    }
    std::vector<double> y(s);
    for (int i = 0; i < s; ++i) y[i] = 50.0 + 10.0 * std::sin(2 * M_PI * i / s);
    for (int t = 0; t < nw; ++t) y.push_back(w[t] + y[t]);
    return y;
}

Outcome criterion4() {
    Outcome out;
    // difference/integrate round trip
    {
        std::mt19937 gen(5);
        std::uniform_real_distribution<double> u(0.0, 100.0);
        std::vector<double> y(2 * 160 + 37);
        for (auto& v : y) v = u(gen);
        auto w = classical::seasonal_difference(y, 160);
        auto back = classical::seasonal_integrate(
            w, std::vector<double>(y.begin(), y.begin() + 160), 160);
        double worst = 0.0;
        for (std::size_t i = 0; i < y.size(); ++i)
            worst = std::max(worst, std::abs(back[i] - y[i]));
        out.require(worst < 1e-12, "round-trip error " + fmt(worst));
    }
    // all-zero coefficients give the seasonal random walk exactly
    {
        auto y = gen_arima(4, 160, 0.4, 0.2, -0.3, 7);
        classical::ArimaFit rw;
        rw.season_length = 160;
        auto fc = classical::arima_forecast(rw, y, 160);
        double worst = 0.0;
        for (int h = 1; h <= 160; ++h)
            worst = std::max(worst, std::abs(fc[h - 1] - y[y.size() + h - 1 - 160]));
        out.require(worst < 1e-12, "seasonal random walk error " + fmt(worst));
    }
    // self-generated parameter recovery at the weekly seasonal period
    {
        std::vector<double> phis, thetas, Thetas;
        for (unsigned seed = 1; seed <= 20; ++seed) {
            auto y = gen_arima(21, 160, 0.5, 0.3, -0.4, 900 + seed);
            auto fit = classical::arima_fit(y, 160);
            phis.push_back(fit.phi);
            thetas.push_back(fit.theta);
            Thetas.push_back(fit.Theta);
        }
        out.note("arima medians: phi " + fmt(median(phis)) + ", theta " + fmt(median(thetas)) +
                 ", Theta " + fmt(median(Thetas)));
        out.require(std::abs(median(phis) - 0.5) <= 0.15, "phi recovery out of band");
        out.require(std::abs(median(thetas) - 0.3) <= 0.15, "theta recovery out of band");
        out.require(std::abs(median(Thetas) + 0.4) <= 0.15, "Theta recovery out of band");
    }
    // noise-free periodic series through Winters
    {
        std::vector<double> y;
        for (int t = 0; t < 4 * 160; ++t)
            y.push_back(20.0 + 5.0 * std::sin(2 * M_PI * (t % 160) / 160.0));
        auto st = classical::winters_fit(y, 160);
        out.require(st.in_sample_mae < 1e-6, "winters one-step mae " + fmt(st.in_sample_mae));
    }
    return out;
}

// -------------------------------------------------------------------------
// 5. design integrity and worker-count reproducibility
// -------------------------------------------------------------------------
Outcome criterion5() {
    Outcome out;
    auto grid = harness::screening_grid();
    out.require(grid.rows.size() == 128, "grid rows " + std::to_string(grid.rows.size()));
    {
        std::set<std::vector<std::string>> unique(grid.rows.begin(), grid.rows.end());
        out.require(unique.size() == 128, "grid rows not unique");
    }
    auto runs = harness::replicate_runs(grid, {"a", "b", "c"}, {21, 22, 23, 24, 25});
    out.require(runs.size() == 1920, "replicated runs " + std::to_string(runs.size()));

    // reduced 2x2x2 grid executed end to end, identical across worker counts
    auto t0 = Clock::now();
    std::map<std::string, SkillSeries> skills;
    skills.emplace("s1", doubly_stochastic_series(61, 7));
    harness::ExperimentPlan plan;
    plan.design = harness::full_factorial({
        {"model.type", {"dense", "gru"}},
        {"nlayers", {"1"}},
        {"mixed.cheat", {"FALSE", "TRUE"}},
        {"nnodes", {"25", "50"}},
        {"kernel.L2.reg", {"0"}},
    });
    plan.splits = {"s1"};
    plan.files = {34, 35};
    plan.seed = 11;
    auto table1 = harness::run_experiment(plan, skills, 1);
    auto table2 = harness::run_experiment(plan, skills, 2);
    auto to_sorted_csv = [](const std::vector<harness::ExperimentRun>& t) {
        std::stringstream ss;
        harness::write_runs_csv(ss, t);
        std::vector<std::string> lines;
        std::string line;
        while (std::getline(ss, line)) lines.push_back(line);
        std::sort(lines.begin(), lines.end());
        std::string outstr;
        for (const auto& l : lines) outstr += l + "\n";
        return outstr;
    };
    out.require(to_sorted_csv(table1) == to_sorted_csv(table2),
                "runs tables differ across worker counts");
    int ok = 0;
    for (const auto& r : table1)
        if (r.status == "ok") ++ok;
    out.require(ok == static_cast<int>(table1.size()), "reduced grid had failing runs");
    double secs = std::chrono::duration<double>(Clock::now() - t0).count();
    out.note("reduced 2x2x2 grid end-to-end " + fmt(secs) + " s");
    out.require(secs < 600.0, "reduced grid exceeded 10 minutes");
    return out;
}

// -------------------------------------------------------------------------
// 6. analysis pipeline
// -------------------------------------------------------------------------
Outcome criterion6() {
    Outcome out;
    // homoskedastic reduction matches OLS
    {
        std::mt19937 gen(2);
        std::normal_distribution<double> nd(0.0, 1.0);
        const int n = 300;
        Eigen::MatrixXd Xm(n, 2);
        Eigen::VectorXd y(n);
        for (int i = 0; i < n; ++i) {
            Xm(i, 0) = 1.0;
            Xm(i, 1) = nd(gen);
            y(i) = 1.0 + 0.5 * Xm(i, 1) + 0.7 * nd(gen);
        }
        auto fit = analysis::fit_loglin_var(Xm, Eigen::MatrixXd::Ones(n, 1), y);
        Eigen::VectorXd ols = (Xm.transpose() * Xm).ldlt().solve(Xm.transpose() * y);
        double worst = (fit.mean_coefs - ols).cwiseAbs().maxCoeff();
        double rss = (y - Xm * ols).squaredNorm();
        worst = std::max(worst, std::abs(std::exp(fit.var_coefs(0)) - rss / n));
        out.require(worst < 1e-8, "ols reduction error " + fmt(worst));
    }
    // simulated variance effect of 1.0 recovered at n=2000
    {
        std::vector<double> coefs;
        for (unsigned seed = 1; seed <= 20; ++seed) {
            std::mt19937 gen(seed);
            std::normal_distribution<double> nd(0.0, 1.0);
            const int n = 2000;
            Eigen::MatrixXd Xm = Eigen::MatrixXd::Ones(n, 1);
            Eigen::MatrixXd Xv(n, 2);
            Eigen::VectorXd y(n);
            for (int i = 0; i < n; ++i) {
                Xv(i, 0) = 1.0;
                Xv(i, 1) = (i % 2) ? 1.0 : 0.0;
                y(i) = 3.0 + std::exp(0.5 * Xv(i, 1)) * nd(gen);
            }
            coefs.push_back(analysis::fit_loglin_var(Xm, Xv, y).var_coefs(1));
        }
        out.note("variance effect median " + fmt(median(coefs)));
        out.require(std::abs(median(coefs) - 1.0) <= 0.15,
                    "variance effect recovery out of band");
    }
    // null LR-test p-values are uniform (Kolmogorov-Smirnov at alpha = 0.01)
    {
        const int reps = 200, n = 400;
        std::vector<double> ps;
        for (int rep = 0; rep < reps; ++rep) {
            std::mt19937 gen(5000 + rep);
            std::normal_distribution<double> nd(0.0, 1.0);
            Eigen::MatrixXd Xm = Eigen::MatrixXd::Ones(n, 1);
            Eigen::MatrixXd Xv(n, 2);
            Eigen::VectorXd y(n);
            for (int i = 0; i < n; ++i) {
                Xv(i, 0) = 1.0;
                Xv(i, 1) = (i % 2) ? 1.0 : 0.0;
                y(i) = 1.0 + nd(gen);
            }
            auto full = analysis::fit_loglin_var(Xm, Xv, y);
            auto reduced = analysis::fit_loglin_var(Xm, Eigen::MatrixXd::Ones(n, 1), y);
            ps.push_back(analysis::lr_test_variance(full, reduced, 1).p);
        }
        std::sort(ps.begin(), ps.end());
        double d = 0.0;
        for (int i = 0; i < reps; ++i)
            d = std::max(
                {d, std::abs((i + 1.0) / reps - ps[i]), std::abs(ps[i] - (double)i / reps)});
        out.note("KS statistic " + fmt(d));
        out.require(d < 1.628 / std::sqrt((double)reps), "null p-values not uniform");
    }
    // pinned arithmetic
    {
        double upi = analysis::wape_upper_pi(20.0, 2.0, 0.95);
        out.require(std::abs(upi - 1.0 / 16.08) < 1e-6, "upper PI gave " + fmt(upi));
        auto w = analysis::wilcoxon_signed_rank({1, 2, 3, 4, 5});
        out.require(std::abs(w.p_two_sided - 0.0625) < 1e-12,
                    "wilcoxon p gave " + fmt(w.p_two_sided));
    }
    return out;
}

// -------------------------------------------------------------------------
// 7. qualitative model ranking on synthetic data
// -------------------------------------------------------------------------
Outcome criterion7() {
    Outcome out;
    const int workers = harness::default_workers();

    // (a) the doubly stochastic model wins on its own process at high volume
    {
        std::map<std::string, SkillSeries> skills;
        for (int k = 0; k < 20; ++k) {
            std::string name = "s" + std::to_string(k);
            datagen::SimConfig cfg;
            cfg.grid = PeriodGrid{5, 32};
            cfg.n_weeks = 9;  // 5-week window + 20 forecast days
            cfg.seed = 500 + k;
            cfg.base_surface = datagen::default_surface(cfg.grid, 20.0);
            cfg.sigma_day = 0.3;
            cfg.rho_day = 0.8;
            cfg.sigma_resid = 0.5;
            cfg.rho_resid = 0.4;
            skills.emplace(name, datagen::simulate_skill(cfg, name));
        }
        harness::BacktestPlan plan;
        plan.models = {ModelTag::DoublyStoch, ModelTag::Winters, ModelTag::ARIMA,
                       ModelTag::RNN_GRU};
        plan.n_forecast_days = 20;
        plan.seed = 42;
        plan.nn_layers = 1;
        plan.nn_nodes = 25;
        plan.nn_kernel_l2 = 0.0;
        plan.max_epochs_override = 250;
        auto cells = harness::run_backtest(plan, skills, workers);
        std::map<ModelTag, std::pair<double, int>> acc;
        for (const auto& c : cells)
            if (c.status == "ok" && c.wape) {
                acc[c.model].first += *c.wape;
                acc[c.model].second += 1;
            }
        std::string means;
        double ds_mean = 1e300;
        for (const auto& [tag, pr] : acc) {
            double mean = pr.first / pr.second;
            means += std::string(to_string(tag)) + " " + fmt(mean) + " ";
            if (tag == ModelTag::DoublyStoch) ds_mean = mean;
        }
        bool ds_lowest = true;
        for (const auto& [tag, pr] : acc)
            if (tag != ModelTag::DoublyStoch && pr.first / pr.second <= ds_mean)
                ds_lowest = false;
        out.note("mean backtest wape: " + means);
        out.require(ds_lowest, "doubly stochastic did not attain the lowest mean wape");
    }

    // (b) feeding the classical forecasts to the GRU does not hurt it
    {
        std::map<std::string, SkillSeries> skills;
        for (int k = 0; k < 6; ++k) {
            std::string name = "c" + std::to_string(k);
            datagen::SimConfig cfg;
            cfg.grid = PeriodGrid{5, 32};
            cfg.n_weeks = 6;
            cfg.seed = 700 + k;
            cfg.base_surface = datagen::default_surface(cfg.grid, 20.0);
            cfg.sigma_day = 0.3;
            cfg.rho_day = 0.8;
            cfg.sigma_resid = 0.5;
            cfg.rho_resid = 0.4;
            skills.emplace(name, datagen::simulate_skill(cfg, name));
        }
        harness::BacktestPlan plan;
        plan.models = {ModelTag::RNN_GRU, ModelTag::RNN_GRU_cheat};
        plan.n_forecast_days = 5;  // 6 skills x 5 days = 30 paired runs
        plan.seed = 43;
        plan.nn_layers = 1;
        plan.nn_nodes = 25;
        plan.nn_kernel_l2 = 0.0;
        plan.max_epochs_override = 250;
        auto cells = harness::run_backtest(plan, skills, workers);
        auto pc = harness::paired_model_comparison(cells, ModelTag::RNN_GRU,
                                                   ModelTag::RNN_GRU_cheat);
        out.note("paired GRU minus GRU_cheat: median " + fmt(pc.median_diff) + ", p " +
                 fmt(pc.p) + ", n " + std::to_string(pc.n));
        out.require(pc.n == 30, "expected 30 paired runs");
        out.require(pc.median_diff >= 0.0, "cheat variant made the median worse");
    }
    return out;
}

// -------------------------------------------------------------------------
// 8. leakage guard
// -------------------------------------------------------------------------
Outcome criterion8() {
    Outcome out;
    auto s = doubly_stochastic_series(91, 6, 12.0);
    const int target = s.last_day_num();

    std::vector<Observation> obs = s.observations();
    for (auto& o : obs)
        if (o.day_num == target) o.calls = o.calls * 3 + 17;
    SkillSeries perturbed(s.grid(), obs);

    harness::CellContext a(s, target, 5);
    harness::CellContext b(perturbed, target, 5);

    out.require(a.bundle.mixed_forecast == b.bundle.mixed_forecast, "mixed forecast reacted");
    out.require(a.bundle.winters_forecast == b.bundle.winters_forecast,
                "winters forecast reacted");
    out.require(a.bundle.arima_forecast == b.bundle.arima_forecast, "arima forecast reacted");
    out.require((a.design_cheat.X - b.design_cheat.X).cwiseAbs().maxCoeff() == 0.0,
                "cheat design reacted");
    out.require((a.design_plain.X - b.design_plain.X).cwiseAbs().maxCoeff() == 0.0,
                "plain design reacted");
    for (std::size_t p = 0; p < a.bundle.cheat_target.size(); ++p) {
        out.require(a.bundle.cheat_target[p].mixed == b.bundle.cheat_target[p].mixed &&
                        a.bundle.cheat_target[p].winters == b.bundle.cheat_target[p].winters &&
                        a.bundle.cheat_target[p].arima == b.bundle.cheat_target[p].arima,
                    "target cheat inputs reacted");
    }
    harness::DesignPoint point;
    point.model_type = neural::CellType::Gru;
    point.nnodes = 25;
    point.mixed_cheat = true;
    auto ra = harness::forecast_network(a, point, 5, 40);
    auto rb = harness::forecast_network(b, point, 5, 40);
    out.require(ra.predictions == rb.predictions, "network forecast reacted");
    return out;
}

}  // namespace

int main() {
    struct Entry {
        int id;
        const char* name;
        Outcome (*fn)();
    };
    const Entry entries[] = {
        {1, "worked-example fidelity", criterion1},
        {2, "gradient correctness vs central finite differences", criterion2},
        {3, "mixed-model recovery and dense likelihood oracle", criterion3},
        {4, "classical oracles (differencing, seasonal RW, recovery, winters)", criterion4},
        {5, "design integrity and worker reproducibility", criterion5},
        {6, "analysis pipeline oracles", criterion6},
        {7, "qualitative model ranking on synthetic data", criterion7},
        {8, "leakage guard", criterion8},
    };
    int failures = 0;
    for (const auto& e : entries) {
        auto t0 = Clock::now();
        Outcome out;
        try {
            out = e.fn();
        } catch (const std::exception& ex) {
            out.pass = false;
            out.note(std::string("exception: ") + ex.what());
        }
        double secs = std::chrono::duration<double>(Clock::now() - t0).count();
        std::printf("[%s] criterion %d: %s (%.1f s)%s%s\n", out.pass ? "PASS" : "FAIL", e.id,
                    e.name, secs, out.detail.empty() ? "" : " -- ", out.detail.c_str());
        std::fflush(stdout);
        if (!out.pass) ++failures;
    }
    if (failures > 0) std::printf("%d of 8 criteria failed\n", failures);
    return failures > 0 ? 1 : 0;
}
