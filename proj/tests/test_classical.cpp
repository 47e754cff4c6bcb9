#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "seasoncast/classical.hpp"

using namespace seasoncast;
using namespace seasoncast::classical;

namespace {

// Independent re-implementation of the additive recursions for the oracle.
double oracle_winters_mae(const std::vector<double>& y, int L, double a, double b, double g) {
    double m1 = 0, m2 = 0;
    for (int i = 0; i < L; ++i) m1 += y[i];
    for (int i = L; i < 2 * L; ++i) m2 += y[i];
    m1 /= L;
    m2 /= L;
    double level = m1, trend = (m2 - m1) / L;
    std::vector<double> season(y.begin(), y.begin() + L);
    for (auto& v : season) v -= m1;
    double err = 0;
    int cnt = 0;
    for (std::size_t t = L; t < y.size(); ++t) {
        double pred = level + trend + season[t % L];
        err += std::abs(y[t] - pred);
        ++cnt;
        double lp = level;
        level = a * (y[t] - season[t % L]) + (1 - a) * (level + trend);
        trend = b * (level - lp) + (1 - b) * trend;
        season[t % L] = g * (y[t] - level) + (1 - g) * season[t % L];
    }
    return err / cnt;
}

std::vector<double> gen_arima(int n_seasons, int s, double phi, double theta, double Theta,
                              unsigned seed, double noise_sd = 1.0) {
    std::mt19937 gen(seed);
    std::normal_distribution<double> nd(0.0, noise_sd);
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

}  // namespace

TEST_CASE("seasonal difference then integrate is the identity") {
    std::mt19937 gen(3);
    std::uniform_real_distribution<double> u(0.0, 100.0);
    for (int s : {4, 7, 160}) {
        std::vector<double> y(3 * s + 5);
        for (auto& v : y) v = u(gen);
        auto w = seasonal_difference(y, s);
        auto back = seasonal_integrate(w, std::vector<double>(y.begin(), y.begin() + s), s);
        REQUIRE(back.size() == y.size());
        for (std::size_t i = 0; i < y.size(); ++i)
            CHECK(back[i] == Catch::Approx(y[i]).margin(1e-12));
    }
}

TEST_CASE("winters reproduces an exactly periodic series") {
    const int L = 160;
    std::vector<double> y;
    for (int t = 0; t < 4 * L; ++t) y.push_back(20.0 + 5.0 * std::sin(2 * M_PI * (t % L) / L));
    auto st = winters_fit(y, L);
    CHECK(st.in_sample_mae < 1e-6);
    auto fc = winters_forecast(st, 32);
    for (int h = 1; h <= 32; ++h) {
        double expect = 20.0 + 5.0 * std::sin(2 * M_PI * ((4 * L + h - 1) % L) / L);
        CHECK(fc[h - 1] == Catch::Approx(expect).margin(1e-6));
    }
}

TEST_CASE("winters on a constant series settles at the constant") {
    std::vector<double> y(3 * 20, 7.5);
    auto st = winters_fit(y, 20);
    CHECK(st.level == Catch::Approx(7.5).margin(1e-8));
    CHECK(st.trend == Catch::Approx(0.0).margin(1e-8));
    for (double f : winters_forecast(st, 10)) CHECK(f == Catch::Approx(7.5).margin(1e-8));
}

TEST_CASE("winters grid choice is optimal under an independent oracle") {
    const int L = 12;
    std::mt19937 gen(11);
    std::normal_distribution<double> nd(0.0, 0.8);
    std::vector<double> y;
    for (int t = 0; t < 3 * L; ++t)
        y.push_back(10.0 + 0.05 * t + 3.0 * std::sin(2 * M_PI * (t % L) / L) + nd(gen));
    auto st = winters_fit(y, L);

    double chosen = oracle_winters_mae(y, L, st.alpha, st.beta_t, st.gamma);
    double best = std::numeric_limits<double>::infinity();
    for (double a = 0.01; a <= 0.99 + 1e-12; a += 0.07)
        for (double b = 0.01; b <= 0.99 + 1e-12; b += 0.07)
            for (double g = 0.01; g <= 0.99 + 1e-12; g += 0.07)
                best = std::min(best, oracle_winters_mae(y, L, a, b, g));
    CHECK(chosen == Catch::Approx(best).margin(1e-10));
    CHECK(st.in_sample_mae == Catch::Approx(best).margin(1e-10));
}

TEST_CASE("winters forecast follows the level and trend") {
    WintersState st;
    st.level = 10.0;
    st.trend = 1.0;
    st.seasonal = std::vector<double>(8, 0.0);
    st.season_length = 8;
    st.t_end = 24;
    st.alpha = st.beta_t = st.gamma = 0.5;
    auto fc = winters_forecast(st, 5);
    for (int h = 1; h <= 5; ++h) CHECK(fc[h - 1] == Catch::Approx(10.0 + h).margin(1e-12));

    // with zero seasonal indices the one-step prediction is level + trend
    CHECK(fc[0] == Catch::Approx(st.level + st.trend).margin(1e-12));
}

TEST_CASE("arima with all coefficients zero is the seasonal random walk") {
    const int s = 16;
    auto y = gen_arima(5, s, 0.4, 0.2, -0.3, 21);
    ArimaFit rw;
    rw.phi = rw.theta = rw.Theta = 0.0;
    rw.season_length = s;
    auto fc = arima_forecast(rw, y, s);
    for (int h = 1; h <= s; ++h)
        CHECK(fc[h - 1] == Catch::Approx(y[y.size() + h - 1 - s]).margin(1e-12));
}

TEST_CASE("arima recovers self-generated parameters") {
    const int s = 40;
    std::vector<double> phis, thetas, Thetas;
    for (unsigned seed = 1; seed <= 20; ++seed) {
        auto y = gen_arima(21, s, 0.5, 0.3, -0.4, 100 + seed);
        auto fit = arima_fit(y, s);
        phis.push_back(fit.phi);
        thetas.push_back(fit.theta);
        Thetas.push_back(fit.Theta);

        double css_true =
            classical::detail::arima_css(seasonal_difference(y, s), s, 0.5, 0.3, -0.4);
        double css_zero =
            classical::detail::arima_css(seasonal_difference(y, s), s, 0.0, 0.0, 0.0);
        CHECK(css_true <= css_zero);
        CHECK(fit.css <= css_true + 1e-9);
    }
    auto median = [](std::vector<double> v) {
        std::sort(v.begin(), v.end());
        return v[v.size() / 2];
    };
    CHECK(median(phis) == Catch::Approx(0.5).margin(0.15));
    CHECK(median(thetas) == Catch::Approx(0.3).margin(0.15));
    CHECK(median(Thetas) == Catch::Approx(-0.4).margin(0.15));
}

TEST_CASE("one-step arima forecast equals the innovations prediction") {
    const int s = 12;
    auto y = gen_arima(6, s, 0.5, 0.2, -0.3, 9);
    ArimaFit fit;
    fit.phi = 0.5;
    fit.theta = 0.2;
    fit.Theta = -0.3;
    fit.season_length = s;

    auto w = seasonal_difference(y, s);
    auto e = classical::detail::arima_innovations(w, s, fit.phi, fit.theta, fit.Theta);
    const int n = static_cast<int>(w.size());
    double w_pred = fit.phi * w[n - 1] + fit.theta * e[n - 1] + fit.Theta * e[n - s] +
                    fit.theta * fit.Theta * e[n - s - 1];
    auto fc = arima_forecast(fit, y, 1);
    CHECK(fc[0] == Catch::Approx(w_pred + y[y.size() - s]).margin(1e-12));
}

TEST_CASE("css ignores an additive level shift") {
    const int s = 10;
    auto y = gen_arima(5, s, 0.3, 0.1, -0.2, 33);
    auto w1 = seasonal_difference(y, s);
    std::vector<double> shifted(y);
    for (auto& v : shifted) v += 1234.5;
    auto w2 = seasonal_difference(shifted, s);
    double c1 = classical::detail::arima_css(w1, s, 0.3, 0.1, -0.2);
    double c2 = classical::detail::arima_css(w2, s, 0.3, 0.1, -0.2);
    CHECK(c1 == Catch::Approx(c2).margin(1e-7));
}

TEST_CASE("forecasts stay finite at the stability bound") {
    const int s = 8;
    auto y = gen_arima(4, s, 0.2, 0.1, -0.1, 5);
    ArimaFit fit;
    fit.phi = 0.98;
    fit.theta = -0.98;
    fit.Theta = 0.98;
    fit.season_length = s;
    for (double f : arima_forecast(fit, y, 3 * s)) CHECK(std::isfinite(f));
}

TEST_CASE("fit rejects short series") {
    std::vector<double> y(100, 1.0);
    CHECK_THROWS_AS(winters_fit(y, 80), std::invalid_argument);
    CHECK_THROWS_AS(arima_fit(y, 50), std::invalid_argument);
}

TEST_CASE("classical fits serialize to json") {
    const int L = 12;
    std::vector<double> y;
    for (int t = 0; t < 4 * L; ++t) y.push_back(10 + std::sin(2 * M_PI * (t % L) / L));
    auto st = winters_fit(y, L);
    auto jw = classical::to_json(st);
    CHECK(jw["model"] == "winters");

    auto ya = gen_arima(5, 16, 0.3, 0.2, -0.2, 3);
    auto fa = arima_fit(ya, 16);
    auto ja = classical::to_json(fa);
    CHECK(ja["model"] == "arima");
    CHECK(ja.contains("phi"));
}
