#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "seasoncast/datagen.hpp"

using namespace seasoncast;
using datagen::SimConfig;

namespace {

SimConfig base_config() {
    SimConfig cfg;
    cfg.grid = PeriodGrid{5, 32};
    cfg.n_weeks = 4;
    cfg.seed = 42;
    cfg.base_surface = datagen::default_surface(cfg.grid, 10.0);
    cfg.sigma_day = 0.0;
    cfg.rho_day = 0.0;
    cfg.sigma_resid = 1e-9;
    cfg.rho_resid = 0.0;
    cfg.volume_scale = 2.0;
    return cfg;
}

}  // namespace

TEST_CASE("default_surface shape") {
    PeriodGrid g{5, 32};
    auto s10 = datagen::default_surface(g, 10.0);
    double maxv = 0.0;
    int max_p = -1;
    for (int d = 0; d < 5; ++d)
        for (int p = 0; p < 32; ++p)
            if (s10[d][p] > maxv) {
                maxv = s10[d][p];
                max_p = p;
            }
    CHECK(maxv == Catch::Approx(10.0).margin(0.05));
    CHECK((max_p == 15 || max_p == 16));

    auto s1 = datagen::default_surface(g, 1.0);
    for (int d = 0; d < 5; ++d)
        for (int p = 0; p < 32; ++p) {
            CHECK(s10[d][p] == Catch::Approx(10.0 * s1[d][p]).epsilon(1e-12));
            CHECK(s1[d][p] >= 0.5);
        }
    for (int p = 0; p < 32; ++p) CHECK(s1[0][p] != s1[4][p]);  // Monday vs Friday
}

TEST_CASE("noise-free limit reproduces the surface periodically") {
    SimConfig cfg = base_config();
    auto s = datagen::simulate_skill(cfg, "s");
    REQUIRE(s.n_days() == 20);
    for (int d = 1; d <= 20; ++d) {
        DayOfWeek dow = day_of_week_for(d, cfg.grid);
        for (int p = 1; p <= 32; ++p) {
            double mu = cfg.base_surface[static_cast<int>(dow)][p - 1] * cfg.volume_scale;
            long long expect = std::llround(inverse_transform(mu));
            CHECK(s.calls_at(d, p) == expect);
        }
    }
    // periodic with the weekly season
    for (int d = 1; d <= 15; ++d)
        for (int p = 1; p <= 32; ++p) CHECK(s.calls_at(d, p) == s.calls_at(d + 5, p));
}

TEST_CASE("noise-free surface forecast scores near-zero wape") {
    SimConfig cfg = base_config();
    auto s = datagen::simulate_skill(cfg, "s");
    std::vector<double> actual, pred;
    for (const auto& o : s.observations()) {
        actual.push_back(static_cast<double>(o.calls));
        double mu = cfg.base_surface[static_cast<int>(o.day_of_week)][o.period - 1] *
                    cfg.volume_scale;
        pred.push_back(inverse_transform(mu));
    }
    CHECK(wape(actual, pred) < 0.01);
}

TEST_CASE("same seed gives identical series") {
    SimConfig cfg = base_config();
    cfg.sigma_day = 0.3;
    cfg.rho_day = 0.6;
    cfg.sigma_resid = 0.4;
    cfg.rho_resid = 0.3;
    auto a = datagen::simulate_skill(cfg, "s");
    auto b = datagen::simulate_skill(cfg, "s");
    REQUIRE(a.observations().size() == b.observations().size());
    for (std::size_t i = 0; i < a.observations().size(); ++i)
        CHECK(a.observations()[i].calls == b.observations()[i].calls);

    cfg.seed += 1;
    auto c = datagen::simulate_skill(cfg, "s");
    bool any_diff = false;
    for (std::size_t i = 0; i < a.observations().size(); ++i)
        if (a.observations()[i].calls != c.observations()[i].calls) any_diff = true;
    CHECK(any_diff);
}

TEST_CASE("config validation") {
    SimConfig cfg = base_config();
    cfg.rho_day = 1.5;
    CHECK_THROWS_AS(datagen::simulate_skill(cfg), std::invalid_argument);
    cfg = base_config();
    cfg.sigma_resid = 0.0;
    CHECK_THROWS_AS(datagen::simulate_skill(cfg), std::invalid_argument);
    cfg = base_config();
    cfg.base_surface.pop_back();
    CHECK_THROWS_AS(datagen::simulate_skill(cfg), std::invalid_argument);
}

TEST_CASE("daily-sum residual autocorrelation tracks rho_day") {
    SimConfig cfg = base_config();
    cfg.n_weeks = 100;  // 500 days
    cfg.seed = 7;
    cfg.sigma_day = 0.3;
    cfg.rho_day = 0.8;
    cfg.sigma_resid = 0.1;
    cfg.rho_resid = 0.0;
    auto s = datagen::simulate_skill(cfg, "s");
    const int P = cfg.grid.periods_per_day;
    const int n_days = s.n_days();

    // cell means of the transformed responses
    std::vector<std::vector<double>> cell_sum(5, std::vector<double>(P, 0.0));
    std::vector<std::vector<int>> cell_n(5, std::vector<int>(P, 0));
    for (const auto& o : s.observations()) {
        cell_sum[static_cast<int>(o.day_of_week)][o.period - 1] += sqrt_transform(o.calls);
        cell_n[static_cast<int>(o.day_of_week)][o.period - 1] += 1;
    }
    std::vector<double> daily(n_days, 0.0);
    for (const auto& o : s.observations()) {
        int d = o.day_num - 1;
        int w = static_cast<int>(o.day_of_week);
        daily[d] +=
            (sqrt_transform(o.calls) - cell_sum[w][o.period - 1] / cell_n[w][o.period - 1]) / P;
    }
    double mean = 0.0;
    for (double v : daily) mean += v;
    mean /= n_days;
    double num = 0.0, den = 0.0;
    for (int d = 0; d + 1 < n_days; ++d) num += (daily[d] - mean) * (daily[d + 1] - mean);
    for (int d = 0; d < n_days; ++d) den += (daily[d] - mean) * (daily[d] - mean);
    CHECK(num / den == Catch::Approx(0.8).margin(0.1));
}

TEST_CASE("within-cell variance converges to sigma_day^2 + sigma_resid^2") {
    SimConfig cfg = base_config();
    cfg.grid = PeriodGrid{5, 8};
    cfg.base_surface = datagen::default_surface(cfg.grid, 8.0);
    cfg.n_weeks = 150;  // 750 days
    cfg.seed = 11;
    cfg.sigma_day = 0.3;
    cfg.rho_day = 0.5;
    cfg.sigma_resid = 0.4;
    cfg.rho_resid = 0.3;
    cfg.volume_scale = 1.0;
    auto s = datagen::simulate_skill(cfg, "s");
    const int P = cfg.grid.periods_per_day;

    double pooled_var = 0.0;
    int n_cells = 0;
    for (int w = 0; w < 5; ++w)
        for (int p = 1; p <= P; ++p) {
            std::vector<double> vals;
            for (int d = 1; d <= s.n_days(); ++d)
                if (static_cast<int>(day_of_week_for(d, cfg.grid)) == w)
                    vals.push_back(sqrt_transform(s.calls_at(d, p)));
            double m = 0.0;
            for (double v : vals) m += v;
            m /= vals.size();
            double ss = 0.0;
            for (double v : vals) ss += (v - m) * (v - m);
            pooled_var += ss / (vals.size() - 1);
            ++n_cells;
        }
    pooled_var /= n_cells;
    const double truth = 0.3 * 0.3 + 0.4 * 0.4;
    CHECK(pooled_var == Catch::Approx(truth).epsilon(0.15));
}

TEST_CASE("holiday shift moves the affected p_groups") {
    SimConfig cfg = base_config();
    cfg.grid = PeriodGrid{5, 6};
    cfg.base_surface = datagen::default_surface(cfg.grid, 10.0);
    cfg.volume_scale = 1.0;
    cfg.holiday_days = {3, 8};
    cfg.holiday_shift = {-2.0, -2.0};  // two p_groups of 3 periods each
    auto s = datagen::simulate_skill(cfg, "s");
    CHECK(s.holiday_on(3));
    CHECK_FALSE(s.holiday_on(4));
    for (int p = 1; p <= 6; ++p) {
        // day 3 and day 8 are the same weekday; both carry the shift
        CHECK(s.calls_at(3, p) == s.calls_at(8, p));
        CHECK(s.calls_at(3, p) < s.calls_at(13, p));  // vs the clean same-weekday day
    }
}
