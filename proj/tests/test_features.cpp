#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "seasoncast/datagen.hpp"
#include "seasoncast/features.hpp"

using namespace seasoncast;
using features::CheatInputs;
using features::CheatTriple;
using features::TrainWindow;

namespace {

SkillSeries make_series(int n_weeks, std::uint64_t seed, int periods = 32,
                        std::set<int> holidays = {}) {
    datagen::SimConfig cfg;
    cfg.grid = PeriodGrid{5, periods};
    cfg.n_weeks = n_weeks;
    cfg.seed = seed;
    cfg.base_surface = datagen::default_surface(cfg.grid, 9.0);
    cfg.sigma_day = 0.2;
    cfg.rho_day = 0.5;
    cfg.sigma_resid = 0.4;
    cfg.rho_resid = 0.3;
    cfg.volume_scale = 1.0;
    cfg.holiday_days = std::move(holidays);
    if (!cfg.holiday_days.empty())
        cfg.holiday_shift.assign(datagen::n_p_groups(cfg.grid), -1.5);
    return datagen::simulate_skill(cfg, "s");
}

}  // namespace

TEST_CASE("five-week window yields 640 encoded rows of width 43") {
    auto s = make_series(5, 1);
    auto d = features::build_design(s, TrainWindow{1, 25});
    CHECK(d.n_rows() == 640);   // 4*5*32
    CHECK(d.width() == 43);     // 5 + 32 + 2 lags + 3 holiday flags + day number
    CHECK(d.day_nums.front() == 6);
    CHECK(d.day_nums.back() == 25);
}

TEST_CASE("cheat columns widen the design to 46") {
    auto s = make_series(3, 2, 8);
    CheatInputs cheat;
    for (int day = 1 + 5; day <= 15; ++day) cheat[day] = std::vector<CheatTriple>(8);
    auto d = features::build_design(s, TrainWindow{1, 15}, cheat);
    CHECK(d.width() == 8 + 5 + 6 + 3);

    // missing a day's triples is a coverage error
    cheat.erase(10);
    CHECK_THROWS_AS(features::build_design(s, TrainWindow{1, 15}, cheat), CoverageError);
}

TEST_CASE("one-hot blocks sum to one and match the metadata") {
    auto s = make_series(3, 3, 8);
    auto d = features::build_design(s, TrainWindow{1, 15});
    for (int r = 0; r < d.n_rows(); ++r) {
        CHECK(d.X.row(r).segment(d.col_dow(), 5).sum() == 1.0);
        CHECK(d.X.row(r).segment(d.col_period(), 8).sum() == 1.0);
        int dow = static_cast<int>(day_of_week_for(d.day_nums[r], d.grid));
        CHECK(d.X(r, d.col_dow() + dow) == 1.0);
        CHECK(d.X(r, d.col_period() + d.periods[r] - 1) == 1.0);
    }
}

TEST_CASE("standardized columns have mean zero and unit sd over training rows") {
    auto s = make_series(4, 4, 16);
    auto d = features::build_design(s, TrainWindow{1, 20});
    for (int c : {d.col_lag_day(), d.col_lag_week(), d.col_day_number()}) {
        CHECK(d.X.col(c).mean() == Catch::Approx(0.0).margin(1e-9));
        double var = d.X.col(c).squaredNorm() / d.n_rows();
        CHECK(std::sqrt(var) == Catch::Approx(1.0).margin(1e-9));
    }
    CHECK(d.targets.mean() == Catch::Approx(0.0).margin(1e-9));
    CHECK(std::sqrt(d.targets.squaredNorm() / d.n_rows()) == Catch::Approx(1.0).margin(1e-9));
}

TEST_CASE("lag columns resolve by direct lookup") {
    auto s = make_series(4, 5, 8);
    auto d = features::build_design(s, TrainWindow{1, 20});
    std::mt19937 gen(9);
    std::uniform_int_distribution<int> pick(0, d.n_rows() - 1);
    for (int rep = 0; rep < 50; ++rep) {
        int r = pick(gen);
        int day = d.day_nums[r], p = d.periods[r];
        double lag_day = d.lag_day_std.apply(sqrt_transform(s.calls_at(day - 1, p)));
        double lag_week = d.lag_week_std.apply(sqrt_transform(s.calls_at(day - 5, p)));
        CHECK(d.X(r, d.col_lag_day()) == Catch::Approx(lag_day).margin(1e-12));
        CHECK(d.X(r, d.col_lag_week()) == Catch::Approx(lag_week).margin(1e-12));
    }
}

TEST_CASE("holiday indicators reference today, yesterday and last week") {
    auto s = make_series(4, 6, 8, {8});
    auto d = features::build_design(s, TrainWindow{1, 20});
    for (int r = 0; r < d.n_rows(); ++r) {
        int day = d.day_nums[r];
        CHECK(d.X(r, d.col_holiday_today()) == (day == 8 ? 1.0 : 0.0));
        CHECK(d.X(r, d.col_holiday_yesterday()) == (day == 9 ? 1.0 : 0.0));
        CHECK(d.X(r, d.col_holiday_lastweek()) == (day == 13 ? 1.0 : 0.0));
    }
}

TEST_CASE("all-zero history collapses the lag columns to standardized zero") {
    PeriodGrid g{5, 4};
    std::vector<Observation> obs;
    for (int day = 1; day <= 15; ++day)
        for (int p = 1; p <= 4; ++p)
            obs.push_back({"z", day, day_of_week_for(day, g), p, false, 0});
    SkillSeries s(g, obs);
    auto d = features::build_design(s, TrainWindow{1, 15});
    for (int r = 0; r < d.n_rows(); ++r) {
        CHECK(d.X(r, d.col_lag_day()) == 0.0);
        CHECK(d.X(r, d.col_lag_week()) == 0.0);
        CHECK(d.targets(r) == 0.0);
    }
}

TEST_CASE("windows shorter than two weeks are rejected") {
    auto s = make_series(3, 7, 8);
    CHECK_THROWS_AS(features::build_design(s, TrainWindow{1, 9}), CoverageError);
}

TEST_CASE("standardizer round-trips") {
    features::Standardizer st = features::Standardizer::fit({1.0, 2.0, 3.0, 10.0});
    for (double v : {0.0, 1.7, -3.2, 100.0})
        CHECK(st.invert(st.apply(v)) == Catch::Approx(v).margin(1e-9));
}

TEST_CASE("sequence reshaping preserves rows and round-trips") {
    auto s = make_series(3, 8, 8);
    auto d = features::build_design(s, TrainWindow{1, 15});
    auto seqs = features::to_sequences(d.X, d.targets, d.grid);
    REQUIRE(seqs.days.size() == 10);
    for (std::size_t k = 0; k < seqs.days.size(); ++k) {
        CHECK(seqs.days[k].rows() == 8);
        CHECK(seqs.days[k].cols() == d.width());
        for (int p = 0; p < 8; ++p) {
            CHECK((seqs.days[k].row(p) - d.X.row(k * 8 + p)).cwiseAbs().maxCoeff() == 0.0);
            CHECK(seqs.targets[k](p) == d.targets(k * 8 + p));
        }
    }
    // single day reshapes to one sequence
    auto one = features::to_sequences(d.X.topRows(8), d.targets.head(8), d.grid);
    CHECK(one.days.size() == 1);

    Eigen::MatrixXd bad = d.X.topRows(7);
    CHECK_THROWS_AS(features::to_sequences(bad, d.targets.head(7), d.grid),
                    std::invalid_argument);
}

TEST_CASE("target-day features use history only") {
    auto s = make_series(4, 9, 8);
    auto train = s.window(1, 15);
    auto d = features::build_design(train, TrainWindow{1, 15});
    features::TargetDayMeta meta{16, day_of_week_for(16, s.grid()), false};
    auto X = features::build_target_features(train, d, meta);
    CHECK(X.rows() == 8);
    CHECK(X.cols() == d.width());
    for (int p = 1; p <= 8; ++p) {
        CHECK(X(p - 1, d.col_lag_day()) ==
              Catch::Approx(d.lag_day_std.apply(sqrt_transform(s.calls_at(15, p)))).margin(1e-12));
        CHECK(X(p - 1, d.col_lag_week()) ==
              Catch::Approx(d.lag_week_std.apply(sqrt_transform(s.calls_at(11, p)))).margin(1e-12));
    }

    features::TargetDayMeta wrong{18, day_of_week_for(18, s.grid()), false};
    CHECK_THROWS_AS(features::build_target_features(train, d, wrong), CoverageError);
}

TEST_CASE("design csv dump has a row per encoded observation") {
    auto s = make_series(3, 10, 4);
    auto d = features::build_design(s, TrainWindow{1, 15});
    std::stringstream ss;
    features::write_design_csv(ss, d);
    int lines = 0;
    std::string line;
    while (std::getline(ss, line)) ++lines;
    CHECK(lines == d.n_rows() + 1);
}
