#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <map>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "seasoncast/core.hpp"

namespace seasoncast::features {

/// Training-window location/scale pair. A constant column standardizes to all
/// zeros (sd falls back to 1) so degenerate histories stay usable.
struct Standardizer {
    double mean = 0.0;
    double sd = 1.0;

    static Standardizer fit(const std::vector<double>& values) {
        Standardizer s;
        if (values.empty()) return s;
        double m = 0.0;
        for (double v : values) m += v;
        m /= static_cast<double>(values.size());
        double ss = 0.0;
        for (double v : values) ss += (v - m) * (v - m);
        double sd = std::sqrt(ss / static_cast<double>(values.size()));
        s.mean = m;
        s.sd = sd > 0.0 ? sd : 1.0;
        return s;
    }

    double apply(double v) const { return (v - mean) / sd; }
    double invert(double z) const { return z * sd + mean; }
};

/// Same-period predictions from the three classical models, transformed scale.
struct CheatTriple {
    double mixed = 0.0;
    double winters = 0.0;
    double arima = 0.0;
};

using CheatInputs = std::map<int, std::vector<CheatTriple>>;  // day_num -> one triple per period

struct TrainWindow {
    int first_day = 0;
    int last_day = 0;

    int n_days() const { return last_day - first_day + 1; }
};

/// Flat design matrix for the networks: day-of-week and period one-hots,
/// standardized day/week lags, three holiday indicators, a standardized day
/// counter, and optionally the three standardized classical predictions.
struct Design {
    Eigen::MatrixXd X;
    Eigen::VectorXd targets;  // standardized transformed volumes
    std::vector<int> day_nums;
    std::vector<int> periods;
    std::vector<double> actual_calls;
    PeriodGrid grid;
    TrainWindow window;
    bool cheat = false;
    Standardizer target_std, lag_day_std, lag_week_std, day_num_std;

    int width() const { return static_cast<int>(X.cols()); }
    int n_rows() const { return static_cast<int>(X.rows()); }

    // column offsets
    int col_dow() const { return 0; }
    int col_period() const { return grid.days_per_week; }
    int col_lag_day() const { return grid.days_per_week + grid.periods_per_day; }
    int col_lag_week() const { return col_lag_day() + 1; }
    int col_holiday_today() const { return col_lag_day() + 2; }
    int col_holiday_yesterday() const { return col_lag_day() + 3; }
    int col_holiday_lastweek() const { return col_lag_day() + 4; }
    int col_day_number() const { return col_lag_day() + 5; }
    int col_cheat() const { return col_lag_day() + 6; }

    std::vector<std::string> column_names() const {
        std::vector<std::string> names;
        for (int d = 0; d < grid.days_per_week; ++d)
            names.push_back(std::string("dow_") + to_string(static_cast<DayOfWeek>(d)));
        for (int p = 1; p <= grid.periods_per_day; ++p)
            names.push_back("period_" + std::to_string(p));
        names.insert(names.end(), {"lag_day_volume", "lag_week_volume", "holiday_today",
                                   "holiday_yesterday", "holiday_lastweek", "day_number"});
        if (cheat) names.insert(names.end(), {"cheat_mixed", "cheat_winters", "cheat_arima"});
        return names;
    }
};

namespace detail {

inline void require_consecutive_days(const SkillSeries& series, int first_day, int last_day) {
    for (int d = first_day; d <= last_day; ++d)
        if (!series.has_day(d))
            throw CoverageError("feature window requires consecutive days; missing day " +
                                std::to_string(d));
}

inline const std::vector<CheatTriple>& cheat_for_day(const CheatInputs& cheat, int day,
                                                     int periods_per_day) {
    auto it = cheat.find(day);
    if (it == cheat.end() || it->second.size() != static_cast<std::size_t>(periods_per_day))
        throw CoverageError("cheat inputs missing for day " + std::to_string(day));
    return it->second;
}

}  // namespace detail

/// Builds the training design over `window`. The first training week carries
/// no resolvable week lag and is dropped from the encoded rows; all continuous
/// columns and targets are standardized with statistics from the encoded rows.
inline Design build_design(const SkillSeries& series, const TrainWindow& window,
                           const std::optional<CheatInputs>& cheat = std::nullopt) {
    const PeriodGrid& grid = series.grid();
    const int W = grid.days_per_week;
    const int P = grid.periods_per_day;
    if (window.n_days() < 2 * W)
        throw CoverageError("build_design: window must contain at least 2 full weeks");
    detail::require_consecutive_days(series, window.first_day, window.last_day);

    const int first_encoded = window.first_day + W;
    const int n_days = window.last_day - first_encoded + 1;
    const int n_rows = n_days * P;

    Design d;
    d.grid = grid;
    d.window = window;
    d.cheat = cheat.has_value();
    const int width = W + P + 6 + (d.cheat ? 3 : 0);
    d.X = Eigen::MatrixXd::Zero(n_rows, width);
    d.targets.resize(n_rows);
    d.day_nums.reserve(n_rows);
    d.periods.reserve(n_rows);
    d.actual_calls.reserve(n_rows);

    std::vector<double> tvol, lagd, lagw, dayn;
    tvol.reserve(n_rows);
    lagd.reserve(n_rows);
    lagw.reserve(n_rows);
    dayn.reserve(n_rows);
    for (int day = first_encoded; day <= window.last_day; ++day)
        for (int p = 1; p <= P; ++p) {
            tvol.push_back(sqrt_transform(series.calls_at(day, p)));
            lagd.push_back(sqrt_transform(series.calls_at(day - 1, p)));
            lagw.push_back(sqrt_transform(series.calls_at(day - W, p)));
            dayn.push_back(static_cast<double>(day));
        }
    d.target_std = Standardizer::fit(tvol);
    d.lag_day_std = Standardizer::fit(lagd);
    d.lag_week_std = Standardizer::fit(lagw);
    d.day_num_std = Standardizer::fit(dayn);

    int row = 0;
    for (int day = first_encoded; day <= window.last_day; ++day) {
        const bool hol_today = series.holiday_on(day);
        const bool hol_yday = series.holiday_on(day - 1);
        const bool hol_lweek = series.holiday_on(day - W);
        const DayOfWeek dow = day_of_week_for(day, grid);
        const std::vector<CheatTriple>* ct =
            d.cheat ? &detail::cheat_for_day(*cheat, day, P) : nullptr;
        for (int p = 1; p <= P; ++p, ++row) {
            d.X(row, d.col_dow() + static_cast<int>(dow)) = 1.0;
            d.X(row, d.col_period() + p - 1) = 1.0;
            d.X(row, d.col_lag_day()) = d.lag_day_std.apply(lagd[row]);
            d.X(row, d.col_lag_week()) = d.lag_week_std.apply(lagw[row]);
            d.X(row, d.col_holiday_today()) = hol_today ? 1.0 : 0.0;
            d.X(row, d.col_holiday_yesterday()) = hol_yday ? 1.0 : 0.0;
            d.X(row, d.col_holiday_lastweek()) = hol_lweek ? 1.0 : 0.0;
            d.X(row, d.col_day_number()) = d.day_num_std.apply(dayn[row]);
            if (ct) {
                d.X(row, d.col_cheat() + 0) = d.target_std.apply((*ct)[p - 1].mixed);
                d.X(row, d.col_cheat() + 1) = d.target_std.apply((*ct)[p - 1].winters);
                d.X(row, d.col_cheat() + 2) = d.target_std.apply((*ct)[p - 1].arima);
            }
            d.targets(row) = d.target_std.apply(tvol[row]);
            d.day_nums.push_back(day);
            d.periods.push_back(p);
            d.actual_calls.push_back(static_cast<double>(series.calls_at(day, p)));
        }
    }
    return d;
}

struct TargetDayMeta {
    int day_num = 0;
    DayOfWeek day_of_week = DayOfWeek::Mon;
    bool holiday = false;
};

/// Feature rows for the forecast day, built from observed history only; the
/// target day's own actuals never enter.
inline Eigen::MatrixXd build_target_features(
    const SkillSeries& series, const Design& design, const TargetDayMeta& meta,
    const std::optional<std::vector<CheatTriple>>& cheat = std::nullopt) {
    const PeriodGrid& grid = design.grid;
    const int W = grid.days_per_week;
    const int P = grid.periods_per_day;
    if (meta.day_num != design.window.last_day + 1)
        throw CoverageError("target day must immediately follow the training window");
    if (design.cheat != cheat.has_value())
        throw CoverageError("cheat inputs must match the design configuration");
    if (cheat && cheat->size() != static_cast<std::size_t>(P))
        throw CoverageError("target-day cheat inputs must cover every period");

    Eigen::MatrixXd X = Eigen::MatrixXd::Zero(P, design.width());
    const bool hol_yday = series.holiday_on(meta.day_num - 1);
    const bool hol_lweek = series.holiday_on(meta.day_num - W);
    for (int p = 1; p <= P; ++p) {
        const int row = p - 1;
        X(row, design.col_dow() + static_cast<int>(meta.day_of_week)) = 1.0;
        X(row, design.col_period() + p - 1) = 1.0;
        X(row, design.col_lag_day()) =
            design.lag_day_std.apply(sqrt_transform(series.calls_at(meta.day_num - 1, p)));
        X(row, design.col_lag_week()) =
            design.lag_week_std.apply(sqrt_transform(series.calls_at(meta.day_num - W, p)));
        X(row, design.col_holiday_today()) = meta.holiday ? 1.0 : 0.0;
        X(row, design.col_holiday_yesterday()) = hol_yday ? 1.0 : 0.0;
        X(row, design.col_holiday_lastweek()) = hol_lweek ? 1.0 : 0.0;
        X(row, design.col_day_number()) =
            design.day_num_std.apply(static_cast<double>(meta.day_num));
        if (cheat) {
            X(row, design.col_cheat() + 0) = design.target_std.apply((*cheat)[row].mixed);
            X(row, design.col_cheat() + 1) = design.target_std.apply((*cheat)[row].winters);
            X(row, design.col_cheat() + 2) = design.target_std.apply((*cheat)[row].arima);
        }
    }
    return X;
}

/// Day-major sequence view: one (periods_per_day x width) matrix per day.
struct Sequences {
    std::vector<Eigen::MatrixXd> days;
    std::vector<Eigen::VectorXd> targets;
};

inline Sequences to_sequences(const Eigen::MatrixXd& X, const Eigen::VectorXd& targets,
                              const PeriodGrid& grid) {
    const int P = grid.periods_per_day;
    if (X.rows() % P != 0)
        throw std::invalid_argument("to_sequences: row count not divisible by periods_per_day");
    if (targets.size() != X.rows())
        throw std::invalid_argument("to_sequences: target length mismatch");
    Sequences s;
    const int n_days = static_cast<int>(X.rows()) / P;
    s.days.reserve(n_days);
    s.targets.reserve(n_days);
    for (int dny = 0; dny < n_days; ++dny) {
        s.days.push_back(X.middleRows(dny * P, P));
        s.targets.push_back(targets.segment(dny * P, P));
    }
    return s;
}

inline void write_design_csv(std::ostream& os, const Design& d) {
    auto names = d.column_names();
    os << "day_num,period,target";
    for (const auto& n : names) os << ',' << n;
    os << "\n";
    for (int r = 0; r < d.n_rows(); ++r) {
        os << d.day_nums[r] << ',' << d.periods[r] << ',' << d.targets(r);
        for (int c = 0; c < d.width(); ++c) os << ',' << d.X(r, c);
        os << "\n";
    }
}

}  // namespace seasoncast::features
