#pragma once

#include <cmath>
#include <cstdint>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "seasoncast/core.hpp"
#include "seasoncast/rng.hpp"

namespace seasoncast::datagen {

/// Number of the 3-period holiday pooling group for a 1-based period.
inline int p_group(int period) { return (period + 2) / 3; }

inline int n_p_groups(const PeriodGrid& grid) { return p_group(grid.periods_per_day); }

/// Generator settings for one synthetic skill. The transformed-scale mean is
/// base_surface * volume_scale plus holiday shifts; day effects and residuals
/// are stationary AR(1) draws.
struct SimConfig {
    PeriodGrid grid;
    int n_weeks = 5;
    std::uint64_t seed = 0;
    std::vector<std::vector<double>> base_surface;  // [day_of_week][period-1], transformed scale
    std::set<int> holiday_days;
    std::vector<double> holiday_shift;  // per p_group, additive on the transformed scale
    double sigma_day = 0.0;
    double rho_day = 0.0;
    double sigma_resid = 0.1;
    double rho_resid = 0.0;
    double volume_scale = 1.0;

    void validate() const {
        grid.validate();
        if (n_weeks < 1) throw std::invalid_argument("SimConfig: n_weeks must be >= 1");
        if (!(std::abs(rho_day) < 1.0) || !(std::abs(rho_resid) < 1.0))
            throw std::invalid_argument("SimConfig: correlations must lie in (-1,1)");
        if (sigma_day < 0.0 || sigma_resid <= 0.0)
            throw std::invalid_argument("SimConfig: sigma_day >= 0 and sigma_resid > 0 required");
        if (volume_scale <= 0.0) throw std::invalid_argument("SimConfig: volume_scale must be > 0");
        if (base_surface.size() != static_cast<std::size_t>(grid.days_per_week))
            throw std::invalid_argument("SimConfig: base_surface needs one row per weekday");
        for (const auto& row : base_surface)
            if (row.size() != static_cast<std::size_t>(grid.periods_per_day))
                throw std::invalid_argument("SimConfig: base_surface row width mismatch");
        if (!holiday_shift.empty() &&
            holiday_shift.size() != static_cast<std::size_t>(n_p_groups(grid)))
            throw std::invalid_argument("SimConfig: holiday_shift needs one entry per p_group");
    }
};

/// Smooth unimodal intraday profile with distinct weekday multipliers. The
/// matrix maximum equals peak_scale (midweek, mid-day) and every entry stays
/// at or above half the smallest weekday peak.
inline std::vector<std::vector<double>> default_surface(const PeriodGrid& grid,
                                                        double peak_scale) {
    if (peak_scale <= 0.0) throw std::invalid_argument("default_surface: peak_scale must be > 0");
    static const double weekday_mult[] = {0.93, 0.97, 1.00, 0.96, 0.89};
    std::vector<std::vector<double>> surf(grid.days_per_week,
                                          std::vector<double>(grid.periods_per_day));
    for (int d = 0; d < grid.days_per_week; ++d) {
        double m = weekday_mult[d % 5];
        for (int p = 0; p < grid.periods_per_day; ++p) {
            double u = (p + 0.5) / grid.periods_per_day;  // (0,1)
            double hump = 0.55 + 0.45 * std::sin(M_PI * u);
            surf[d][p] = peak_scale * m * hump;
        }
    }
    return surf;
}

/// Stationary AR(1) day effects plus stationary within-day AR(1) residuals on
/// the transformed scale, rounded back to counts. Deterministic given the seed.
inline SkillSeries simulate_skill(const SimConfig& cfg, const std::string& skill_name = "skill1") {
    cfg.validate();
    Rng rng(cfg.seed);
    const int P = cfg.grid.periods_per_day;
    const int n_days = cfg.n_weeks * cfg.grid.days_per_week;

    std::vector<Observation> obs;
    obs.reserve(static_cast<std::size_t>(n_days) * P);

    double b = 0.0;
    for (int day = 1; day <= n_days; ++day) {
        if (day == 1) {
            b = rng.normal(0.0, cfg.sigma_day);
        } else {
            // consecutive day counter: lag-1 innovation keeps the process stationary
            double innov_sd = cfg.sigma_day * std::sqrt(1.0 - cfg.rho_day * cfg.rho_day);
            b = cfg.rho_day * b + rng.normal(0.0, innov_sd);
        }
        const bool holiday = cfg.holiday_days.count(day) != 0;
        const DayOfWeek dow = day_of_week_for(day, cfg.grid);
        double eps = 0.0;
        for (int p = 1; p <= P; ++p) {
            if (p == 1) {
                eps = rng.normal(0.0, cfg.sigma_resid);
            } else {
                double innov_sd = cfg.sigma_resid * std::sqrt(1.0 - cfg.rho_resid * cfg.rho_resid);
                eps = cfg.rho_resid * eps + rng.normal(0.0, innov_sd);
            }
            double mean = cfg.base_surface[static_cast<int>(dow)][p - 1] * cfg.volume_scale;
            if (holiday && !cfg.holiday_shift.empty()) mean += cfg.holiday_shift[p_group(p) - 1];
            double y = mean + b + eps;
            Observation o;
            o.skill = skill_name;
            o.day_num = day;
            o.day_of_week = dow;
            o.period = p;
            o.holiday = holiday;
            o.calls = static_cast<long long>(std::llround(inverse_transform(y)));
            obs.push_back(std::move(o));
        }
    }
    return SkillSeries(cfg.grid, std::move(obs));
}

}  // namespace seasoncast::datagen
