#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace seasoncast {

inline constexpr const char* kVersion = "0.1.0";

/// Raised when a model or feature builder cannot resolve the history it needs
/// (missing days, unresolved lags, insufficient seasons).
struct CoverageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Raised when a numerical routine fails beyond recovery (non-PD covariance
/// after jitter, diverged optimizer state).
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class DayOfWeek { Mon = 0, Tue, Wed, Thu, Fri };

inline const char* to_string(DayOfWeek d) {
    switch (d) {
        case DayOfWeek::Mon: return "MON";
        case DayOfWeek::Tue: return "TUE";
        case DayOfWeek::Wed: return "WED";
        case DayOfWeek::Thu: return "THU";
        case DayOfWeek::Fri: return "FRI";
    }
    return "?";
}

inline DayOfWeek parse_day_of_week(const std::string& s) {
    if (s == "MON") return DayOfWeek::Mon;
    if (s == "TUE") return DayOfWeek::Tue;
    if (s == "WED") return DayOfWeek::Wed;
    if (s == "THU") return DayOfWeek::Thu;
    if (s == "FRI") return DayOfWeek::Fri;
    throw std::invalid_argument("unknown day_of_week: " + s);
}

/// Weekday grid shared by every model: an operating week of `days_per_week`
/// days, each split into `periods_per_day` intraday periods.
struct PeriodGrid {
    int days_per_week = 5;
    int periods_per_day = 32;

    int season_length() const { return days_per_week * periods_per_day; }

    void validate() const {
        if (days_per_week < 1 || periods_per_day < 1)
            throw std::invalid_argument("PeriodGrid: counts must be >= 1");
        if (days_per_week > 5)
            throw std::invalid_argument("PeriodGrid: weekend days are not modeled");
    }
};

/// day_num 1 falls on Monday; the counter advances one per operating day.
inline DayOfWeek day_of_week_for(int day_num, const PeriodGrid& grid) {
    return static_cast<DayOfWeek>((day_num - 1) % grid.days_per_week);
}

struct Observation {
    std::string skill;
    int day_num = 0;       // continuous counter over operating days, >= 1
    DayOfWeek day_of_week = DayOfWeek::Mon;
    int period = 0;        // 1..periods_per_day
    bool holiday = false;
    long long calls = 0;
};

/// One skill's complete period-gridded history. Observations are stored
/// day-major, period-ascending, with every day fully populated.
class SkillSeries {
public:
    SkillSeries() = default;
    SkillSeries(PeriodGrid grid, std::vector<Observation> obs)
        : grid_(grid), obs_(std::move(obs)) {
        validate();
    }

    const PeriodGrid& grid() const { return grid_; }
    const std::vector<Observation>& observations() const { return obs_; }
    const std::string& skill() const { return obs_.front().skill; }

    int n_days() const { return static_cast<int>(day_nums_.size()); }
    const std::vector<int>& day_nums() const { return day_nums_; }
    int first_day_num() const { return day_nums_.front(); }
    int last_day_num() const { return day_nums_.back(); }

    bool has_day(int day_num) const {
        return day_index_.count(day_num) != 0;
    }
    int day_index(int day_num) const {
        auto it = day_index_.find(day_num);
        if (it == day_index_.end())
            throw CoverageError("day " + std::to_string(day_num) + " not in series");
        return it->second;
    }

    const Observation& at(int day_num, int period) const {
        return obs_[static_cast<std::size_t>(day_index(day_num)) * grid_.periods_per_day +
                    (period - 1)];
    }
    long long calls_at(int day_num, int period) const { return at(day_num, period).calls; }
    bool holiday_on(int day_num) const { return at(day_num, 1).holiday; }

    /// Days [first_day, last_day] inclusive as a new series.
    SkillSeries window(int first_day, int last_day) const {
        std::vector<Observation> sub;
        for (const auto& o : obs_)
            if (o.day_num >= first_day && o.day_num <= last_day) sub.push_back(o);
        if (sub.empty()) throw CoverageError("empty window");
        return SkillSeries(grid_, std::move(sub));
    }

private:
    void validate() {
        grid_.validate();
        if (obs_.empty()) throw std::invalid_argument("SkillSeries: no observations");
        const int P = grid_.periods_per_day;
        if (obs_.size() % static_cast<std::size_t>(P) != 0)
            throw std::invalid_argument("SkillSeries: incomplete day grid");
        day_nums_.clear();
        day_index_.clear();
        for (std::size_t i = 0; i < obs_.size(); i += P) {
            const Observation& first = obs_[i];
            if (first.period != 1)
                throw std::invalid_argument("SkillSeries: day must start at period 1");
            if (!day_nums_.empty() && first.day_num <= day_nums_.back())
                throw std::invalid_argument("SkillSeries: day_num must strictly increase");
            if (first.day_of_week != day_of_week_for(first.day_num, grid_))
                throw std::invalid_argument("SkillSeries: day_of_week inconsistent with day_num");
            for (int p = 0; p < P; ++p) {
                const Observation& o = obs_[i + p];
                if (o.period != p + 1)
                    throw std::invalid_argument("SkillSeries: periods out of order");
                if (o.day_num != first.day_num || o.skill != obs_.front().skill ||
                    o.holiday != first.holiday || o.day_of_week != first.day_of_week)
                    throw std::invalid_argument("SkillSeries: inconsistent day metadata");
                if (o.calls < 0)
                    throw std::invalid_argument("SkillSeries: negative call count");
            }
            day_index_[first.day_num] = static_cast<int>(day_nums_.size());
            day_nums_.push_back(first.day_num);
        }
    }

    PeriodGrid grid_;
    std::vector<Observation> obs_;
    std::vector<int> day_nums_;
    std::map<int, int> day_index_;
};

enum class ModelTag {
    DoublyStoch,
    Winters,
    ARIMA,
    NN_Classic,
    RNN_Simple,
    RNN_GRU,
    RNN_LSTM,
    NN_Classic_cheat,
    RNN_Simple_cheat,
    RNN_GRU_cheat,
    RNN_LSTM_cheat,
};

inline const char* to_string(ModelTag t) {
    switch (t) {
        case ModelTag::DoublyStoch: return "DoublyStoch";
        case ModelTag::Winters: return "Winters";
        case ModelTag::ARIMA: return "ARIMA";
        case ModelTag::NN_Classic: return "NN_Classic";
        case ModelTag::RNN_Simple: return "RNN_Simple";
        case ModelTag::RNN_GRU: return "RNN_GRU";
        case ModelTag::RNN_LSTM: return "RNN_LSTM";
        case ModelTag::NN_Classic_cheat: return "NN_Classic_cheat";
        case ModelTag::RNN_Simple_cheat: return "RNN_Simple_cheat";
        case ModelTag::RNN_GRU_cheat: return "RNN_GRU_cheat";
        case ModelTag::RNN_LSTM_cheat: return "RNN_LSTM_cheat";
    }
    return "?";
}

inline ModelTag parse_model_tag(const std::string& s) {
    for (int i = 0; i <= static_cast<int>(ModelTag::RNN_LSTM_cheat); ++i) {
        ModelTag t = static_cast<ModelTag>(i);
        if (s == to_string(t)) return t;
    }
    throw std::invalid_argument("unknown model tag: " + s);
}

inline bool is_cheat_tag(ModelTag t) {
    return t >= ModelTag::NN_Classic_cheat;
}

/// Per-period day-ahead predictions from one model, joined to actuals once
/// the target day has been observed.
struct ForecastRecord {
    ModelTag model = ModelTag::DoublyStoch;
    std::string skill;
    int target_day = 0;
    std::vector<double> predictions;             // count scale, >= 0
    std::optional<std::vector<double>> actuals;  // absent until scored
    bool degraded = false;  // fallback path was taken (missing cell, non-convergence)

    void validate() const {
        for (double p : predictions)
            if (!std::isfinite(p) || p < 0)
                throw std::invalid_argument("ForecastRecord: predictions must be finite and >= 0");
        if (actuals && actuals->size() != predictions.size())
            throw std::invalid_argument("ForecastRecord: actuals shape mismatch");
    }
};

// ---------------------------------------------------------------------------
// Transformation and metrics
// ---------------------------------------------------------------------------

/// Variance-stabilizing transform for count data: sqrt(count + 0.25).
inline double sqrt_transform(long long count) {
    if (count < 0) throw std::domain_error("sqrt_transform: negative count");
    return std::sqrt(static_cast<double>(count) + 0.25);
}

/// Back-transform to the count scale; negative latents clamp to zero counts.
inline double inverse_transform(double y) {
    double z = std::max(y, 0.0);
    return std::max(z * z - 0.25, 0.0);
}

inline double mae(const std::vector<double>& actuals, const std::vector<double>& predictions) {
    if (actuals.size() != predictions.size())
        throw std::invalid_argument("mae: length mismatch");
    if (actuals.empty()) throw std::invalid_argument("mae: empty input");
    double s = 0.0;
    for (std::size_t i = 0; i < actuals.size(); ++i) s += std::abs(actuals[i] - predictions[i]);
    return s / static_cast<double>(actuals.size());
}

/// Weighted absolute percentage error, sum|Y - Yhat| / sum Y, as a fraction.
inline double wape(const std::vector<double>& actuals, const std::vector<double>& predictions) {
    if (actuals.size() != predictions.size())
        throw std::invalid_argument("wape: length mismatch");
    if (actuals.empty()) throw std::invalid_argument("wape: empty input");
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < actuals.size(); ++i) {
        num += std::abs(actuals[i] - predictions[i]);
        den += actuals[i];
    }
    if (den <= 0.0) throw std::domain_error("wape: zero total actual volume");
    return num / den;
}

/// Means of the length-`window` slices: position k covers values[k .. k+window-1].
inline std::vector<double> moving_average(const std::vector<double>& values, int window) {
    if (window < 1) throw std::invalid_argument("moving_average: window must be >= 1");
    if (static_cast<std::size_t>(window) > values.size())
        throw std::invalid_argument("moving_average: window exceeds length");
    std::vector<double> out(values.size() - window + 1);
    double acc = 0.0;
    for (int i = 0; i < window; ++i) acc += values[i];
    out[0] = acc / window;
    for (std::size_t k = 1; k < out.size(); ++k) {
        acc += values[k + window - 1] - values[k - 1];
        out[k] = acc / window;
    }
    return out;
}

// ---------------------------------------------------------------------------
// CSV series format
// header: skill,day_num,day_of_week,period,holiday,calls
// ---------------------------------------------------------------------------

inline constexpr const char* kSeriesCsvHeader = "skill,day_num,day_of_week,period,holiday,calls";

inline void write_series_csv(std::ostream& os, const std::vector<Observation>& obs) {
    os << kSeriesCsvHeader << "\n";
    for (const auto& o : obs) {
        os << o.skill << ',' << o.day_num << ',' << to_string(o.day_of_week) << ',' << o.period
           << ',' << (o.holiday ? 1 : 0) << ',' << o.calls << "\n";
    }
}

inline void write_series_csv(std::ostream& os, const std::vector<SkillSeries>& series) {
    os << kSeriesCsvHeader << "\n";
    for (const auto& s : series)
        for (const auto& o : s.observations())
            os << o.skill << ',' << o.day_num << ',' << to_string(o.day_of_week) << ',' << o.period
               << ',' << (o.holiday ? 1 : 0) << ',' << o.calls << "\n";
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) out.push_back(field);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

/// Parses the series CSV, splitting rows by skill. Each skill must form a
/// valid complete-grid series under `grid`.
inline std::vector<SkillSeries> read_series_csv(std::istream& is, const PeriodGrid& grid) {
    std::string line;
    if (!std::getline(is, line)) throw std::invalid_argument("series csv: empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kSeriesCsvHeader)
        throw std::invalid_argument("series csv: bad header, expected '" +
                                    std::string(kSeriesCsvHeader) + "'");
    std::map<std::string, std::vector<Observation>> by_skill;
    std::vector<std::string> order;
    std::size_t row = 1;
    while (std::getline(is, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto f = split_csv_line(line);
        if (f.size() != 6)
            throw std::invalid_argument("series csv row " + std::to_string(row) +
                                        ": expected 6 fields");
        Observation o;
        try {
            o.skill = f[0];
            o.day_num = std::stoi(f[1]);
            o.day_of_week = parse_day_of_week(f[2]);
            o.period = std::stoi(f[3]);
            if (f[4] != "0" && f[4] != "1")
                throw std::invalid_argument("holiday must be 0 or 1");
            o.holiday = f[4] == "1";
            o.calls = std::stoll(f[5]);
        } catch (const std::exception& e) {
            throw std::invalid_argument("series csv row " + std::to_string(row) + ": " + e.what());
        }
        if (by_skill.find(o.skill) == by_skill.end()) order.push_back(o.skill);
        by_skill[o.skill].push_back(o);
    }
    std::vector<SkillSeries> out;
    for (const auto& name : order) out.emplace_back(grid, std::move(by_skill[name]));
    return out;
}

inline std::vector<SkillSeries> read_series_csv_file(const std::string& path,
                                                     const PeriodGrid& grid) {
    std::ifstream f(path);
    if (!f) throw std::invalid_argument("cannot open series file: " + path);
    return read_series_csv(f, grid);
}

}  // namespace seasoncast
