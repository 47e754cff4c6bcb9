#pragma once

#include <atomic>
#include <cstdlib>
#include <functional>
#include <istream>
#include <map>
#include <memory>
#include <mutex>
#include <numeric>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "seasoncast/analysis.hpp"
#include "seasoncast/classical.hpp"
#include "seasoncast/core.hpp"
#include "seasoncast/features.hpp"
#include "seasoncast/mixedmodel.hpp"
#include "seasoncast/neural.hpp"
#include "seasoncast/rng.hpp"

namespace seasoncast::harness {

inline constexpr const char* kRunsCsvHeader =
    "model.type,nlayers,mixed.cheat,nnodes,kernel.L2.reg,split,file,wape,status";

// ---------------------------------------------------------------------------
// Factorial design
// ---------------------------------------------------------------------------

struct FactorialDesign {
    std::vector<std::pair<std::string, std::vector<std::string>>> factors;
    std::vector<std::vector<std::string>> rows;  // one level per factor, factor order
};

/// Cartesian product in canonical order: the first factor varies slowest.
inline FactorialDesign full_factorial(
    std::vector<std::pair<std::string, std::vector<std::string>>> factors) {
    for (const auto& [name, levels] : factors)
        if (levels.empty())
            throw std::invalid_argument("full_factorial: factor '" + name + "' has no levels");
    FactorialDesign d;
    d.factors = std::move(factors);
    std::vector<std::size_t> idx(d.factors.size(), 0);
    while (true) {
        std::vector<std::string> row(d.factors.size());
        for (std::size_t f = 0; f < d.factors.size(); ++f) row[f] = d.factors[f].second[idx[f]];
        d.rows.push_back(std::move(row));
        int k = static_cast<int>(d.factors.size()) - 1;
        while (k >= 0) {
            if (++idx[k] < d.factors[k].second.size()) break;
            idx[k] = 0;
            --k;
        }
        if (k < 0) break;
    }
    return d;
}

/// The five-factor screening grid: 4 * 2 * 2 * 4 * 2 = 128 runs.
inline FactorialDesign screening_grid() {
    return full_factorial({
        {"model.type", {"dense", "simple_rnn", "gru", "lstm"}},
        {"nlayers", {"1", "2"}},
        {"mixed.cheat", {"FALSE", "TRUE"}},
        {"nnodes", {"25", "50", "75", "100"}},
        {"kernel.L2.reg", {"0", "0.0001"}},
    });
}

struct DesignPoint {
    neural::CellType model_type = neural::CellType::Dense;
    int nlayers = 1;
    bool mixed_cheat = false;
    int nnodes = 25;
    double kernel_l2 = 0.0;
};

inline DesignPoint parse_design_row(const FactorialDesign& d, const std::vector<std::string>& row) {
    DesignPoint p;
    for (std::size_t f = 0; f < d.factors.size(); ++f) {
        const std::string& name = d.factors[f].first;
        const std::string& v = row[f];
        if (name == "model.type")
            p.model_type = neural::parse_cell_type(v);
        else if (name == "nlayers")
            p.nlayers = std::stoi(v);
        else if (name == "mixed.cheat")
            p.mixed_cheat = v == "TRUE";
        else if (name == "nnodes")
            p.nnodes = std::stoi(v);
        else if (name == "kernel.L2.reg")
            p.kernel_l2 = std::stod(v);
        else
            throw std::invalid_argument("unknown design factor: " + name);
    }
    return p;
}

// ---------------------------------------------------------------------------
// Worker pool
// ---------------------------------------------------------------------------

/// Runs fn(0..n-1) over `workers` threads. Each task writes only its own
/// output slot, so results are independent of scheduling.
inline void run_parallel(int n, int workers, const std::function<void(int)>& fn) {
    workers = std::max(1, std::min(workers, n));
    if (workers == 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w)
        pool.emplace_back([&]() {
            while (true) {
                int i = next.fetch_add(1);
                if (i >= n) break;
                fn(i);
            }
        });
    for (auto& t : pool) t.join();
}

inline int default_workers() {
    if (const char* env = std::getenv("SEASONCAST_WORKERS")) {
        int v = std::atoi(env);
        if (v >= 1) return v;
    }
    unsigned hc = std::thread::hardware_concurrency();
    return hc > 0 ? static_cast<int>(hc) : 1;
}

// ---------------------------------------------------------------------------
// Per-cell forecasting machinery
// ---------------------------------------------------------------------------

struct TargetMeta {
    int day_num = 0;
    DayOfWeek day_of_week = DayOfWeek::Mon;
    bool holiday = false;
};

/// Classical fits on one training window plus their in-sample fitted values
/// and target-day forecasts (everything the cheat columns and the classical
/// model tags need). Built from the window only; the target day's actuals are
/// out of reach by construction.
struct ClassicalBundle {
    features::CheatInputs cheat_train;              // transformed scale, per encoded day
    std::vector<features::CheatTriple> cheat_target;  // per period
    std::vector<double> mixed_forecast;             // count scale, per period
    std::vector<double> winters_forecast;
    std::vector<double> arima_forecast;
    bool mixed_converged = true;
    bool mixed_ok = true, winters_ok = true, arima_ok = true;
    bool fallback = false;  // a classical fit failed; seasonal naive filled in
};

/// winters_season = 0 selects the weekly season (the default); pass
/// grid.periods_per_day for the per-day variant.
inline ClassicalBundle build_classical_bundle(const SkillSeries& window_series,
                                              const TargetMeta& target,
                                              int winters_season = 0) {
    const PeriodGrid& grid = window_series.grid();
    const int P = grid.periods_per_day;
    const int W = grid.days_per_week;
    const int season = grid.season_length();
    if (winters_season <= 0) winters_season = season;
    const int first_encoded = window_series.first_day_num() + W;
    const int last_day = window_series.last_day_num();

    ClassicalBundle bundle;
    std::vector<double> y;
    y.reserve(window_series.observations().size());
    for (const auto& o : window_series.observations()) y.push_back(sqrt_transform(o.calls));

    auto naive_train = [&](int day, int p) {
        return sqrt_transform(window_series.calls_at(day - W, p));
    };

    // mixed model
    std::vector<double> mixed_fitted;
    std::vector<double> mixed_target_t(P);
    try {
        auto fit = mixedmodel::fit(window_series);
        bundle.mixed_converged = fit.converged;
        mixed_fitted = mixedmodel::fitted_values(fit, window_series);
        mixedmodel::TargetDayMeta meta{target.day_num, target.day_of_week, target.holiday};
        auto rec = mixedmodel::forecast_next_day(fit, window_series, meta);
        bundle.mixed_forecast = rec.predictions;
        for (int p = 0; p < P; ++p) mixed_target_t[p] = std::sqrt(rec.predictions[p] + 0.25);
    } catch (const std::exception&) {
        bundle.mixed_ok = false;
        bundle.fallback = true;
    }

    // winters
    std::vector<double> winters_fitted;
    std::vector<double> winters_target_t(P);
    try {
        auto st = classical::winters_fit(y, winters_season);
        winters_fitted = st.fitted;  // starts at t = winters_season
        auto fc = classical::winters_forecast(st, P);
        bundle.winters_forecast.resize(P);
        for (int p = 0; p < P; ++p) {
            winters_target_t[p] = fc[p];
            bundle.winters_forecast[p] = inverse_transform(fc[p]);
        }
    } catch (const std::exception&) {
        bundle.winters_ok = false;
        bundle.fallback = true;
    }

    // arima
    std::vector<double> arima_fitted;
    std::vector<double> arima_target_t(P);
    try {
        auto fit = classical::arima_fit(y, season);
        arima_fitted = classical::arima_fitted(fit, y);  // starts at t = season
        auto fc = classical::arima_forecast(fit, y, P);
        bundle.arima_forecast.resize(P);
        for (int p = 0; p < P; ++p) {
            arima_target_t[p] = fc[p];
            bundle.arima_forecast[p] = inverse_transform(fc[p]);
        }
    } catch (const std::exception&) {
        bundle.arima_ok = false;
        bundle.fallback = true;
    }

    for (int day = first_encoded; day <= last_day; ++day) {
        std::vector<features::CheatTriple> triples(P);
        const int day_idx = window_series.day_index(day);
        for (int p = 1; p <= P; ++p) {
            const int t = day_idx * P + (p - 1);
            const int w_off = t - winters_season;  // fitted arrays start after one season
            const int a_off = t - season;
            features::CheatTriple ct;
            ct.mixed = bundle.mixed_ok ? mixed_fitted[t] : naive_train(day, p);
            ct.winters = (bundle.winters_ok && w_off >= 0 && w_off < (int)winters_fitted.size())
                             ? winters_fitted[w_off]
                             : naive_train(day, p);
            ct.arima = (bundle.arima_ok && a_off >= 0 && a_off < (int)arima_fitted.size())
                           ? arima_fitted[a_off]
                           : naive_train(day, p);
            triples[p - 1] = ct;
        }
        bundle.cheat_train[day] = std::move(triples);
    }

    bundle.cheat_target.resize(P);
    for (int p = 1; p <= P; ++p) {
        double naive = sqrt_transform(window_series.calls_at(target.day_num - W, p));
        auto& ct = bundle.cheat_target[p - 1];
        ct.mixed = bundle.mixed_ok ? mixed_target_t[p - 1] : naive;
        ct.winters = bundle.winters_ok ? winters_target_t[p - 1] : naive;
        ct.arima = bundle.arima_ok ? arima_target_t[p - 1] : naive;
    }
    if (!bundle.mixed_ok) bundle.mixed_forecast.assign(P, 0.0);
    if (!bundle.winters_ok) bundle.winters_forecast.assign(P, 0.0);
    if (!bundle.arima_ok) bundle.arima_forecast.assign(P, 0.0);
    return bundle;
}

/// Everything needed to score any model on one (skill, target day) cell.
struct CellContext {
    SkillSeries window_series;
    TargetMeta target;
    ClassicalBundle bundle;
    features::Design design_plain;
    features::Design design_cheat;

    CellContext(const SkillSeries& full, int target_day, int train_weeks,
                int winters_season = 0)
        : window_series(full.window(target_day - train_weeks * full.grid().days_per_week,
                                    target_day - 1)) {
        target.day_num = target_day;
        target.day_of_week = day_of_week_for(target_day, full.grid());
        target.holiday = full.has_day(target_day) ? full.holiday_on(target_day) : false;
        bundle = build_classical_bundle(window_series, target, winters_season);
        features::TrainWindow w{window_series.first_day_num(), window_series.last_day_num()};
        design_plain = features::build_design(window_series, w);
        design_cheat = features::build_design(window_series, w, bundle.cheat_train);
    }
};

/// Trains and scores one network configuration on a prepared cell.
inline ForecastRecord forecast_network(const CellContext& ctx, const DesignPoint& point,
                                       std::uint64_t seed, int max_epochs_override = -1) {
    neural::NetworkConfig cfg;
    cfg.model_type = point.model_type;
    cfg.nlayers = point.nlayers;
    cfg.nnodes = point.nnodes;
    cfg.kernel_l2 = point.kernel_l2;
    cfg.mixed_cheat = point.mixed_cheat;
    cfg.seed = seed;
    if (max_epochs_override > 0) cfg.max_epochs = max_epochs_override;

    const features::Design& design = point.mixed_cheat ? ctx.design_cheat : ctx.design_plain;
    auto fit = neural::train(cfg, design);
    features::TargetDayMeta meta{ctx.target.day_num, ctx.target.day_of_week, ctx.target.holiday};
    std::optional<std::vector<features::CheatTriple>> cheat;
    if (point.mixed_cheat) cheat = ctx.bundle.cheat_target;
    if (fit.diverged) throw NumericError("network training diverged");
    auto Xt = features::build_target_features(ctx.window_series, design, meta, cheat);
    return neural::forecast_day(fit, design, Xt, ctx.window_series.skill(), ctx.target.day_num);
}

/// Classical/mixed forecasts come straight from the bundle.
inline ForecastRecord forecast_classical(const CellContext& ctx, ModelTag tag) {
    ForecastRecord rec;
    rec.model = tag;
    rec.skill = ctx.window_series.skill();
    rec.target_day = ctx.target.day_num;
    switch (tag) {
        case ModelTag::DoublyStoch:
            if (!ctx.bundle.mixed_ok) throw NumericError("mixed model fit failed");
            rec.predictions = ctx.bundle.mixed_forecast;
            rec.degraded = !ctx.bundle.mixed_converged;
            break;
        case ModelTag::Winters:
            if (!ctx.bundle.winters_ok) throw NumericError("winters fit failed");
            rec.predictions = ctx.bundle.winters_forecast;
            break;
        case ModelTag::ARIMA:
            if (!ctx.bundle.arima_ok) throw NumericError("arima fit failed");
            rec.predictions = ctx.bundle.arima_forecast;
            break;
        default: throw std::invalid_argument("forecast_classical: not a classical tag");
    }
    rec.validate();
    return rec;
}

// ---------------------------------------------------------------------------
// Designed experiment
// ---------------------------------------------------------------------------

struct ExperimentPlan {
    FactorialDesign design;
    std::vector<std::string> splits;
    std::vector<int> files;  // target day numbers
    int train_weeks = 5;
    std::uint64_t seed = 0;
    int max_epochs_override = -1;
    bool winters_day_season = false;
};

struct ExperimentRun {
    std::vector<std::string> design_row;
    std::string split;
    int file = 0;
    std::optional<double> wape;
    std::string status = "pending";  // ok | diverged | skipped
};

/// The replicated run list: every design row appears once per (split, file).
inline std::vector<ExperimentRun> replicate_runs(const FactorialDesign& design,
                                                 const std::vector<std::string>& splits,
                                                 const std::vector<int>& files) {
    std::vector<ExperimentRun> runs;
    runs.reserve(design.rows.size() * splits.size() * files.size());
    for (const auto& row : design.rows)
        for (const auto& split : splits)
            for (int file : files) runs.push_back({row, split, file, std::nullopt, "pending"});
    return runs;
}

inline std::uint64_t run_seed(std::uint64_t base, const ExperimentRun& run) {
    std::string key;
    for (const auto& v : run.design_row) key += v + "|";
    key += run.split + "|" + std::to_string(run.file);
    return mix_seed(base, stable_hash64(key));
}

/// Executes the replicated factorial table. Per-run seeds derive from a
/// stable hash of the run key so scheduling and worker count cannot change
/// any result; failures are recorded per run, never propagated.
inline std::vector<ExperimentRun> run_experiment(const ExperimentPlan& plan,
                                                 const std::map<std::string, SkillSeries>& skills,
                                                 int workers = 1) {
    auto runs = replicate_runs(plan.design, plan.splits, plan.files);

    // cell contexts (classical fits, designs) are shared across the
    // configurations that hit the same (split, file)
    std::vector<std::pair<std::string, int>> cells;
    for (const auto& split : plan.splits)
        for (int file : plan.files) cells.emplace_back(split, file);
    std::map<std::pair<std::string, int>, std::unique_ptr<CellContext>> ctx;
    std::map<std::pair<std::string, int>, std::string> cell_error;
    std::mutex ctx_mutex;
    run_parallel(static_cast<int>(cells.size()), workers, [&](int i) {
        const auto& cell = cells[i];
        std::unique_ptr<CellContext> c;
        std::string err;
        try {
            auto it = skills.find(cell.first);
            if (it == skills.end()) throw CoverageError("unknown split " + cell.first);
            const SkillSeries& full = it->second;
            const int first_needed = cell.second - plan.train_weeks * full.grid().days_per_week;
            if (!full.has_day(cell.second) || !full.has_day(first_needed))
                throw CoverageError("window not covered");
            c = std::make_unique<CellContext>(
                full, cell.second, plan.train_weeks,
                plan.winters_day_season ? full.grid().periods_per_day : 0);
        } catch (const std::exception& e) {
            err = e.what();
        }
        std::lock_guard<std::mutex> lock(ctx_mutex);
        if (c)
            ctx[cell] = std::move(c);
        else
            cell_error[cell] = err;
    });

    run_parallel(static_cast<int>(runs.size()), workers, [&](int i) {
        ExperimentRun& run = runs[i];
        auto key = std::make_pair(run.split, run.file);
        auto it = ctx.find(key);
        if (it == ctx.end()) {
            run.status = "skipped";
            return;
        }
        try {
            const CellContext& c = *it->second;
            DesignPoint point = parse_design_row(plan.design, run.design_row);
            auto rec = forecast_network(c, point, run_seed(plan.seed, run),
                                        plan.max_epochs_override);
            const auto& full = skills.at(run.split);
            std::vector<double> actual(full.grid().periods_per_day);
            for (int p = 1; p <= full.grid().periods_per_day; ++p)
                actual[p - 1] = static_cast<double>(full.calls_at(run.file, p));
            run.wape = wape(actual, rec.predictions);
            run.status = "ok";
        } catch (const CoverageError&) {
            run.status = "skipped";
        } catch (const std::exception&) {
            run.status = "diverged";
        }
    });
    return runs;
}

inline void write_runs_csv(std::ostream& os, const std::vector<ExperimentRun>& runs) {
    os << kRunsCsvHeader << "\n";
    for (const auto& r : runs) {
        for (const auto& v : r.design_row) os << v << ',';
        os << r.split << ',' << r.file << ',';
        if (r.wape)
            os << *r.wape;
        else
            os << "";
        os << ',' << r.status << "\n";
    }
}

inline std::vector<analysis::RunRow> parse_runs_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw std::invalid_argument("runs csv: empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kRunsCsvHeader)
        throw std::invalid_argument("runs csv: bad header, expected '" +
                                    std::string(kRunsCsvHeader) + "'");
    std::vector<analysis::RunRow> rows;
    std::size_t lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto f = split_csv_line(line);
        if (f.size() != 9)
            throw std::invalid_argument("runs csv row " + std::to_string(lineno) +
                                        ": expected 9 fields");
        analysis::RunRow r;
        r.model_type = f[0];
        r.nlayers = f[1];
        r.mixed_cheat = f[2];
        r.nnodes = f[3];
        r.kernel_l2 = f[4];
        r.split = f[5];
        r.file = f[6];
        try {
            r.wape = f[7].empty() ? 0.0 : std::stod(f[7]);
        } catch (const std::exception&) {
            throw std::invalid_argument("runs csv row " + std::to_string(lineno) + ": bad wape");
        }
        r.status = f[8];
        rows.push_back(std::move(r));
    }
    return rows;
}

// ---------------------------------------------------------------------------
// Rolling backtest
// ---------------------------------------------------------------------------

struct BacktestPlan {
    std::vector<std::string> skills;  // empty: every skill in the set
    int n_forecast_days = 60;
    int train_weeks = 5;
    std::vector<ModelTag> models;
    std::uint64_t seed = 0;
    // network architecture for the NN tags (the screening winner's settings)
    int nn_layers = 2;
    int nn_nodes = 50;
    double nn_kernel_l2 = 0.0001;
    int max_epochs_override = -1;
    bool winters_day_season = false;
};

struct BacktestCell {
    std::string skill;
    int target_day = 0;
    ModelTag model = ModelTag::DoublyStoch;
    std::optional<double> wape;
    std::string status = "pending";
    double actual_volume = 0.0;  // calls on the target day
    double window_volume = 0.0;  // calls over training window + target day
};

inline DesignPoint network_point(const BacktestPlan& plan, ModelTag tag) {
    DesignPoint p;
    p.nlayers = plan.nn_layers;
    p.nnodes = plan.nn_nodes;
    p.kernel_l2 = plan.nn_kernel_l2;
    p.mixed_cheat = is_cheat_tag(tag);
    switch (tag) {
        case ModelTag::NN_Classic:
        case ModelTag::NN_Classic_cheat: p.model_type = neural::CellType::Dense; break;
        case ModelTag::RNN_Simple:
        case ModelTag::RNN_Simple_cheat: p.model_type = neural::CellType::SimpleRnn; break;
        case ModelTag::RNN_GRU:
        case ModelTag::RNN_GRU_cheat: p.model_type = neural::CellType::Gru; break;
        case ModelTag::RNN_LSTM:
        case ModelTag::RNN_LSTM_cheat: p.model_type = neural::CellType::Lstm; break;
        default: throw std::invalid_argument("network_point: not a network tag");
    }
    return p;
}

inline bool is_network_tag(ModelTag t) {
    return t != ModelTag::DoublyStoch && t != ModelTag::Winters && t != ModelTag::ARIMA;
}

/// Rolling day-ahead backtest: for each skill the training window advances
/// across the last n_forecast_days of its history.
inline std::vector<BacktestCell> run_backtest(const BacktestPlan& plan,
                                              const std::map<std::string, SkillSeries>& skills,
                                              int workers = 1) {
    std::vector<std::string> names = plan.skills;
    if (names.empty())
        for (const auto& [name, s] : skills) names.push_back(name);

    struct Task {
        std::string skill;
        int target_day;
    };
    std::vector<Task> tasks;
    for (const auto& name : names) {
        auto it = skills.find(name);
        if (it == skills.end()) throw CoverageError("backtest: unknown skill " + name);
        const SkillSeries& s = it->second;
        for (int k = plan.n_forecast_days - 1; k >= 0; --k)
            tasks.push_back({name, s.last_day_num() - k});
    }

    std::vector<std::vector<BacktestCell>> per_task(tasks.size());
    run_parallel(static_cast<int>(tasks.size()), workers, [&](int ti) {
        const Task& task = tasks[ti];
        const SkillSeries& full = skills.at(task.skill);
        const PeriodGrid& grid = full.grid();
        const int P = grid.periods_per_day;
        auto& cells = per_task[ti];
        for (ModelTag tag : plan.models)
            cells.push_back({task.skill, task.target_day, tag, std::nullopt, "pending", 0.0, 0.0});

        const int first_needed = task.target_day - plan.train_weeks * grid.days_per_week;
        std::vector<double> actual(P);
        double window_volume = 0.0;
        try {
            if (!full.has_day(task.target_day) || !full.has_day(first_needed))
                throw CoverageError("window not covered");
            for (int p = 1; p <= P; ++p)
                actual[p - 1] = static_cast<double>(full.calls_at(task.target_day, p));
            for (int d = first_needed; d <= task.target_day; ++d)
                for (int p = 1; p <= P; ++p) window_volume += full.calls_at(d, p);

            CellContext ctx(full, task.target_day, plan.train_weeks,
                            plan.winters_day_season ? grid.periods_per_day : 0);
            for (std::size_t m = 0; m < plan.models.size(); ++m) {
                BacktestCell& cell = cells[m];
                cell.actual_volume = std::accumulate(actual.begin(), actual.end(), 0.0);
                cell.window_volume = window_volume;
                try {
                    ForecastRecord rec;
                    if (is_network_tag(cell.model)) {
                        std::uint64_t seed = mix_seed(
                            plan.seed, stable_hash64(task.skill + "|" +
                                                     std::to_string(task.target_day) + "|" +
                                                     to_string(cell.model)));
                        rec = forecast_network(ctx, network_point(plan, cell.model), seed,
                                               plan.max_epochs_override);
                    } else {
                        rec = forecast_classical(ctx, cell.model);
                    }
                    cell.wape = wape(actual, rec.predictions);
                    cell.status = "ok";
                } catch (const std::exception&) {
                    cell.status = "diverged";
                }
            }
        } catch (const std::exception&) {
            for (auto& cell : cells) cell.status = "skipped";
        }
    });

    std::vector<BacktestCell> out;
    for (auto& v : per_task)
        for (auto& c : v) out.push_back(std::move(c));
    return out;
}

// ---------------------------------------------------------------------------
// Backtest summaries
// ---------------------------------------------------------------------------

struct SkillSummary {
    std::string skill;
    double sum_call_vol = 0.0;
    std::map<ModelTag, double> mean_wape;
    std::map<ModelTag, int> n_ok;
};

inline std::vector<SkillSummary> summarize_backtest(const std::vector<BacktestCell>& cells) {
    std::map<std::string, SkillSummary> by_skill;
    std::map<std::string, std::map<ModelTag, std::pair<double, int>>> acc;
    std::map<std::string, std::map<int, double>> day_volume;
    for (const auto& c : cells) {
        by_skill[c.skill].skill = c.skill;
        day_volume[c.skill][c.target_day] = c.actual_volume;
        if (c.status == "ok" && c.wape) {
            auto& slot = acc[c.skill][c.model];
            slot.first += *c.wape;
            slot.second += 1;
        }
    }
    for (auto& [name, summary] : by_skill) {
        for (const auto& [day, vol] : day_volume[name]) summary.sum_call_vol += vol;
        for (const auto& [tag, slot] : acc[name]) {
            summary.mean_wape[tag] = slot.first / slot.second;
            summary.n_ok[tag] = slot.second;
        }
    }
    std::vector<SkillSummary> out;
    for (auto& [name, summary] : by_skill) out.push_back(std::move(summary));
    std::sort(out.begin(), out.end(), [](const SkillSummary& a, const SkillSummary& b) {
        if (a.sum_call_vol != b.sum_call_vol) return a.sum_call_vol > b.sum_call_vol;
        return a.skill < b.skill;
    });
    return out;
}

struct WinRateRow {
    std::string skill;
    double log_median_volume = 0.0;
    double win_rate = 0.0;  // share of days where `a` beat `b`
    int n_days = 0;
};

/// Share of days with wape(a) < wape(b) per skill against the log of the
/// median training+validation volume.
inline std::vector<WinRateRow> win_rate_table(const std::vector<BacktestCell>& cells, ModelTag a,
                                              ModelTag b) {
    std::map<std::string, std::map<int, std::pair<std::optional<double>, std::optional<double>>>>
        days;
    std::map<std::string, std::vector<double>> volumes;
    for (const auto& c : cells) {
        if (c.status != "ok" || !c.wape) continue;
        if (c.model == a) days[c.skill][c.target_day].first = *c.wape;
        if (c.model == b) days[c.skill][c.target_day].second = *c.wape;
        if (c.model == a) volumes[c.skill].push_back(c.window_volume);
    }
    std::vector<WinRateRow> out;
    for (auto& [skill, m] : days) {
        WinRateRow row;
        row.skill = skill;
        int wins = 0;
        for (const auto& [day, pair] : m) {
            if (!pair.first || !pair.second) continue;
            row.n_days += 1;
            if (*pair.first < *pair.second) ++wins;
        }
        if (row.n_days == 0) continue;
        auto& vols = volumes[skill];
        std::sort(vols.begin(), vols.end());
        double median =
            vols.empty() ? 0.0
                         : (vols.size() % 2 ? vols[vols.size() / 2]
                                            : 0.5 * (vols[vols.size() / 2 - 1] + vols[vols.size() / 2]));
        row.log_median_volume = std::log(std::max(median, 1.0));
        row.win_rate = static_cast<double>(wins) / row.n_days;
        out.push_back(std::move(row));
    }
    std::sort(out.begin(), out.end(),
              [](const WinRateRow& x, const WinRateRow& y) { return x.skill < y.skill; });
    return out;
}

/// Paired per-(skill, day) comparison of two model tags.
inline analysis::PairedComparison paired_model_comparison(const std::vector<BacktestCell>& cells,
                                                          ModelTag a, ModelTag b) {
    std::map<std::pair<std::string, int>, std::pair<std::optional<double>, std::optional<double>>>
        paired;
    for (const auto& c : cells) {
        if (c.status != "ok" || !c.wape) continue;
        if (c.model == a) paired[{c.skill, c.target_day}].first = *c.wape;
        if (c.model == b) paired[{c.skill, c.target_day}].second = *c.wape;
    }
    std::vector<double> wa, wb;
    for (const auto& [key, pr] : paired) {
        if (!pr.first || !pr.second) continue;
        wa.push_back(*pr.first);
        wb.push_back(*pr.second);
    }
    return analysis::paired_comparison(wa, wb);
}

inline void write_backtest_cells_csv(std::ostream& os, const std::vector<BacktestCell>& cells) {
    os << "split,target_day,model,wape,status\n";
    for (const auto& c : cells) {
        os << c.skill << ',' << c.target_day << ',' << to_string(c.model) << ',';
        if (c.wape) os << *c.wape;
        os << ',' << c.status << "\n";
    }
}

inline void write_backtest_summary_csv(std::ostream& os, const std::vector<SkillSummary>& rows,
                                       const std::vector<ModelTag>& models) {
    os << "split,sum_call_vol";
    for (ModelTag t : models) os << ',' << to_string(t);
    os << "\n";
    for (const auto& r : rows) {
        os << r.skill << ',' << r.sum_call_vol;
        for (ModelTag t : models) {
            os << ',';
            auto it = r.mean_wape.find(t);
            if (it != r.mean_wape.end()) os << it->second;
        }
        os << "\n";
    }
}

inline void write_win_rate_csv(std::ostream& os, const std::vector<WinRateRow>& rows) {
    os << "split,log_median_volume,win_rate,n_days\n";
    for (const auto& r : rows)
        os << r.skill << ',' << r.log_median_volume << ',' << r.win_rate << ',' << r.n_days
           << "\n";
}

}  // namespace seasoncast::harness
