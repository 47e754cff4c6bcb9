#pragma once

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "seasoncast/analysis.hpp"
#include "seasoncast/classical.hpp"
#include "seasoncast/core.hpp"
#include "seasoncast/datagen.hpp"
#include "seasoncast/features.hpp"
#include "seasoncast/harness.hpp"
#include "seasoncast/mixedmodel.hpp"
#include "seasoncast/neural.hpp"

namespace seasoncast::cli {

namespace fs = std::filesystem;
using nlohmann::json;

// exit codes: 0 ok, 2 config/validation, 3 data/coverage, 4 numerical failure
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitNumeric = 4;

struct Manifest {
    std::string command;
    std::string config_path;
    std::vector<std::string> inputs;
    std::vector<std::string> outputs;
    std::uint64_t seed = 0;
    double duration_seconds = 0.0;

    json to_json() const {
        return json{{"command", command},     {"config", config_path},
                    {"inputs", inputs},       {"outputs", outputs},
                    {"seed", seed},           {"version", kVersion},
                    {"duration_seconds", duration_seconds}};
    }
};

namespace detail {

inline std::string pct(double wape_fraction) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f%%", 100.0 * wape_fraction);
    return buf;
}

inline void write_text(const fs::path& path, const std::string& text) {
    fs::create_directories(path.parent_path().empty() ? "." : path.parent_path());
    std::ofstream f(path);
    if (!f) throw std::invalid_argument("cannot write " + path.string());
    f << text;
}

inline void write_manifest(const fs::path& dir, Manifest m,
                           std::chrono::steady_clock::time_point started) {
    m.duration_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    std::ofstream f(dir / "manifest.json");
    f << m.to_json().dump(2) << "\n";
}

inline json load_json(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::invalid_argument("cannot open " + path);
    json j;
    f >> j;
    return j;
}

inline PeriodGrid grid_from_json(const json& j) {
    PeriodGrid g;
    if (j.contains("grid")) {
        g.days_per_week = j["grid"].value("days_per_week", 5);
        g.periods_per_day = j["grid"].value("periods_per_day", 32);
    }
    return g;
}

inline datagen::SimConfig sim_config_from_json(const json& j) {
    datagen::SimConfig cfg;
    cfg.grid = grid_from_json(j);
    cfg.n_weeks = j.value("n_weeks", 5);
    cfg.seed = j.value("seed", 0ull);
    cfg.sigma_day = j.value("sigma_day", 0.0);
    cfg.rho_day = j.value("rho_day", 0.0);
    cfg.sigma_resid = j.value("sigma_resid", 0.1);
    cfg.rho_resid = j.value("rho_resid", 0.0);
    cfg.volume_scale = j.value("volume_scale", 1.0);
    if (j.contains("base_surface")) {
        cfg.base_surface = j["base_surface"].get<std::vector<std::vector<double>>>();
    } else if (j.contains("peak_scale")) {
        cfg.base_surface = datagen::default_surface(cfg.grid, j["peak_scale"].get<double>());
    } else {
        throw std::invalid_argument("sim config needs base_surface or peak_scale");
    }
    if (j.contains("holiday_days"))
        for (int d : j["holiday_days"]) cfg.holiday_days.insert(d);
    if (j.contains("holiday_shift")) {
        if (j["holiday_shift"].is_number()) {
            cfg.holiday_shift.assign(datagen::n_p_groups(cfg.grid),
                                     j["holiday_shift"].get<double>());
        } else {
            cfg.holiday_shift = j["holiday_shift"].get<std::vector<double>>();
        }
    } else if (!cfg.holiday_days.empty()) {
        cfg.holiday_shift.assign(datagen::n_p_groups(cfg.grid), 0.0);
    }
    return cfg;
}

inline std::map<std::string, SkillSeries> load_series_dir(const std::string& dir,
                                                          const PeriodGrid& grid,
                                                          std::vector<std::string>* files) {
    std::map<std::string, SkillSeries> out;
    std::vector<fs::path> paths;
    for (const auto& entry : fs::directory_iterator(dir))
        if (entry.is_regular_file() && entry.path().extension() == ".csv")
            paths.push_back(entry.path());
    std::sort(paths.begin(), paths.end());
    for (const auto& p : paths) {
        if (files) files->push_back(p.string());
        for (auto& s : read_series_csv_file(p.string(), grid)) {
            std::string name = s.skill();
            if (!out.emplace(name, std::move(s)).second)
                throw std::invalid_argument("duplicate skill '" + name + "' in " + dir);
        }
    }
    if (out.empty()) throw std::invalid_argument("no series csv files under " + dir);
    return out;
}

inline void write_forecast_csv(std::ostream& os, const ForecastRecord& rec) {
    os << "skill,target_day,model,period,prediction,actual\n";
    for (std::size_t p = 0; p < rec.predictions.size(); ++p) {
        os << rec.skill << ',' << rec.target_day << ',' << to_string(rec.model) << ',' << p + 1
           << ',' << rec.predictions[p] << ',';
        if (rec.actuals) os << (*rec.actuals)[p];
        os << "\n";
    }
}

inline std::string profile_svg(const analysis::AnalysisReport& rep) {
    const int W = 900, H = 300, pad = 40;
    double lo = 1e300, hi = -1e300;
    for (const auto& r : rep.profile)
        if (r.upper_pi) {
            lo = std::min(lo, *r.upper_pi);
            hi = std::max(hi, *r.upper_pi);
        }
    if (hi <= lo) hi = lo + 1.0;
    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
       << "\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n<polyline fill=\"none\" "
          "stroke=\"steelblue\" stroke-width=\"1.5\" points=\"";
    const int n = static_cast<int>(rep.profile.size());
    for (int i = 0; i < n; ++i) {
        if (!rep.profile[i].upper_pi) continue;
        double x = pad + (W - 2.0 * pad) * i / std::max(1, n - 1);
        double y = H - pad - (H - 2.0 * pad) * (*rep.profile[i].upper_pi - lo) / (hi - lo);
        os << x << ',' << y << ' ';
    }
    os << "\"/>\n";
    if (rep.best_row >= 0 && rep.profile[rep.best_row].upper_pi) {
        double x = pad + (W - 2.0 * pad) * rep.best_row / std::max(1, n - 1);
        double y = H - pad -
                   (H - 2.0 * pad) * (*rep.profile[rep.best_row].upper_pi - lo) / (hi - lo);
        os << "<circle cx=\"" << x << "\" cy=\"" << y << "\" r=\"4\" fill=\"crimson\"/>\n";
    }
    os << "<text x=\"" << pad << "\" y=\"20\" font-family=\"sans-serif\" font-size=\"13\">"
       << "upper 95% PI of WAPE across design rows (dot: selected configuration)</text>\n</svg>\n";
    return os.str();
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

struct SimulateArgs {
    std::string config_path;
    std::string out_path;
    std::optional<std::uint64_t> seed_override;
};

inline int cmd_simulate(const SimulateArgs& args, std::ostream& out) {
    auto started = std::chrono::steady_clock::now();
    json root = detail::load_json(args.config_path);
    std::vector<std::pair<std::string, datagen::SimConfig>> skills;
    if (root.contains("skills")) {
        int k = 0;
        for (const auto& js : root["skills"]) {
            auto cfg = detail::sim_config_from_json(js);
            std::string name = js.value("name", "skill" + std::to_string(++k));
            skills.emplace_back(name, cfg);
        }
    } else {
        skills.emplace_back(root.value("name", "skill1"), detail::sim_config_from_json(root));
    }
    std::uint64_t base_seed = 0;
    std::vector<SkillSeries> series;
    for (auto& [name, cfg] : skills) {
        if (args.seed_override) cfg.seed = mix_seed(*args.seed_override, stable_hash64(name));
        base_seed = cfg.seed;
        cfg.validate();
        series.push_back(datagen::simulate_skill(cfg, name));
    }
    {
        fs::path outp(args.out_path);
        if (!outp.parent_path().empty()) fs::create_directories(outp.parent_path());
        std::ofstream f(outp);
        if (!f) throw std::invalid_argument("cannot write " + args.out_path);
        write_series_csv(f, series);
    }
    Manifest m;
    m.command = "simulate";
    m.config_path = args.config_path;
    m.inputs = {args.config_path};
    m.outputs = {args.out_path};
    m.seed = base_seed;
    fs::path dir = fs::path(args.out_path).parent_path();
    detail::write_manifest(dir.empty() ? "." : dir, m, started);
    out << "wrote " << args.out_path << " (" << series.size() << " skill"
        << (series.size() == 1 ? "" : "s") << ")\n";
    return kExitOk;
}

struct FitArgs {
    std::string model = "doubly_stoch";
    std::string series_path;
    std::string skill;
    std::string out_dir;
    int train_weeks = 5;
    int target_day = -1;  // default: day after the series ends
    bool cheat = false;
    std::uint64_t seed = 0;
    int nlayers = 2;
    int nnodes = 50;
    double kernel_l2 = 0.0001;
    int max_epochs = 500;
    int days_per_week = 5;
    int periods_per_day = 32;
    std::string dump_features_path;
    bool winters_day_season = false;
    bool json_output = false;
};

inline int cmd_fit(const FitArgs& args, std::ostream& out) {
    auto started = std::chrono::steady_clock::now();
    PeriodGrid grid{args.days_per_week, args.periods_per_day};
    auto all = read_series_csv_file(args.series_path, grid);
    const SkillSeries* series = nullptr;
    if (args.skill.empty()) {
        if (all.size() != 1)
            throw std::invalid_argument("file holds multiple skills; pass --skill");
        series = &all[0];
    } else {
        for (const auto& s : all)
            if (s.skill() == args.skill) series = &s;
        if (!series) throw CoverageError("skill '" + args.skill + "' not present");
    }

    const int target = args.target_day > 0 ? args.target_day : series->last_day_num() + 1;
    const int first_needed = target - args.train_weeks * grid.days_per_week;
    if (first_needed < series->first_day_num() || !series->has_day(target - 1))
        throw CoverageError("training window not covered by the series");

    harness::CellContext ctx(*series, target, args.train_weeks,
                             args.winters_day_season ? grid.periods_per_day : 0);
    ForecastRecord rec;
    json fit_json;
    std::optional<neural::NetworkFit> net_fit;
    if (args.model == "doubly_stoch") {
        rec = harness::forecast_classical(ctx, ModelTag::DoublyStoch);
        auto fit = mixedmodel::fit(ctx.window_series);
        fit_json = mixedmodel::to_json(fit);
    } else if (args.model == "winters") {
        rec = harness::forecast_classical(ctx, ModelTag::Winters);
        std::vector<double> y;
        for (const auto& o : ctx.window_series.observations())
            y.push_back(sqrt_transform(o.calls));
        const int season = args.winters_day_season ? grid.periods_per_day : grid.season_length();
        fit_json = classical::to_json(classical::winters_fit(y, season));
    } else if (args.model == "arima") {
        rec = harness::forecast_classical(ctx, ModelTag::ARIMA);
        std::vector<double> y;
        for (const auto& o : ctx.window_series.observations())
            y.push_back(sqrt_transform(o.calls));
        fit_json = classical::to_json(classical::arima_fit(y, grid.season_length()));
    } else {
        harness::DesignPoint point;
        point.model_type = neural::parse_cell_type(args.model);
        point.nlayers = args.nlayers;
        point.nnodes = args.nnodes;
        point.kernel_l2 = args.kernel_l2;
        point.mixed_cheat = args.cheat;
        neural::NetworkConfig cfg;
        cfg.model_type = point.model_type;
        cfg.nlayers = point.nlayers;
        cfg.nnodes = point.nnodes;
        cfg.kernel_l2 = point.kernel_l2;
        cfg.mixed_cheat = point.mixed_cheat;
        cfg.seed = args.seed;
        cfg.max_epochs = args.max_epochs;
        const features::Design& design = args.cheat ? ctx.design_cheat : ctx.design_plain;
        auto fit = neural::train(cfg, design);
        if (fit.diverged) throw NumericError("network training diverged");
        features::TargetDayMeta meta{target, ctx.target.day_of_week, ctx.target.holiday};
        std::optional<std::vector<features::CheatTriple>> cheat;
        if (args.cheat) cheat = ctx.bundle.cheat_target;
        auto Xt = features::build_target_features(ctx.window_series, design, meta, cheat);
        rec = neural::forecast_day(fit, design, Xt, series->skill(), target);
        fit_json = neural::to_json(fit);
        net_fit = std::move(fit);
    }

    if (!args.dump_features_path.empty()) {
        std::ofstream f(args.dump_features_path);
        if (!f) throw std::invalid_argument("cannot write " + args.dump_features_path);
        features::write_design_csv(f, args.cheat ? ctx.design_cheat : ctx.design_plain);
    }

    std::optional<double> scored;
    if (series->has_day(target)) {
        std::vector<double> actual(grid.periods_per_day);
        for (int p = 1; p <= grid.periods_per_day; ++p)
            actual[p - 1] = static_cast<double>(series->calls_at(target, p));
        rec.actuals = actual;
        scored = wape(actual, rec.predictions);
    }

    fs::create_directories(args.out_dir);
    detail::write_text(fs::path(args.out_dir) / "fit.json", fit_json.dump(2) + "\n");
    {
        std::ofstream f(fs::path(args.out_dir) / "forecast.csv");
        detail::write_forecast_csv(f, rec);
    }
    std::vector<std::string> outputs{"fit.json", "forecast.csv"};
    if (net_fit) {
        std::ofstream f(fs::path(args.out_dir) / "history.csv");
        neural::write_history_csv(f, *net_fit);
        outputs.push_back("history.csv");
    }

    Manifest m;
    m.command = "fit";
    m.inputs = {args.series_path};
    m.outputs = outputs;
    m.seed = args.seed;
    detail::write_manifest(args.out_dir, m, started);

    if (args.json_output) {
        json j{{"model", args.model}, {"skill", rec.skill}, {"target_day", target}};
        if (scored) j["wape"] = *scored;
        out << j.dump() << "\n";
    } else {
        out << "model " << args.model << " skill " << rec.skill << " target day " << target;
        if (scored) out << " wape " << detail::pct(*scored);
        out << "\n";
    }
    return kExitOk;
}

struct DoeArgs {
    std::string plan_path;
    std::string series_dir;
    std::string out_dir;
    int workers = 0;
    std::optional<std::uint64_t> seed_override;
    bool json_output = false;
};

inline int cmd_doe(const DoeArgs& args, std::ostream& out) {
    auto started = std::chrono::steady_clock::now();
    json plan_json = detail::load_json(args.plan_path);
    if (plan_json.empty()) throw std::invalid_argument("empty plan");

    PeriodGrid grid = detail::grid_from_json(plan_json);
    std::vector<std::string> input_files;
    auto skills = detail::load_series_dir(args.series_dir, grid, &input_files);

    harness::ExperimentPlan plan;
    plan.design = harness::screening_grid();
    if (plan_json.contains("factors")) {
        for (auto& [name, levels] : plan.design.factors) {
            if (plan_json["factors"].contains(name))
                levels = plan_json["factors"][name].get<std::vector<std::string>>();
        }
        plan.design = harness::full_factorial(plan.design.factors);
    }
    if (plan_json.contains("splits"))
        plan.splits = plan_json["splits"].get<std::vector<std::string>>();
    else
        for (const auto& [name, s] : skills) plan.splits.push_back(name);
    if (plan_json.contains("files")) {
        plan.files = plan_json["files"].get<std::vector<int>>();
    } else {
        int n_files = plan_json.value("n_files", 5);
        int last = std::numeric_limits<int>::max();
        for (const auto& name : plan.splits) {
            auto it = skills.find(name);
            if (it == skills.end()) throw CoverageError("plan split '" + name + "' not found");
            last = std::min(last, it->second.last_day_num());
        }
        for (int k = n_files - 1; k >= 0; --k) plan.files.push_back(last - k);
    }
    plan.train_weeks = plan_json.value("train_weeks", 5);
    plan.seed = plan_json.value("seed", 0ull);
    if (args.seed_override) plan.seed = *args.seed_override;
    plan.max_epochs_override = plan_json.value("max_epochs", -1);
    plan.winters_day_season = plan_json.value("winters_day_season", false);

    const int workers = args.workers > 0 ? args.workers : harness::default_workers();
    auto runs = harness::run_experiment(plan, skills, workers);

    fs::create_directories(args.out_dir);
    {
        std::ofstream f(fs::path(args.out_dir) / "runs.csv");
        harness::write_runs_csv(f, runs);
    }
    Manifest m;
    m.command = "doe";
    m.config_path = args.plan_path;
    m.inputs = input_files;
    m.outputs = {"runs.csv"};
    m.seed = plan.seed;
    detail::write_manifest(args.out_dir, m, started);

    int ok = 0, warn = 0;
    for (const auto& r : runs)
        (r.status == "ok" ? ok : warn) += 1;
    if (args.json_output)
        out << json{{"runs", runs.size()}, {"ok", ok}, {"failed_or_skipped", warn}}.dump() << "\n";
    else
        out << runs.size() << " runs (" << ok << " ok, " << warn << " failed/skipped)\n";
    return kExitOk;
}

struct AnalyzeArgs {
    std::string runs_path;
    std::string out_dir;
    bool svg = false;
    bool json_output = false;
};

inline int cmd_analyze(const AnalyzeArgs& args, std::ostream& out) {
    auto started = std::chrono::steady_clock::now();
    std::ifstream f(args.runs_path);
    if (!f) throw std::invalid_argument("cannot open " + args.runs_path);
    auto rows = harness::parse_runs_csv(f);
    auto rep = analysis::analyze_runs(rows);

    fs::create_directories(args.out_dir);
    auto write = [&](const std::string& name, auto&& writer) {
        std::ofstream os(fs::path(args.out_dir) / name);
        writer(os);
    };
    write("variance_tests.csv",
          [&](std::ostream& os) { analysis::write_tests_csv(os, rep.variance_tests); });
    write("mean_tests.csv",
          [&](std::ostream& os) { analysis::write_tests_csv(os, rep.mean_tests); });
    write("mean_tests_pruned.csv",
          [&](std::ostream& os) { analysis::write_tests_csv(os, rep.mean_tests_pruned); });
    write("profile.csv", [&](std::ostream& os) { analysis::write_profile_csv(os, rep); });
    write("wape_hist.csv",
          [&](std::ostream& os) { analysis::write_histogram_csv(os, rep.wape_hist); });
    write("recip_wape_hist.csv",
          [&](std::ostream& os) { analysis::write_histogram_csv(os, rep.recip_hist); });
    detail::write_text(fs::path(args.out_dir) / "selection.json",
                       analysis::selection_json(rep).dump(2) + "\n");
    std::vector<std::string> outputs{"variance_tests.csv", "mean_tests.csv",
                                     "mean_tests_pruned.csv", "profile.csv",
                                     "wape_hist.csv",       "recip_wape_hist.csv",
                                     "selection.json"};
    if (args.svg) {
        detail::write_text(fs::path(args.out_dir) / "profile.svg", detail::profile_svg(rep));
        outputs.push_back("profile.svg");
    }

    Manifest m;
    m.command = "analyze";
    m.inputs = {args.runs_path};
    m.outputs = outputs;
    detail::write_manifest(args.out_dir, m, started);

    if (rep.excluded_rows > 0)
        out << "warning: excluded " << rep.excluded_rows
            << " rows (failed runs or non-positive wape)\n";
    const auto& best = rep.profile[rep.best_row];
    if (args.json_output)
        out << analysis::selection_json(rep).dump() << "\n";
    else
        out << "selected: model.type=" << best.model_type << " nlayers=" << best.nlayers
            << " mixed.cheat=" << best.mixed_cheat << " nnodes=" << best.nnodes
            << " kernel.L2.reg=" << best.kernel_l2 << " upper_pi_wape="
            << (best.upper_pi ? *best.upper_pi : 0.0) << "\n";
    return kExitOk;
}

struct BacktestArgs {
    std::string plan_path;
    std::string series_dir;
    std::string out_dir;
    int workers = 0;
    std::optional<std::uint64_t> seed_override;
    bool json_output = false;
};

inline int cmd_backtest(const BacktestArgs& args, std::ostream& out) {
    auto started = std::chrono::steady_clock::now();
    json plan_json = detail::load_json(args.plan_path);
    PeriodGrid grid = detail::grid_from_json(plan_json);
    std::vector<std::string> input_files;
    auto skills = detail::load_series_dir(args.series_dir, grid, &input_files);

    harness::BacktestPlan plan;
    if (plan_json.contains("skills"))
        plan.skills = plan_json["skills"].get<std::vector<std::string>>();
    plan.n_forecast_days = plan_json.value("n_forecast_days", 60);
    plan.train_weeks = plan_json.value("train_weeks", 5);
    plan.seed = plan_json.value("seed", 0ull);
    if (args.seed_override) plan.seed = *args.seed_override;
    plan.nn_layers = plan_json.value("nn_layers", 2);
    plan.nn_nodes = plan_json.value("nn_nodes", 50);
    plan.nn_kernel_l2 = plan_json.value("nn_kernel_l2", 0.0001);
    plan.max_epochs_override = plan_json.value("max_epochs", -1);
    plan.winters_day_season = plan_json.value("winters_day_season", false);
    if (!plan_json.contains("models")) throw std::invalid_argument("plan needs a models list");
    for (const auto& name : plan_json["models"])
        plan.models.push_back(parse_model_tag(name.get<std::string>()));

    const int workers = args.workers > 0 ? args.workers : harness::default_workers();
    auto cells = harness::run_backtest(plan, skills, workers);
    auto summary = harness::summarize_backtest(cells);

    fs::create_directories(args.out_dir);
    {
        std::ofstream f(fs::path(args.out_dir) / "cells.csv");
        harness::write_backtest_cells_csv(f, cells);
    }
    {
        std::ofstream f(fs::path(args.out_dir) / "summary.csv");
        harness::write_backtest_summary_csv(f, summary, plan.models);
    }
    std::vector<std::string> outputs{"cells.csv", "summary.csv"};

    auto has = [&](ModelTag t) {
        return std::find(plan.models.begin(), plan.models.end(), t) != plan.models.end();
    };
    if (has(ModelTag::RNN_GRU) && has(ModelTag::DoublyStoch)) {
        auto wr = harness::win_rate_table(cells, ModelTag::RNN_GRU, ModelTag::DoublyStoch);
        std::ofstream f(fs::path(args.out_dir) / "win_rate.csv");
        harness::write_win_rate_csv(f, wr);
        outputs.push_back("win_rate.csv");
    }
    json paired = json::array();
    const std::pair<ModelTag, ModelTag> pairs[] = {
        {ModelTag::NN_Classic, ModelTag::NN_Classic_cheat},
        {ModelTag::RNN_Simple, ModelTag::RNN_Simple_cheat},
        {ModelTag::RNN_GRU, ModelTag::RNN_GRU_cheat},
        {ModelTag::RNN_LSTM, ModelTag::RNN_LSTM_cheat},
    };
    for (const auto& [base, cheat] : pairs) {
        if (!has(base) || !has(cheat)) continue;
        auto pc = harness::paired_model_comparison(cells, base, cheat);
        paired.push_back(json{{"base", to_string(base)},
                              {"cheat", to_string(cheat)},
                              {"median_diff", pc.median_diff},
                              {"wilcoxon_p", pc.p},
                              {"cheat_win_rate", pc.win_rate_b},
                              {"n", pc.n}});
    }
    if (!paired.empty()) {
        detail::write_text(fs::path(args.out_dir) / "paired_comparisons.json",
                           paired.dump(2) + "\n");
        outputs.push_back("paired_comparisons.json");
    }

    Manifest m;
    m.command = "backtest";
    m.config_path = args.plan_path;
    m.inputs = input_files;
    m.outputs = outputs;
    m.seed = plan.seed;
    detail::write_manifest(args.out_dir, m, started);

    int ok = 0, failed = 0;
    for (const auto& c : cells)
        (c.status == "ok" ? ok : failed) += 1;
    if (args.json_output)
        out << json{{"cells", cells.size()}, {"ok", ok}, {"failed_or_skipped", failed}}.dump()
            << "\n";
    else
        out << cells.size() << " cells (" << ok << " ok, " << failed << " failed/skipped)\n";
    return kExitOk;
}

struct DemoArgs {
    std::string out_dir;
    int workers = 0;
    std::uint64_t seed = 7;
};

/// End-to-end desk-scale pipeline: simulate three skills, run a reduced
/// factorial experiment, analyze it, and backtest the classical models plus
/// the GRU with and without the classical-forecast inputs.
inline int cmd_demo(const DemoArgs& args, std::ostream& out) {
    auto started = std::chrono::steady_clock::now();
    fs::create_directories(args.out_dir);
    fs::path dir(args.out_dir);
    fs::path series_dir = dir / "series";
    fs::create_directories(series_dir);

    // three synthetic skills at different volumes
    json sim_cfg{{"skills", json::array()}};
    const double peaks[] = {18.0, 9.0, 5.0};
    for (int k = 0; k < 3; ++k) {
        sim_cfg["skills"].push_back(json{{"name", "skill" + std::to_string(k + 1)},
                                         {"grid", {{"days_per_week", 5}, {"periods_per_day", 32}}},
                                         {"n_weeks", 7},
                                         {"seed", args.seed + k},
                                         {"peak_scale", peaks[k]},
                                         {"sigma_day", 0.3},
                                         {"rho_day", 0.7},
                                         {"sigma_resid", 0.5},
                                         {"rho_resid", 0.3},
                                         {"volume_scale", 1.0}});
    }
    detail::write_text(dir / "sim_config.json", sim_cfg.dump(2) + "\n");
    {
        SimulateArgs sa;
        sa.config_path = (dir / "sim_config.json").string();
        sa.out_path = (series_dir / "demo.csv").string();
        cmd_simulate(sa, out);
    }

    // reduced factorial: 2 x 2 x 2 over 3 splits and 5 validation days
    json doe_plan{{"factors",
                   {{"model.type", {"dense", "gru"}},
                    {"nlayers", {"1"}},
                    {"mixed.cheat", {"FALSE", "TRUE"}},
                    {"nnodes", {"25", "50"}},
                    {"kernel.L2.reg", {"0"}}}},
                  {"n_files", 5},
                  {"train_weeks", 5},
                  {"seed", args.seed},
                  {"max_epochs", 80}};
    detail::write_text(dir / "doe_plan.json", doe_plan.dump(2) + "\n");
    {
        DoeArgs da;
        da.plan_path = (dir / "doe_plan.json").string();
        da.series_dir = series_dir.string();
        da.out_dir = (dir / "doe").string();
        da.workers = args.workers;
        cmd_doe(da, out);
    }
    {
        AnalyzeArgs aa;
        aa.runs_path = (dir / "doe" / "runs.csv").string();
        aa.out_dir = (dir / "analysis").string();
        aa.svg = true;
        cmd_analyze(aa, out);
    }

    json bt_plan{{"n_forecast_days", 5},
                 {"train_weeks", 5},
                 {"seed", args.seed},
                 {"nn_layers", 1},
                 {"nn_nodes", 25},
                 {"nn_kernel_l2", 0.0},
                 {"max_epochs", 80},
                 {"models",
                  {"DoublyStoch", "Winters", "ARIMA", "RNN_GRU", "RNN_GRU_cheat"}}};
    detail::write_text(dir / "backtest_plan.json", bt_plan.dump(2) + "\n");
    {
        BacktestArgs ba;
        ba.plan_path = (dir / "backtest_plan.json").string();
        ba.series_dir = series_dir.string();
        ba.out_dir = (dir / "backtest").string();
        ba.workers = args.workers;
        cmd_backtest(ba, out);
    }

    Manifest m;
    m.command = "demo";
    m.outputs = {"series", "doe", "analysis", "backtest"};
    m.seed = args.seed;
    detail::write_manifest(dir, m, started);
    out << "demo complete under " << args.out_dir << "\n";
    return kExitOk;
}

// ---------------------------------------------------------------------------
// Entry point
// ---------------------------------------------------------------------------

inline int run(const std::vector<std::string>& argv_in, std::ostream& out = std::cout,
               std::ostream& err = std::cerr) {
    CLI::App app{"seasonal count-series forecasting toolkit"};
    app.set_version_flag("--version", std::string(kVersion));
    app.require_subcommand(1);

    SimulateArgs sim;
    auto* c_sim = app.add_subcommand("simulate", "generate synthetic skill series");
    c_sim->add_option("--config", sim.config_path, "sim config json")->required();
    c_sim->add_option("--out", sim.out_path, "output series csv")->required();
    std::uint64_t seed_opt = 0;
    auto* seed_flag = c_sim->add_option("--seed", seed_opt, "override the config seeds");

    FitArgs fit;
    auto* c_fit = app.add_subcommand("fit", "fit one model and forecast the next day");
    c_fit->add_option("--model", fit.model,
                      "doubly_stoch|winters|arima|dense|simple_rnn|gru|lstm")
        ->required();
    c_fit->add_option("--series", fit.series_path, "series csv")->required();
    c_fit->add_option("--skill", fit.skill, "skill id when the file holds several");
    c_fit->add_option("--out-dir", fit.out_dir, "output directory")->required();
    c_fit->add_option("--train-weeks", fit.train_weeks);
    c_fit->add_option("--target-day", fit.target_day, "default: day after the series ends");
    c_fit->add_flag("--cheat", fit.cheat, "feed classical forecasts to the network");
    c_fit->add_option("--seed", fit.seed);
    c_fit->add_option("--nlayers", fit.nlayers);
    c_fit->add_option("--nnodes", fit.nnodes);
    c_fit->add_option("--l2", fit.kernel_l2);
    c_fit->add_option("--max-epochs", fit.max_epochs);
    c_fit->add_option("--days-per-week", fit.days_per_week);
    c_fit->add_option("--periods", fit.periods_per_day);
    c_fit->add_option("--dump-features", fit.dump_features_path,
                      "write the encoded design matrix as csv");
    c_fit->add_flag("--winters-day-season", fit.winters_day_season,
                    "season the Winters baseline per day instead of per week");
    c_fit->add_flag("--json", fit.json_output);

    DoeArgs doe;
    auto* c_doe = app.add_subcommand("doe", "run the factorial designed experiment");
    c_doe->add_option("--plan", doe.plan_path, "plan json")->required();
    c_doe->add_option("--series-dir", doe.series_dir, "directory of series csv files")
        ->required();
    c_doe->add_option("--out-dir", doe.out_dir)->required();
    c_doe->add_option("--workers", doe.workers, "default: SEASONCAST_WORKERS or hardware");
    std::uint64_t doe_seed = 0;
    auto* doe_seed_flag = c_doe->add_option("--seed", doe_seed, "override the plan seed");
    c_doe->add_flag("--json", doe.json_output);

    AnalyzeArgs an;
    auto* c_an = app.add_subcommand("analyze", "analyze a runs table");
    c_an->add_option("--runs", an.runs_path, "runs.csv from doe")->required();
    c_an->add_option("--out-dir", an.out_dir)->required();
    c_an->add_flag("--svg", an.svg, "emit profile.svg");
    c_an->add_flag("--json", an.json_output);

    BacktestArgs bt;
    auto* c_bt = app.add_subcommand("backtest", "rolling day-ahead backtest");
    c_bt->add_option("--plan", bt.plan_path, "plan json")->required();
    c_bt->add_option("--series-dir", bt.series_dir)->required();
    c_bt->add_option("--out-dir", bt.out_dir)->required();
    c_bt->add_option("--workers", bt.workers);
    std::uint64_t bt_seed = 0;
    auto* bt_seed_flag = c_bt->add_option("--seed", bt_seed, "override the plan seed");
    c_bt->add_flag("--json", bt.json_output);

    DemoArgs demo;
    auto* c_demo = app.add_subcommand("demo", "end-to-end pipeline at desk scale");
    c_demo->add_option("--out-dir", demo.out_dir)->required();
    c_demo->add_option("--workers", demo.workers);
    c_demo->add_option("--seed", demo.seed);

    std::vector<const char*> argv;
    argv.push_back("seasoncast");
    for (const auto& a : argv_in) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (*c_sim) {
            if (seed_flag->count() > 0) sim.seed_override = seed_opt;
            return cmd_simulate(sim, out);
        }
        if (*c_fit) return cmd_fit(fit, out);
        if (*c_doe) {
            if (doe_seed_flag->count() > 0) doe.seed_override = doe_seed;
            return cmd_doe(doe, out);
        }
        if (*c_an) return cmd_analyze(an, out);
        if (*c_bt) {
            if (bt_seed_flag->count() > 0) bt.seed_override = bt_seed;
            return cmd_backtest(bt, out);
        }
        if (*c_demo) return cmd_demo(demo, out);
    } catch (const CoverageError& e) {
        err << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const NumericError& e) {
        err << "numerical failure: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const nlohmann::json::exception& e) {
        err << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::invalid_argument& e) {
        err << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::domain_error& e) {
        err << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitNumeric;
    }
    return kExitConfig;
}

}  // namespace seasoncast::cli
