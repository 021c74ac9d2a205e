// Command-line front end. Every subcommand resolves a RunConfig from an
// optional JSON config file plus flag overrides, then runs the pipeline up to
// its stage and writes that stage's artifacts.

#include <cstdio>
#include <exception>
#include <filesystem>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include <cholcast/cholcast.hpp>

namespace {

using namespace cholcast;

// Flags shared by the pipeline subcommands. Values here override the config
// file only when the flag was actually given.
struct CommonFlags {
    std::string config_path;
    std::string data_dir;
    std::string out_dir;
    std::string schedule;
    std::string leakage;
    std::string horizons;
    uint64_t seed = 0;
    int trials = 0;

    CLI::Option* data_opt = nullptr;
    CLI::Option* out_opt = nullptr;
    CLI::Option* schedule_opt = nullptr;
    CLI::Option* leakage_opt = nullptr;
    CLI::Option* horizons_opt = nullptr;
    CLI::Option* seed_opt = nullptr;
    CLI::Option* trials_opt = nullptr;
};

void add_common_flags(CLI::App* sub, CommonFlags& f) {
    sub->add_option("-c,--config", f.config_path, "JSON config file; flags override its values");
    f.data_opt = sub->add_option("-d,--data", f.data_dir, "directory with the input files");
    f.out_opt = sub->add_option("-o,--out", f.out_dir, "directory for output artifacts");
    f.schedule_opt = sub->add_option("--schedule", f.schedule,
                                     "fold schedule JSON file, or 'default'");
    f.leakage_opt = sub->add_option("--leakage", f.leakage,
                                    "training-row filter: label (default) or anchor");
    f.horizons_opt = sub->add_option("--horizons", f.horizons,
                                     "comma-separated horizons (1..4), or 'all'");
    f.seed_opt = sub->add_option("-s,--seed", f.seed, "master seed");
    f.trials_opt = sub->add_option("-t,--trials", f.trials, "tuning trials per horizon (0 = off)");
}

std::vector<int> parse_horizons_flag(const std::string& s) {
    if (s == "all") return {1, 2, 3, 4};
    std::vector<int> out;
    size_t start = 0;
    while (start <= s.size()) {
        const size_t pos = s.find(',', start);
        const std::string tok = s.substr(start, pos == std::string::npos ? pos : pos - start);
        int v = 0;
        auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
        if (ec != std::errc() || p != tok.data() + tok.size())
            fail_usage("BadHorizons: '" + s + "' (expected e.g. '1,2' or 'all')");
        out.push_back(v);
        if (pos == std::string::npos) break;
        start = pos + 1;
    }
    return out;
}

pipeline::RunConfig resolve_config(const CommonFlags& f) {
    pipeline::RunConfig cfg;
    if (!f.config_path.empty()) {
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(csv::read_file(f.config_path));
        } catch (const nlohmann::json::exception& e) {
            fail_usage("BadConfig: cannot parse '" + f.config_path + "': " + e.what());
        }
        cfg = pipeline::config_from_json(j);
    }
    if (f.data_opt->count()) cfg.data_dir = f.data_dir;
    if (f.out_opt->count()) cfg.out_dir = f.out_dir;
    if (f.schedule_opt->count()) cfg.schedule_path = f.schedule == "default" ? "" : f.schedule;
    if (f.leakage_opt->count()) cfg.leakage = cv::parse_leakage(f.leakage);
    if (f.horizons_opt->count()) cfg.horizons = parse_horizons_flag(f.horizons);
    if (f.seed_opt->count()) cfg.seed = f.seed;
    if (f.trials_opt->count()) cfg.n_trials = f.trials;
    return cfg;
}

void note_warnings(const pipeline::RunResult& res) {
    for (const std::string& w : res.notes) std::fprintf(stderr, "note: %s\n", w.c_str());
    for (const std::string& w : res.prep_warnings.notes) std::fprintf(stderr, "note: %s\n", w.c_str());
    if (res.prep_warnings.clamped_deltas > 0)
        std::fprintf(stderr, "note: clamped %zu negative case/death deltas to zero\n",
                     res.prep_warnings.clamped_deltas);
}

void run_stage(const CommonFlags& f, pipeline::Stage stage, bool reuse_params,
               bool reuse_selection) {
    const pipeline::RunConfig cfg = resolve_config(f);
    pipeline::RunOptions opt;
    opt.upto = stage;
    opt.reuse_params = reuse_params;
    opt.reuse_selection = reuse_selection;
    const pipeline::RunResult res = pipeline::run_pipeline(cfg, opt);
    note_warnings(res);
    pipeline::write_outputs(cfg, res, stage);
}

int dispatch(int argc, char** argv) {
    CLI::App app{"case-count forecasting from surveillance, rainfall, and conflict data"};
    app.require_subcommand(1);

    // simulate
    auto* sim = app.add_subcommand("simulate", "generate a synthetic input data set");
    std::string sim_out = ".";
    simulate::SimConfig sim_cfg;
    sim->add_option("-o,--out", sim_out, "directory for the generated files");
    sim->add_option("-s,--seed", sim_cfg.seed, "generator seed");
    sim->add_option("--govs", sim_cfg.n_govs, "number of governorates");
    sim->add_option("--days", sim_cfg.n_days, "number of days");
    sim->callback([&] {
        const simulate::SimData data = simulate::simulate(sim_cfg);
        std::filesystem::create_directories(sim_out);
        csv::write_file(sim_out + "/cholera.csv", ingest::write_cholera(data.reports));
        csv::write_file(sim_out + "/rainfall.csv", ingest::write_rainfall(data.rain));
        csv::write_file(sim_out + "/conflict.csv", ingest::write_conflict(data.conflict));
        csv::write_file(sim_out + "/gridmap.csv", ingest::write_gridmap(data.gridmap));
        csv::write_file(sim_out + "/governorates.json", ingest::write_registry(data.registry));
        std::printf("wrote 5 input files to %s\n", sim_out.c_str());
    });

    struct StageCmd {
        const char* name;
        const char* help;
        pipeline::Stage stage;
        bool reuse_params;
        bool reuse_selection;
    };
    // A stage never reuses its own artifact, only those of earlier stages.
    const StageCmd stage_cmds[] = {
        {"prepare", "build the per-governorate daily panel (panel.csv)", pipeline::Stage::prepare,
         false, false},
        {"features", "extract the rolling-window feature matrix (features.csv)",
         pipeline::Stage::features, false, false},
        {"tune", "search gbtree hyperparameters per horizon (trials.json)", pipeline::Stage::tune,
         false, false},
        {"select", "run the feature selection funnel (selection_report.json)",
         pipeline::Stage::select, true, false},
        {"train", "train final per-horizon models (models/)", pipeline::Stage::train, true, true},
        {"evaluate", "score models on cross-validation and holdout (metrics.json)",
         pipeline::Stage::evaluate, true, true},
        {"forecast", "predict every anchor date (forecasts.csv)", pipeline::Stage::forecast, true,
         true},
        {"run", "full pipeline, recomputing everything", pipeline::Stage::run, false, false},
    };
    std::vector<CommonFlags> flags(std::size(stage_cmds) + 1);
    for (size_t i = 0; i < std::size(stage_cmds); ++i) {
        const StageCmd& sc = stage_cmds[i];
        auto* sub = app.add_subcommand(sc.name, sc.help);
        CommonFlags& f = flags[i];
        add_common_flags(sub, f);
        sub->callback([&f, sc] { run_stage(f, sc.stage, sc.reuse_params, sc.reuse_selection); });
    }

    // plot-data reuses forecasts.csv when present, otherwise computes it.
    auto* plot = app.add_subcommand("plot-data", "per-governorate forecast series for plotting");
    CommonFlags& pf = flags.back();
    add_common_flags(plot, pf);
    plot->callback([&pf] {
        const pipeline::RunConfig cfg = resolve_config(pf);
        const std::string fpath = cfg.out_dir + "/forecasts.csv";
        std::vector<pipeline::ForecastRow> rows;
        if (std::filesystem::exists(fpath)) {
            rows = pipeline::parse_forecasts_csv(fpath);
        } else {
            pipeline::RunOptions opt;
            opt.upto = pipeline::Stage::forecast;
            opt.reuse_params = true;
            opt.reuse_selection = true;
            const pipeline::RunResult res = pipeline::run_pipeline(cfg, opt);
            note_warnings(res);
            for (const pipeline::HorizonOutcome& h : res.horizons)
                rows.insert(rows.end(), h.forecasts.begin(), h.forecasts.end());
        }
        pipeline::write_plot_data(rows, cfg.out_dir + "/plot_data");
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return dispatch(argc, argv);
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return static_cast<int>(e.kind());
    } catch (const std::exception& e) {
        std::fprintf(stderr, "internal error: %s\n", e.what());
        return 3;
    }
}
