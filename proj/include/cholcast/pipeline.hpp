#pragma once

// End-to-end orchestration: load inputs, build the panel, extract features,
// run per-horizon selection + tuning + evaluation, and write every artifact.
// One seed fans out to fixed-label streams, so a config determines every
// output byte.

#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "baseline.hpp"
#include "core.hpp"
#include "csv.hpp"
#include "cv.hpp"
#include "featurex.hpp"
#include "gbtree.hpp"
#include "ingest.hpp"
#include "prep.hpp"
#include "rng.hpp"
#include "select.hpp"
#include "simulate.hpp"
#include "tpe.hpp"

namespace cholcast::pipeline {

using nlohmann::json;
using nlohmann::ordered_json;

// Pipeline stages in execution order. A subcommand runs everything up to and
// including its stage.
enum class Stage { prepare, features, tune, select, train, evaluate, forecast, run };

struct RunConfig {
    std::string data_dir = ".";
    std::map<std::string, std::string> files;  // per-file path overrides by key
    std::string out_dir = "out";
    uint64_t seed = 42;
    std::vector<int> horizons = {1, 2, 3, 4};
    int n_trials = 25;  // 0 disables tuning; gbt base params are used as-is
    cv::Leakage leakage = cv::Leakage::label;
    double q_cut = select::kQCut;
    double corr_threshold = select::kCorrCut;
    size_t cap = select::kForwardCap;
    double min_delta = select::kMinDelta;
    std::string schedule_path;  // empty means the built-in default schedule
    gbtree::GbtParams gbt;      // defaults plus config overrides
    tpe::TpeConfig tpe_cfg;
    tpe::SearchSpace space = tpe::default_gbt_space();
};

// ---------------------------------------------------------------------------
// Config parsing
// ---------------------------------------------------------------------------

namespace detail {

inline void check_keys(const json& j, const std::vector<std::string>& allowed,
                       const std::string& context) {
    for (const auto& [key, value] : j.items()) {
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
            fail_usage("UnknownConfigKey: '" + key + "' in " + context);
    }
}

inline const std::array<std::pair<std::string, std::string>, 5>& input_files() {
    static const std::array<std::pair<std::string, std::string>, 5> f = {{
        {"cholera", "cholera.csv"},
        {"conflict", "conflict.csv"},
        {"gridmap", "gridmap.csv"},
        {"rainfall", "rainfall.csv"},
        {"registry", "governorates.json"},
    }};
    return f;
}

}  // namespace detail

inline std::string input_path(const RunConfig& cfg, const std::string& key) {
    auto it = cfg.files.find(key);
    if (it != cfg.files.end()) return it->second;
    for (const auto& [k, name] : detail::input_files())
        if (k == key) return cfg.data_dir + "/" + name;
    fail_internal("UnknownInputKey: '" + key + "'");
}

inline gbtree::GbtParams apply_gbt_param(gbtree::GbtParams p, const std::string& name, double v) {
    if (name == "eta") p.eta = v;
    else if (name == "n_rounds") p.n_rounds = static_cast<int>(std::llround(v));
    else if (name == "max_depth") p.max_depth = static_cast<int>(std::llround(v));
    else if (name == "min_child_weight") p.min_child_weight = v;
    else if (name == "lambda") p.lambda = v;
    else if (name == "gamma") p.gamma = v;
    else if (name == "subsample") p.subsample = v;
    else if (name == "colsample") p.colsample = v;
    else fail_usage("UnknownGbtParam: '" + name + "'");
    return p;
}

inline tpe::ParamType parse_param_type(const std::string& s) {
    if (s == "uniform") return tpe::ParamType::uniform;
    if (s == "log_uniform") return tpe::ParamType::log_uniform;
    if (s == "int_uniform") return tpe::ParamType::int_uniform;
    fail_usage("BadParamType: '" + s + "' (expected uniform|log_uniform|int_uniform)");
}

inline const char* param_type_name(tpe::ParamType t) {
    switch (t) {
        case tpe::ParamType::uniform: return "uniform";
        case tpe::ParamType::log_uniform: return "log_uniform";
        case tpe::ParamType::int_uniform: return "int_uniform";
    }
    fail_internal("BadParamType: unknown enum value");
}

// Strict parse: unknown keys are usage errors so typos do not silently fall
// back to defaults.
inline RunConfig config_from_json(const json& j) {
    RunConfig cfg;
    if (!j.is_object()) fail_usage("BadConfig: top level must be a JSON object");
    detail::check_keys(j, {"data_dir", "files", "out_dir", "seed", "horizons", "n_trials", "leakage",
                           "q_cut", "corr_threshold", "cap", "min_delta", "schedule", "gbt", "tpe"},
                       "config");
    if (j.contains("data_dir")) cfg.data_dir = j.at("data_dir").get<std::string>();
    if (j.contains("out_dir")) cfg.out_dir = j.at("out_dir").get<std::string>();
    if (j.contains("seed")) cfg.seed = j.at("seed").get<uint64_t>();
    if (j.contains("n_trials")) cfg.n_trials = j.at("n_trials").get<int>();
    if (j.contains("leakage")) cfg.leakage = cv::parse_leakage(j.at("leakage").get<std::string>());
    if (j.contains("q_cut")) cfg.q_cut = j.at("q_cut").get<double>();
    if (j.contains("corr_threshold")) cfg.corr_threshold = j.at("corr_threshold").get<double>();
    if (j.contains("cap")) cfg.cap = j.at("cap").get<size_t>();
    if (j.contains("min_delta")) cfg.min_delta = j.at("min_delta").get<double>();
    if (j.contains("schedule")) {
        const std::string s = j.at("schedule").get<std::string>();
        cfg.schedule_path = s == "default" ? "" : s;
    }
    if (j.contains("files")) {
        for (const auto& [key, value] : j.at("files").items()) {
            bool known = false;
            for (const auto& [k, name] : detail::input_files()) known = known || k == key;
            if (!known) fail_usage("UnknownConfigKey: files.'" + key + "'");
            cfg.files[key] = value.get<std::string>();
        }
    }
    if (j.contains("horizons")) {
        const json& h = j.at("horizons");
        if (h.is_string() && h.get<std::string>() == "all") {
            cfg.horizons = {1, 2, 3, 4};
        } else if (h.is_array()) {
            cfg.horizons.clear();
            for (const json& v : h) cfg.horizons.push_back(v.get<int>());
        } else {
            fail_usage("BadConfig: horizons must be \"all\" or an array of 1..4");
        }
    }
    if (j.contains("gbt"))
        for (const auto& [key, value] : j.at("gbt").items())
            cfg.gbt = apply_gbt_param(cfg.gbt, key, value.get<double>());
    if (j.contains("tpe")) {
        const json& t = j.at("tpe");
        detail::check_keys(t, {"n_startup", "gamma", "n_candidates", "space"}, "config.tpe");
        if (t.contains("n_startup")) cfg.tpe_cfg.n_startup = t.at("n_startup").get<int>();
        if (t.contains("gamma")) cfg.tpe_cfg.gamma = t.at("gamma").get<double>();
        if (t.contains("n_candidates")) cfg.tpe_cfg.n_candidates = t.at("n_candidates").get<int>();
        if (t.contains("space")) {
            cfg.space.dims.clear();
            for (const json& d : t.at("space")) {
                detail::check_keys(d, {"name", "type", "lo", "hi"}, "config.tpe.space");
                tpe::ParamSpec ps;
                ps.name = d.at("name").get<std::string>();
                ps.type = parse_param_type(d.at("type").get<std::string>());
                ps.lo = d.at("lo").get<double>();
                ps.hi = d.at("hi").get<double>();
                cfg.space.dims.push_back(ps);
            }
        }
    }
    return cfg;
}

inline void validate_config(const RunConfig& cfg) {
    if (cfg.horizons.empty()) fail_usage("BadConfig: no horizons selected");
    std::vector<int> h = cfg.horizons;
    std::sort(h.begin(), h.end());
    for (size_t i = 0; i < h.size(); ++i) {
        if (h[i] < 1 || h[i] > prep::kMaxHorizon)
            fail_usage("BadConfig: horizon must be 1..4, got " + std::to_string(h[i]));
        if (i > 0 && h[i] == h[i - 1]) fail_usage("BadConfig: duplicate horizon " + std::to_string(h[i]));
    }
    if (cfg.n_trials < 0) fail_usage("BadConfig: n_trials must be >= 0");
    if (!(cfg.q_cut > 0.0 && cfg.q_cut <= 1.0)) fail_usage("BadConfig: q_cut must be in (0, 1]");
    if (!(cfg.corr_threshold > 0.0 && cfg.corr_threshold <= 1.0))
        fail_usage("BadConfig: corr_threshold must be in (0, 1]");
    if (cfg.cap < 1) fail_usage("BadConfig: cap must be >= 1");
    if (cfg.min_delta < 0.0) fail_usage("BadConfig: min_delta must be >= 0");
    if (cfg.tpe_cfg.n_startup < 1) fail_usage("BadConfig: tpe.n_startup must be >= 1");
    if (!(cfg.tpe_cfg.gamma > 0.0 && cfg.tpe_cfg.gamma < 1.0))
        fail_usage("BadConfig: tpe.gamma must be in (0, 1)");
    if (cfg.tpe_cfg.n_candidates < 1) fail_usage("BadConfig: tpe.n_candidates must be >= 1");
    gbtree::validate(cfg.gbt);
    cfg.space.validate();
    gbtree::GbtParams probe = cfg.gbt;
    for (const tpe::ParamSpec& d : cfg.space.dims) probe = apply_gbt_param(probe, d.name, d.lo);
}

// ---------------------------------------------------------------------------
// Schedule resolution
// ---------------------------------------------------------------------------

// Schedule file: {"base_train": [start, end], "folds": [[start, end], ...],
// "holdout_start": date, "holdout_end": [4 dates]?}. Omitted holdout ends
// default to last data date minus 14 * horizon.
inline cv::FoldSchedule load_schedule_file(const std::string& path, Date last_data_date) {
    json j;
    try {
        j = json::parse(csv::read_file(path));
    } catch (const json::exception& e) {
        fail_data("BadSchedule: cannot parse '" + path + "': " + e.what());
    }
    detail::check_keys(j, {"base_train", "folds", "holdout_start", "holdout_end"}, path);
    cv::FoldSchedule sch;
    auto range = [](const json& a) {
        return DateRange{Date::parse(a.at(0).get<std::string>()), Date::parse(a.at(1).get<std::string>())};
    };
    sch.base_train = range(j.at("base_train"));
    for (const json& f : j.at("folds")) sch.folds.push_back(range(f));
    sch.holdout_start = Date::parse(j.at("holdout_start").get<std::string>());
    if (j.contains("holdout_end")) {
        const json& he = j.at("holdout_end");
        if (he.size() != prep::kMaxHorizon) fail_data("BadSchedule: holdout_end needs 4 dates");
        for (int k = 0; k < prep::kMaxHorizon; ++k)
            sch.holdout_end[static_cast<size_t>(k)] = Date::parse(he.at(static_cast<size_t>(k)).get<std::string>());
    } else {
        for (int k = 1; k <= prep::kMaxHorizon; ++k)
            sch.holdout_end[static_cast<size_t>(k - 1)] = last_data_date - prep::kHorizonDays * k;
    }
    sch.validate();
    return sch;
}

inline cv::FoldSchedule resolve_schedule(const RunConfig& cfg, Date last_data_date) {
    if (cfg.schedule_path.empty()) return cv::default_schedule(last_data_date);
    return load_schedule_file(cfg.schedule_path, last_data_date);
}

// Canonical settings snapshot embedded in reusable artifacts; stage reruns
// only trust an artifact whose snapshot matches exactly.
inline ordered_json canonical_config(const RunConfig& cfg, const cv::FoldSchedule& sch) {
    ordered_json c;
    ordered_json inputs;
    for (const auto& [key, name] : detail::input_files()) inputs[key] = input_path(cfg, key);
    c["inputs"] = inputs;
    c["seed"] = cfg.seed;
    std::vector<int> h = cfg.horizons;
    std::sort(h.begin(), h.end());
    c["horizons"] = h;
    c["n_trials"] = cfg.n_trials;
    c["leakage"] = cfg.leakage == cv::Leakage::label ? "label" : "anchor";
    c["q_cut"] = cfg.q_cut;
    c["corr_threshold"] = cfg.corr_threshold;
    c["cap"] = cfg.cap;
    c["min_delta"] = cfg.min_delta;
    ordered_json schedule;
    schedule["base_train"] = {sch.base_train.start.str(), sch.base_train.end.str()};
    ordered_json folds = ordered_json::array();
    for (const DateRange& f : sch.folds) folds.push_back({f.start.str(), f.end.str()});
    schedule["folds"] = folds;
    schedule["holdout_start"] = sch.holdout_start.str();
    ordered_json ends = ordered_json::array();
    for (const Date& d : sch.holdout_end) ends.push_back(d.str());
    schedule["holdout_end"] = ends;
    c["schedule"] = schedule;
    ordered_json gbt;
    gbt["eta"] = cfg.gbt.eta;
    gbt["n_rounds"] = cfg.gbt.n_rounds;
    gbt["max_depth"] = cfg.gbt.max_depth;
    gbt["min_child_weight"] = cfg.gbt.min_child_weight;
    gbt["lambda"] = cfg.gbt.lambda;
    gbt["gamma"] = cfg.gbt.gamma;
    gbt["subsample"] = cfg.gbt.subsample;
    gbt["colsample"] = cfg.gbt.colsample;
    c["gbt"] = gbt;
    ordered_json tpe_j;
    tpe_j["n_startup"] = cfg.tpe_cfg.n_startup;
    tpe_j["gamma"] = cfg.tpe_cfg.gamma;
    tpe_j["n_candidates"] = cfg.tpe_cfg.n_candidates;
    ordered_json space = ordered_json::array();
    for (const tpe::ParamSpec& d : cfg.space.dims) {
        ordered_json dim;
        dim["name"] = d.name;
        dim["type"] = param_type_name(d.type);
        dim["lo"] = d.lo;
        dim["hi"] = d.hi;
        space.push_back(dim);
    }
    tpe_j["space"] = space;
    c["tpe"] = tpe_j;
    return c;
}

// ---------------------------------------------------------------------------
// Data loading
// ---------------------------------------------------------------------------

struct LoadedData {
    ingest::Registry registry;
    std::vector<ingest::CholeraReport> reports;
    std::map<std::string, ingest::DailySeries> rainfall;
    std::map<std::string, ingest::DailySeries> conflict;
    std::vector<std::string> warnings;
};

inline LoadedData load_data(const RunConfig& cfg) {
    LoadedData d;
    d.registry = ingest::load_registry(csv::read_file(input_path(cfg, "registry")),
                                       input_path(cfg, "registry"));
    d.reports = ingest::parse_cholera(csv::parse_file(input_path(cfg, "cholera")),
                                      input_path(cfg, "cholera"), &d.warnings);
    const auto rain_obs = ingest::parse_rainfall(csv::parse_file(input_path(cfg, "rainfall")),
                                                 input_path(cfg, "rainfall"), &d.warnings);
    const auto events = ingest::parse_conflict(csv::parse_file(input_path(cfg, "conflict")),
                                               input_path(cfg, "conflict"), &d.warnings);
    const auto gridmap = ingest::parse_gridmap(csv::parse_file(input_path(cfg, "gridmap")),
                                               input_path(cfg, "gridmap"), &d.warnings);
    ingest::validate_governorates(d.reports, events, gridmap, d.registry);
    d.rainfall = ingest::aggregate_rainfall(rain_obs, gridmap);
    d.conflict = ingest::aggregate_conflict(events);
    return d;
}

// ---------------------------------------------------------------------------
// Results
// ---------------------------------------------------------------------------

struct ForecastRow {
    std::string gov;
    Date date;
    int horizon = 1;
    double y_true = 0.0;  // NaN when the label window runs past the data
    double y_pred = 0.0;
    std::string split;  // train | cv | holdout | future
};

struct HorizonOutcome {
    int horizon = 1;
    cv::SplitRows rows;

    // Selection funnel (empty when reused from a previous run's artifacts).
    std::vector<select::ColumnTest> tests;
    std::vector<size_t> significant;
    std::vector<select::DroppedPair> dropped;
    std::vector<size_t> decorrelated;
    std::vector<size_t> ranked;
    std::vector<size_t> selected;
    std::vector<std::string> selected_ids;
    std::vector<double> forward_cv;
    bool selection_reused = false;

    // Tuning.
    gbtree::GbtParams params;
    tpe::OptResult trials;  // empty trial list when tuning was skipped or reused
    bool params_reused = false;

    // Evaluation.
    bool evaluated = false;
    double gbt_cv = 0.0, gbt_holdout = 0.0;
    double lin_cv = 0.0, lin_holdout = 0.0;
    std::vector<double> gbt_fold_mse, lin_fold_mse;
    std::vector<size_t> skipped_folds;
    size_t n_train = 0, n_holdout = 0;
    gbtree::GbtModel final_gbt;
    baseline::LinearModel final_lin;

    std::vector<ForecastRow> forecasts;
};

struct RunResult {
    prep::Panel panel;
    prep::PrepWarnings prep_warnings;
    std::vector<std::string> notes;  // reuse decisions, input warnings
    std::vector<featurex::FeatureDescriptor> descriptors;
    Matrix features;
    cv::FoldSchedule schedule;
    ordered_json config;  // canonical snapshot embedded in artifacts
    std::vector<HorizonOutcome> horizons;
};

struct PipelineHooks {
    // Marks every panel row read while selecting features or tuning
    // hyperparameters; tests assert no holdout row is ever touched there.
    AccessLog* selection_access = nullptr;
};

// A stage may reuse artifacts produced by earlier stages, never its own:
// tune recomputes trials, select may reuse trials, later stages may reuse
// both. `run` always recomputes everything.
struct RunOptions {
    Stage upto = Stage::run;
    bool reuse_params = false;     // accept a matching trials.json
    bool reuse_selection = false;  // accept a matching selection_report.json
};

namespace detail {

struct GbtRegressor : cv::Regressor {
    gbtree::GbtModel model;
    std::vector<double> predict(const Matrix& x) const override { return model.predict(x); }
};

struct LinRegressor : cv::Regressor {
    baseline::LinearModel model;
    std::vector<double> predict(const Matrix& x) const override { return model.predict(x); }
};

struct ReuseCache {
    std::map<int, gbtree::GbtParams> tuned;
    std::map<int, std::vector<std::string>> selected;
};

// Best-effort artifact reuse: a missing, unparsable, or config-mismatched
// artifact silently falls back to recomputation.
inline ReuseCache load_reuse_cache(const RunConfig& cfg, const ordered_json& canonical,
                                   bool want_params, bool want_selection,
                                   std::vector<std::string>* notes) {
    ReuseCache cache;
    const std::string trials_path = cfg.out_dir + "/trials.json";
    if (want_params && std::filesystem::exists(trials_path)) {
        try {
            const ordered_json j = ordered_json::parse(csv::read_file(trials_path));
            if (j.at("config") == canonical) {
                for (const auto& [key, entry] : j.at("horizons").items()) {
                    gbtree::GbtParams p;
                    for (const auto& [name, value] : entry.at("best").at("params").items())
                        p = apply_gbt_param(p, name, value.get<double>());
                    cache.tuned[std::stoi(key)] = p;
                }
                notes->push_back("reusing tuned parameters from " + trials_path);
            } else {
                notes->push_back("ignoring " + trials_path + " (settings differ)");
            }
        } catch (const std::exception& e) {
            notes->push_back("ignoring " + trials_path + " (" + std::string(e.what()) + ")");
        }
    }
    const std::string sel_path = cfg.out_dir + "/selection_report.json";
    if (want_selection && std::filesystem::exists(sel_path)) {
        try {
            const ordered_json j = ordered_json::parse(csv::read_file(sel_path));
            if (j.at("config") == canonical) {
                for (const auto& [key, entry] : j.at("horizons").items())
                    cache.selected[std::stoi(key)] =
                        entry.at("selected").get<std::vector<std::string>>();
                notes->push_back("reusing selected features from " + sel_path);
            } else {
                notes->push_back("ignoring " + sel_path + " (settings differ)");
            }
        } catch (const std::exception& e) {
            notes->push_back("ignoring " + sel_path + " (" + std::string(e.what()) + ")");
        }
    }
    return cache;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// The pipeline
// ---------------------------------------------------------------------------

namespace detail {

inline RunResult run_pipeline_impl(const RunConfig& cfg, const RunOptions& opt,
                                   const PipelineHooks* hooks, std::string& stage) {
    RunResult res;

    LoadedData data = load_data(cfg);
    res.notes = data.warnings;
    stage = "prepare";
    res.panel = prep::assemble_panel(
        prep::build_frames(data.reports, data.rainfall, data.conflict, data.registry, &res.prep_warnings));
    if (opt.upto == Stage::prepare) return res;

    stage = "features";
    res.descriptors = featurex::default_descriptors();
    res.features = featurex::extract_features(res.panel.frames, res.panel.samples, res.descriptors);
    if (opt.upto == Stage::features) return res;

    stage = "schedule";
    const Date last_data_date = res.panel.frames.front().end();
    res.schedule = resolve_schedule(cfg, last_data_date);
    res.config = canonical_config(cfg, res.schedule);

    ReuseCache cache;
    if (opt.reuse_params || opt.reuse_selection)
        cache = load_reuse_cache(cfg, res.config, opt.reuse_params, opt.reuse_selection, &res.notes);

    std::map<std::string, size_t> id_to_col;
    for (size_t j = 0; j < res.descriptors.size(); ++j) id_to_col[res.descriptors[j].id()] = j;

    AccessLog* log = hooks ? hooks->selection_access : nullptr;
    std::vector<int> horizons = cfg.horizons;
    std::sort(horizons.begin(), horizons.end());

    for (const int k : horizons) {
        HorizonOutcome h;
        h.horizon = k;
        const std::string hk = std::to_string(k);
        h.rows = cv::split_rows(res.panel, res.schedule, k, cfg.leakage);
        const std::vector<double>& y = res.panel.targets[static_cast<size_t>(k - 1)];

        const bool have_params = cache.tuned.count(k) > 0;
        const bool have_sel = cache.selected.count(k) > 0;

        // Association tests and pruning happen on the selection region: every
        // pre-holdout anchor eligible to train the final model.
        Matrix x_sel;
        std::vector<double> y_sel;
        if (!have_params || !have_sel) {
            stage = "significance_filter (horizon " + hk + ")";
            std::vector<size_t> all_cols(res.features.n_cols);
            for (size_t j = 0; j < all_cols.size(); ++j) all_cols[j] = j;
            x_sel = gather(res.features, h.rows.final_train, all_cols, log);
            y_sel = gather_vec(y, h.rows.final_train);
            h.tests = select::significance_tests(x_sel, y_sel);
            h.significant = select::significant_columns(h.tests, cfg.q_cut);
            stage = "correlation_prune (horizon " + hk + ")";
            h.decorrelated = select::correlation_prune(x_sel, h.significant, cfg.corr_threshold, &h.dropped);
        }

        if (have_params) {
            h.params = cache.tuned.at(k);
            h.params_reused = true;
        } else {
            h.params = cfg.gbt;
            stage = "tune (horizon " + hk + ")";
            if (cfg.n_trials > 0 && !h.decorrelated.empty()) {
                const std::vector<cv::FoldData> folds =
                    cv::build_fold_data(res.features, y, h.rows, h.decorrelated, log);
                size_t trial_no = 0;
                const tpe::Objective objective = [&](const std::vector<double>& pv) {
                    gbtree::GbtParams p = cfg.gbt;
                    for (size_t d = 0; d < cfg.space.dims.size(); ++d)
                        p = apply_gbt_param(p, cfg.space.dims[d].name, pv[d]);
                    std::vector<double> fold_mse;
                    for (size_t f = 0; f < folds.size(); ++f) {
                        p.seed = derive_seed(cfg.seed, "tune.h" + hk, trial_no * 64 + f);
                        const gbtree::GbtModel m = gbtree::fit(folds[f].train_x, folds[f].train_y, p);
                        fold_mse.push_back(cv::mse(m.predict(folds[f].val_x), folds[f].val_y));
                    }
                    ++trial_no;
                    return cv::cv_rmse(fold_mse);
                };
                h.trials = tpe::optimize(cfg.space, objective, cfg.n_trials,
                                         derive_seed(cfg.seed, "tune.h" + hk), cfg.tpe_cfg);
                const tpe::Trial& best = h.trials.best();
                for (size_t d = 0; d < cfg.space.dims.size(); ++d)
                    h.params = apply_gbt_param(h.params, cfg.space.dims[d].name, best.params[d]);
            }
        }
        if (opt.upto == Stage::tune) {
            res.horizons.push_back(std::move(h));
            continue;
        }

        if (have_sel) {
            h.selected_ids = cache.selected.at(k);
            for (const std::string& id : h.selected_ids) {
                auto it = id_to_col.find(id);
                if (it == id_to_col.end())
                    fail_data("UnknownFeatureId: '" + id + "' in reused selection report");
                h.selected.push_back(it->second);
            }
            h.selection_reused = true;
        } else if (!h.decorrelated.empty()) {
            stage = "importance_rank (horizon " + hk + ")";
            gbtree::GbtParams rank_params = h.params;
            rank_params.seed = derive_seed(cfg.seed, "rank.h" + hk);
            h.ranked = select::importance_rank(x_sel, y_sel, h.decorrelated, rank_params);
            stage = "forward_select (horizon " + hk + ")";
            const std::vector<cv::FoldData> folds =
                cv::build_fold_data(res.features, y, h.rows, h.ranked, log);
            const select::ForwardResult fr = select::forward_select(
                folds, h.ranked, h.params, derive_seed(cfg.seed, "forward.h" + hk), cfg.cap,
                cfg.min_delta);
            h.selected = fr.selected;
            h.forward_cv = fr.cv_trace;
            for (const size_t c : h.selected) h.selected_ids.push_back(res.descriptors[c].id());
        }
        if (opt.upto == Stage::select) {
            res.horizons.push_back(std::move(h));
            continue;
        }

        // Final evaluation reads the holdout region; the selection access log
        // is deliberately not passed from here on.
        stage = "evaluate (horizon " + hk + ")";
        const gbtree::GbtParams tuned = h.params;
        const cv::Trainer gbt_trainer = [&tuned](const Matrix& x, const std::vector<double>& ty,
                                                 uint64_t seed) -> std::unique_ptr<cv::Regressor> {
            auto r = std::make_unique<GbtRegressor>();
            gbtree::GbtParams p = tuned;
            p.seed = seed;
            r->model = gbtree::fit(x, ty, p);
            return r;
        };
        const cv::Trainer lin_trainer = [](const Matrix& x, const std::vector<double>& ty,
                                           uint64_t) -> std::unique_ptr<cv::Regressor> {
            auto r = std::make_unique<LinRegressor>();
            r->model = baseline::fit(x, ty);
            return r;
        };

        cv::EvalResult eg = cv::evaluate(res.features, y, h.rows, h.selected, gbt_trainer,
                                         derive_seed(cfg.seed, "eval.gbt.h" + hk));
        cv::EvalResult el = cv::evaluate(res.features, y, h.rows, h.selected, lin_trainer,
                                         derive_seed(cfg.seed, "eval.lin.h" + hk));
        h.evaluated = true;
        h.gbt_cv = eg.cv;
        h.gbt_holdout = eg.holdout;
        h.lin_cv = el.cv;
        h.lin_holdout = el.holdout;
        h.gbt_fold_mse = eg.fold_mse;
        h.lin_fold_mse = el.fold_mse;
        h.skipped_folds = eg.skipped_folds;
        h.n_train = h.rows.final_train.size();
        h.n_holdout = h.rows.holdout.size();
        h.final_gbt = std::move(dynamic_cast<GbtRegressor&>(*eg.final_model).model);
        h.final_lin = std::move(dynamic_cast<LinRegressor&>(*el.final_model).model);

        if (opt.upto != Stage::train && opt.upto != Stage::evaluate) {
            stage = "forecast (horizon " + hk + ")";
            // Forecast every anchor: out-of-fold predictions where a fold
            // validated it, holdout predictions in the holdout window, and
            // the final model everywhere else (training region, the gap
            // before the holdout, and future anchors without labels).
            const size_t n = res.panel.samples.size();
            std::vector<double> pred(n, 0.0);
            std::vector<char> have(n, 0);
            for (const auto& [row, p] : eg.val_preds) {
                pred[row] = p;
                have[row] = 1;
            }
            for (size_t i = 0; i < eg.holdout_rows.size(); ++i) {
                pred[eg.holdout_rows[i]] = eg.holdout_preds[i];
                have[eg.holdout_rows[i]] = 1;
            }
            std::vector<size_t> rest;
            for (size_t r = 0; r < n; ++r)
                if (!have[r]) rest.push_back(r);
            if (!rest.empty()) {
                const std::vector<double> rp = h.final_gbt.predict(gather(res.features, rest, h.selected));
                for (size_t i = 0; i < rest.size(); ++i) pred[rest[i]] = rp[i];
            }
            const Date hend = res.schedule.holdout_end[static_cast<size_t>(k - 1)];
            h.forecasts.reserve(n);
            for (size_t r = 0; r < n; ++r) {
                const prep::Sample& s = res.panel.samples[r];
                ForecastRow fr;
                fr.gov = res.panel.gov_ids[s.gov];
                fr.date = s.anchor;
                fr.horizon = k;
                fr.y_true = y[r];
                fr.y_pred = pred[r];
                if (s.anchor < res.schedule.folds.front().start) fr.split = "train";
                else if (s.anchor < res.schedule.holdout_start) fr.split = "cv";
                else if (s.anchor <= hend) fr.split = "holdout";
                else fr.split = "future";
                h.forecasts.push_back(std::move(fr));
            }
        }
        res.horizons.push_back(std::move(h));
    }
    return res;
}

}  // namespace detail

inline RunResult run_pipeline(const RunConfig& cfg, const RunOptions& opt = {},
                              const PipelineHooks* hooks = nullptr) {
    validate_config(cfg);
    std::string stage = "load";
    try {
        return detail::run_pipeline_impl(cfg, opt, hooks, stage);
    } catch (const Error& e) {
        throw Error(e.kind(), "stage " + stage + ": " + e.what());
    }
}

// ---------------------------------------------------------------------------
// Artifact writers
// ---------------------------------------------------------------------------

inline void write_text(const std::string& path, const std::string& content) {
    const std::filesystem::path p(path);
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    csv::write_file(path, content);
}

// panel.csv: one row per anchor with the day's series values and the four
// forward labels (blank when the label window runs past the data).
inline std::string render_panel_csv(const RunResult& res) {
    std::string out = "governorate,date";
    for (const std::string& s : prep::series_names()) out += "," + s;
    out += ",y1,y2,y3,y4\n";
    for (size_t r = 0; r < res.panel.samples.size(); ++r) {
        const prep::Sample& s = res.panel.samples[r];
        const prep::GovernorateFrame& f = res.panel.frames[s.gov];
        out += res.panel.gov_ids[s.gov] + "," + s.anchor.str();
        for (int sid = 0; sid < prep::kSeriesCount; ++sid)
            out += "," + fmt_double(f.value(sid, s.anchor));
        for (int k = 1; k <= prep::kMaxHorizon; ++k) {
            const double t = res.panel.target(k, r);
            out += ",";
            if (!std::isnan(t)) out += fmt_double(t);
        }
        out += "\n";
    }
    return out;
}

inline std::string render_features_csv(const RunResult& res) {
    std::string out = "governorate,date";
    for (const auto& d : res.descriptors) out += "," + d.id();
    out += "\n";
    for (size_t r = 0; r < res.features.n_rows; ++r) {
        const prep::Sample& s = res.panel.samples[r];
        out += res.panel.gov_ids[s.gov] + "," + s.anchor.str();
        for (size_t j = 0; j < res.features.n_cols; ++j) out += "," + fmt_double(res.features.at(r, j));
        out += "\n";
    }
    return out;
}

inline ordered_json render_trials_json(const RunConfig& cfg, const RunResult& res) {
    ordered_json out;
    out["config"] = res.config;
    ordered_json horizons;
    for (const HorizonOutcome& h : res.horizons) {
        ordered_json entry;
        ordered_json trials = ordered_json::array();
        for (size_t i = 0; i < h.trials.trials.size(); ++i) {
            const tpe::Trial& t = h.trials.trials[i];
            ordered_json tj;
            tj["index"] = i;
            ordered_json params;
            for (size_t d = 0; d < cfg.space.dims.size(); ++d)
                params[cfg.space.dims[d].name] = t.params[d];
            tj["params"] = params;
            tj["loss"] = std::isfinite(t.loss) ? ordered_json(t.loss) : ordered_json(nullptr);
            trials.push_back(tj);
        }
        entry["trials"] = trials;
        ordered_json best;
        if (h.trials.trials.empty()) {
            best["index"] = nullptr;
            best["loss"] = nullptr;
        } else {
            best["index"] = h.trials.best_index;
            best["loss"] = h.trials.best().loss;
        }
        ordered_json bp;
        bp["eta"] = h.params.eta;
        bp["n_rounds"] = h.params.n_rounds;
        bp["max_depth"] = h.params.max_depth;
        bp["min_child_weight"] = h.params.min_child_weight;
        bp["lambda"] = h.params.lambda;
        bp["gamma"] = h.params.gamma;
        bp["subsample"] = h.params.subsample;
        bp["colsample"] = h.params.colsample;
        best["params"] = bp;
        entry["best"] = best;
        horizons[std::to_string(h.horizon)] = entry;
    }
    out["horizons"] = horizons;
    return out;
}

inline ordered_json render_selection_json(const RunResult& res) {
    ordered_json out;
    out["config"] = res.config;
    ordered_json horizons;
    for (const HorizonOutcome& h : res.horizons) {
        ordered_json entry;
        entry["reused"] = h.selection_reused;
        entry["n_candidates"] = res.descriptors.size();
        ordered_json sig = ordered_json::array();
        for (const size_t c : h.significant) {
            const select::ColumnTest& t = h.tests[c];
            ordered_json tj;
            tj["id"] = res.descriptors[c].id();
            tj["q"] = t.q;
            tj["p"] = t.p;
            tj["stat"] = t.stat;
            tj["test"] = t.binary ? "mann_whitney" : "kendall";
            sig.push_back(tj);
        }
        entry["significant"] = sig;
        ordered_json dropped = ordered_json::array();
        for (const select::DroppedPair& d : h.dropped) {
            ordered_json dj;
            dj["dropped"] = res.descriptors[d.dropped].id();
            dj["kept"] = res.descriptors[d.kept].id();
            dj["r"] = d.r;
            dropped.push_back(dj);
        }
        entry["dropped_correlated"] = dropped;
        ordered_json decor = ordered_json::array();
        for (const size_t c : h.decorrelated) decor.push_back(res.descriptors[c].id());
        entry["decorrelated"] = decor;
        ordered_json ranked = ordered_json::array();
        for (const size_t c : h.ranked) ranked.push_back(res.descriptors[c].id());
        entry["ranked"] = ranked;
        entry["selected"] = h.selected_ids;
        entry["forward_cv"] = h.forward_cv;
        horizons[std::to_string(h.horizon)] = entry;
    }
    out["horizons"] = horizons;
    return out;
}

inline ordered_json render_metrics_json(const RunResult& res) {
    ordered_json rows = ordered_json::array();
    for (const HorizonOutcome& h : res.horizons) {
        auto row = [&](const char* model, double cvv, double hov, const std::vector<double>& fm) {
            ordered_json r;
            r["horizon"] = h.horizon;
            r["model"] = model;
            r["cv_rmse"] = cvv;
            r["holdout_rmse"] = std::isnan(hov) ? ordered_json(nullptr) : ordered_json(hov);
            r["fold_mses"] = fm;
            r["n_train"] = h.n_train;
            r["n_holdout"] = h.n_holdout;
            return r;
        };
        rows.push_back(row("gbtree", h.gbt_cv, h.gbt_holdout, h.gbt_fold_mse));
        rows.push_back(row("baseline", h.lin_cv, h.lin_holdout, h.lin_fold_mse));
    }
    return rows;
}

inline std::string render_forecasts_csv(const RunResult& res) {
    std::string out = "governorate,date,horizon,y_true,y_pred,split\n";
    for (const HorizonOutcome& h : res.horizons)
        for (const ForecastRow& f : h.forecasts) {
            out += f.gov + "," + f.date.str() + "," + std::to_string(f.horizon) + ",";
            if (!std::isnan(f.y_true)) out += fmt_double(f.y_true);
            out += "," + fmt_double(f.y_pred) + "," + f.split + "\n";
        }
    return out;
}

inline std::vector<ForecastRow> parse_forecasts_csv(const std::string& path) {
    const csv::Table t = csv::parse_file(path);
    const int gov = t.column("governorate"), date = t.column("date"), hz = t.column("horizon");
    const int yt = t.column("y_true"), yp = t.column("y_pred"), sp = t.column("split");
    if (gov < 0 || date < 0 || hz < 0 || yt < 0 || yp < 0 || sp < 0)
        fail_data("MissingColumn: " + path + " is not a forecasts file");
    std::vector<ForecastRow> rows;
    for (size_t i = 0; i < t.rows.size(); ++i) {
        const auto& r = t.rows[i];
        ForecastRow f;
        f.gov = r[static_cast<size_t>(gov)];
        f.date = Date::parse(r[static_cast<size_t>(date)]);
        f.horizon = static_cast<int>(csv::parse_double(r[static_cast<size_t>(hz)], path, t.line_numbers[i]));
        const std::string& yts = r[static_cast<size_t>(yt)];
        f.y_true = yts.empty() ? std::numeric_limits<double>::quiet_NaN()
                               : csv::parse_double(yts, path, t.line_numbers[i]);
        f.y_pred = csv::parse_double(r[static_cast<size_t>(yp)], path, t.line_numbers[i]);
        f.split = r[static_cast<size_t>(sp)];
        rows.push_back(std::move(f));
    }
    return rows;
}

// One file per (governorate, horizon): the series needed to redraw a
// forecast-vs-actual panel.
inline void write_plot_data(const std::vector<ForecastRow>& rows, const std::string& dir) {
    if (rows.empty()) fail_data("EmptyForecasts: nothing to plot");
    std::filesystem::create_directories(dir);
    std::map<std::pair<std::string, int>, std::string> files;
    for (const ForecastRow& f : rows) {
        std::string& out = files[{f.gov, f.horizon}];
        if (out.empty()) out = "date,y_true,y_pred,split\n";
        out += f.date.str() + ",";
        if (!std::isnan(f.y_true)) out += fmt_double(f.y_true);
        out += "," + fmt_double(f.y_pred) + "," + f.split + "\n";
    }
    for (const auto& [key, content] : files)
        csv::write_file(dir + "/plot_" + key.first + "_h" + std::to_string(key.second) + ".csv", content);
}

inline void write_models(const RunResult& res, const std::string& dir) {
    std::filesystem::create_directories(dir);
    for (const HorizonOutcome& h : res.horizons)
        csv::write_file(dir + "/model_h" + std::to_string(h.horizon) + ".txt",
                        gbtree::serialize(h.final_gbt));
}

// Writes the artifacts a stage is responsible for.
inline void write_outputs(const RunConfig& cfg, const RunResult& res, Stage stage) {
    std::filesystem::create_directories(cfg.out_dir);
    const bool all = stage == Stage::run;
    if (stage == Stage::prepare) write_text(cfg.out_dir + "/panel.csv", render_panel_csv(res));
    if (stage == Stage::features) write_text(cfg.out_dir + "/features.csv", render_features_csv(res));
    if (all || stage == Stage::tune)
        write_text(cfg.out_dir + "/trials.json", render_trials_json(cfg, res).dump(2) + "\n");
    if (all || stage == Stage::select)
        write_text(cfg.out_dir + "/selection_report.json", render_selection_json(res).dump(2) + "\n");
    if (all || stage == Stage::train) write_models(res, cfg.out_dir + "/models");
    if (all || stage == Stage::evaluate)
        write_text(cfg.out_dir + "/metrics.json", render_metrics_json(res).dump(2) + "\n");
    if (all || stage == Stage::forecast)
        write_text(cfg.out_dir + "/forecasts.csv", render_forecasts_csv(res));
    if (all) {
        std::vector<ForecastRow> rows;
        for (const HorizonOutcome& h : res.horizons)
            rows.insert(rows.end(), h.forecasts.begin(), h.forecasts.end());
        write_plot_data(rows, cfg.out_dir + "/plot_data");
    }
}

}  // namespace cholcast::pipeline
