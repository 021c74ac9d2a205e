#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <cholcast/pipeline.hpp>

using namespace cholcast;
namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

void write_sim(const simulate::SimConfig& sc, const fs::path& dir) {
    const simulate::SimData d = simulate::simulate(sc);
    fs::create_directories(dir);
    csv::write_file((dir / "cholera.csv").string(), ingest::write_cholera(d.reports));
    csv::write_file((dir / "rainfall.csv").string(), ingest::write_rainfall(d.rain));
    csv::write_file((dir / "conflict.csv").string(), ingest::write_conflict(d.conflict));
    csv::write_file((dir / "gridmap.csv").string(), ingest::write_gridmap(d.gridmap));
    csv::write_file((dir / "governorates.json").string(), ingest::write_registry(d.registry));
}

std::set<std::string> dir_listing(const fs::path& dir) {
    std::set<std::string> names;
    for (const auto& e : fs::directory_iterator(dir)) names.insert(e.path().filename().string());
    return names;
}

bool same_params(const gbtree::GbtParams& a, const gbtree::GbtParams& b) {
    return a.eta == b.eta && a.n_rounds == b.n_rounds && a.max_depth == b.max_depth &&
           a.min_child_weight == b.min_child_weight && a.lambda == b.lambda && a.gamma == b.gamma &&
           a.subsample == b.subsample && a.colsample == b.colsample;
}

// One full pipeline run on a seeded 5-governorate dataset, shared by the
// artifact, determinism, reuse, and forecast tests below.
struct E2EFixture {
    fs::path base, data_dir, out_dir;
    pipeline::RunConfig cfg;
    pipeline::RunResult res;
    AccessLog log;
};

const E2EFixture& e2e() {
    static const E2EFixture fx = [] {
        E2EFixture f;
        f.base = fs::temp_directory_path() / "cholcast_test_pipeline";
        fs::remove_all(f.base);
        f.data_dir = f.base / "data";
        f.out_dir = f.base / "out";
        simulate::SimConfig sc;
        sc.seed = 7;
        sc.n_govs = 5;
        sc.n_days = 270;
        write_sim(sc, f.data_dir);
        f.cfg.data_dir = f.data_dir.string();
        f.cfg.out_dir = f.out_dir.string();
        f.cfg.seed = 11;
        f.cfg.n_trials = 2;
        pipeline::PipelineHooks hooks;
        hooks.selection_access = &f.log;
        f.res = pipeline::run_pipeline(f.cfg, {}, &hooks);
        pipeline::write_outputs(f.cfg, f.res, pipeline::Stage::run);
        return f;
    }();
    return fx;
}

}  // namespace

TEST_CASE("a full run scores both models on every horizon") {
    const E2EFixture& f = e2e();
    REQUIRE(f.res.horizons.size() == 4);
    for (size_t i = 0; i < 4; ++i) {
        const pipeline::HorizonOutcome& h = f.res.horizons[i];
        REQUIRE(h.horizon == static_cast<int>(i) + 1);
        REQUIRE(h.evaluated);
        REQUIRE_FALSE(h.selected_ids.empty());
        REQUIRE(h.selected.size() == h.selected_ids.size());
        CHECK(std::isfinite(h.gbt_cv));
        CHECK(std::isfinite(h.lin_cv));
        CHECK(std::isfinite(h.gbt_holdout));
        CHECK(std::isfinite(h.lin_holdout));
        CHECK(h.n_train > 0);
        CHECK(h.n_holdout > 0);
        REQUIRE(h.trials.trials.size() == 2);  // n_trials honored
        REQUIRE(h.forecasts.size() == f.res.panel.samples.size());
    }

    // The metrics report has one gbtree and one baseline row per horizon:
    // the shape of the published four-horizon comparison table.
    const ordered_json m = pipeline::render_metrics_json(f.res);
    REQUIRE(m.is_array());
    REQUIRE(m.size() == 8);
    for (size_t i = 0; i < 8; ++i) {
        const ordered_json& r = m[i];
        CHECK(r.at("horizon").get<int>() == static_cast<int>(i / 2) + 1);
        CHECK(r.at("model").get<std::string>() == (i % 2 == 0 ? "gbtree" : "baseline"));
        CHECK(r.at("cv_rmse").get<double>() > 0.0);
        CHECK(r.at("holdout_rmse").is_number());
        CHECK(r.at("n_train").get<size_t>() > 0);
        CHECK(r.at("n_holdout").get<size_t>() > 0);
    }
    CHECK(m[0].at("cv_rmse").get<double>() == f.res.horizons[0].gbt_cv);
    CHECK(m[1].at("cv_rmse").get<double>() == f.res.horizons[0].lin_cv);
}

TEST_CASE("the run stage writes exactly its artifact set") {
    const E2EFixture& f = e2e();
    const std::set<std::string> names = dir_listing(f.out_dir);
    CHECK(names == std::set<std::string>{"trials.json", "selection_report.json", "metrics.json",
                                         "forecasts.csv", "models", "plot_data"});
    for (int k = 1; k <= 4; ++k) {
        const fs::path mp = f.out_dir / "models" / ("model_h" + std::to_string(k) + ".txt");
        REQUIRE(fs::exists(mp));
        // The stored model reproduces the in-memory model's predictions.
        const gbtree::GbtModel m = gbtree::deserialize(csv::read_file(mp.string()));
        const pipeline::HorizonOutcome& h = f.res.horizons[static_cast<size_t>(k - 1)];
        std::vector<size_t> head;
        for (size_t r = 0; r < 10; ++r) head.push_back(r);
        const Matrix x = gather(f.res.features, head, h.selected);
        CHECK(m.predict(x) == h.final_gbt.predict(x));
    }
    // 5 governorates x 4 horizons -> 20 plot files.
    CHECK(dir_listing(f.out_dir / "plot_data").size() == 20);

    // Earlier stages own their artifacts; a prepare or features invocation
    // writes only its file.
    const fs::path scoped = f.base / "scoped";
    pipeline::RunConfig cfg = f.cfg;
    cfg.out_dir = scoped.string();
    pipeline::write_outputs(cfg, f.res, pipeline::Stage::prepare);
    CHECK(dir_listing(scoped) == std::set<std::string>{"panel.csv"});
    pipeline::write_outputs(cfg, f.res, pipeline::Stage::features);
    CHECK(dir_listing(scoped) == std::set<std::string>{"panel.csv", "features.csv"});
    const std::string panel_csv = csv::read_file((scoped / "panel.csv").string());
    CHECK(panel_csv.rfind("governorate,date,", 0) == 0);
    pipeline::write_outputs(cfg, f.res, pipeline::Stage::evaluate);
    CHECK(dir_listing(scoped) ==
          std::set<std::string>{"panel.csv", "features.csv", "metrics.json"});
}

TEST_CASE("feature selection and tuning never read a holdout row") {
    const E2EFixture& f = e2e();
    size_t touched_train = 0;
    for (const pipeline::HorizonOutcome& h : f.res.horizons) {
        REQUIRE_FALSE(h.rows.holdout.empty());
        for (const size_t row : h.rows.holdout) REQUIRE_FALSE(f.log.was_touched(row));
        for (const size_t row : h.rows.final_train) touched_train += f.log.was_touched(row);
    }
    REQUIRE(touched_train > 0);  // the log did observe the selection reads
}

TEST_CASE("a rerun with the same settings is byte-identical") {
    const E2EFixture& f = e2e();
    pipeline::RunConfig cfg = f.cfg;
    cfg.out_dir = (f.base / "out_rerun").string();
    const pipeline::RunResult again = pipeline::run_pipeline(cfg);
    pipeline::write_outputs(cfg, again, pipeline::Stage::run);
    for (const char* name : {"metrics.json", "forecasts.csv", "trials.json", "selection_report.json"}) {
        INFO(name);
        CHECK(csv::read_file((f.out_dir / name).string()) ==
              csv::read_file((fs::path(cfg.out_dir) / name).string()));
    }
}

TEST_CASE("forecast rows cover every anchor with consistent labels") {
    const E2EFixture& f = e2e();
    const auto rows = pipeline::parse_forecasts_csv((f.out_dir / "forecasts.csv").string());
    REQUIRE(rows.size() == 4 * f.res.panel.samples.size());
    const cv::FoldSchedule& sch = f.res.schedule;
    std::map<std::string, size_t> split_counts;
    for (const pipeline::ForecastRow& r : rows) {
        REQUIRE(std::isfinite(r.y_pred));
        std::string expect;
        if (r.date < sch.folds.front().start) expect = "train";
        else if (r.date < sch.holdout_start) expect = "cv";
        else if (r.date <= sch.holdout_end[static_cast<size_t>(r.horizon - 1)]) expect = "holdout";
        else expect = "future";
        REQUIRE(r.split == expect);
        // A label exists exactly when the anchor is not beyond the holdout end.
        REQUIRE(std::isnan(r.y_true) == (r.split == "future"));
        ++split_counts[r.split];
    }
    for (const char* s : {"train", "cv", "holdout", "future"}) {
        INFO(s);
        CHECK(split_counts[s] > 0);
    }
}

TEST_CASE("plot files carry one redrawable series per governorate and horizon") {
    const E2EFixture& f = e2e();
    const std::string gov = f.res.panel.gov_ids.front();
    const fs::path p = f.out_dir / "plot_data" / ("plot_" + gov + "_h1.csv");
    REQUIRE(fs::exists(p));
    const csv::Table t = csv::parse_file(p.string());
    REQUIRE(t.header == std::vector<std::string>{"date", "y_true", "y_pred", "split"});
    const size_t anchors_per_gov = f.res.panel.samples.size() / f.res.panel.gov_ids.size();
    REQUIRE(t.rows.size() == anchors_per_gov);
    Date prev = Date::parse(t.rows[0][0]);
    double cumulative = 0.0, last_cum = 0.0;
    for (size_t i = 0; i < t.rows.size(); ++i) {
        const Date d = Date::parse(t.rows[i][0]);
        if (i > 0) {
            REQUIRE(prev < d);
            prev = d;
        }
        const std::string& split = t.rows[i][3];
        if (split == "holdout") REQUIRE(d >= f.res.schedule.holdout_start);
        // Undoing the differencing: summing the (non-negative) interval
        // predictions yields a cumulative curve that never decreases.
        const double pred = csv::parse_double(t.rows[i][2], p.string(), t.line_numbers[i]);
        cumulative += std::max(0.0, pred);
        REQUIRE(cumulative >= last_cum);
        last_cum = cumulative;
    }

    CHECK_THROWS_WITH(pipeline::write_plot_data({}, (f.base / "plot_empty").string()),
                      Catch::Matchers::ContainsSubstring("EmptyForecasts"));

    const fs::path bad = f.base / "not_forecasts.csv";
    csv::write_file(bad.string(), "governorate,date,horizon,y_true,split\n");
    CHECK_THROWS_WITH(pipeline::parse_forecasts_csv(bad.string()),
                      Catch::Matchers::ContainsSubstring("MissingColumn"));
}

TEST_CASE("saved trials and selections are reused only when settings match") {
    const E2EFixture& f = e2e();

    pipeline::RunOptions reuse;
    reuse.upto = pipeline::Stage::select;
    reuse.reuse_params = true;
    reuse.reuse_selection = true;
    const pipeline::RunResult r = pipeline::run_pipeline(f.cfg, reuse);
    bool saw_params_note = false, saw_sel_note = false;
    for (const std::string& n : r.notes) {
        saw_params_note = saw_params_note || n.find("reusing tuned parameters") != std::string::npos;
        saw_sel_note = saw_sel_note || n.find("reusing selected features") != std::string::npos;
    }
    CHECK(saw_params_note);
    CHECK(saw_sel_note);
    REQUIRE(r.horizons.size() == 4);
    for (size_t i = 0; i < 4; ++i) {
        const pipeline::HorizonOutcome& h = r.horizons[i];
        CHECK(h.params_reused);
        CHECK(h.selection_reused);
        CHECK(h.trials.trials.empty());
        CHECK(h.tests.empty());  // the selection funnel never ran
        REQUIRE(same_params(h.params, f.res.horizons[i].params));
        REQUIRE(h.selected_ids == f.res.horizons[i].selected_ids);
        REQUIRE(h.selected == f.res.horizons[i].selected);
    }

    // Any settings difference invalidates the artifact.
    pipeline::RunConfig other = f.cfg;
    other.seed = 12;
    other.n_trials = 0;
    other.horizons = {1};
    pipeline::RunOptions want_params;
    want_params.upto = pipeline::Stage::tune;
    want_params.reuse_params = true;
    const pipeline::RunResult mism = pipeline::run_pipeline(other, want_params);
    bool saw_differ = false;
    for (const std::string& n : mism.notes)
        saw_differ = saw_differ || n.find("settings differ") != std::string::npos;
    CHECK(saw_differ);
    REQUIRE(mism.horizons.size() == 1);
    CHECK_FALSE(mism.horizons[0].params_reused);

    // An unreadable artifact falls back to recomputation with a note.
    pipeline::RunConfig corrupt = f.cfg;
    corrupt.out_dir = (f.base / "out_corrupt").string();
    corrupt.n_trials = 0;
    corrupt.horizons = {1};
    fs::create_directories(corrupt.out_dir);
    csv::write_file(corrupt.out_dir + "/trials.json", "{ not json");
    const pipeline::RunResult rec = pipeline::run_pipeline(corrupt, want_params);
    bool saw_ignoring = false;
    for (const std::string& n : rec.notes)
        saw_ignoring = saw_ignoring || n.find("ignoring") != std::string::npos;
    CHECK(saw_ignoring);
    CHECK_FALSE(rec.horizons[0].params_reused);
}

TEST_CASE("failures carry the name of the stage that raised them") {
    const fs::path base = fs::temp_directory_path() / "cholcast_test_pipeline_err";
    fs::remove_all(base);
    simulate::SimConfig sc;
    sc.seed = 3;
    sc.n_govs = 2;
    sc.n_days = 130;
    write_sim(sc, base / "tiny");

    pipeline::RunConfig missing;
    missing.data_dir = (base / "nowhere").string();
    CHECK_THROWS_WITH(pipeline::run_pipeline(missing),
                      Catch::Matchers::ContainsSubstring("stage load:"));

    // One report per governorate: interpolation needs at least two.
    const csv::Table chol = csv::parse_file((base / "tiny" / "cholera.csv").string());
    std::string first_only;
    for (const std::string& h : chol.header) first_only += (first_only.empty() ? "" : ",") + h;
    first_only += "\n";
    std::set<std::string> seen;
    for (const auto& row : chol.rows) {
        if (!seen.insert(row[0]).second) continue;
        for (size_t c = 0; c < row.size(); ++c) first_only += (c ? "," : "") + row[c];
        first_only += "\n";
    }
    fs::create_directories(base / "short");
    for (const char* name : {"rainfall.csv", "conflict.csv", "gridmap.csv", "governorates.json"})
        fs::copy_file(base / "tiny" / name, base / "short" / name);
    csv::write_file((base / "short" / "cholera.csv").string(), first_only);
    pipeline::RunConfig short_cfg;
    short_cfg.data_dir = (base / "short").string();
    CHECK_THROWS_WITH(pipeline::run_pipeline(short_cfg),
                      Catch::Matchers::ContainsSubstring("stage prepare:"));

    const fs::path sched = base / "broken_schedule.json";
    csv::write_file(sched.string(), "{ definitely not json");
    pipeline::RunConfig bad_sched;
    bad_sched.data_dir = (base / "tiny").string();
    bad_sched.schedule_path = sched.string();
    bad_sched.n_trials = 0;
    pipeline::RunOptions upto_tune;
    upto_tune.upto = pipeline::Stage::tune;
    CHECK_THROWS_WITH(pipeline::run_pipeline(bad_sched, upto_tune),
                      Catch::Matchers::ContainsSubstring("stage schedule:"));
}

TEST_CASE("a prepare-only invocation stops after the panel") {
    const E2EFixture& f = e2e();
    pipeline::RunOptions opt;
    opt.upto = pipeline::Stage::prepare;
    const pipeline::RunResult r = pipeline::run_pipeline(f.cfg, opt);
    CHECK_FALSE(r.panel.samples.empty());
    CHECK(r.horizons.empty());
    CHECK(r.features.n_rows == 0);
    CHECK(r.descriptors.empty());
}

TEST_CASE("saved artifacts embed the exact settings snapshot") {
    const E2EFixture& f = e2e();
    const ordered_json trials = ordered_json::parse(csv::read_file((f.out_dir / "trials.json").string()));
    CHECK(trials.at("config").dump() == f.res.config.dump());
    for (int k = 1; k <= 4; ++k) {
        const ordered_json& entry = trials.at("horizons").at(std::to_string(k));
        REQUIRE(entry.at("trials").size() == 2);
        CHECK(entry.at("best").at("loss").is_number());
        CHECK(entry.at("best").at("params").size() == 8);
    }
    const ordered_json sel =
        ordered_json::parse(csv::read_file((f.out_dir / "selection_report.json").string()));
    CHECK(sel.at("config").dump() == f.res.config.dump());
    const ordered_json& h1 = sel.at("horizons").at("1");
    CHECK(h1.at("selected").get<std::vector<std::string>>() == f.res.horizons[0].selected_ids);
    CHECK_FALSE(h1.at("significant").empty());
    CHECK(h1.at("forward_cv").size() == f.res.horizons[0].selected_ids.size());
}

TEST_CASE("config files parse strictly and reject bad values") {
    const json full = json::parse(R"({
        "data_dir": "dd", "out_dir": "oo", "seed": 99, "n_trials": 7,
        "leakage": "anchor", "q_cut": 0.01, "corr_threshold": 0.9,
        "cap": 12, "min_delta": 0.5, "schedule": "default",
        "files": {"cholera": "custom.csv"},
        "horizons": [2, 4],
        "gbt": {"eta": 0.2, "n_rounds": 77},
        "tpe": {"n_startup": 5, "gamma": 0.3, "n_candidates": 10,
                "space": [{"name": "eta", "type": "log_uniform", "lo": 0.01, "hi": 0.3}]}
    })");
    const pipeline::RunConfig cfg = pipeline::config_from_json(full);
    CHECK(cfg.data_dir == "dd");
    CHECK(cfg.out_dir == "oo");
    CHECK(cfg.seed == 99);
    CHECK(cfg.n_trials == 7);
    CHECK(cfg.leakage == cv::Leakage::anchor);
    CHECK(cfg.q_cut == 0.01);
    CHECK(cfg.corr_threshold == 0.9);
    CHECK(cfg.cap == 12);
    CHECK(cfg.min_delta == 0.5);
    CHECK(cfg.schedule_path.empty());
    CHECK(pipeline::input_path(cfg, "cholera") == "custom.csv");
    CHECK(pipeline::input_path(cfg, "rainfall") == "dd/rainfall.csv");
    CHECK(cfg.horizons == std::vector<int>{2, 4});
    CHECK(cfg.gbt.eta == 0.2);
    CHECK(cfg.gbt.n_rounds == 77);
    CHECK(cfg.tpe_cfg.n_startup == 5);
    CHECK(cfg.tpe_cfg.gamma == 0.3);
    CHECK(cfg.tpe_cfg.n_candidates == 10);
    REQUIRE(cfg.space.dims.size() == 1);
    CHECK(cfg.space.dims[0].name == "eta");
    CHECK(cfg.space.dims[0].type == tpe::ParamType::log_uniform);
    REQUIRE_NOTHROW(pipeline::validate_config(cfg));

    CHECK(pipeline::config_from_json(json::parse(R"({"horizons": "all"})")).horizons ==
          std::vector<int>{1, 2, 3, 4});

    using Catch::Matchers::ContainsSubstring;
    CHECK_THROWS_WITH(pipeline::config_from_json(json::parse(R"({"sedd": 1})")),
                      ContainsSubstring("UnknownConfigKey"));
    CHECK_THROWS_WITH(pipeline::config_from_json(json::parse(R"({"files": {"chol": "x"}})")),
                      ContainsSubstring("UnknownConfigKey"));
    CHECK_THROWS_WITH(pipeline::config_from_json(json::parse(R"({"gbt": {"leaves": 3}})")),
                      ContainsSubstring("UnknownGbtParam"));
    CHECK_THROWS_WITH(
        pipeline::config_from_json(json::parse(
            R"({"tpe": {"space": [{"name": "eta", "type": "normal", "lo": 0, "hi": 1}]}})")),
        ContainsSubstring("BadParamType"));
    CHECK_THROWS_WITH(pipeline::config_from_json(json::parse(R"({"horizons": 2})")),
                      ContainsSubstring("BadConfig"));

    auto invalid = [](auto&& mutate) {
        pipeline::RunConfig c;
        mutate(c);
        return c;
    };
    CHECK_THROWS_WITH(pipeline::validate_config(invalid([](auto& c) { c.horizons = {}; })),
                      ContainsSubstring("no horizons"));
    CHECK_THROWS_WITH(pipeline::validate_config(invalid([](auto& c) { c.horizons = {1, 1}; })),
                      ContainsSubstring("duplicate horizon"));
    CHECK_THROWS_WITH(pipeline::validate_config(invalid([](auto& c) { c.horizons = {5}; })),
                      ContainsSubstring("horizon must be 1..4"));
    CHECK_THROWS_WITH(pipeline::validate_config(invalid([](auto& c) { c.n_trials = -1; })),
                      ContainsSubstring("n_trials"));
    CHECK_THROWS_WITH(pipeline::validate_config(invalid([](auto& c) { c.q_cut = 0.0; })),
                      ContainsSubstring("q_cut"));
    CHECK_THROWS_WITH(pipeline::validate_config(invalid([](auto& c) { c.corr_threshold = 1.5; })),
                      ContainsSubstring("corr_threshold"));
    CHECK_THROWS_WITH(pipeline::validate_config(invalid([](auto& c) { c.cap = 0; })),
                      ContainsSubstring("cap"));
    CHECK_THROWS_WITH(pipeline::validate_config(invalid([](auto& c) { c.min_delta = -1.0; })),
                      ContainsSubstring("min_delta"));
    CHECK_THROWS_WITH(pipeline::validate_config(invalid([](auto& c) { c.tpe_cfg.gamma = 1.0; })),
                      ContainsSubstring("tpe.gamma"));
    CHECK_THROWS_WITH(pipeline::validate_config(invalid([](auto& c) { c.tpe_cfg.n_startup = 0; })),
                      ContainsSubstring("n_startup"));
    CHECK_THROWS_WITH(
        pipeline::validate_config(invalid([](auto& c) { c.tpe_cfg.n_candidates = 0; })),
        ContainsSubstring("n_candidates"));
    // Every tuned dimension must name a real hyperparameter.
    CHECK_THROWS_WITH(pipeline::validate_config(invalid([](auto& c) {
                          c.space.dims = {{"bogus", tpe::ParamType::uniform, 0.0, 1.0}};
                      })),
                      ContainsSubstring("UnknownGbtParam"));
}

TEST_CASE("schedule files load with explicit or defaulted holdout ends") {
    const fs::path base = fs::temp_directory_path() / "cholcast_test_pipeline_sched";
    fs::remove_all(base);
    fs::create_directories(base);
    const Date last = Date::parse("2017-12-31");

    const fs::path explicit_path = base / "explicit.json";
    csv::write_file(explicit_path.string(), R"({
        "base_train": ["2017-06-09", "2017-07-01"],
        "folds": [["2017-07-01", "2017-07-16"], ["2017-07-16", "2017-07-31"]],
        "holdout_start": "2017-08-10",
        "holdout_end": ["2017-08-23", "2017-08-22", "2017-08-21", "2017-08-20"]
    })");
    const cv::FoldSchedule sch = pipeline::load_schedule_file(explicit_path.string(), last);
    CHECK(sch.base_train.start == Date::parse("2017-06-09"));
    CHECK(sch.folds.size() == 2);
    CHECK(sch.holdout_start == Date::parse("2017-08-10"));
    CHECK(sch.holdout_end[0] == Date::parse("2017-08-23"));
    CHECK(sch.holdout_end[3] == Date::parse("2017-08-20"));

    const fs::path defaulted = base / "defaulted.json";
    csv::write_file(defaulted.string(), R"({
        "base_train": ["2017-06-09", "2017-07-01"],
        "folds": [["2017-07-01", "2017-07-16"], ["2017-07-16", "2017-07-31"]],
        "holdout_start": "2017-08-10"
    })");
    const cv::FoldSchedule dsch = pipeline::load_schedule_file(defaulted.string(), last);
    for (int k = 1; k <= 4; ++k)
        CHECK(dsch.holdout_end[static_cast<size_t>(k - 1)] == last - 14 * k);

    using Catch::Matchers::ContainsSubstring;
    const fs::path three = base / "three.json";
    csv::write_file(three.string(), R"({
        "base_train": ["2017-06-09", "2017-07-01"],
        "folds": [["2017-07-01", "2017-07-16"]],
        "holdout_start": "2017-08-10",
        "holdout_end": ["2017-08-23", "2017-08-22", "2017-08-21"]
    })");
    CHECK_THROWS_WITH(pipeline::load_schedule_file(three.string(), last),
                      ContainsSubstring("holdout_end needs 4 dates"));

    const fs::path junk = base / "junk.json";
    csv::write_file(junk.string(), "[1, 2");
    CHECK_THROWS_WITH(pipeline::load_schedule_file(junk.string(), last),
                      ContainsSubstring("BadSchedule"));

    const fs::path extra = base / "extra.json";
    csv::write_file(extra.string(), R"({
        "base_train": ["2017-06-09", "2017-07-01"],
        "folds": [["2017-07-01", "2017-07-16"]],
        "holdout_start": "2017-08-10",
        "surprise": 1
    })");
    CHECK_THROWS_WITH(pipeline::load_schedule_file(extra.string(), last),
                      ContainsSubstring("UnknownConfigKey"));
}
