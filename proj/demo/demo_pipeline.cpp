// Generates a small synthetic data set and runs the full forecasting pipeline
// on it with lightweight settings, printing the per-horizon scores.

#include <cstdio>
#include <filesystem>

#include <cholcast/cholcast.hpp>

using namespace cholcast;

int main() {
    const std::string dir = "demo_run";
    std::filesystem::create_directories(dir);

    simulate::SimConfig sim;
    sim.seed = 11;
    sim.n_govs = 6;
    sim.n_days = 250;
    const simulate::SimData data = simulate::simulate(sim);
    csv::write_file(dir + "/cholera.csv", ingest::write_cholera(data.reports));
    csv::write_file(dir + "/rainfall.csv", ingest::write_rainfall(data.rain));
    csv::write_file(dir + "/conflict.csv", ingest::write_conflict(data.conflict));
    csv::write_file(dir + "/gridmap.csv", ingest::write_gridmap(data.gridmap));
    csv::write_file(dir + "/governorates.json", ingest::write_registry(data.registry));

    pipeline::RunConfig cfg;
    cfg.data_dir = dir;
    cfg.out_dir = dir + "/out";
    cfg.seed = 3;
    cfg.horizons = {1, 2};
    cfg.n_trials = 0;  // skip tuning to keep the demo quick
    cfg.gbt.n_rounds = 60;
    cfg.cap = 8;

    const pipeline::RunResult res = pipeline::run_pipeline(cfg);
    pipeline::write_outputs(cfg, res, pipeline::Stage::run);

    for (const auto& h : res.horizons) {
        std::printf("horizon %d: %zu features selected, gbtree cv %.3f holdout %.3f, "
                    "linear cv %.3f holdout %.3f\n",
                    h.horizon, h.selected.size(), h.gbt_cv, h.gbt_holdout, h.lin_cv, h.lin_holdout);
    }
    std::printf("artifacts in %s/out\n", dir.c_str());
    return 0;
}
