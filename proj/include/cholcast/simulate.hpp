#pragma once

// Synthetic outbreak generator. Produces the full input bundle (cumulative
// case reports, gridded rainfall, conflict events, grid map, registry) from
// one seed, with a planted causal structure the pipeline should recover:
// cases respond quadratically to above-threshold lagged rainfall, linearly to
// lagged conflict, and to lagged neighbor case counts.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include "core.hpp"
#include "ingest.hpp"
#include "rng.hpp"

namespace cholcast::simulate {

// Case intensity. Rainfall enters squared above a threshold, ten days back;
// conflict linearly, seven days back; neighbor cases five days back.
namespace detail {
constexpr double kBeta0 = 40.0;  // endemic base rate
constexpr double kBetaRain = 12.0;
constexpr double kRainTheta = 3.0;
constexpr double kBetaConflict = 2.5;
constexpr double kBetaNeighbor = 0.25;
}  // namespace detail

struct SimConfig {
    uint64_t seed = 42;
    int n_govs = 21;
    int n_days = 300;
    Date start = Date::parse("2017-04-15");
    // Intensity coefficients; overridable so tests can switch terms off.
    double beta0 = detail::kBeta0;
    double beta_rain = detail::kBetaRain;
    double rain_theta = detail::kRainTheta;
    double beta_conflict = detail::kBetaConflict;
    double beta_neighbor = detail::kBetaNeighbor;
};

struct SimData {
    ingest::Registry registry;
    ingest::GridMap gridmap;
    std::vector<ingest::CholeraReport> reports;
    std::vector<ingest::RainObs> rain;
    std::vector<ingest::ConflictEvent> conflict;

    // Ground truth kept for tests; the pipeline never sees it.
    std::vector<std::vector<double>> daily_cases;  // [gov][day], raw counts
    std::vector<std::vector<double>> gov_rain;     // [gov][day], cell-noise-free
};

namespace detail {

constexpr int kRainLag = 10;
constexpr int kConflictLag = 7;
constexpr int kNeighborLag = 5;
constexpr double kDeathRate = 0.02;

// Seasonal rainfall: quarter-year period, so several wet spells fall inside
// the default 300-day window and the training, validation, and holdout months
// all see rainfall cross the case-response threshold in both directions.
constexpr double kSeasonDays = 91.25;
constexpr double kArCoef = 0.7;
constexpr double kArSd = 0.5;
constexpr double kCellNoiseSd = 0.4;

inline std::string gov_name(int g) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "gov%02d", g + 1);
    return buf;
}

// Mean of a 7-day trailing window ending `lag` days before t; days before the
// series start count as zero. Fixed denominator keeps early values small
// instead of noisy.
inline double lagged_week_mean(const std::vector<double>& v, int t, int lag) {
    double s = 0.0;
    for (int d = t - lag - 6; d <= t - lag; ++d)
        if (d >= 0) s += v[static_cast<size_t>(d)];
    return s / 7.0;
}

}  // namespace detail

inline SimData simulate(const SimConfig& cfg) {
    if (cfg.n_govs < 2 || cfg.n_govs > 99)
        fail_usage("BadSimConfig: n_govs must be in [2, 99], got " + std::to_string(cfg.n_govs));
    if (cfg.n_days < 120)
        fail_usage("BadSimConfig: n_days must be at least 120, got " + std::to_string(cfg.n_days));
    const int n = cfg.n_govs;
    const int days = cfg.n_days;

    SimData sim;

    // Registry: ring adjacency plus about n/3 random chords.
    {
        Rng pop_rng(derive_seed(cfg.seed, "sim.pop"));
        std::vector<std::vector<bool>> adj(static_cast<size_t>(n), std::vector<bool>(static_cast<size_t>(n), false));
        auto connect = [&](int a, int b) {
            adj[static_cast<size_t>(a)][static_cast<size_t>(b)] = true;
            adj[static_cast<size_t>(b)][static_cast<size_t>(a)] = true;
        };
        for (int g = 0; g < n; ++g) connect(g, (g + 1) % n);
        Rng adj_rng(derive_seed(cfg.seed, "sim.adj"));
        for (int i = 0; i < n / 3; ++i) {
            const int a = static_cast<int>(adj_rng.uniform_int(static_cast<uint64_t>(n)));
            const int b = static_cast<int>(adj_rng.uniform_int(static_cast<uint64_t>(n)));
            if (a != b) connect(a, b);
        }
        for (int g = 0; g < n; ++g) {
            ingest::GovMeta meta;
            meta.id = detail::gov_name(g);
            meta.population = 300000.0 + static_cast<double>(pop_rng.uniform_int(2700001));
            for (int h = 0; h < n; ++h)
                if (adj[static_cast<size_t>(g)][static_cast<size_t>(h)])
                    meta.neighbors.push_back(detail::gov_name(h));
            sim.registry.govs.push_back(std::move(meta));
        }
        std::sort(sim.registry.govs.begin(), sim.registry.govs.end(),
                  [](const ingest::GovMeta& a, const ingest::GovMeta& b) { return a.id < b.id; });
    }

    // Grid map: each governorate owns a 2x2 block of 0.25-degree cells on a
    // 10-wide lattice near 12N 42E, plus four cells mapped outside any
    // governorate.
    for (int g = 0; g < n; ++g)
        for (int r = 0; r < 2; ++r)
            for (int c = 0; c < 2; ++c)
                sim.gridmap.cells[{48 + 2 * (g / 10) + r, 168 + 2 * (g % 10) + c}] = detail::gov_name(g);
    for (int r = 0; r < 2; ++r)
        for (int c = 0; c < 2; ++c) sim.gridmap.cells[{46 + r, 166 + c}] = "";

    // Rainfall: seasonal cosine plus AR(1) drift per governorate, observed at
    // each cell with independent noise. Negative readings clamp to zero.
    const double peak_offset = static_cast<double>(Date::parse("2017-04-25") - cfg.start);
    sim.gov_rain.assign(static_cast<size_t>(n), std::vector<double>(static_cast<size_t>(days), 0.0));
    for (int g = 0; g < n; ++g) {
        Rng rng(derive_seed(cfg.seed, "sim.rain", static_cast<uint64_t>(g)));
        const double a = rng.uniform(0.5, 2.5);
        const double b = rng.uniform(1.0, 3.0);
        const double phi = rng.uniform(-10.0, 10.0);
        double ar = 0.0;
        for (int t = 0; t < days; ++t) {
            ar = detail::kArCoef * ar + rng.normal(0.0, detail::kArSd);
            const double base =
                a + b * std::cos(2.0 * 3.141592653589793238462643 *
                                 (static_cast<double>(t) - peak_offset - phi) / detail::kSeasonDays) +
                ar;
            const double level = std::max(0.0, base);
            sim.gov_rain[static_cast<size_t>(g)][static_cast<size_t>(t)] = level;
            for (int r = 0; r < 2; ++r)
                for (int c = 0; c < 2; ++c)
                    sim.rain.push_back({48 + 2 * (g / 10) + r, 168 + 2 * (g % 10) + c, cfg.start + t,
                                        std::max(0.0, level + rng.normal(0.0, detail::kCellNoiseSd))});
        }
    }
    {
        Rng rng(derive_seed(cfg.seed, "sim.rain.outside"));
        for (int t = 0; t < days; ++t)
            for (int r = 0; r < 2; ++r)
                for (int c = 0; c < 2; ++c)
                    sim.rain.push_back({46 + r, 166 + c, cfg.start + t,
                                        std::max(0.0, 1.5 + rng.normal(0.0, 1.0))});
    }

    // Conflict: sporadic bursts. A burst starts with small daily probability,
    // runs 3 + Geometric(0.3) days (14 max), and each burst day records
    // Poisson(rate) fatalities with a per-burst rate.
    std::vector<std::vector<double>> daily_conflict(static_cast<size_t>(n),
                                                    std::vector<double>(static_cast<size_t>(days), 0.0));
    for (int g = 0; g < n; ++g) {
        Rng rng(derive_seed(cfg.seed, "sim.conflict", static_cast<uint64_t>(g)));
        int remaining = 0;
        double rate = 0.0;
        for (int t = 0; t < days; ++t) {
            if (remaining == 0 && rng.uniform01() < 0.015) {
                int extra = 0;
                while (extra < 11 && rng.uniform01() >= 0.3) ++extra;
                remaining = 3 + extra;
                rate = rng.uniform(2.0, 8.0);
            }
            if (remaining > 0) {
                --remaining;
                const double k = static_cast<double>(rng.poisson(rate));
                if (k > 0.0) {
                    daily_conflict[static_cast<size_t>(g)][static_cast<size_t>(t)] = k;
                    sim.conflict.push_back({detail::gov_name(g), cfg.start + t, k});
                }
            }
        }
    }

    // Cases and deaths, day by day so the neighbor term sees earlier truth.
    {
        Rng rng(derive_seed(cfg.seed, "sim.cases"));
        sim.daily_cases.assign(static_cast<size_t>(n), std::vector<double>(static_cast<size_t>(days), 0.0));
        std::vector<std::vector<double>> deaths(static_cast<size_t>(n),
                                                std::vector<double>(static_cast<size_t>(days), 0.0));
        for (int t = 0; t < days; ++t) {
            for (int g = 0; g < n; ++g) {
                const size_t gi = static_cast<size_t>(g);
                const double rbar = detail::lagged_week_mean(sim.gov_rain[gi], t, detail::kRainLag);
                const double fbar = detail::lagged_week_mean(daily_conflict[gi], t, detail::kConflictLag);
                double nb = 0.0;
                const ingest::GovMeta& meta = sim.registry.govs[static_cast<size_t>(
                    sim.registry.index(detail::gov_name(g)))];
                if (!meta.neighbors.empty() && t - detail::kNeighborLag >= 0) {
                    for (const std::string& nid : meta.neighbors)
                        nb += sim.daily_cases[static_cast<size_t>(sim.registry.index(nid))]
                                             [static_cast<size_t>(t - detail::kNeighborLag)];
                    nb /= static_cast<double>(meta.neighbors.size());
                }
                const double excess = std::max(0.0, rbar - cfg.rain_theta);
                const double lambda = cfg.beta0 + cfg.beta_rain * excess * excess +
                                      cfg.beta_conflict * fbar + cfg.beta_neighbor * nb;
                sim.daily_cases[gi][static_cast<size_t>(t)] = static_cast<double>(rng.poisson(lambda));
                deaths[gi][static_cast<size_t>(t)] =
                    static_cast<double>(rng.poisson(detail::kDeathRate * lambda));
            }
        }

        // Cumulative reports on an irregular grid: day 0, gaps of 1 to 6
        // days, and always the final day.
        for (int g = 0; g < n; ++g) {
            const size_t gi = static_cast<size_t>(g);
            Rng rng_rep(derive_seed(cfg.seed, "sim.reports", static_cast<uint64_t>(g)));
            std::vector<int> report_days = {0};
            int d = 0;
            while (d < days - 1) {
                d += 1 + static_cast<int>(rng_rep.uniform_int(6));
                if (d > days - 1) d = days - 1;
                report_days.push_back(d);
            }
            double cum_cases = 0.0, cum_deaths = 0.0;
            int next = 0;
            for (int t = 0; t < days; ++t) {
                cum_cases += sim.daily_cases[gi][static_cast<size_t>(t)];
                cum_deaths += deaths[gi][static_cast<size_t>(t)];
                if (next < static_cast<int>(report_days.size()) && report_days[static_cast<size_t>(next)] == t) {
                    sim.reports.push_back({detail::gov_name(g), cfg.start + t, cum_cases, cum_deaths});
                    ++next;
                }
            }
        }
    }
    return sim;
}

}  // namespace cholcast::simulate
