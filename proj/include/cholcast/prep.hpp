#pragma once

// Turns raw inputs into an aligned per-governorate daily panel:
//   cumulative reports -> interval deltas -> interpolated daily new counts
//   -> per-10,000-population normalization -> neighbor-mean companion series
//   -> anchored samples with 14-day-bucket forecast targets.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "core.hpp"
#include "ingest.hpp"

namespace cholcast::prep {

using ingest::DailySeries;

// Indexed by lexicographic series name; featurex column order depends on it.
enum SeriesId : int {
    kConflict = 0,
    kNbConflict,
    kNbNewCases,
    kNbNewDeaths,
    kNbRainfall,
    kNewCases,
    kNewDeaths,
    kRainfall,
    kSeriesCount
};

inline const std::array<std::string, kSeriesCount>& series_names() {
    static const std::array<std::string, kSeriesCount> names = {
        "conflict", "nb_conflict", "nb_new_cases", "nb_new_deaths",
        "nb_rainfall", "new_cases", "new_deaths", "rainfall"};
    return names;
}

inline int series_index(const std::string& name) {
    const auto& names = series_names();
    for (int i = 0; i < kSeriesCount; ++i)
        if (names[i] == name) return i;
    return -1;
}

// All eight series share one date range. Case and death series (including
// their neighbor means) are in new cases per 10,000 people per day.
struct GovernorateFrame {
    std::string gov;
    Date start;
    std::array<std::vector<double>, kSeriesCount> series;

    int n_days() const { return static_cast<int>(series[0].size()); }
    Date end() const { return start + n_days() - 1; }
    double value(int sid, Date d) const { return series[sid][static_cast<size_t>(d - start)]; }
};

// One (governorate, anchor date) pair.
struct Sample {
    uint32_t gov = 0;  // index into Panel::gov_ids
    Date anchor;
};

constexpr int kMaxHorizon = 4;
constexpr int kHorizonDays = 14;
constexpr int kHistoryDays = 56;  // largest feature window

// Aligned frames plus every anchor with full feature history. targets[k-1]
// holds the horizon-k label (sum of new cases over days
// [t + 14(k-1) + 1, t + 14k]) or NaN when the data ends too soon.
struct Panel {
    std::vector<std::string> gov_ids;
    std::vector<GovernorateFrame> frames;  // parallel to gov_ids
    std::vector<Sample> samples;           // sorted by (gov, anchor)
    std::array<std::vector<double>, kMaxHorizon> targets;
    size_t excluded_short_history = 0;

    bool has_target(int horizon, size_t row) const {
        return !std::isnan(targets[static_cast<size_t>(horizon - 1)][row]);
    }
    double target(int horizon, size_t row) const {
        return targets[static_cast<size_t>(horizon - 1)][row];
    }
};

// ---------------------------------------------------------------------------
// Cumulative reports -> daily new counts
// ---------------------------------------------------------------------------

// Interval between consecutive reports: (from, to] with the delta accrued
// over it. Negative deltas (reporting corrections) clamp to zero.
struct ReportInterval {
    Date from;  // exclusive
    Date to;    // inclusive
    double new_cases = 0.0;
    double new_deaths = 0.0;
};

struct IntervalResult {
    std::vector<ReportInterval> intervals;
    size_t clamped = 0;  // count of negative deltas clamped to 0
};

// Reports must belong to one governorate, sorted by date, no duplicates.
inline IntervalResult cumulative_to_new(const std::vector<ingest::CholeraReport>& reports) {
    if (reports.size() < 2)
        fail_data("InsufficientReports: need at least 2 cumulative reports, got " +
                  std::to_string(reports.size()) + (reports.empty() ? "" : " for '" + reports[0].gov + "'"));
    IntervalResult out;
    for (size_t i = 1; i < reports.size(); ++i) {
        const auto& prev = reports[i - 1];
        const auto& cur = reports[i];
        if (cur.date <= prev.date) fail_data("UnsortedReports: '" + cur.gov + "' at " + cur.date.str());
        ReportInterval iv;
        iv.from = prev.date;
        iv.to = cur.date;
        iv.new_cases = cur.cum_cases - prev.cum_cases;
        iv.new_deaths = cur.cum_deaths - prev.cum_deaths;
        if (iv.new_cases < 0.0) {
            iv.new_cases = 0.0;
            ++out.clamped;
        }
        if (iv.new_deaths < 0.0) {
            iv.new_deaths = 0.0;
            ++out.clamped;
        }
        out.intervals.push_back(iv);
    }
    return out;
}

// Spreads each interval delta uniformly over the days after the earlier
// report through the later report day. Daily coverage is
// [first report + 1, last report]; the sum over an interval reproduces its
// delta exactly up to rounding.
inline std::pair<DailySeries, DailySeries> interpolate_daily(const std::vector<ReportInterval>& intervals) {
    if (intervals.empty()) fail_data("InsufficientReports: no intervals to interpolate");
    DailySeries cases, deaths;
    cases.start = intervals.front().from + 1;
    deaths.start = cases.start;
    for (const ReportInterval& iv : intervals) {
        const int days = iv.to - iv.from;
        const double per_day_cases = iv.new_cases / days;
        const double per_day_deaths = iv.new_deaths / days;
        for (int d = 0; d < days; ++d) {
            cases.v.push_back(per_day_cases);
            deaths.v.push_back(per_day_deaths);
        }
    }
    return {std::move(cases), std::move(deaths)};
}

// ---------------------------------------------------------------------------
// Normalization and neighbor means
// ---------------------------------------------------------------------------

inline void normalize_per_10k(std::vector<double>& v, double population) {
    if (!(population > 0.0)) fail_data("NonPositivePopulation: population must be > 0");
    const double f = 10000.0 / population;
    for (double& x : v) x *= f;
}

// ---------------------------------------------------------------------------
// Frame assembly
// ---------------------------------------------------------------------------

struct PrepWarnings {
    size_t clamped_deltas = 0;
    std::vector<std::string> notes;
};

// Builds aligned frames for every governorate in the registry. Requires at
// least two cholera reports and full rainfall coverage per governorate; the
// common date range is the intersection of per-governorate case and rainfall
// coverage, and conflict is zero-filled over it.
inline std::vector<GovernorateFrame> build_frames(const std::vector<ingest::CholeraReport>& reports,
                                                  const std::map<std::string, DailySeries>& rainfall,
                                                  const std::map<std::string, DailySeries>& conflict,
                                                  const ingest::Registry& reg,
                                                  PrepWarnings* warnings = nullptr) {
    if (reg.govs.empty()) fail_data("EmptyRegistry: no governorates");

    // Per-governorate raw daily series from the cumulative reports.
    std::map<std::string, std::pair<DailySeries, DailySeries>> cases_deaths;
    {
        size_t i = 0;
        while (i < reports.size()) {
            size_t j = i;
            while (j < reports.size() && reports[j].gov == reports[i].gov) ++j;
            std::vector<ingest::CholeraReport> group(reports.begin() + static_cast<ptrdiff_t>(i),
                                                     reports.begin() + static_cast<ptrdiff_t>(j));
            IntervalResult ivr = cumulative_to_new(group);
            if (warnings) {
                warnings->clamped_deltas += ivr.clamped;
                if (ivr.clamped > 0)
                    warnings->notes.push_back("governorate '" + group[0].gov + "': clamped " +
                                              std::to_string(ivr.clamped) + " negative report delta(s) to 0");
            }
            cases_deaths.emplace(group[0].gov, interpolate_daily(ivr.intervals));
            i = j;
        }
    }

    for (const ingest::GovMeta& g : reg.govs) {
        if (!cases_deaths.count(g.id))
            fail_data("InsufficientReports: governorate '" + g.id + "' has no cholera reports");
        if (!rainfall.count(g.id))
            fail_data("MissingRainfall: governorate '" + g.id + "' has no mapped rainfall cells");
    }

    // Common range: intersection of case and rainfall coverage across all
    // governorates. Conflict may be missing or partial; it zero-fills.
    Date lo = cases_deaths.begin()->second.first.start;
    Date hi = cases_deaths.begin()->second.first.end();
    for (const auto& [gov, cd] : cases_deaths) {
        lo = std::max(lo, cd.first.start);
        hi = std::min(hi, cd.first.end());
    }
    for (const auto& [gov, rs] : rainfall) {
        if (reg.index(gov) < 0) continue;  // unmapped extra coverage is harmless
        lo = std::max(lo, rs.start);
        hi = std::min(hi, rs.end());
    }
    if (hi < lo) fail_data("EmptyDateRange: case and rainfall coverage do not overlap");
    const size_t n_days = static_cast<size_t>(hi - lo) + 1;

    auto crop = [&](const DailySeries& s) {
        std::vector<double> v(n_days);
        for (size_t d = 0; d < n_days; ++d) v[d] = s.v[static_cast<size_t>((lo + static_cast<int>(d)) - s.start)];
        return v;
    };
    auto crop_zero_fill = [&](const DailySeries* s) {
        std::vector<double> v(n_days, 0.0);
        if (!s) return v;
        for (size_t d = 0; d < n_days; ++d) {
            const Date day = lo + static_cast<int>(d);
            if (day >= s->start && day <= s->end()) v[d] = s->at(day);
        }
        return v;
    };

    std::vector<GovernorateFrame> frames;
    frames.reserve(reg.govs.size());
    for (const ingest::GovMeta& g : reg.govs) {
        GovernorateFrame f;
        f.gov = g.id;
        f.start = lo;
        const auto& cd = cases_deaths.at(g.id);
        f.series[kNewCases] = crop(cd.first);
        f.series[kNewDeaths] = crop(cd.second);
        normalize_per_10k(f.series[kNewCases], g.population);
        normalize_per_10k(f.series[kNewDeaths], g.population);
        f.series[kRainfall] = crop(rainfall.at(g.id));
        auto cit = conflict.find(g.id);
        f.series[kConflict] = crop_zero_fill(cit == conflict.end() ? nullptr : &cit->second);
        frames.push_back(std::move(f));
    }

    // Neighbor means over the aligned frames; isolated governorates get
    // all-zero neighbor series.
    const std::array<std::pair<int, int>, 4> nb_pairs = {{{kNewCases, kNbNewCases},
                                                          {kNewDeaths, kNbNewDeaths},
                                                          {kRainfall, kNbRainfall},
                                                          {kConflict, kNbConflict}}};
    for (size_t gi = 0; gi < reg.govs.size(); ++gi) {
        const auto& neighbors = reg.govs[gi].neighbors;
        for (const auto& [src, dst] : nb_pairs) {
            std::vector<double> nb(n_days, 0.0);
            if (!neighbors.empty()) {
                for (const std::string& nb_id : neighbors) {
                    const int ni = reg.index(nb_id);
                    const auto& src_v = frames[static_cast<size_t>(ni)].series[src];
                    for (size_t d = 0; d < n_days; ++d) nb[d] += src_v[d];
                }
                const double inv = 1.0 / static_cast<double>(neighbors.size());
                for (double& x : nb) x *= inv;
            }
            frames[gi].series[dst] = std::move(nb);
        }
    }
    return frames;
}

// ---------------------------------------------------------------------------
// Targets and panel
// ---------------------------------------------------------------------------

// Sum of `series` over days [t + 14(k-1) + 1, t + 14k], or NaN when the
// series ends before t + 14k.
inline double build_target(const std::vector<double>& series, Date series_start, Date t, int horizon) {
    const int first = (t - series_start) + kHorizonDays * (horizon - 1) + 1;
    const int last = (t - series_start) + kHorizonDays * horizon;
    if (first < 0 || last >= static_cast<int>(series.size()))
        return std::numeric_limits<double>::quiet_NaN();
    double s = 0.0;
    for (int d = first; d <= last; ++d) s += series[static_cast<size_t>(d)];
    return s;
}

// Collects every anchor with >= 56 days of history. Anchors lacking the
// future window for some horizon keep the sample but get a NaN target there
// (those rows still produce forecasts).
inline Panel assemble_panel(std::vector<GovernorateFrame> frames) {
    Panel panel;
    if (frames.empty()) fail_data("EmptyPanel: no governorate frames");
    std::sort(frames.begin(), frames.end(),
              [](const GovernorateFrame& a, const GovernorateFrame& b) { return a.gov < b.gov; });

    for (const auto& f : frames) {
        if (f.n_days() == 0) fail_data("EmptyPanel: empty frame for '" + f.gov + "'");
        panel.gov_ids.push_back(f.gov);
    }

    for (uint32_t gi = 0; gi < frames.size(); ++gi) {
        const GovernorateFrame& f = frames[gi];
        const Date first_anchor = f.start + (kHistoryDays - 1);
        panel.excluded_short_history += static_cast<size_t>(
            std::min(f.n_days(), kHistoryDays - 1));
        for (Date t = first_anchor; t <= f.end(); ++t) {
            panel.samples.push_back({gi, t});
            for (int k = 1; k <= kMaxHorizon; ++k)
                panel.targets[static_cast<size_t>(k - 1)].push_back(
                    build_target(f.series[kNewCases], f.start, t, k));
        }
    }
    if (panel.samples.empty()) fail_data("EmptyPanel: no anchor has 56 days of history");
    panel.frames = std::move(frames);
    return panel;
}

}  // namespace cholcast::prep
