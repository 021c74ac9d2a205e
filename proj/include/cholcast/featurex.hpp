#pragma once

// Rolling-window summary statistics over the daily panel. Each feature column
// is one (series, trailing window, statistic) triple; its value at anchor t
// summarizes days [t - window + 1, t].

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "core.hpp"
#include "prep.hpp"

namespace cholcast::featurex {

// Lexicographic by name; column order depends on it.
enum class Stat : int {
    kAboveMeanLast = 0,
    kAbsEnergy,
    kAbsSumOfChanges,
    kAutocorrLag1,
    kCountAboveMean,
    kCountBelowMean,
    kFirst,
    kKurtosis,
    kLast,
    kLinearSlope,
    kLongestStrikeAboveMean,
    kMax,
    kMean,
    kMeanAbsChange,
    kMeanChange,
    kMedian,
    kMin,
    kNumberPeaks1,
    kNumberPeaks3,
    kQuantile25,
    kQuantile75,
    kRange,
    kSkewness,
    kStd,
    kSum,
    kVariance,
};
constexpr int kStatCount = static_cast<int>(Stat::kVariance) + 1;

inline const std::array<std::string, kStatCount>& stat_names() {
    static const std::array<std::string, kStatCount> names = {
        "above_mean_last", "abs_energy", "abs_sum_of_changes", "autocorr_lag1",
        "count_above_mean", "count_below_mean", "first", "kurtosis", "last",
        "linear_slope", "longest_strike_above_mean", "max", "mean",
        "mean_abs_change", "mean_change", "median", "min", "number_peaks_1",
        "number_peaks_3", "quantile_25", "quantile_75", "range", "skewness",
        "std", "sum", "variance"};
    return names;
}

inline int stat_index(const std::string& name) {
    const auto& names = stat_names();
    for (int i = 0; i < kStatCount; ++i)
        if (names[i] == name) return i;
    return -1;
}

inline const std::array<int, 5>& default_windows() {
    static const std::array<int, 5> w = {7, 14, 28, 42, 56};
    return w;
}

// ---------------------------------------------------------------------------
// Statistic kernels. Degenerate inputs (too few points, zero spread) fall
// back to 0 so columns stay finite everywhere.
// ---------------------------------------------------------------------------

namespace detail {

// Quantile with linear interpolation between order statistics at rank
// h = (n - 1) q (the numpy/R type-7 default). `sorted_v` must be ascending.
inline double quantile_sorted(const std::vector<double>& sorted_v, double q) {
    const size_t n = sorted_v.size();
    if (n == 1) return sorted_v[0];
    const double h = static_cast<double>(n - 1) * q;
    const size_t i = static_cast<size_t>(h);
    if (i + 1 >= n) return sorted_v[n - 1];
    const double frac = h - static_cast<double>(i);
    return sorted_v[i] + frac * (sorted_v[i + 1] - sorted_v[i]);
}

inline double mean_of(const double* v, size_t n) {
    double s = 0.0;
    for (size_t i = 0; i < n; ++i) s += v[i];
    return s / static_cast<double>(n);
}

// Central moment of given order about the mean.
inline double central_moment(const double* v, size_t n, double mean, int order) {
    double s = 0.0;
    for (size_t i = 0; i < n; ++i) {
        const double d = v[i] - mean;
        double p = d;
        for (int k = 1; k < order; ++k) p *= d;
        s += p;
    }
    return s / static_cast<double>(n);
}

}  // namespace detail

inline double compute_statistic(Stat stat, const double* v, size_t n) {
    if (n == 0) fail_internal("EmptyWindow: statistic over zero values");
    const double dn = static_cast<double>(n);
    switch (stat) {
        case Stat::kFirst:
            return v[0];
        case Stat::kLast:
            return v[n - 1];
        case Stat::kSum: {
            double s = 0.0;
            for (size_t i = 0; i < n; ++i) s += v[i];
            return s;
        }
        case Stat::kMean:
            return detail::mean_of(v, n);
        case Stat::kMax:
            return *std::max_element(v, v + n);
        case Stat::kMin:
            return *std::min_element(v, v + n);
        case Stat::kRange: {
            auto [lo, hi] = std::minmax_element(v, v + n);
            return *hi - *lo;
        }
        case Stat::kAbsEnergy: {
            double s = 0.0;
            for (size_t i = 0; i < n; ++i) s += v[i] * v[i];
            return s;
        }
        case Stat::kMedian: {
            std::vector<double> w(v, v + n);
            std::sort(w.begin(), w.end());
            const size_t mid = n / 2;
            return (n % 2 == 1) ? w[mid] : 0.5 * (w[mid - 1] + w[mid]);
        }
        case Stat::kQuantile25:
        case Stat::kQuantile75: {
            std::vector<double> w(v, v + n);
            std::sort(w.begin(), w.end());
            return detail::quantile_sorted(w, stat == Stat::kQuantile25 ? 0.25 : 0.75);
        }
        case Stat::kVariance:
            return detail::central_moment(v, n, detail::mean_of(v, n), 2);
        case Stat::kStd:
            return std::sqrt(detail::central_moment(v, n, detail::mean_of(v, n), 2));
        case Stat::kSkewness: {
            if (n < 3) return 0.0;
            const double mean = detail::mean_of(v, n);
            const double m2 = detail::central_moment(v, n, mean, 2);
            if (m2 == 0.0) return 0.0;
            const double m3 = detail::central_moment(v, n, mean, 3);
            const double g1 = m3 / (m2 * std::sqrt(m2));
            return g1 * std::sqrt(dn * (dn - 1.0)) / (dn - 2.0);
        }
        case Stat::kKurtosis: {
            if (n < 4) return 0.0;
            const double mean = detail::mean_of(v, n);
            const double m2 = detail::central_moment(v, n, mean, 2);
            if (m2 == 0.0) return 0.0;
            const double m4 = detail::central_moment(v, n, mean, 4);
            const double g2 = m4 / (m2 * m2) - 3.0;
            return ((dn + 1.0) * g2 + 6.0) * (dn - 1.0) / ((dn - 2.0) * (dn - 3.0));
        }
        case Stat::kMeanChange:
            return n < 2 ? 0.0 : (v[n - 1] - v[0]) / (dn - 1.0);
        case Stat::kMeanAbsChange: {
            if (n < 2) return 0.0;
            double s = 0.0;
            for (size_t i = 1; i < n; ++i) s += std::fabs(v[i] - v[i - 1]);
            return s / (dn - 1.0);
        }
        case Stat::kAbsSumOfChanges: {
            double s = 0.0;
            for (size_t i = 1; i < n; ++i) s += std::fabs(v[i] - v[i - 1]);
            return s;
        }
        case Stat::kLinearSlope: {
            if (n < 2) return 0.0;
            // OLS slope against x = 0..n-1: sum((x - xbar)(v - vbar)) / sum((x - xbar)^2).
            const double xbar = (dn - 1.0) / 2.0;
            const double vbar = detail::mean_of(v, n);
            double num = 0.0, den = 0.0;
            for (size_t i = 0; i < n; ++i) {
                const double dx = static_cast<double>(i) - xbar;
                num += dx * (v[i] - vbar);
                den += dx * dx;
            }
            return num / den;
        }
        case Stat::kAutocorrLag1: {
            if (n < 3) return 0.0;
            // Pearson correlation of (v[0..n-2], v[1..n-1]).
            const size_t m = n - 1;
            const double ma = detail::mean_of(v, m);
            const double mb = detail::mean_of(v + 1, m);
            double sab = 0.0, saa = 0.0, sbb = 0.0;
            for (size_t i = 0; i < m; ++i) {
                const double da = v[i] - ma;
                const double db = v[i + 1] - mb;
                sab += da * db;
                saa += da * da;
                sbb += db * db;
            }
            if (saa == 0.0 || sbb == 0.0) return 0.0;
            return sab / std::sqrt(saa * sbb);
        }
        case Stat::kCountAboveMean: {
            const double mean = detail::mean_of(v, n);
            double c = 0.0;
            for (size_t i = 0; i < n; ++i)
                if (v[i] > mean) c += 1.0;
            return c;
        }
        case Stat::kCountBelowMean: {
            const double mean = detail::mean_of(v, n);
            double c = 0.0;
            for (size_t i = 0; i < n; ++i)
                if (v[i] < mean) c += 1.0;
            return c;
        }
        case Stat::kAboveMeanLast:
            return v[n - 1] > detail::mean_of(v, n) ? 1.0 : 0.0;
        case Stat::kLongestStrikeAboveMean: {
            const double mean = detail::mean_of(v, n);
            int best = 0, run = 0;
            for (size_t i = 0; i < n; ++i) {
                run = v[i] > mean ? run + 1 : 0;
                best = std::max(best, run);
            }
            return static_cast<double>(best);
        }
        case Stat::kNumberPeaks1: {
            double c = 0.0;
            for (size_t i = 1; i + 1 < n; ++i)
                if (v[i] > v[i - 1] && v[i] > v[i + 1]) c += 1.0;
            return c;
        }
        case Stat::kNumberPeaks3: {
            // Strictly greater than all six neighbors within distance 3.
            if (n < 7) return 0.0;
            double c = 0.0;
            for (size_t i = 3; i + 3 < n; ++i) {
                bool peak = true;
                for (int d = 1; d <= 3 && peak; ++d)
                    peak = v[i] > v[i - static_cast<size_t>(d)] && v[i] > v[i + static_cast<size_t>(d)];
                if (peak) c += 1.0;
            }
            return c;
        }
    }
    fail_internal("UnknownStatistic: bad Stat enum value");
}

inline double compute_statistic(Stat stat, const std::vector<double>& v) {
    return compute_statistic(stat, v.data(), v.size());
}

// ---------------------------------------------------------------------------
// Feature catalog
// ---------------------------------------------------------------------------

struct FeatureDescriptor {
    int series = 0;  // prep::SeriesId
    int window = 0;  // trailing days
    Stat stat = Stat::kMean;

    std::string id() const {
        return prep::series_names()[static_cast<size_t>(series)] + "__w" + std::to_string(window) +
               "__" + stat_names()[static_cast<size_t>(static_cast<int>(stat))];
    }
};

inline FeatureDescriptor parse_descriptor(const std::string& id) {
    const size_t p1 = id.find("__w");
    const size_t p2 = id.find("__", p1 == std::string::npos ? p1 : p1 + 3);
    if (p1 == std::string::npos || p2 == std::string::npos)
        fail_data("BadFeatureId: '" + id + "' is not <series>__w<days>__<statistic>");
    FeatureDescriptor d;
    d.series = prep::series_index(id.substr(0, p1));
    if (d.series < 0) fail_data("BadFeatureId: unknown series in '" + id + "'");
    const std::string wtxt = id.substr(p1 + 3, p2 - (p1 + 3));
    int w = 0;
    auto [ptr, ec] = std::from_chars(wtxt.data(), wtxt.data() + wtxt.size(), w);
    if (ec != std::errc() || ptr != wtxt.data() + wtxt.size() || w <= 0)
        fail_data("BadFeatureId: bad window in '" + id + "'");
    d.window = w;
    const int si = stat_index(id.substr(p2 + 2));
    if (si < 0) fail_data("BadFeatureId: unknown statistic in '" + id + "'");
    d.stat = static_cast<Stat>(si);
    return d;
}

// Full default catalog: every series and window crossed with every statistic
// except quantile_75 (kept implemented for explicit requests, redundant with
// quantile_25/median/max in the default set). 8 x 5 x 25 = 1000 columns,
// ordered by (series name, window, statistic name) ascending.
inline std::vector<FeatureDescriptor> default_descriptors() {
    std::vector<FeatureDescriptor> out;
    out.reserve(1000);
    for (int s = 0; s < prep::kSeriesCount; ++s)
        for (int w : default_windows())
            for (int st = 0; st < kStatCount; ++st) {
                if (static_cast<Stat>(st) == Stat::kQuantile75) continue;
                out.push_back({s, w, static_cast<Stat>(st)});
            }
    return out;
}

// ---------------------------------------------------------------------------
// Extraction
// ---------------------------------------------------------------------------

// Row r = samples[r], column j = descs[j]. Every sample must have full window
// history (anchor - window + 1 >= frame start); the panel guarantees 56 days.
inline Matrix extract_features(const std::vector<prep::GovernorateFrame>& frames,
                               const std::vector<prep::Sample>& samples,
                               const std::vector<FeatureDescriptor>& descs) {
    // Columns grouped by (series, window) so each window buffer is filled once
    // per sample.
    struct Group {
        int series;
        int window;
        std::vector<std::pair<size_t, Stat>> cols;
    };
    std::vector<Group> groups;
    for (size_t j = 0; j < descs.size(); ++j) {
        const auto& d = descs[j];
        if (d.series < 0 || d.series >= prep::kSeriesCount)
            fail_internal("BadDescriptor: series index out of range");
        auto it = std::find_if(groups.begin(), groups.end(), [&](const Group& g) {
            return g.series == d.series && g.window == d.window;
        });
        if (it == groups.end()) {
            groups.push_back({d.series, d.window, {}});
            it = groups.end() - 1;
        }
        it->cols.emplace_back(j, d.stat);
    }

    Matrix m(samples.size(), descs.size());
    std::vector<double> buf;
    for (size_t r = 0; r < samples.size(); ++r) {
        const prep::Sample& s = samples[r];
        const prep::GovernorateFrame& f = frames[s.gov];
        const int t = s.anchor - f.start;
        for (const Group& g : groups) {
            const int first = t - g.window + 1;
            if (first < 0 || t >= f.n_days())
                fail_internal("ShortHistory: window " + std::to_string(g.window) +
                              " does not fit before anchor " + s.anchor.str());
            buf.assign(f.series[g.series].begin() + first, f.series[g.series].begin() + t + 1);
            for (const auto& [col, stat] : g.cols) m.at(r, col) = compute_statistic(stat, buf);
        }
    }
    return m;
}

}  // namespace cholcast::featurex
