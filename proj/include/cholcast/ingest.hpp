#pragma once

// Input parsing and raw aggregation.
//
// File formats (UTF-8 CSV, comma separated, '.' decimal, ISO-8601 dates,
// header row required; unknown columns are ignored with a warning):
//   cholera.csv       governorate,date,cumulative_cases,cumulative_deaths
//   rainfall.csv      lat,lon,date,mm            (0.25-degree lattice cells)
//   conflict.csv      governorate,date,fatalities
//   gridmap.csv       lat,lon,governorate        (governorate may be "outside")
//   governorates.json array of {id, population, neighbors: [id, ...]}

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "core.hpp"
#include "csv.hpp"

namespace cholcast::ingest {

struct CholeraReport {
    std::string gov;
    Date date;
    double cum_cases = 0.0;
    double cum_deaths = 0.0;
};

struct RainObs {
    int lat4 = 0;  // lat * 4, quantized onto the 0.25-degree lattice
    int lon4 = 0;
    Date date;
    double mm = 0.0;
};

struct ConflictEvent {
    std::string gov;
    Date date;
    double fatalities = 0.0;
};

// Grid cell -> governorate id; cells mapped to "outside" are dropped.
struct GridMap {
    std::map<std::pair<int, int>, std::string> cells;

    // nullptr when unmapped; empty string when "outside".
    const std::string* lookup(int lat4, int lon4) const {
        auto it = cells.find({lat4, lon4});
        return it == cells.end() ? nullptr : &it->second;
    }
};

struct GovMeta {
    std::string id;
    double population = 0.0;
    std::vector<std::string> neighbors;
};

struct Registry {
    std::vector<GovMeta> govs;  // sorted by id

    int index(const std::string& id) const {
        auto it = std::lower_bound(govs.begin(), govs.end(), id,
                                   [](const GovMeta& g, const std::string& s) { return g.id < s; });
        if (it == govs.end() || it->id != id) return -1;
        return static_cast<int>(it - govs.begin());
    }
};

// Contiguous daily values starting at `start`.
struct DailySeries {
    Date start;
    std::vector<double> v;

    Date end() const { return start + static_cast<int>(v.size()) - 1; }
    double at(Date d) const { return v[static_cast<size_t>(d - start)]; }
};

namespace detail {

inline int quantize_quarter_degree(double coord, const std::string& source, size_t line_no) {
    const double scaled = coord * 4.0;
    const double rounded = std::round(scaled);
    if (std::fabs(scaled - rounded) > 1e-6)
        fail_data("OffLatticeCell: " + source + " line " + std::to_string(line_no) +
                  ": coordinate " + fmt_double(coord) + " is not on the 0.25-degree lattice");
    return static_cast<int>(rounded);
}

// Maps header names to column indices; required columns must exist, others
// produce a warning and are skipped.
inline std::vector<int> required_columns(const csv::Table& t, const std::string& source,
                                         const std::vector<std::string>& required,
                                         std::vector<std::string>* warnings) {
    std::vector<int> idx;
    for (const auto& name : required) {
        const int c = t.column(name);
        if (c < 0) fail_data("MissingColumn: " + source + ": required column '" + name + "'");
        idx.push_back(c);
    }
    for (const auto& name : t.header) {
        if (std::find(required.begin(), required.end(), name) == required.end() && warnings)
            warnings->push_back(source + ": ignoring unknown column '" + name + "'");
    }
    return idx;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Parsers. Each returns records sorted by natural key and rejects duplicates
// where the format forbids them.
// ---------------------------------------------------------------------------

inline std::vector<CholeraReport> parse_cholera(const csv::Table& t, const std::string& source = "cholera.csv",
                                                std::vector<std::string>* warnings = nullptr) {
    const auto cols = detail::required_columns(t, source, {"governorate", "date", "cumulative_cases", "cumulative_deaths"}, warnings);
    std::vector<CholeraReport> out;
    out.reserve(t.rows.size());
    for (size_t i = 0; i < t.rows.size(); ++i) {
        const auto& row = t.rows[i];
        const size_t ln = t.line_numbers[i];
        CholeraReport r;
        r.gov = row[cols[0]];
        r.date = Date::parse(row[cols[1]]);
        r.cum_cases = csv::parse_double(row[cols[2]], source, ln);
        r.cum_deaths = csv::parse_double(row[cols[3]], source, ln);
        if (r.gov.empty()) fail_data("MalformedRow: " + source + " line " + std::to_string(ln) + ": empty governorate");
        if (r.cum_cases < 0.0 || r.cum_deaths < 0.0)
            fail_data("MalformedRow: " + source + " line " + std::to_string(ln) + ": negative cumulative count");
        out.push_back(std::move(r));
    }
    std::stable_sort(out.begin(), out.end(), [](const CholeraReport& a, const CholeraReport& b) {
        return a.gov < b.gov || (a.gov == b.gov && a.date < b.date);
    });
    for (size_t i = 1; i < out.size(); ++i)
        if (out[i].gov == out[i - 1].gov && out[i].date == out[i - 1].date)
            fail_data("DuplicateReport: " + source + ": governorate '" + out[i].gov + "' date " + out[i].date.str());
    return out;
}

inline std::vector<RainObs> parse_rainfall(const csv::Table& t, const std::string& source = "rainfall.csv",
                                           std::vector<std::string>* warnings = nullptr) {
    const auto cols = detail::required_columns(t, source, {"lat", "lon", "date", "mm"}, warnings);
    std::vector<RainObs> out;
    out.reserve(t.rows.size());
    for (size_t i = 0; i < t.rows.size(); ++i) {
        const auto& row = t.rows[i];
        const size_t ln = t.line_numbers[i];
        RainObs r;
        r.lat4 = detail::quantize_quarter_degree(csv::parse_double(row[cols[0]], source, ln), source, ln);
        r.lon4 = detail::quantize_quarter_degree(csv::parse_double(row[cols[1]], source, ln), source, ln);
        r.date = Date::parse(row[cols[2]]);
        r.mm = csv::parse_double(row[cols[3]], source, ln);
        if (r.mm < 0.0) fail_data("MalformedRow: " + source + " line " + std::to_string(ln) + ": negative rainfall");
        out.push_back(r);
    }
    return out;
}

inline std::vector<ConflictEvent> parse_conflict(const csv::Table& t, const std::string& source = "conflict.csv",
                                                 std::vector<std::string>* warnings = nullptr) {
    const auto cols = detail::required_columns(t, source, {"governorate", "date", "fatalities"}, warnings);
    std::vector<ConflictEvent> out;
    out.reserve(t.rows.size());
    for (size_t i = 0; i < t.rows.size(); ++i) {
        const auto& row = t.rows[i];
        const size_t ln = t.line_numbers[i];
        ConflictEvent e;
        e.gov = row[cols[0]];
        e.date = Date::parse(row[cols[1]]);
        e.fatalities = csv::parse_double(row[cols[2]], source, ln);
        if (e.gov.empty()) fail_data("MalformedRow: " + source + " line " + std::to_string(ln) + ": empty governorate");
        if (e.fatalities < 0.0)
            fail_data("MalformedRow: " + source + " line " + std::to_string(ln) + ": negative fatalities");
        out.push_back(std::move(e));
    }
    return out;
}

inline GridMap parse_gridmap(const csv::Table& t, const std::string& source = "gridmap.csv",
                             std::vector<std::string>* warnings = nullptr) {
    const auto cols = detail::required_columns(t, source, {"lat", "lon", "governorate"}, warnings);
    GridMap gm;
    for (size_t i = 0; i < t.rows.size(); ++i) {
        const auto& row = t.rows[i];
        const size_t ln = t.line_numbers[i];
        const int lat4 = detail::quantize_quarter_degree(csv::parse_double(row[cols[0]], source, ln), source, ln);
        const int lon4 = detail::quantize_quarter_degree(csv::parse_double(row[cols[1]], source, ln), source, ln);
        std::string gov = row[cols[2]];
        if (gov.empty()) fail_data("MalformedRow: " + source + " line " + std::to_string(ln) + ": empty governorate");
        if (gov == "outside") gov.clear();
        auto [it, inserted] = gm.cells.insert({{lat4, lon4}, std::move(gov)});
        if (!inserted)
            fail_data("DuplicateCell: " + source + " line " + std::to_string(ln) + ": cell mapped twice");
    }
    return gm;
}

inline Registry load_registry(const std::string& json_text, const std::string& source = "governorates.json") {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::exception& e) {
        fail_data("MalformedRegistry: " + source + ": " + e.what());
    }
    if (!j.is_array()) fail_data("MalformedRegistry: " + source + ": expected a top-level array");

    Registry reg;
    for (const auto& item : j) {
        if (!item.is_object() || !item.contains("id") || !item.contains("population") || !item.contains("neighbors"))
            fail_data("MalformedRegistry: " + source + ": entries need id, population, neighbors");
        GovMeta g;
        g.id = item["id"].get<std::string>();
        g.population = item["population"].get<double>();
        for (const auto& nb : item["neighbors"]) g.neighbors.push_back(nb.get<std::string>());
        if (g.population <= 0.0)
            fail_data("NonPositivePopulation: " + source + ": governorate '" + g.id + "'");
        std::sort(g.neighbors.begin(), g.neighbors.end());
        if (std::adjacent_find(g.neighbors.begin(), g.neighbors.end()) != g.neighbors.end())
            fail_data("MalformedRegistry: " + source + ": duplicate neighbor for '" + g.id + "'");
        reg.govs.push_back(std::move(g));
    }
    std::sort(reg.govs.begin(), reg.govs.end(), [](const GovMeta& a, const GovMeta& b) { return a.id < b.id; });
    for (size_t i = 1; i < reg.govs.size(); ++i)
        if (reg.govs[i].id == reg.govs[i - 1].id)
            fail_data("DuplicateGovernorate: " + source + ": '" + reg.govs[i].id + "'");

    // Adjacency must be symmetric, reference known ids, and exclude self.
    for (const GovMeta& g : reg.govs) {
        for (const std::string& nb : g.neighbors) {
            if (nb == g.id) fail_data("SelfNeighbor: " + source + ": '" + g.id + "'");
            const int j2 = reg.index(nb);
            if (j2 < 0) fail_data("UnknownNeighbor: " + source + ": '" + g.id + "' lists '" + nb + "'");
            const auto& back = reg.govs[static_cast<size_t>(j2)].neighbors;
            if (!std::binary_search(back.begin(), back.end(), g.id))
                fail_data("AsymmetricAdjacency: " + source + ": '" + g.id + "' lists '" + nb +
                          "' but not vice versa");
        }
    }
    return reg;
}

// ---------------------------------------------------------------------------
// Aggregation
// ---------------------------------------------------------------------------

// Daily governorate rainfall = mean over the lattice cells mapped to it.
// Observations on "outside" cells are dropped; cells absent from the map are
// an error. Input order does not matter: observations are sorted first.
inline std::map<std::string, DailySeries> aggregate_rainfall(std::vector<RainObs> obs, const GridMap& gm) {
    struct Key {
        std::string gov;
        Date date;
    };
    std::vector<std::pair<Key, double>> tagged;
    tagged.reserve(obs.size());
    for (const RainObs& o : obs) {
        const std::string* gov = gm.lookup(o.lat4, o.lon4);
        if (!gov)
            fail_data("UnmappedCell: rainfall cell (" + fmt_double(o.lat4 / 4.0) + ", " +
                      fmt_double(o.lon4 / 4.0) + ") missing from grid map");
        if (gov->empty()) continue;  // outside
        tagged.push_back({{*gov, o.date}, o.mm});
    }
    std::sort(tagged.begin(), tagged.end(), [](const auto& a, const auto& b) {
        if (a.first.gov != b.first.gov) return a.first.gov < b.first.gov;
        if (a.first.date != b.first.date) return a.first.date < b.first.date;
        return a.second < b.second;
    });

    std::map<std::string, DailySeries> out;
    size_t i = 0;
    while (i < tagged.size()) {
        const std::string& gov = tagged[i].first.gov;
        size_t gov_end = i;
        while (gov_end < tagged.size() && tagged[gov_end].first.gov == gov) ++gov_end;

        DailySeries s;
        s.start = tagged[i].first.date;
        Date expected = s.start;
        size_t j = i;
        while (j < gov_end) {
            const Date d = tagged[j].first.date;
            if (d != expected)
                fail_data("RainfallGap: governorate '" + gov + "' missing " + expected.str());
            double sum = 0.0;
            size_t cnt = 0;
            while (j < gov_end && tagged[j].first.date == d) {
                sum += tagged[j].second;
                ++cnt;
                ++j;
            }
            s.v.push_back(sum / static_cast<double>(cnt));
            ++expected;
        }
        out.emplace(gov, std::move(s));
        i = gov_end;
    }
    return out;
}

// Daily governorate conflict fatalities, summed per day and zero-filled over
// the global event date range.
inline std::map<std::string, DailySeries> aggregate_conflict(std::vector<ConflictEvent> events) {
    std::map<std::string, DailySeries> out;
    if (events.empty()) return out;
    std::sort(events.begin(), events.end(), [](const ConflictEvent& a, const ConflictEvent& b) {
        if (a.gov != b.gov) return a.gov < b.gov;
        if (a.date != b.date) return a.date < b.date;
        return a.fatalities < b.fatalities;
    });
    Date lo = events[0].date, hi = events[0].date;
    for (const ConflictEvent& e : events) {
        lo = std::min(lo, e.date);
        hi = std::max(hi, e.date);
    }
    const size_t n_days = static_cast<size_t>(hi - lo) + 1;
    for (size_t i = 0; i < events.size();) {
        const std::string& gov = events[i].gov;
        DailySeries s;
        s.start = lo;
        s.v.assign(n_days, 0.0);
        while (i < events.size() && events[i].gov == gov) {
            s.v[static_cast<size_t>(events[i].date - lo)] += events[i].fatalities;
            ++i;
        }
        out.emplace(gov, std::move(s));
    }
    return out;
}

// Every governorate id appearing in data files must exist in the registry.
inline void validate_governorates(const std::vector<CholeraReport>& reports,
                                  const std::vector<ConflictEvent>& events, const GridMap& gm,
                                  const Registry& reg) {
    std::set<std::string> seen;
    for (const auto& r : reports) seen.insert(r.gov);
    for (const auto& e : events) seen.insert(e.gov);
    for (const auto& [cell, gov] : gm.cells)
        if (!gov.empty()) seen.insert(gov);
    for (const auto& gov : seen)
        if (reg.index(gov) < 0) fail_data("UnknownGovernorate: '" + gov + "' not in the registry");
}

// ---------------------------------------------------------------------------
// Serializers (round-trip counterparts of the parsers)
// ---------------------------------------------------------------------------

inline std::string write_cholera(const std::vector<CholeraReport>& rows) {
    std::string out = "governorate,date,cumulative_cases,cumulative_deaths\n";
    for (const auto& r : rows)
        out += r.gov + "," + r.date.str() + "," + fmt_double(r.cum_cases) + "," + fmt_double(r.cum_deaths) + "\n";
    return out;
}

inline std::string write_rainfall(const std::vector<RainObs>& rows) {
    std::string out = "lat,lon,date,mm\n";
    for (const auto& r : rows)
        out += fmt_double(r.lat4 / 4.0) + "," + fmt_double(r.lon4 / 4.0) + "," + r.date.str() + "," +
               fmt_double(r.mm) + "\n";
    return out;
}

inline std::string write_conflict(const std::vector<ConflictEvent>& rows) {
    std::string out = "governorate,date,fatalities\n";
    for (const auto& r : rows) out += r.gov + "," + r.date.str() + "," + fmt_double(r.fatalities) + "\n";
    return out;
}

inline std::string write_gridmap(const GridMap& gm) {
    std::string out = "lat,lon,governorate\n";
    for (const auto& [cell, gov] : gm.cells)
        out += fmt_double(cell.first / 4.0) + "," + fmt_double(cell.second / 4.0) + "," +
               (gov.empty() ? std::string("outside") : gov) + "\n";
    return out;
}

inline std::string write_registry(const Registry& reg) {
    nlohmann::ordered_json j = nlohmann::ordered_json::array();
    for (const GovMeta& g : reg.govs) {
        nlohmann::ordered_json item;
        item["id"] = g.id;
        item["population"] = g.population;
        item["neighbors"] = g.neighbors;
        j.push_back(item);
    }
    return j.dump(2) + "\n";
}

}  // namespace cholcast::ingest
