#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <cholcast/rng.hpp>
#include <cholcast/tpe.hpp>

using namespace cholcast;

namespace {

const tpe::SearchSpace& cube3() {
    static const tpe::SearchSpace s = [] {
        tpe::SearchSpace sp;
        sp.dims = {{"a", tpe::ParamType::uniform, -5.0, 5.0},
                   {"b", tpe::ParamType::uniform, -5.0, 5.0},
                   {"c", tpe::ParamType::uniform, -5.0, 5.0}};
        return sp;
    }();
    return s;
}

double sphere(const std::vector<double>& p) {
    const double c0 = 1.2, c1 = -2.3, c2 = 3.4;
    return (p[0] - c0) * (p[0] - c0) + (p[1] - c1) * (p[1] - c1) + (p[2] - c2) * (p[2] - c2);
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

TEST_CASE("guided search beats paired random search on the three-dimensional quadratic") {
    std::vector<double> guided, random;
    for (uint64_t seed = 1; seed <= 20; ++seed) {
        const auto g = tpe::optimize(cube3(), sphere, 60, seed);
        tpe::TpeConfig pure;
        pure.n_startup = 60;  // startup draws only: random search on the same stream
        const auto r = tpe::optimize(cube3(), sphere, 60, seed, pure);
        guided.push_back(g.best().loss);
        random.push_back(r.best().loss);
    }
    INFO("guided median " << median(guided) << " vs random median " << median(random));
    CHECK(median(guided) <= median(random));
}

TEST_CASE("every proposal of every trial stays inside the bounds") {
    tpe::SearchSpace space;
    space.dims = {{"u", tpe::ParamType::uniform, -2.0, 3.0},
                  {"l", tpe::ParamType::log_uniform, 0.01, 100.0},
                  {"i", tpe::ParamType::int_uniform, 2, 9}};
    auto obj = [](const std::vector<double>& p) {
        return std::fabs(p[0]) + std::fabs(std::log(p[1])) + p[2];
    };
    for (uint64_t seed = 100; seed < 106; ++seed) {
        const auto res = tpe::optimize(space, obj, 60, seed);
        REQUIRE(res.trials.size() == 60);
        for (const auto& t : res.trials) {
            REQUIRE(t.params.size() == 3);
            for (size_t d = 0; d < 3; ++d) {
                REQUIRE(t.params[d] >= space.dims[d].lo);
                REQUIRE(t.params[d] <= space.dims[d].hi);
            }
            REQUIRE(t.params[2] == std::round(t.params[2]));  // integer dimension
        }
    }
}

TEST_CASE("the running best loss never increases") {
    const auto res = tpe::optimize(cube3(), sphere, 80, 7);
    double best = std::numeric_limits<double>::infinity();
    std::vector<double> seq;
    for (const auto& t : res.trials) {
        if (std::isfinite(t.loss)) best = std::min(best, t.loss);
        seq.push_back(best);
    }
    for (size_t i = 1; i < seq.size(); ++i) REQUIRE(seq[i] <= seq[i - 1]);
    REQUIRE(res.best().loss == seq.back());
}

TEST_CASE("runs that never leave the startup phase reproduce the prior stream exactly") {
    const uint64_t seed = 31;
    const auto res = tpe::optimize(cube3(), sphere, 10, seed);  // n_startup = 10
    Rng rng(derive_seed(seed, "tpe"));
    for (const auto& t : res.trials) {
        const auto want = tpe::prior_draw(cube3(), rng);
        REQUIRE(t.params == want);
    }

    // A single trial is exactly the first startup draw.
    const auto one = tpe::optimize(cube3(), sphere, 1, seed);
    REQUIRE(one.trials.size() == 1);
    REQUIRE(one.best_index == 0);
    REQUIRE(one.trials[0].params == res.trials[0].params);
}

TEST_CASE("suggestions concentrate where the good trials cluster") {
    tpe::SearchSpace space;
    space.dims = {{"eta", tpe::ParamType::log_uniform, 0.01, 0.3}};

    // 20 finished trials; the five lowest losses sit around eta = 0.05, the
    // rest spread over the upper range.
    std::vector<tpe::Trial> history;
    for (int i = 0; i < 5; ++i)
        history.push_back({{0.045 + 0.0025 * i}, 0.1 + 0.01 * i});
    for (int i = 0; i < 15; ++i)
        history.push_back({{0.12 + 0.012 * i}, 1.0 + 0.05 * i});

    int inside = 0;
    for (uint64_t s = 0; s < 1000; ++s) {
        Rng rng(derive_seed(9000, "suggest", s));
        const auto p = tpe::suggest(space, history, rng);
        REQUIRE(p.size() == 1);
        REQUIRE(p[0] >= 0.01);
        REQUIRE(p[0] <= 0.3);
        if (p[0] <= 0.15) ++inside;
    }
    INFO(inside << " of 1000 suggestions fell at or below 0.15");
    CHECK(inside >= 900);

    // Fixed seed and history give a repeatable suggestion.
    Rng r1(123456), r2(123456);
    CHECK(tpe::suggest(space, history, r1) == tpe::suggest(space, history, r2));

    // With no history the suggestion is a prior draw within bounds.
    Rng r3(99);
    const auto fresh = tpe::suggest(space, {}, r3);
    REQUIRE(fresh.size() == 1);
    CHECK(fresh[0] >= 0.01);
    CHECK(fresh[0] <= 0.3);
}

TEST_CASE("failed trials are recorded, excluded from best, and do not derail the search") {
    const double inf = std::numeric_limits<double>::infinity();
    auto spotty = [&](const std::vector<double>& p) {
        return p[0] > 0.0 ? inf : sphere(p);  // half the cube fails
    };
    const auto res = tpe::optimize(cube3(), spotty, 40, 5);
    REQUIRE(res.trials.size() == 40);
    size_t n_failed = 0;
    for (const auto& t : res.trials) n_failed += !std::isfinite(t.loss);
    REQUIRE(n_failed > 0);
    REQUIRE(std::isfinite(res.best().loss));
    for (const auto& t : res.trials)
        if (std::isfinite(t.loss)) REQUIRE(res.best().loss <= t.loss);

    auto never = [&](const std::vector<double>&) { return inf; };
    CHECK_THROWS_WITH(tpe::optimize(cube3(), never, 5, 1),
                      Catch::Matchers::ContainsSubstring("AllTrialsFailed"));
}

TEST_CASE("a constant objective is optimized without complaint") {
    const auto res = tpe::optimize(cube3(), [](const std::vector<double>&) { return 2.5; }, 30, 11);
    REQUIRE(res.trials.size() == 30);
    CHECK(res.best().loss == 2.5);
    CHECK(res.best_index == 0);  // ties keep the earliest trial
}

TEST_CASE("search spaces and trial counts are validated") {
    tpe::SearchSpace bad;
    bad.dims = {{"", tpe::ParamType::uniform, 0.0, 1.0}};
    CHECK_THROWS_WITH(bad.validate(), Catch::Matchers::ContainsSubstring("unnamed"));
    bad.dims = {{"x", tpe::ParamType::uniform, 1.0, 1.0}};
    CHECK_THROWS_WITH(bad.validate(), Catch::Matchers::ContainsSubstring("lo < hi"));
    bad.dims = {{"x", tpe::ParamType::log_uniform, 0.0, 1.0}};
    CHECK_THROWS_WITH(bad.validate(), Catch::Matchers::ContainsSubstring("lo > 0"));

    CHECK_THROWS_WITH(tpe::optimize(cube3(), sphere, 0, 1),
                      Catch::Matchers::ContainsSubstring("BadTrialCount"));

    const auto def = tpe::default_gbt_space();
    REQUIRE_NOTHROW(def.validate());
    REQUIRE(def.dims.size() == 8);
    // Dimension order is part of the seeded-stream contract.
    const std::vector<std::string> names = {"eta",    "n_rounds", "max_depth", "min_child_weight",
                                            "lambda", "gamma",    "subsample", "colsample"};
    for (size_t i = 0; i < names.size(); ++i) REQUIRE(def.dims[i].name == names[i]);
}
