#pragma once

// Sequential hyperparameter search. After a uniform startup phase, completed
// trials are split into a good and a bad set by loss quantile; each set
// induces a per-dimension Parzen mixture (uniform prior component plus one
// truncated Gaussian kernel per observation), and the next point maximizes
// the good-to-bad density ratio over a fixed candidate draw.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "core.hpp"
#include "rng.hpp"

namespace cholcast::tpe {

enum class ParamType {
    uniform,      // continuous on [lo, hi]
    log_uniform,  // continuous, uniform in log space
    int_uniform,  // integer-valued; sampled continuously then rounded
};

struct ParamSpec {
    std::string name;
    ParamType type = ParamType::uniform;
    double lo = 0.0;
    double hi = 1.0;
};

struct SearchSpace {
    std::vector<ParamSpec> dims;

    void validate() const {
        if (dims.empty()) fail_usage("EmptySearchSpace: no dimensions");
        for (const ParamSpec& d : dims) {
            if (d.name.empty()) fail_usage("BadSearchSpace: unnamed dimension");
            if (!(d.lo < d.hi)) fail_usage("BadSearchSpace: '" + d.name + "' needs lo < hi");
            if (d.type == ParamType::log_uniform && !(d.lo > 0.0))
                fail_usage("BadSearchSpace: log dimension '" + d.name + "' needs lo > 0");
        }
    }
};

struct Trial {
    std::vector<double> params;  // natural units, one per dimension
    double loss = 0.0;
};

struct TpeConfig {
    int n_startup = 10;    // pure prior draws before the estimator kicks in
    double gamma = 0.25;   // quantile of finite-loss trials forming the good set
    int n_candidates = 24; // draws from the good mixture per suggestion
};

namespace detail {

// Internal coordinates: log dims live in log space, everything else is
// untransformed. Densities and bandwidths are computed here; the shared
// Jacobian cancels in the density ratio.
inline double to_internal(const ParamSpec& d, double v) {
    return d.type == ParamType::log_uniform ? std::log(v) : v;
}
inline double from_internal(const ParamSpec& d, double v) {
    double out = d.type == ParamType::log_uniform ? std::exp(v) : v;
    out = std::clamp(out, d.lo, d.hi);
    if (d.type == ParamType::int_uniform) out = static_cast<double>(std::llround(out));
    return out;
}

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

struct Kernel {
    double mu = 0.0;
    double sigma = 1.0;
    double z = 1.0;  // truncation mass on [lo, hi]
};

// One-dimensional mixture: uniform prior plus one kernel per observation,
// all weighted 1 / (k + 1).
struct Mixture {
    double lo = 0.0;
    double hi = 1.0;
    std::vector<Kernel> kernels;

    double pdf(double x) const {
        if (x < lo || x > hi) return 0.0;
        double p = 1.0 / (hi - lo);
        for (const Kernel& k : kernels) {
            const double zs = (x - k.mu) / k.sigma;
            p += std::exp(-0.5 * zs * zs) / (k.sigma * std::sqrt(2.0 * 3.141592653589793238462643) * k.z);
        }
        return p / static_cast<double>(kernels.size() + 1);
    }

    // Component picked uniformly; kernel draws rejection-sample the
    // truncation, falling back to a clamp after too many misses.
    double sample(Rng& rng) const {
        const uint64_t c = rng.uniform_int(kernels.size() + 1);
        if (c == 0) return rng.uniform(lo, hi);
        const Kernel& k = kernels[c - 1];
        double x = 0.0;
        for (int attempt = 0; attempt < 1000; ++attempt) {
            x = rng.normal(k.mu, k.sigma);
            if (x >= lo && x <= hi) return x;
        }
        return std::clamp(x, lo, hi);
    }
};

// Bandwidth per observation: distance to the farther adjacent observation,
// with the range boundaries acting as outermost neighbors, clamped to
// [1% of range, range].
inline Mixture build_mixture(const ParamSpec& d, const std::vector<double>& obs_natural) {
    Mixture m;
    m.lo = to_internal(d, d.lo);
    m.hi = to_internal(d, d.hi);
    const double range = m.hi - m.lo;
    std::vector<double> v;
    v.reserve(obs_natural.size());
    for (const double x : obs_natural) v.push_back(to_internal(d, x));
    std::sort(v.begin(), v.end());
    for (size_t i = 0; i < v.size(); ++i) {
        const double left = i == 0 ? m.lo : v[i - 1];
        const double right = i + 1 == v.size() ? m.hi : v[i + 1];
        double bw = std::max(v[i] - left, right - v[i]);
        bw = std::clamp(bw, 0.01 * range, range);
        Kernel k;
        k.mu = v[i];
        k.sigma = bw;
        k.z = normal_cdf((m.hi - k.mu) / k.sigma) - normal_cdf((m.lo - k.mu) / k.sigma);
        m.kernels.push_back(k);
    }
    return m;
}

}  // namespace detail

inline std::vector<double> prior_draw(const SearchSpace& space, Rng& rng) {
    std::vector<double> out;
    out.reserve(space.dims.size());
    for (const ParamSpec& d : space.dims) {
        const double lo = detail::to_internal(d, d.lo);
        const double hi = detail::to_internal(d, d.hi);
        out.push_back(detail::from_internal(d, rng.uniform(lo, hi)));
    }
    return out;
}

// Proposes the next point given completed trials. Non-finite losses always
// land in the bad set; with no finite loss at all this degrades to a prior
// draw.
inline std::vector<double> suggest(const SearchSpace& space, const std::vector<Trial>& trials,
                                   Rng& rng, const TpeConfig& cfg = {}) {
    space.validate();
    std::vector<size_t> finite;
    std::vector<size_t> failed;
    for (size_t i = 0; i < trials.size(); ++i)
        (std::isfinite(trials[i].loss) ? finite : failed).push_back(i);
    if (finite.empty()) return prior_draw(space, rng);

    std::sort(finite.begin(), finite.end(), [&](size_t a, size_t b) {
        if (trials[a].loss != trials[b].loss) return trials[a].loss < trials[b].loss;
        return a < b;
    });
    const size_t n_good = std::max<size_t>(
        1, static_cast<size_t>(std::floor(cfg.gamma * static_cast<double>(finite.size()))));

    const size_t n_dims = space.dims.size();
    std::vector<detail::Mixture> good(n_dims), bad(n_dims);
    for (size_t dim = 0; dim < n_dims; ++dim) {
        std::vector<double> good_obs, bad_obs;
        for (size_t i = 0; i < finite.size(); ++i)
            (i < n_good ? good_obs : bad_obs).push_back(trials[finite[i]].params[dim]);
        for (const size_t i : failed) bad_obs.push_back(trials[i].params[dim]);
        good[dim] = detail::build_mixture(space.dims[dim], good_obs);
        bad[dim] = detail::build_mixture(space.dims[dim], bad_obs);
    }

    std::vector<double> best_point;
    double best_score = -std::numeric_limits<double>::infinity();
    for (int c = 0; c < cfg.n_candidates; ++c) {
        std::vector<double> point(n_dims);
        double score = 0.0;
        for (size_t dim = 0; dim < n_dims; ++dim) {
            // Rounding happens before scoring so integer dims are ranked by
            // the density at the value actually proposed.
            point[dim] = detail::from_internal(space.dims[dim], good[dim].sample(rng));
            const double xi = detail::to_internal(space.dims[dim], point[dim]);
            score += std::log(good[dim].pdf(xi)) - std::log(bad[dim].pdf(xi));
        }
        if (score > best_score) {
            best_score = score;
            best_point = std::move(point);
        }
    }
    return best_point;
}

using Objective = std::function<double(const std::vector<double>&)>;

struct OptResult {
    std::vector<Trial> trials;
    size_t best_index = 0;

    const Trial& best() const { return trials[best_index]; }
};

inline OptResult optimize(const SearchSpace& space, const Objective& objective, int n_trials,
                          uint64_t seed, const TpeConfig& cfg = {}) {
    space.validate();
    if (n_trials < 1) fail_usage("BadTrialCount: need at least 1 trial");
    Rng rng(derive_seed(seed, "tpe"));
    OptResult res;
    bool have_best = false;
    for (int t = 0; t < n_trials; ++t) {
        std::vector<double> params = t < cfg.n_startup ? prior_draw(space, rng)
                                                       : suggest(space, res.trials, rng, cfg);
        const double loss = objective(params);
        res.trials.push_back({std::move(params), loss});
        if (std::isfinite(loss) &&
            (!have_best || loss < res.trials[res.best_index].loss)) {
            res.best_index = res.trials.size() - 1;
            have_best = true;
        }
    }
    if (!have_best) fail_data("AllTrialsFailed: no trial produced a finite loss");
    return res;
}

// Boosted-tree search space; dimension order is part of the rng contract.
// Bounds are sized so a 25-trial search over a few hundred candidate columns
// stays well inside the single-threaded pipeline runtime budget.
inline SearchSpace default_gbt_space() {
    SearchSpace s;
    s.dims = {
        {"eta", ParamType::log_uniform, 0.05, 0.3},
        {"n_rounds", ParamType::int_uniform, 40, 120},
        {"max_depth", ParamType::int_uniform, 2, 4},
        {"min_child_weight", ParamType::uniform, 1.0, 8.0},
        {"lambda", ParamType::log_uniform, 0.1, 10.0},
        {"gamma", ParamType::uniform, 0.0, 3.0},
        {"subsample", ParamType::uniform, 0.7, 1.0},
        {"colsample", ParamType::uniform, 0.5, 0.9},
    };
    return s;
}

}  // namespace cholcast::tpe
