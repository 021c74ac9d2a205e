#pragma once

// Four-stage feature selection: rank-correlation significance with false
// discovery control, pairwise correlation pruning, tree-importance ranking,
// then greedy forward selection scored by cross-validation.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "core.hpp"
#include "cv.hpp"
#include "gbtree.hpp"
#include "rng.hpp"
#include "stats_tests.hpp"

namespace cholcast::select {

constexpr double kQCut = 0.001;     // max adjusted q-value to keep a column
constexpr double kCorrCut = 0.97;   // |Pearson r| above which a column is redundant
constexpr size_t kForwardCap = 50;  // max columns kept by forward selection
constexpr double kMinDelta = 1e-4;  // required cv improvement to accept a column

struct ColumnTest {
    size_t col = 0;
    bool binary = false;  // column values are exactly {0, 1}: rank-sum test
    double stat = 0.0;    // tau for continuous columns, U for binary ones
    double p = 1.0;
    double q = 1.0;
};

// Association of every column with the target: Kendall tau-b for continuous
// columns, Mann-Whitney U for binary ones, then Benjamini-Yekutieli q-values
// over all columns jointly.
inline std::vector<ColumnTest> significance_tests(const Matrix& x, const std::vector<double>& y) {
    if (x.n_rows != y.size()) fail_internal("DimensionMismatch: x rows != y length");
    if (x.n_rows == 0 || x.n_cols == 0) fail_data("EmptySelectionRegion: nothing to test");
    std::vector<ColumnTest> tests(x.n_cols);
    std::vector<double> colv(x.n_rows);
    std::vector<double> ps(x.n_cols);
    for (size_t j = 0; j < x.n_cols; ++j) {
        bool binary = true;
        for (size_t r = 0; r < x.n_rows; ++r) {
            colv[r] = x.at(r, j);
            if (colv[r] != 0.0 && colv[r] != 1.0) binary = false;
        }
        const stats::TestResult t =
            binary ? stats::mann_whitney_test(colv, y) : stats::kendall_test(colv, y);
        tests[j] = {j, binary, t.stat, t.p, 1.0};
        ps[j] = t.p;
    }
    const std::vector<double> qs = stats::benjamini_yekutieli(ps);
    for (size_t j = 0; j < x.n_cols; ++j) tests[j].q = qs[j];
    return tests;
}

// Columns passing the q cutoff, ordered by (q, column index) ascending. This
// order drives the correlation prune: stronger columns defend their spot.
inline std::vector<size_t> significant_columns(const std::vector<ColumnTest>& tests, double q_cut) {
    std::vector<size_t> idx;
    for (const ColumnTest& t : tests)
        if (t.q <= q_cut) idx.push_back(t.col);
    std::sort(idx.begin(), idx.end(), [&](size_t a, size_t b) {
        if (tests[a].q != tests[b].q) return tests[a].q < tests[b].q;
        return a < b;
    });
    return idx;
}

namespace detail {

inline double pearson(const Matrix& x, size_t a, size_t b) {
    const size_t n = x.n_rows;
    double ma = 0.0, mb = 0.0;
    for (size_t r = 0; r < n; ++r) {
        ma += x.at(r, a);
        mb += x.at(r, b);
    }
    ma /= static_cast<double>(n);
    mb /= static_cast<double>(n);
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (size_t r = 0; r < n; ++r) {
        const double da = x.at(r, a) - ma;
        const double db = x.at(r, b) - mb;
        sab += da * db;
        saa += da * da;
        sbb += db * db;
    }
    if (saa == 0.0 || sbb == 0.0) return 0.0;
    return sab / std::sqrt(saa * sbb);
}

// Plain column extraction; identity row map.
inline std::vector<size_t> iota_rows(size_t n) {
    std::vector<size_t> r(n);
    for (size_t i = 0; i < n; ++i) r[i] = i;
    return r;
}

}  // namespace detail

struct DroppedPair {
    size_t dropped = 0;  // column removed
    size_t kept = 0;     // column it duplicated
    double r = 0.0;
};

// Greedy prune in the given priority order: a column is dropped when it
// correlates above the cutoff with an already-kept column.
inline std::vector<size_t> correlation_prune(const Matrix& x, const std::vector<size_t>& ordered,
                                             double r_cut, std::vector<DroppedPair>* log = nullptr) {
    std::vector<size_t> kept;
    for (const size_t c : ordered) {
        bool redundant = false;
        for (const size_t k : kept) {
            const double r = detail::pearson(x, c, k);
            if (std::fabs(r) > r_cut) {
                redundant = true;
                if (log) log->push_back({c, k, r});
                break;
            }
        }
        if (!redundant) kept.push_back(c);
    }
    return kept;
}

// One boosted-tree fit over the selection region; columns ordered by total
// split gain descending, ties broken by column index. Zero-gain columns keep
// their relative index order at the tail.
inline std::vector<size_t> importance_rank(const Matrix& x, const std::vector<double>& y,
                                           const std::vector<size_t>& cols,
                                           gbtree::GbtParams params) {
    if (cols.empty()) return {};
    const Matrix sub = gather(x, detail::iota_rows(x.n_rows), cols);
    const gbtree::GbtModel model = gbtree::fit(sub, y, params);
    const std::vector<double> gain = model.feature_importance();
    std::vector<size_t> order(cols.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) { return gain[a] > gain[b]; });
    std::vector<size_t> ranked(cols.size());
    for (size_t i = 0; i < order.size(); ++i) ranked[i] = cols[order[i]];
    return ranked;
}

struct ForwardResult {
    std::vector<size_t> selected;  // original column ids, in acceptance order
    std::vector<double> cv_trace;  // cv rmse after each accepted column
};

namespace detail {

inline double forward_cv(const std::vector<cv::FoldData>& folds, const std::vector<size_t>& local_cols,
                         const gbtree::GbtParams& params, uint64_t seed, uint64_t salt) {
    std::vector<double> fold_mse;
    for (size_t i = 0; i < folds.size(); ++i) {
        gbtree::GbtParams p = params;
        p.seed = derive_seed(seed, "forward_fold", salt * 64 + i);
        const auto& fd = folds[i];
        const Matrix tx = gather(fd.train_x, iota_rows(fd.train_x.n_rows), local_cols);
        const Matrix vx = gather(fd.val_x, iota_rows(fd.val_x.n_rows), local_cols);
        const gbtree::GbtModel model = gbtree::fit(tx, fd.train_y, p);
        fold_mse.push_back(cv::mse(model.predict(vx), fd.val_y));
    }
    return cv::cv_rmse(fold_mse);
}

}  // namespace detail

// Greedy forward pass over importance-ranked columns. The top column is
// always kept; each later column stays only if it improves the
// cross-validated rmse by more than min_delta. `folds` must hold exactly the
// `ranked` columns, in order.
inline ForwardResult forward_select(const std::vector<cv::FoldData>& folds,
                                    const std::vector<size_t>& ranked,
                                    const gbtree::GbtParams& params, uint64_t seed,
                                    size_t cap = kForwardCap, double min_delta = kMinDelta) {
    ForwardResult res;
    if (ranked.empty()) return res;
    if (folds.empty()) fail_data("EmptyFolds: forward selection needs at least one fold");
    for (const auto& fd : folds)
        if (fd.train_x.n_cols != ranked.size())
            fail_internal("DimensionMismatch: fold data does not match ranked column count");

    std::vector<size_t> kept_local = {0};
    res.selected.push_back(ranked[0]);
    double best = detail::forward_cv(folds, kept_local, params, seed, 0);
    res.cv_trace.push_back(best);

    for (size_t c = 1; c < ranked.size() && res.selected.size() < cap; ++c) {
        kept_local.push_back(c);
        const double trial = detail::forward_cv(folds, kept_local, params, seed, c);
        if (trial < best - min_delta) {
            best = trial;
            res.selected.push_back(ranked[c]);
            res.cv_trace.push_back(trial);
        } else {
            kept_local.pop_back();
        }
    }
    return res;
}

}  // namespace cholcast::select
