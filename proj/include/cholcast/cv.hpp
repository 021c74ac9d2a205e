#pragma once

// Expanding-window cross-validation over anchor dates, with strict temporal
// separation between model selection and the held-out evaluation period.

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "core.hpp"
#include "prep.hpp"
#include "rng.hpp"

namespace cholcast::cv {

// anchor: a training anchor is any date before the validation window.
// label:  additionally drops anchors whose 14*horizon-day label window
//         crosses the validation start (no target overlap with validation).
enum class Leakage { anchor, label };

inline Leakage parse_leakage(const std::string& s) {
    if (s == "anchor") return Leakage::anchor;
    if (s == "label") return Leakage::label;
    fail_usage("BadLeakageMode: expected 'anchor' or 'label', got '" + s + "'");
}

// Validation fold windows are inclusive date ranges. Fold i trains on anchors
// in [base_train.start, folds[i].start). The holdout period starts after all
// folds; its end shrinks with the horizon so every holdout anchor has a
// complete label window inside the data.
struct FoldSchedule {
    DateRange base_train;
    std::vector<DateRange> folds;
    Date holdout_start;
    std::array<Date, prep::kMaxHorizon> holdout_end;

    void validate() const {
        if (base_train.end < base_train.start) fail_data("BadSchedule: base train range is empty");
        if (folds.empty()) fail_data("BadSchedule: no validation folds");
        for (size_t i = 0; i < folds.size(); ++i) {
            if (folds[i].end < folds[i].start)
                fail_data("BadSchedule: fold " + std::to_string(i + 1) + " is empty");
            if (folds[i].start <= base_train.start)
                fail_data("BadSchedule: fold " + std::to_string(i + 1) +
                          " leaves no training anchors before " + folds[i].start.str());
            if (i > 0 && folds[i].start <= folds[i - 1].start)
                fail_data("BadSchedule: fold starts must increase");
        }
        for (const DateRange& f : folds)
            if (holdout_start <= f.end) fail_data("BadSchedule: holdout overlaps a validation fold");
        for (int k = 1; k < prep::kMaxHorizon; ++k)
            if (holdout_end[static_cast<size_t>(k)] > holdout_end[static_cast<size_t>(k - 1)])
                fail_data("BadSchedule: holdout end must not grow with horizon");
    }
};

// Fixed experiment geometry; only the holdout tail depends on data coverage.
inline FoldSchedule default_schedule(Date last_data_date) {
    auto d = [](const char* s) { return Date::parse(s); };
    FoldSchedule sch;
    sch.base_train = {d("2017-07-01"), d("2017-08-15")};
    sch.folds = {{d("2017-08-16"), d("2017-08-31")},
                 {d("2017-08-31"), d("2017-09-15")},
                 {d("2017-09-15"), d("2017-09-30")},
                 {d("2017-09-30"), d("2017-10-15")},
                 {d("2017-10-15"), d("2017-10-30")}};
    sch.holdout_start = d("2017-11-11");
    for (int k = 1; k <= prep::kMaxHorizon; ++k)
        sch.holdout_end[static_cast<size_t>(k - 1)] = last_data_date - prep::kHorizonDays * k;
    return sch;
}

// ---------------------------------------------------------------------------
// Row splitting
// ---------------------------------------------------------------------------

struct FoldRows {
    std::vector<size_t> train;
    std::vector<size_t> val;

    bool usable() const { return !train.empty() && !val.empty(); }
};

struct SplitRows {
    std::vector<FoldRows> folds;
    std::vector<size_t> final_train;  // anchors before the holdout period
    std::vector<size_t> holdout;
};

// Panel rows for one horizon. Rows without a target are excluded everywhere.
// Under label leakage an anchor t trains for a boundary b only when
// t + 14 * horizon < b, so its label window ends strictly before b.
inline SplitRows split_rows(const prep::Panel& panel, const FoldSchedule& sch, int horizon,
                            Leakage leakage) {
    if (horizon < 1 || horizon > prep::kMaxHorizon)
        fail_usage("BadHorizon: horizon must be 1..4, got " + std::to_string(horizon));
    sch.validate();

    const int label_days = prep::kHorizonDays * horizon;
    auto trains_before = [&](Date t, Date boundary) {
        if (t < sch.base_train.start || t >= boundary) return false;
        if (leakage == Leakage::label && !(t + label_days < boundary)) return false;
        return true;
    };

    SplitRows out;
    out.folds.resize(sch.folds.size());
    const Date hend = sch.holdout_end[static_cast<size_t>(horizon - 1)];
    for (size_t r = 0; r < panel.samples.size(); ++r) {
        if (!panel.has_target(horizon, r)) continue;
        const Date t = panel.samples[r].anchor;
        for (size_t i = 0; i < sch.folds.size(); ++i) {
            if (trains_before(t, sch.folds[i].start)) out.folds[i].train.push_back(r);
            if (sch.folds[i].contains(t)) out.folds[i].val.push_back(r);
        }
        if (trains_before(t, sch.holdout_start)) out.final_train.push_back(r);
        if (t >= sch.holdout_start && t <= hend) out.holdout.push_back(r);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Error metrics
// ---------------------------------------------------------------------------

inline double mse(const std::vector<double>& pred, const std::vector<double>& truth) {
    if (pred.size() != truth.size() || pred.empty())
        fail_internal("DimensionMismatch: mse needs equal non-empty vectors");
    double s = 0.0;
    for (size_t i = 0; i < pred.size(); ++i) {
        const double d = pred[i] - truth[i];
        s += d * d;
    }
    return s / static_cast<double>(pred.size());
}

inline double rmse(const std::vector<double>& pred, const std::vector<double>& truth) {
    return std::sqrt(mse(pred, truth));
}

// Root of the mean of per-fold mean squared errors.
inline double cv_rmse(const std::vector<double>& fold_mse) {
    if (fold_mse.empty()) fail_internal("EmptyFolds: cv_rmse over zero folds");
    double s = 0.0;
    for (const double m : fold_mse) s += m;
    return std::sqrt(s / static_cast<double>(fold_mse.size()));
}

// ---------------------------------------------------------------------------
// Model-agnostic evaluation
// ---------------------------------------------------------------------------

struct Regressor {
    virtual ~Regressor() = default;
    virtual std::vector<double> predict(const Matrix& x) const = 0;
};

using Trainer = std::function<std::unique_ptr<Regressor>(
    const Matrix& x, const std::vector<double>& y, uint64_t seed)>;

// Per-fold training data materialized once so repeated fits (tuning trials,
// forward selection steps) avoid re-gathering. Unusable folds are dropped.
struct FoldData {
    Matrix train_x;
    std::vector<double> train_y;
    Matrix val_x;
    std::vector<double> val_y;
};

inline std::vector<FoldData> build_fold_data(const Matrix& x, const std::vector<double>& y,
                                             const SplitRows& rows, const std::vector<size_t>& cols,
                                             AccessLog* log = nullptr) {
    std::vector<FoldData> out;
    for (const FoldRows& f : rows.folds) {
        if (!f.usable()) continue;
        FoldData fd;
        fd.train_x = gather(x, f.train, cols, log);
        fd.train_y = gather_vec(y, f.train);
        fd.val_x = gather(x, f.val, cols, log);
        fd.val_y = gather_vec(y, f.val);
        out.push_back(std::move(fd));
    }
    if (out.empty()) fail_data("EmptyFolds: no fold has both training and validation rows");
    return out;
}

struct EvalResult {
    double cv = 0.0;       // cv_rmse over usable folds
    double holdout = 0.0;  // pooled holdout RMSE, NaN when the holdout is empty
    std::vector<double> fold_mse;
    std::vector<size_t> skipped_folds;       // 0-based indices of unusable folds
    std::map<size_t, double> val_preds;      // panel row -> earliest out-of-fold prediction
    std::vector<size_t> holdout_rows;
    std::vector<double> holdout_preds;
    std::unique_ptr<Regressor> final_model;  // trained on all pre-holdout anchors
};

// Fits per fold for the cross-validation score, then once on the pre-holdout
// region for the holdout score. Column subset `cols` applies throughout.
inline EvalResult evaluate(const Matrix& x, const std::vector<double>& y, const SplitRows& rows,
                           const std::vector<size_t>& cols, const Trainer& trainer, uint64_t seed) {
    EvalResult res;
    for (size_t i = 0; i < rows.folds.size(); ++i) {
        const FoldRows& f = rows.folds[i];
        if (!f.usable()) {
            res.skipped_folds.push_back(i);
            continue;
        }
        auto model = trainer(gather(x, f.train, cols), gather_vec(y, f.train),
                             derive_seed(seed, "fold", static_cast<uint64_t>(i)));
        const std::vector<double> pred = model->predict(gather(x, f.val, cols));
        res.fold_mse.push_back(mse(pred, gather_vec(y, f.val)));
        for (size_t j = 0; j < f.val.size(); ++j) res.val_preds.emplace(f.val[j], pred[j]);
    }
    if (res.fold_mse.empty()) fail_data("EmptyFolds: every fold lacks training or validation rows");
    res.cv = cv_rmse(res.fold_mse);

    if (rows.final_train.empty()) fail_data("EmptyTrainingSet: no anchors before the holdout period");
    res.final_model = trainer(gather(x, rows.final_train, cols), gather_vec(y, rows.final_train),
                              derive_seed(seed, "final"));
    res.holdout_rows = rows.holdout;
    if (rows.holdout.empty()) {
        res.holdout = std::numeric_limits<double>::quiet_NaN();
    } else {
        res.holdout_preds = res.final_model->predict(gather(x, rows.holdout, cols));
        res.holdout = rmse(res.holdout_preds, gather_vec(y, rows.holdout));
    }
    return res;
}

}  // namespace cholcast::cv
