#pragma once

// Ridge-stabilized linear regression on standardized features. Serves as the
// reference model the boosted trees are measured against.

#include <cmath>
#include <string>
#include <vector>

#include "core.hpp"

namespace cholcast::baseline {

// Weights apply to standardized columns: yhat = intercept + sum_j w_j * z_j,
// z_j = (x_j - mean_j) / sd_j. Zero-variance training columns keep sd = 0 and
// contribute nothing.
struct LinearModel {
    double intercept = 0.0;
    std::vector<double> mean;
    std::vector<double> sd;
    std::vector<double> weights;

    double predict_row(const double* row) const {
        double yhat = intercept;
        for (size_t j = 0; j < weights.size(); ++j)
            if (sd[j] > 0.0) yhat += weights[j] * (row[j] - mean[j]) / sd[j];
        return yhat;
    }

    std::vector<double> predict(const Matrix& x) const {
        if (x.n_cols != weights.size())
            fail_internal("DimensionMismatch: model has " + std::to_string(weights.size()) +
                          " columns, input has " + std::to_string(x.n_cols));
        std::vector<double> out(x.n_rows);
        for (size_t r = 0; r < x.n_rows; ++r) out[r] = predict_row(x.row(r));
        return out;
    }
};

namespace detail {

// In-place Cholesky solve of A w = b for symmetric positive definite A
// (row-major p x p). A and b are destroyed.
inline std::vector<double> cholesky_solve(std::vector<double>& a, std::vector<double>& b, size_t p) {
    for (size_t i = 0; i < p; ++i) {
        for (size_t j = 0; j <= i; ++j) {
            double s = a[i * p + j];
            for (size_t k = 0; k < j; ++k) s -= a[i * p + k] * a[j * p + k];
            if (i == j) {
                if (s <= 0.0) fail_internal("CholeskyFailure: non-positive pivot " + fmt_double(s));
                a[i * p + i] = std::sqrt(s);
            } else {
                a[i * p + j] = s / a[j * p + j];
            }
        }
    }
    // L y = b, then L^T w = y.
    for (size_t i = 0; i < p; ++i) {
        double s = b[i];
        for (size_t k = 0; k < i; ++k) s -= a[i * p + k] * b[k];
        b[i] = s / a[i * p + i];
    }
    for (size_t ii = p; ii-- > 0;) {
        double s = b[ii];
        for (size_t k = ii + 1; k < p; ++k) s -= a[k * p + ii] * b[k];
        b[ii] = s / a[ii * p + ii];
    }
    return b;
}

}  // namespace detail

constexpr double kRidge = 1e-8;  // keeps the normal equations solvable under collinearity

inline LinearModel fit(const Matrix& x, const std::vector<double>& y) {
    if (x.n_rows != y.size()) fail_internal("DimensionMismatch: x rows != y length");
    if (x.n_rows == 0) fail_data("EmptyTrainingSet: linear fit needs at least one row");
    const size_t n = x.n_rows, p = x.n_cols;
    const double dn = static_cast<double>(n);

    LinearModel m;
    m.mean.assign(p, 0.0);
    m.sd.assign(p, 0.0);
    m.weights.assign(p, 0.0);
    for (const double v : y) {
        if (!std::isfinite(v)) fail_internal("NonFiniteInput: target contains non-finite value");
        m.intercept += v;
    }
    m.intercept /= dn;

    for (size_t j = 0; j < p; ++j) {
        double s = 0.0;
        for (size_t r = 0; r < n; ++r) {
            const double v = x.at(r, j);
            if (!std::isfinite(v)) fail_internal("NonFiniteInput: features contain non-finite value");
            s += v;
        }
        m.mean[j] = s / dn;
        double ss = 0.0;
        for (size_t r = 0; r < n; ++r) {
            const double d = x.at(r, j) - m.mean[j];
            ss += d * d;
        }
        m.sd[j] = std::sqrt(ss / dn);
    }

    // Solve on the non-degenerate columns only.
    std::vector<size_t> active;
    for (size_t j = 0; j < p; ++j)
        if (m.sd[j] > 0.0) active.push_back(j);
    if (active.empty()) return m;  // constant predictor

    const size_t q = active.size();
    Matrix z(n, q);
    for (size_t r = 0; r < n; ++r)
        for (size_t c = 0; c < q; ++c) {
            const size_t j = active[c];
            z.at(r, c) = (x.at(r, j) - m.mean[j]) / m.sd[j];
        }

    std::vector<double> gram(q * q, 0.0), rhs(q, 0.0);
    for (size_t a = 0; a < q; ++a) {
        for (size_t b = a; b < q; ++b) {
            double s = 0.0;
            for (size_t r = 0; r < n; ++r) s += z.at(r, a) * z.at(r, b);
            gram[a * q + b] = s;
            gram[b * q + a] = s;
        }
        gram[a * q + a] += kRidge;
        double s = 0.0;
        for (size_t r = 0; r < n; ++r) s += z.at(r, a) * (y[r] - m.intercept);
        rhs[a] = s;
    }
    std::vector<double> w = detail::cholesky_solve(gram, rhs, q);
    for (size_t c = 0; c < q; ++c) m.weights[active[c]] = w[c];
    return m;
}

}  // namespace cholcast::baseline
