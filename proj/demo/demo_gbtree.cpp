// Fits the boosted-tree regressor to a noisy sine wave and reports how much
// of the error it removes relative to predicting the mean.

#include <cmath>
#include <cstdio>

#include <cholcast/gbtree.hpp>
#include <cholcast/rng.hpp>

using namespace cholcast;

int main() {
    Rng rng(7);
    const size_t n = 400;
    Matrix x(n, 2);
    std::vector<double> y(n);
    for (size_t i = 0; i < n; ++i) {
        x.at(i, 0) = rng.uniform(0.0, 6.28);
        x.at(i, 1) = rng.uniform(-1.0, 1.0);  // pure noise column
        y[i] = std::sin(x.at(i, 0)) + 0.1 * rng.normal();
    }

    gbtree::GbtParams p;
    p.n_rounds = 200;
    p.max_depth = 3;
    const gbtree::GbtModel model = gbtree::fit(x, y, p);

    double sse = 0.0, sse_mean = 0.0, mean = 0.0;
    for (double v : y) mean += v;
    mean /= static_cast<double>(n);
    const std::vector<double> pred = model.predict(x);
    for (size_t i = 0; i < n; ++i) {
        sse += (pred[i] - y[i]) * (pred[i] - y[i]);
        sse_mean += (y[i] - mean) * (y[i] - mean);
    }
    std::printf("train rmse: %.4f (mean predictor: %.4f)\n", std::sqrt(sse / n), std::sqrt(sse_mean / n));

    const auto gains = model.feature_importance();
    std::printf("total split gain: signal column %.1f, noise column %.1f\n", gains[0], gains[1]);
    std::printf("model text: %zu bytes, round-trips %s\n", gbtree::serialize(model).size(),
                gbtree::serialize(gbtree::deserialize(gbtree::serialize(model))) ==
                        gbtree::serialize(model)
                    ? "exactly"
                    : "INEXACTLY");
    return 0;
}
