#pragma once

// Gradient-boosted regression trees with a squared-error objective and exact
// greedy split finding over presorted feature columns. Growth is level-wise.
// Everything is single-threaded and bit-deterministic for a fixed seed.
//
// Objective details:
//   gradient g_i = prediction_i - y_i, hessian h_i = 1
//   split gain = 1/2 [ GL^2/(HL+lambda) + GR^2/(HR+lambda)
//                      - (GL+GR)^2/(HL+HR+lambda) ] - gamma
//   leaf weight = -G/(H+lambda)
//   prediction = base_score + eta * sum(tree outputs); base_score = mean(y)
//
// Because hessians are 1, every H is a row count, so 1/(H+lambda) comes from
// a small precomputed reciprocal table instead of a per-candidate division.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "core.hpp"
#include "rng.hpp"

namespace cholcast::gbtree {

struct GbtParams {
    int n_rounds = 150;
    double eta = 0.1;
    int max_depth = 4;
    double min_child_weight = 1.0;  // minimum hessian sum (= row count) per child
    double lambda = 1.0;            // L2 penalty on leaf weights
    double gamma = 0.0;             // per-split gain threshold
    double subsample = 1.0;         // row fraction per round, without replacement
    double colsample = 1.0;         // column fraction per tree
    uint64_t seed = 0;
};

inline void validate(const GbtParams& p) {
    if (p.n_rounds < 0) fail_data("InvalidParams: n_rounds must be >= 0");
    if (!(p.eta > 0.0 && p.eta <= 1.0)) fail_data("InvalidParams: eta must be in (0, 1]");
    if (p.max_depth < 1) fail_data("InvalidParams: max_depth must be >= 1");
    if (!(p.min_child_weight >= 0.0)) fail_data("InvalidParams: min_child_weight must be >= 0");
    if (!(p.lambda >= 0.0)) fail_data("InvalidParams: lambda must be >= 0");
    if (!(p.gamma >= 0.0)) fail_data("InvalidParams: gamma must be >= 0");
    if (!(p.subsample > 0.0 && p.subsample <= 1.0)) fail_data("InvalidParams: subsample must be in (0, 1]");
    if (!(p.colsample > 0.0 && p.colsample <= 1.0)) fail_data("InvalidParams: colsample must be in (0, 1]");
}

struct TreeNode {
    int32_t feature = -1;  // -1 marks a leaf
    int32_t left = -1;
    int32_t right = -1;
    double threshold = 0.0;
    double value = 0.0;  // leaf weight, eta NOT applied
    double gain = 0.0;   // realized split gain
};

struct Tree {
    std::vector<TreeNode> nodes;  // nodes[0] is the root

    double predict_row(const double* x) const {
        int32_t i = 0;
        while (nodes[i].feature >= 0) {
            const TreeNode& nd = nodes[i];
            i = x[nd.feature] < nd.threshold ? nd.left : nd.right;
        }
        return nodes[i].value;
    }
};

struct GbtModel {
    GbtParams params;
    size_t n_features = 0;
    double base_score = 0.0;
    std::vector<Tree> trees;

    double predict_row(const double* x) const {
        double s = 0.0;
        for (const Tree& t : trees) s += t.predict_row(x);
        return base_score + params.eta * s;
    }

    std::vector<double> predict(const Matrix& x) const {
        if (x.n_cols != n_features)
            fail_data("DimensionMismatch: model expects " + std::to_string(n_features) +
                      " features, got " + std::to_string(x.n_cols));
        std::vector<double> out(x.n_rows);
        for (size_t r = 0; r < x.n_rows; ++r) out[r] = predict_row(x.row(r));
        return out;
    }

    // Total realized split gain per feature.
    std::vector<double> feature_importance() const {
        std::vector<double> imp(n_features, 0.0);
        for (const Tree& t : trees)
            for (const TreeNode& nd : t.nodes)
                if (nd.feature >= 0) imp[nd.feature] += nd.gain;
        return imp;
    }
};

struct Split {
    int32_t feature = -1;
    double threshold = 0.0;
    double gain = 0.0;
};

namespace detail {

inline double split_gain(double gl, double gr, int32_t cl, int32_t cr, const double* recip,
                         double parent_term, double gamma) {
    return 0.5 * (gl * gl * recip[cl] + gr * gr * recip[cr] - parent_term) - gamma;
}

// State of one still-expandable node during a level scan.
struct LevelNode {
    double g_sum = 0.0;
    int32_t cnt = 0;
    int32_t tree_index = -1;
    double parent_term = 0.0;  // G^2/(cnt+lambda)
    double best_gain = 0.0;
    int32_t best_feature = -1;
    double best_thr = 0.0;
};

// Per-node accumulator for the column sweep, kept separate from LevelNode so
// the hot loop touches one small mutable struct per row.
struct ScanSlot {
    double gl = 0.0;
    double lastv = 0.0;
    int32_t cl = 0;
    int32_t pad = 0;
};

// Scans one sorted column across every node of the current level, updating the
// per-node best candidate in place. slot must be zeroed by the caller.
inline void scan_column(const uint32_t* __restrict ord, const double* __restrict vals,
                        const double* __restrict gp, const int32_t* __restrict nof,
                        ScanSlot* __restrict slot, const double* __restrict nd_gsum,
                        const double* __restrict nd_pterm, const int32_t* __restrict nd_cnt,
                        const int32_t* __restrict nd_hi, const double* __restrict recip,
                        double* __restrict best_gain, double* __restrict best_thr,
                        int32_t* __restrict best_feat, size_t n, int32_t mcw_lo, double gamma,
                        int32_t fc) {
    for (size_t k = 0; k < n; ++k) {
        const uint32_t r = ord[k];
        const int32_t nid = nof[r];
        if (nid < 0) continue;
        ScanSlot& s = slot[nid];
        const double v = vals[k];
        const double gl = s.gl;
        const int32_t c_left = s.cl;
        const double prev = s.lastv;
        s.gl = gl + gp[r];
        s.cl = c_left + 1;
        s.lastv = v;
        if (c_left < mcw_lo || c_left > nd_hi[nid] || !(v > prev)) continue;
        const double gain = split_gain(gl, nd_gsum[nid] - gl, c_left, nd_cnt[nid] - c_left, recip,
                                       nd_pterm[nid], gamma);
        if (gain > best_gain[nid] && gain > 0.0) {
            // Midpoints of adjacent representable doubles can round onto the
            // left value; skip those candidates so enumeration and routing
            // always agree.
            const double thr = 0.5 * (prev + v);
            if (thr > prev) {
                best_gain[nid] = gain;
                best_thr[nid] = thr;
                best_feat[nid] = fc;
            }
        }
    }
}

// Grows one tree. node_of[i] must be 0 for rows in this round's subsample and
// -1 otherwise; it is consumed as scratch space.
inline Tree grow_tree(const Matrix& x, const std::vector<double>& g,
                      const std::vector<std::vector<uint32_t>>& order,
                      const std::vector<std::vector<double>>& sval,
                      const std::vector<double>& recip, std::vector<int32_t>& node_of,
                      const std::vector<size_t>& cols, const GbtParams& p) {
    const size_t n = x.n_rows;
    Tree tree;
    tree.nodes.emplace_back();

    std::vector<LevelNode> level(1);
    level[0].tree_index = 0;
    for (size_t i = 0; i < n; ++i)
        if (node_of[i] == 0) {
            level[0].g_sum += g[i];
            level[0].cnt += 1;
        }
    level[0].parent_term = level[0].g_sum * level[0].g_sum * recip[level[0].cnt];

    // The minimum-count constraint is an integer band on the left count:
    // c_left >= mcw  <=>  c_left >= ceil(mcw), and symmetrically on the right.
    const int32_t mcw_lo = std::max<int32_t>(1, static_cast<int32_t>(std::ceil(p.min_child_weight)));

    std::vector<ScanSlot> slot;
    std::vector<double> nd_gsum, nd_pterm, best_gain, best_thr;
    std::vector<int32_t> nd_cnt, nd_hi, best_feat;
    std::vector<int32_t> left_slot, right_slot;

    int depth = 0;
    while (!level.empty()) {
        const size_t e = level.size();
        const bool can_split = depth < p.max_depth;

        if (can_split) {
            slot.resize(e);
            nd_gsum.resize(e);
            nd_pterm.resize(e);
            nd_cnt.resize(e);
            nd_hi.resize(e);
            best_gain.assign(e, 0.0);
            best_thr.assign(e, 0.0);
            best_feat.assign(e, -1);
            for (size_t i = 0; i < e; ++i) {
                nd_gsum[i] = level[i].g_sum;
                nd_pterm[i] = level[i].parent_term;
                nd_cnt[i] = level[i].cnt;
                // Valid c_left range is [mcw_lo, cnt - mcw_lo]; the range is
                // empty when the node is too small to split at all.
                nd_hi[i] = level[i].cnt - mcw_lo;
            }
            for (size_t c : cols) {
                std::fill(slot.begin(), slot.end(), ScanSlot{});
                scan_column(order[c].data(), sval[c].data(), g.data(), node_of.data(), slot.data(),
                            nd_gsum.data(), nd_pterm.data(), nd_cnt.data(), nd_hi.data(),
                            recip.data(), best_gain.data(), best_thr.data(), best_feat.data(), n,
                            mcw_lo, p.gamma, static_cast<int32_t>(c));
            }
            for (size_t i = 0; i < e; ++i) {
                level[i].best_gain = best_gain[i];
                level[i].best_thr = best_thr[i];
                level[i].best_feature = best_feat[i];
            }
        }

        // Apply the best split per node (or finalize a leaf), then route rows
        // into the next level.
        std::vector<LevelNode> next;
        left_slot.assign(e, -1);
        right_slot.assign(e, -1);
        for (size_t i = 0; i < e; ++i) {
            LevelNode& nd = level[i];
            if (!can_split || nd.best_feature < 0) {
                tree.nodes[nd.tree_index].value = -nd.g_sum * recip[nd.cnt];
                continue;
            }
            // Children are appended before the parent reference is taken;
            // emplace_back may reallocate the node storage.
            const int32_t li = static_cast<int32_t>(tree.nodes.size());
            tree.nodes.emplace_back();
            tree.nodes.emplace_back();
            TreeNode& tn = tree.nodes[nd.tree_index];
            tn.feature = nd.best_feature;
            tn.threshold = nd.best_thr;
            tn.gain = nd.best_gain;
            tn.left = li;
            tn.right = li + 1;
            left_slot[i] = static_cast<int32_t>(next.size());
            next.emplace_back().tree_index = li;
            right_slot[i] = static_cast<int32_t>(next.size());
            next.emplace_back().tree_index = li + 1;
        }

        if (next.empty()) break;

        for (size_t r = 0; r < n; ++r) {
            const int32_t nid = node_of[r];
            if (nid < 0) continue;
            if (left_slot[nid] < 0) {
                node_of[r] = -1;
                continue;
            }
            const TreeNode& tn = tree.nodes[level[nid].tree_index];
            const int32_t slot =
                x.at(r, static_cast<size_t>(tn.feature)) < tn.threshold ? left_slot[nid] : right_slot[nid];
            node_of[r] = slot;
            next[slot].g_sum += g[r];
            next[slot].cnt += 1;
        }
        for (LevelNode& nd : next) nd.parent_term = nd.g_sum * nd.g_sum * recip[nd.cnt];

        level = std::move(next);
        ++depth;
    }
    return tree;
}

}  // namespace detail

// Exact greedy search for the best split of one row set. Thresholds are
// midpoints of adjacent distinct values; ties are broken toward the lowest
// feature index, then the smallest threshold. Returns nothing when no split
// has gain > 0 or a child would violate min_child_weight.
inline std::optional<Split> find_best_split(const Matrix& x, const std::vector<double>& g,
                                            const std::vector<size_t>& rows, const std::vector<size_t>& cols,
                                            const GbtParams& p) {
    validate(p);
    if (rows.size() < 2 || cols.empty()) return std::nullopt;
    const int32_t cnt = static_cast<int32_t>(rows.size());

    std::vector<double> recip(rows.size() + 1);
    for (size_t i = 0; i <= rows.size(); ++i) recip[i] = 1.0 / (static_cast<double>(i) + p.lambda);

    double g_total = 0.0;
    for (size_t r : rows) g_total += g[r];
    const double parent_term = g_total * g_total * recip[cnt];

    std::vector<size_t> cs = cols;
    std::sort(cs.begin(), cs.end());

    Split best;
    std::vector<size_t> idx = rows;
    for (size_t c : cs) {
        std::sort(idx.begin(), idx.end(), [&](size_t a, size_t b) {
            const double va = x.at(a, c), vb = x.at(b, c);
            return va < vb || (va == vb && a < b);
        });
        double gl = 0.0, lastv = 0.0;
        int32_t cl = 0;
        for (size_t r : idx) {
            const double v = x.at(r, c);
            if (cl > 0 && v > lastv) {
                const double thr = 0.5 * (lastv + v);
                if (thr > lastv) {
                    const int32_t cr = cnt - cl;
                    if (cl >= p.min_child_weight && cr >= p.min_child_weight) {
                        const double gain =
                            detail::split_gain(gl, g_total - gl, cl, cr, recip.data(), parent_term, p.gamma);
                        if (gain > best.gain && gain > 0.0) {
                            best.gain = gain;
                            best.feature = static_cast<int32_t>(c);
                            best.threshold = thr;
                        }
                    }
                }
            }
            gl += g[r];
            cl += 1;
            lastv = v;
        }
    }
    if (best.feature < 0) return std::nullopt;
    return best;
}

inline GbtModel fit(const Matrix& x, const std::vector<double>& y, const GbtParams& p) {
    validate(p);
    const size_t n = x.n_rows, m = x.n_cols;
    if (n == 0) fail_data("EmptyInput: no training rows");
    if (y.size() != n) fail_data("DimensionMismatch: target length != row count");
    for (double v : x.data)
        if (!std::isfinite(v)) fail_data("NonFiniteInput: feature matrix");
    for (double v : y)
        if (!std::isfinite(v)) fail_data("NonFiniteInput: target vector");

    GbtModel model;
    model.params = p;
    model.n_features = m;
    double base = 0.0;
    for (double v : y) base += v;
    model.base_score = base / static_cast<double>(n);
    if (p.n_rounds == 0 || m == 0) return model;

    // One presort of every column, shared by all rounds.
    std::vector<std::vector<uint32_t>> order(m);
    std::vector<std::vector<double>> sval(m);
    for (size_t c = 0; c < m; ++c) {
        order[c].resize(n);
        for (size_t i = 0; i < n; ++i) order[c][i] = static_cast<uint32_t>(i);
        std::sort(order[c].begin(), order[c].end(), [&](uint32_t a, uint32_t b) {
            const double va = x.at(a, c), vb = x.at(b, c);
            return va < vb || (va == vb && a < b);
        });
        sval[c].resize(n);
        for (size_t i = 0; i < n; ++i) sval[c][i] = x.at(order[c][i], c);
    }

    std::vector<double> recip(n + 1);
    for (size_t i = 0; i <= n; ++i) recip[i] = 1.0 / (static_cast<double>(i) + p.lambda);

    std::vector<double> pred(n, model.base_score), g(n);
    std::vector<int32_t> node_of(n);
    std::vector<size_t> all_cols(m);
    for (size_t c = 0; c < m; ++c) all_cols[c] = c;
    Rng rng(p.seed);

    model.trees.reserve(static_cast<size_t>(p.n_rounds));
    for (int round = 0; round < p.n_rounds; ++round) {
        for (size_t i = 0; i < n; ++i) g[i] = pred[i] - y[i];

        if (p.subsample < 1.0) {
            const size_t k = std::max<size_t>(1, static_cast<size_t>(std::llround(p.subsample * static_cast<double>(n))));
            std::fill(node_of.begin(), node_of.end(), -1);
            for (size_t r : rng.sample_without_replacement(n, k)) node_of[r] = 0;
        } else {
            std::fill(node_of.begin(), node_of.end(), 0);
        }

        std::vector<size_t> cols;
        if (p.colsample < 1.0 && m > 0) {
            const size_t kc = std::max<size_t>(1, static_cast<size_t>(std::llround(p.colsample * static_cast<double>(m))));
            cols = rng.sample_without_replacement(m, kc);
            std::sort(cols.begin(), cols.end());
        } else {
            cols = all_cols;
        }

        Tree tree = detail::grow_tree(x, g, order, sval, recip, node_of, cols, p);
        for (size_t i = 0; i < n; ++i) pred[i] += p.eta * tree.predict_row(x.row(i));
        model.trees.push_back(std::move(tree));
    }
    return model;
}

// ---------------------------------------------------------------------------
// Serialization: plain text, bit-exact round trip (%.17g doubles).
// ---------------------------------------------------------------------------

namespace detail {

inline void serialize_node(std::ostringstream& os, const Tree& t, int32_t i) {
    const TreeNode& nd = t.nodes[i];
    if (nd.feature < 0) {
        os << "l " << fmt_double(nd.value) << "\n";
        return;
    }
    os << "s " << nd.feature << " " << fmt_double(nd.threshold) << " " << fmt_double(nd.gain) << "\n";
    serialize_node(os, t, nd.left);
    serialize_node(os, t, nd.right);
}

class TokenReader {
public:
    explicit TokenReader(const std::string& text) : in_(text) {}

    std::string next() {
        std::string tok;
        if (!(in_ >> tok)) fail_data("ModelParse: unexpected end of model text");
        return tok;
    }

    void expect(const std::string& want) {
        const std::string got = next();
        if (got != want) fail_data("ModelParse: expected '" + want + "', got '" + got + "'");
    }

    int64_t next_int() {
        const std::string tok = next();
        int64_t v = 0;
        auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
        if (ec != std::errc() || p != tok.data() + tok.size())
            fail_data("ModelParse: expected integer, got '" + tok + "'");
        return v;
    }

    uint64_t next_uint() {
        const std::string tok = next();
        uint64_t v = 0;
        auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
        if (ec != std::errc() || p != tok.data() + tok.size())
            fail_data("ModelParse: expected unsigned integer, got '" + tok + "'");
        return v;
    }

    double next_double() {
        const std::string tok = next();
        double v = 0.0;
        auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
        if (ec != std::errc() || p != tok.data() + tok.size())
            fail_data("ModelParse: expected number, got '" + tok + "'");
        return v;
    }

private:
    std::istringstream in_;
};

inline int32_t parse_node(TokenReader& r, Tree& t, size_t n_features) {
    const int32_t idx = static_cast<int32_t>(t.nodes.size());
    t.nodes.emplace_back();
    const std::string kind = r.next();
    if (kind == "l") {
        t.nodes[idx].value = r.next_double();
    } else if (kind == "s") {
        const int64_t feature = r.next_int();
        if (feature < 0 || static_cast<size_t>(feature) >= n_features)
            fail_data("ModelParse: split feature out of range");
        const double thr = r.next_double();
        const double gain = r.next_double();
        const int32_t left = parse_node(r, t, n_features);
        const int32_t right = parse_node(r, t, n_features);
        t.nodes[idx].feature = static_cast<int32_t>(feature);
        t.nodes[idx].threshold = thr;
        t.nodes[idx].gain = gain;
        t.nodes[idx].left = left;
        t.nodes[idx].right = right;
    } else {
        fail_data("ModelParse: unknown node kind '" + kind + "'");
    }
    return idx;
}

}  // namespace detail

inline std::string serialize(const GbtModel& m) {
    std::ostringstream os;
    os << "gbt-model 1\n";
    os << "n_features " << m.n_features << "\n";
    os << "base_score " << fmt_double(m.base_score) << "\n";
    const GbtParams& p = m.params;
    os << "params " << p.n_rounds << " " << fmt_double(p.eta) << " " << p.max_depth << " "
       << fmt_double(p.min_child_weight) << " " << fmt_double(p.lambda) << " " << fmt_double(p.gamma)
       << " " << fmt_double(p.subsample) << " " << fmt_double(p.colsample) << " " << p.seed << "\n";
    os << "trees " << m.trees.size() << "\n";
    for (const Tree& t : m.trees) {
        os << "tree " << t.nodes.size() << "\n";
        detail::serialize_node(os, t, 0);
    }
    os << "end\n";
    return os.str();
}

inline GbtModel deserialize(const std::string& text) {
    detail::TokenReader r(text);
    r.expect("gbt-model");
    if (r.next_int() != 1) fail_data("ModelParse: unsupported version");
    GbtModel m;
    r.expect("n_features");
    m.n_features = static_cast<size_t>(r.next_uint());
    r.expect("base_score");
    m.base_score = r.next_double();
    r.expect("params");
    m.params.n_rounds = static_cast<int>(r.next_int());
    m.params.eta = r.next_double();
    m.params.max_depth = static_cast<int>(r.next_int());
    m.params.min_child_weight = r.next_double();
    m.params.lambda = r.next_double();
    m.params.gamma = r.next_double();
    m.params.subsample = r.next_double();
    m.params.colsample = r.next_double();
    m.params.seed = r.next_uint();
    r.expect("trees");
    const int64_t n_trees = r.next_int();
    for (int64_t i = 0; i < n_trees; ++i) {
        r.expect("tree");
        const int64_t n_nodes = r.next_int();
        Tree t;
        detail::parse_node(r, t, m.n_features);
        if (static_cast<int64_t>(t.nodes.size()) != n_nodes)
            fail_data("ModelParse: tree node count mismatch");
        m.trees.push_back(std::move(t));
    }
    r.expect("end");
    return m;
}

}  // namespace cholcast::gbtree
