#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <vector>

#include "fcp/errors.hpp"
#include "fcp/rng.hpp"

namespace fcp {

// ---------------------------------------------------------------------------
// Random forest of CART trees (Gini criterion) with out-of-bag error.
// Handles multiclass labels natively.
// ---------------------------------------------------------------------------

struct RfHyper {
    std::size_t n_trees = 100;
    std::size_t mtry = 0;      // 0 means floor(sqrt(D))
    std::size_t min_leaf = 1;
    int max_depth = -1;        // -1 means grow to purity
    bool bootstrap = true;
    std::uint64_t seed = 0;
};

struct RfNode {
    int feature = -1;          // -1 for leaves
    double threshold = 0.0;
    int left = -1, right = -1; // child node indices
    int leaf_class = -1;       // class index (into RfModel::classes) at leaves
};

struct RfTree {
    std::vector<RfNode> nodes;

    int predict_class(const Eigen::VectorXd& x) const {
        int idx = 0;
        while (nodes[static_cast<std::size_t>(idx)].feature >= 0) {
            const auto& nd = nodes[static_cast<std::size_t>(idx)];
            idx = x[nd.feature] < nd.threshold ? nd.left : nd.right;
        }
        return nodes[static_cast<std::size_t>(idx)].leaf_class;
    }
};

struct RfModel {
    std::vector<RfTree> trees;
    std::vector<std::uint64_t> per_tree_seed;
    std::vector<int> classes;  // label vocabulary, ascending
    double oob_error = 0.0;
    Eigen::VectorXd feature_importances;

    Eigen::Index dim = 0;
};

namespace detail {

inline double gini(const std::vector<double>& counts, double total) {
    if (total <= 0.0) return 0.0;
    double g = 1.0;
    for (double c : counts) {
        double p = c / total;
        g -= p * p;
    }
    return g;
}

struct RfBuilder {
    const Eigen::MatrixXd& X;
    const std::vector<int>& yi;  // class indices
    std::size_t n_classes;
    const RfHyper& hyper;
    std::size_t mtry;
    Rng rng;
    RfTree tree;
    Eigen::VectorXd importance;  // per-feature accumulated impurity decrease
    double n_total;

    int build(std::vector<Eigen::Index>& idx, int depth) {
        std::vector<double> counts(n_classes, 0.0);
        for (Eigen::Index i : idx) counts[static_cast<std::size_t>(yi[static_cast<std::size_t>(i)])] += 1.0;
        const double total = static_cast<double>(idx.size());
        double node_gini = gini(counts, total);

        auto make_leaf = [&]() {
            RfNode leaf;
            // Majority class; ties resolve to the lowest class index.
            std::size_t best = 0;
            for (std::size_t c = 1; c < n_classes; ++c)
                if (counts[c] > counts[best]) best = c;
            leaf.leaf_class = static_cast<int>(best);
            tree.nodes.push_back(leaf);
            return static_cast<int>(tree.nodes.size()) - 1;
        };

        bool pure = node_gini <= 0.0;
        bool too_small = idx.size() < 2 * hyper.min_leaf || idx.size() < 2;
        bool too_deep = hyper.max_depth >= 0 && depth >= hyper.max_depth;
        if (pure || too_small || too_deep) return make_leaf();

        // Candidate features: mtry sampled without replacement, scanned in
        // ascending order for deterministic tie-breaking.
        const Eigen::Index d = X.cols();
        std::vector<int> feats(static_cast<std::size_t>(d));
        for (Eigen::Index f = 0; f < d; ++f) feats[static_cast<std::size_t>(f)] = static_cast<int>(f);
        if (mtry < static_cast<std::size_t>(d)) {
            for (std::size_t k = 0; k < mtry; ++k) {
                std::uniform_int_distribution<std::size_t> pick(k, feats.size() - 1);
                std::swap(feats[k], feats[pick(rng)]);
            }
            feats.resize(mtry);
            std::sort(feats.begin(), feats.end());
        }

        double best_gain = 1e-12;
        int best_f = -1;
        double best_t = 0.0;
        std::vector<std::pair<double, int>> vals;
        for (int f : feats) {
            vals.clear();
            for (Eigen::Index i : idx)
                vals.emplace_back(X(i, f), yi[static_cast<std::size_t>(i)]);
            std::sort(vals.begin(), vals.end());
            std::vector<double> left(n_classes, 0.0);
            std::vector<double> right = counts;
            for (std::size_t k = 0; k + 1 < vals.size(); ++k) {
                left[static_cast<std::size_t>(vals[k].second)] += 1.0;
                right[static_cast<std::size_t>(vals[k].second)] -= 1.0;
                if (vals[k + 1].first <= vals[k].first) continue;
                double nl = static_cast<double>(k + 1);
                double nr = total - nl;
                if (nl < static_cast<double>(hyper.min_leaf) ||
                    nr < static_cast<double>(hyper.min_leaf))
                    continue;
                double child = (nl * gini(left, nl) + nr * gini(right, nr)) / total;
                double gain = node_gini - child;
                if (gain > best_gain + 1e-15) {
                    best_gain = gain;
                    best_f = f;
                    best_t = 0.5 * (vals[k].first + vals[k + 1].first);
                }
            }
        }
        if (best_f < 0) return make_leaf();

        importance[best_f] += (total / n_total) * best_gain;

        std::vector<Eigen::Index> left_idx, right_idx;
        for (Eigen::Index i : idx)
            (X(i, best_f) < best_t ? left_idx : right_idx).push_back(i);

        RfNode split;
        split.feature = best_f;
        split.threshold = best_t;
        tree.nodes.push_back(split);
        int self = static_cast<int>(tree.nodes.size()) - 1;
        int l = build(left_idx, depth + 1);
        int r = build(right_idx, depth + 1);
        tree.nodes[static_cast<std::size_t>(self)].left = l;
        tree.nodes[static_cast<std::size_t>(self)].right = r;
        return self;
    }
};

}  // namespace detail

inline RfModel train_rf(const Eigen::MatrixXd& X, const std::vector<int>& y,
                        const RfHyper& hyper = {}) {
    const Eigen::Index n = X.rows();
    if (n < 2) throw DegenerateLabels("random forest needs at least two training points");
    if (static_cast<Eigen::Index>(y.size()) != n) throw ShapeError("label count mismatch");

    RfModel model;
    model.dim = X.cols();
    model.classes = y;
    std::sort(model.classes.begin(), model.classes.end());
    model.classes.erase(std::unique(model.classes.begin(), model.classes.end()),
                        model.classes.end());
    const std::size_t n_classes = model.classes.size();
    std::vector<int> yi(y.size());
    for (std::size_t i = 0; i < y.size(); ++i)
        yi[i] = static_cast<int>(std::lower_bound(model.classes.begin(), model.classes.end(),
                                                  y[i]) -
                                 model.classes.begin());

    std::size_t mtry = hyper.mtry;
    if (mtry == 0)
        mtry = static_cast<std::size_t>(
            std::max(1.0, std::floor(std::sqrt(static_cast<double>(X.cols())))));
    mtry = std::min(mtry, static_cast<std::size_t>(X.cols()));

    model.feature_importances = Eigen::VectorXd::Zero(X.cols());
    // Per-instance OOB votes, pooled over trees.
    std::vector<std::vector<double>> oob_votes(static_cast<std::size_t>(n),
                                               std::vector<double>(n_classes, 0.0));
    std::vector<bool> oob_seen(static_cast<std::size_t>(n), false);

    for (std::size_t t = 0; t < hyper.n_trees; ++t) {
        std::uint64_t tree_seed = derive_seed(hyper.seed, t);
        model.per_tree_seed.push_back(tree_seed);
        Rng rng = make_rng(tree_seed);

        std::vector<Eigen::Index> idx;
        std::vector<bool> in_bag(static_cast<std::size_t>(n), false);
        if (hyper.bootstrap) {
            std::uniform_int_distribution<Eigen::Index> pick(0, n - 1);
            idx.resize(static_cast<std::size_t>(n));
            for (Eigen::Index i = 0; i < n; ++i) {
                Eigen::Index b = pick(rng);
                idx[static_cast<std::size_t>(i)] = b;
                in_bag[static_cast<std::size_t>(b)] = true;
            }
        } else {
            for (Eigen::Index i = 0; i < n; ++i) {
                idx.push_back(i);
                in_bag[static_cast<std::size_t>(i)] = true;
            }
        }

        detail::RfBuilder builder{X, yi, n_classes, hyper, mtry, std::move(rng),
                                  {}, Eigen::VectorXd::Zero(X.cols()),
                                  static_cast<double>(idx.size())};
        builder.build(idx, 0);
        model.feature_importances += builder.importance;
        model.trees.push_back(std::move(builder.tree));

        for (Eigen::Index i = 0; i < n; ++i) {
            if (in_bag[static_cast<std::size_t>(i)]) continue;
            int c = model.trees.back().predict_class(X.row(i).transpose());
            oob_votes[static_cast<std::size_t>(i)][static_cast<std::size_t>(c)] += 1.0;
            oob_seen[static_cast<std::size_t>(i)] = true;
        }
    }

    double imp_sum = model.feature_importances.sum();
    if (imp_sum > 0) model.feature_importances /= imp_sum;

    std::size_t covered = 0, wrong = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
        if (!oob_seen[static_cast<std::size_t>(i)]) continue;
        ++covered;
        const auto& v = oob_votes[static_cast<std::size_t>(i)];
        std::size_t best = 0;
        for (std::size_t c = 1; c < n_classes; ++c)
            if (v[c] > v[best]) best = c;
        if (static_cast<int>(best) != yi[static_cast<std::size_t>(i)]) ++wrong;
    }
    model.oob_error = covered == 0 ? 0.0
                                   : static_cast<double>(wrong) / static_cast<double>(covered);
    return model;
}

// Returns (label, per-class vote fractions over RfModel::classes).
inline std::pair<int, Eigen::VectorXd> predict_rf(const RfModel& model, const Eigen::VectorXd& x) {
    if (x.size() != model.dim) throw ShapeError("rf predict dim mismatch");
    Eigen::VectorXd votes = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(model.classes.size()));
    for (const auto& t : model.trees) votes[t.predict_class(x)] += 1.0;
    votes /= static_cast<double>(model.trees.size());
    Eigen::Index best = 0;
    for (Eigen::Index c = 1; c < votes.size(); ++c)
        if (votes[c] > votes[best]) best = c;
    return {model.classes[static_cast<std::size_t>(best)], votes};
}

}  // namespace fcp
