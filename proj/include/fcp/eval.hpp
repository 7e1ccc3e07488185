#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <map>
#include <vector>

#include "fcp/errors.hpp"
#include "fcp/rng.hpp"

namespace fcp {

// ---------------------------------------------------------------------------
// Metric suite (workbench conventions: probability-space MAE/RMSE, per-class
// TP/FP rates, support-weighted average precision) and k-fold CV.
// Label convention throughout: class indices 0..K-1.
// ---------------------------------------------------------------------------

struct MetricsReport {
    double accuracy = 0.0;
    std::vector<double> precision;  // per class; 0 when the class is never predicted
    std::vector<double> tp_rate;    // recall per class
    std::vector<double> fp_rate;
    double weighted_precision = 0.0;
    double macro_precision = 0.0;
    double mae = 0.0;
    double rmse = 0.0;
    Eigen::MatrixXd confusion;  // K x K, entry (i,j) = true i predicted j
    double timing_seconds = 0.0;
    std::size_t n = 0;
};

inline Eigen::MatrixXd confusion(const std::vector<int>& y_true, const std::vector<int>& y_pred,
                                 int k) {
    if (y_true.size() != y_pred.size()) throw ShapeError("confusion label count mismatch");
    Eigen::MatrixXd c = Eigen::MatrixXd::Zero(k, k);
    for (std::size_t i = 0; i < y_true.size(); ++i) {
        if (y_true[i] < 0 || y_true[i] >= k)
            throw LabelError("true label out of range: " + std::to_string(y_true[i]));
        if (y_pred[i] < 0 || y_pred[i] >= k)
            throw LabelError("predicted label out of range: " + std::to_string(y_pred[i]));
        c(y_true[i], y_pred[i]) += 1.0;
    }
    return c;
}

inline std::vector<int> argmax_labels(const Eigen::MatrixXd& probs) {
    std::vector<int> out(static_cast<std::size_t>(probs.rows()));
    for (Eigen::Index i = 0; i < probs.rows(); ++i) {
        Eigen::Index best = 0;
        for (Eigen::Index k = 1; k < probs.cols(); ++k)
            if (probs(i, k) > probs(i, best)) best = k;
        out[static_cast<std::size_t>(i)] = static_cast<int>(best);
    }
    return out;
}

inline MetricsReport metrics(const std::vector<int>& y_true, const Eigen::MatrixXd& probs) {
    const Eigen::Index n = probs.rows();
    const Eigen::Index k = probs.cols();
    if (static_cast<Eigen::Index>(y_true.size()) != n) throw ShapeError("metrics label count mismatch");
    if (n == 0) throw ShapeError("metrics needs at least one instance");
    for (Eigen::Index i = 0; i < n; ++i)
        if (std::abs(probs.row(i).sum() - 1.0) > 1e-6)
            throw NonStochasticRows("probability row " + std::to_string(i) + " does not sum to 1");

    MetricsReport r;
    r.n = static_cast<std::size_t>(n);
    std::vector<int> y_pred = argmax_labels(probs);
    r.confusion = confusion(y_true, y_pred, static_cast<int>(k));
    r.accuracy = r.confusion.trace() / static_cast<double>(n);

    r.precision.resize(static_cast<std::size_t>(k));
    r.tp_rate.resize(static_cast<std::size_t>(k));
    r.fp_rate.resize(static_cast<std::size_t>(k));
    double weighted = 0.0, macro = 0.0;
    for (Eigen::Index c = 0; c < k; ++c) {
        double tp = r.confusion(c, c);
        double support = r.confusion.row(c).sum();
        double predicted = r.confusion.col(c).sum();
        double fp = predicted - tp;
        double tn = static_cast<double>(n) - support - fp;
        r.precision[static_cast<std::size_t>(c)] = predicted > 0 ? tp / predicted : 0.0;
        r.tp_rate[static_cast<std::size_t>(c)] = support > 0 ? tp / support : 0.0;
        r.fp_rate[static_cast<std::size_t>(c)] = (fp + tn) > 0 ? fp / (fp + tn) : 0.0;
        weighted += support / static_cast<double>(n) * r.precision[static_cast<std::size_t>(c)];
        macro += r.precision[static_cast<std::size_t>(c)] / static_cast<double>(k);
    }
    r.weighted_precision = weighted;
    r.macro_precision = macro;

    double abs_sum = 0.0, sq_sum = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index c = 0; c < k; ++c) {
            double target = y_true[static_cast<std::size_t>(i)] == static_cast<int>(c) ? 1.0 : 0.0;
            double d = probs(i, c) - target;
            abs_sum += std::abs(d);
            sq_sum += d * d;
        }
    r.mae = abs_sum / static_cast<double>(n * k);
    r.rmse = std::sqrt(sq_sum / static_cast<double>(n * k));
    return r;
}

// ---------------------------------------------------------------------------
// Stratified k-fold cross-validation
// ---------------------------------------------------------------------------

// Returns fold index per row; stratified by label, deterministic per seed.
inline std::vector<int> kfold_assignment(const std::vector<int>& y, int k, std::uint64_t seed) {
    if (k < 2) throw ConfigError("k must be >= 2");
    std::map<int, std::vector<std::size_t>> by_label;
    for (std::size_t i = 0; i < y.size(); ++i) by_label[y[i]].push_back(i);
    for (const auto& [label, idx] : by_label)
        if (idx.size() < static_cast<std::size_t>(k))
            throw StratifyError("label " + std::to_string(label) + " has fewer than k members");
    Rng rng = make_rng(seed);
    std::vector<int> fold(y.size(), 0);
    int next = 0;
    for (auto& [label, idx] : by_label) {
        std::shuffle(idx.begin(), idx.end(), rng);
        for (std::size_t i = 0; i < idx.size(); ++i) {
            fold[idx[i]] = next;
            next = (next + 1) % k;
        }
    }
    return fold;
}

// trainer(Xtrain, ytrain) returns a predictor mapping a feature row to a
// probability vector over the full label vocabulary (ascending class order).
using FoldTrainer = std::function<std::function<Eigen::VectorXd(const Eigen::VectorXd&)>(
    const Eigen::MatrixXd&, const std::vector<int>&)>;

struct KfoldResult {
    MetricsReport pooled;
    std::vector<MetricsReport> per_fold;
    std::vector<int> fold_of_row;
    std::vector<int> classes;  // vocabulary, ascending
};

inline KfoldResult kfold(const Eigen::MatrixXd& X, const std::vector<int>& y, int k,
                         const FoldTrainer& trainer, std::uint64_t seed) {
    auto t0 = std::chrono::steady_clock::now();
    std::vector<int> classes = y;
    std::sort(classes.begin(), classes.end());
    classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
    auto class_index = [&](int label) {
        return static_cast<int>(std::lower_bound(classes.begin(), classes.end(), label) -
                                classes.begin());
    };

    // Leave-one-out is allowed when k == N.
    std::vector<int> fold;
    if (static_cast<std::size_t>(k) == y.size()) {
        fold.resize(y.size());
        for (std::size_t i = 0; i < y.size(); ++i) fold[i] = static_cast<int>(i);
    } else {
        fold = kfold_assignment(y, k, seed);
    }

    Eigen::MatrixXd pooled_probs(X.rows(), static_cast<Eigen::Index>(classes.size()));
    std::vector<int> y_idx(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) y_idx[i] = class_index(y[i]);

    KfoldResult result;
    result.fold_of_row = fold;
    result.classes = classes;
    for (int f = 0; f < k; ++f) {
        std::vector<Eigen::Index> train_rows, test_rows;
        for (std::size_t i = 0; i < y.size(); ++i)
            (fold[i] == f ? test_rows : train_rows).push_back(static_cast<Eigen::Index>(i));
        if (test_rows.empty()) continue;
        Eigen::MatrixXd Xtr(static_cast<Eigen::Index>(train_rows.size()), X.cols());
        std::vector<int> ytr;
        for (std::size_t i = 0; i < train_rows.size(); ++i) {
            Xtr.row(static_cast<Eigen::Index>(i)) = X.row(train_rows[i]);
            ytr.push_back(y[static_cast<std::size_t>(train_rows[i])]);
        }
        auto predictor = trainer(Xtr, ytr);
        std::vector<int> fold_true;
        Eigen::MatrixXd fold_probs(static_cast<Eigen::Index>(test_rows.size()),
                                   static_cast<Eigen::Index>(classes.size()));
        for (std::size_t i = 0; i < test_rows.size(); ++i) {
            Eigen::VectorXd p = predictor(X.row(test_rows[i]).transpose());
            if (p.size() != static_cast<Eigen::Index>(classes.size()))
                throw ShapeError("fold predictor returned wrong probability length");
            fold_probs.row(static_cast<Eigen::Index>(i)) = p.transpose();
            pooled_probs.row(test_rows[i]) = p.transpose();
            fold_true.push_back(y_idx[static_cast<std::size_t>(test_rows[i])]);
        }
        result.per_fold.push_back(metrics(fold_true, fold_probs));
    }
    result.pooled = metrics(y_idx, pooled_probs);
    result.pooled.timing_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return result;
}

}  // namespace fcp
