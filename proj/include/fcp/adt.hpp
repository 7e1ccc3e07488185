#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <vector>

#include "fcp/errors.hpp"

namespace fcp {

// ---------------------------------------------------------------------------
// Alternating decision tree trained by boosting (minimal-Z splitter choice,
// smoothed half-log-odds prediction values).
// ---------------------------------------------------------------------------

struct AdtHyper {
    std::size_t rounds = 10;
};

struct AdtSplitter {
    int precondition = 0;  // index into AdtModel::preconditions
    int feature = 0;
    double threshold = 0.0;
    double value_lt = 0.0;  // added when x[feature] < threshold
    double value_ge = 0.0;  // added otherwise
};

// Precondition = conjunction of branch decisions on the path from the root.
// Index 0 is "always true"; splitter s contributes two children.
struct AdtPrecondition {
    int splitter = -1;  // -1 for the root precondition
    bool branch_lt = false;
};

struct AdtModel {
    double root_value = 0.0;
    std::vector<AdtSplitter> splitters;
    std::vector<AdtPrecondition> preconditions;
    std::size_t rounds = 0;

    bool precondition_holds(int pre, const Eigen::VectorXd& x) const {
        while (pre != 0) {
            const auto& p = preconditions[static_cast<std::size_t>(pre)];
            const auto& s = splitters[static_cast<std::size_t>(p.splitter)];
            bool lt = x[s.feature] < s.threshold;
            if (lt != p.branch_lt) return false;
            pre = s.precondition;
        }
        return true;
    }

    double score(const Eigen::VectorXd& x) const {
        double v = root_value;
        for (const auto& s : splitters) {
            if (!precondition_holds(s.precondition, x)) continue;
            v += x[s.feature] < s.threshold ? s.value_lt : s.value_ge;
        }
        return v;
    }
};

inline AdtModel train_adt(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                          const AdtHyper& hyper = {}) {
    const Eigen::Index n = X.rows();
    const Eigen::Index d = X.cols();
    bool has_pos = false, has_neg = false;
    for (Eigen::Index i = 0; i < n; ++i) {
        if (y[i] == 1.0) has_pos = true;
        else if (y[i] == -1.0) has_neg = true;
        else throw LabelError("adt labels must be -1 or +1");
    }
    if (!has_pos || !has_neg) throw DegenerateLabels("adt needs both classes present");

    const double eps = 1.0 / (2.0 * static_cast<double>(n));
    Eigen::VectorXd w = Eigen::VectorXd::Ones(n);

    AdtModel model;
    model.rounds = hyper.rounds;
    model.preconditions.push_back({-1, false});

    {
        double wp = 0, wm = 0;
        for (Eigen::Index i = 0; i < n; ++i) (y[i] > 0 ? wp : wm) += w[i];
        model.root_value = 0.5 * std::log((wp + eps) / (wm + eps));
        for (Eigen::Index i = 0; i < n; ++i) w[i] *= std::exp(-y[i] * model.root_value);
    }

    // Global argsort per feature, reused each round.
    std::vector<std::vector<Eigen::Index>> order(static_cast<std::size_t>(d));
    for (Eigen::Index f = 0; f < d; ++f) {
        auto& o = order[static_cast<std::size_t>(f)];
        o.resize(static_cast<std::size_t>(n));
        for (Eigen::Index i = 0; i < n; ++i) o[static_cast<std::size_t>(i)] = i;
        std::stable_sort(o.begin(), o.end(),
                         [&](Eigen::Index a, Eigen::Index b) { return X(a, f) < X(b, f); });
    }

    // Each (precondition, feature, threshold) splitter may be added only once;
    // training stops early when every candidate cut is already in the model.
    auto used = [&](int pre, int f, double t) {
        for (const auto& s : model.splitters)
            if (s.precondition == pre && s.feature == f && s.threshold == t) return true;
        return false;
    };

    for (std::size_t round = 0; round < hyper.rounds; ++round) {
        const double w_total = w.sum();

        double best_z = std::numeric_limits<double>::infinity();
        int best_pre = -1, best_f = -1;
        double best_t = 0;

        for (std::size_t pre = 0; pre < model.preconditions.size(); ++pre) {
            // Instances satisfying this precondition.
            std::vector<bool> mask(static_cast<std::size_t>(n));
            double wc = 0;
            for (Eigen::Index i = 0; i < n; ++i) {
                mask[static_cast<std::size_t>(i)] =
                    model.precondition_holds(static_cast<int>(pre), X.row(i).transpose());
                if (mask[static_cast<std::size_t>(i)]) wc += w[i];
            }
            const double w_notc = w_total - wc;
            double wp_all = 0, wm_all = 0;
            for (Eigen::Index i = 0; i < n; ++i)
                if (mask[static_cast<std::size_t>(i)]) (y[i] > 0 ? wp_all : wm_all) += w[i];

            for (Eigen::Index f = 0; f < d; ++f) {
                double wp_lt = 0, wm_lt = 0;
                double prev = std::numeric_limits<double>::quiet_NaN();
                for (Eigen::Index k = 0; k < n; ++k) {
                    Eigen::Index i = order[static_cast<std::size_t>(f)][static_cast<std::size_t>(k)];
                    if (!mask[static_cast<std::size_t>(i)]) continue;
                    double v = X(i, f);
                    if (!std::isnan(prev) && v > prev) {
                        double t = 0.5 * (prev + v);
                        double wp_ge = wp_all - wp_lt, wm_ge = wm_all - wm_lt;
                        double z = 2.0 * (std::sqrt(wp_lt * wm_lt) + std::sqrt(wp_ge * wm_ge)) +
                                   w_notc;
                        if (z < best_z - 1e-15 &&
                            !used(static_cast<int>(pre), static_cast<int>(f), t)) {
                            best_z = z;
                            best_pre = static_cast<int>(pre);
                            best_f = static_cast<int>(f);
                            best_t = t;
                        }
                    }
                    (y[i] > 0 ? wp_lt : wm_lt) += w[i];
                    prev = v;
                }
            }
        }
        if (best_pre < 0) break;  // no splittable precondition left

        // Recompute branch weights for the chosen splitter.
        double wp_lt = 0, wm_lt = 0, wp_ge = 0, wm_ge = 0;
        std::vector<bool> mask(static_cast<std::size_t>(n));
        for (Eigen::Index i = 0; i < n; ++i) {
            mask[static_cast<std::size_t>(i)] =
                model.precondition_holds(best_pre, X.row(i).transpose());
            if (!mask[static_cast<std::size_t>(i)]) continue;
            if (X(i, best_f) < best_t) (y[i] > 0 ? wp_lt : wm_lt) += w[i];
            else (y[i] > 0 ? wp_ge : wm_ge) += w[i];
        }

        AdtSplitter s;
        s.precondition = best_pre;
        s.feature = best_f;
        s.threshold = best_t;
        s.value_lt = 0.5 * std::log((wp_lt + eps) / (wm_lt + eps));
        s.value_ge = 0.5 * std::log((wp_ge + eps) / (wm_ge + eps));
        int sid = static_cast<int>(model.splitters.size());
        model.splitters.push_back(s);
        model.preconditions.push_back({sid, true});
        model.preconditions.push_back({sid, false});

        for (Eigen::Index i = 0; i < n; ++i) {
            if (!mask[static_cast<std::size_t>(i)]) continue;
            double a = X(i, best_f) < best_t ? s.value_lt : s.value_ge;
            w[i] *= std::exp(-y[i] * a);
        }
    }
    return model;
}

// Returns (label in {-1,+1}, score). Ties resolve to +1.
inline std::pair<int, double> predict_adt(const AdtModel& model, const Eigen::VectorXd& x) {
    double s = model.score(x);
    return {s >= 0.0 ? 1 : -1, s};
}

}  // namespace fcp
