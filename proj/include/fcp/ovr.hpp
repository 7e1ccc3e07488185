#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <functional>
#include <vector>

#include "fcp/adt.hpp"
#include "fcp/errors.hpp"
#include "fcp/rf.hpp"
#include "fcp/svm.hpp"

namespace fcp {

// One-vs-rest reduction: K binary models, prediction by argmax decision
// value, ties to the lowest class id.
template <typename Model>
struct OvrEnsemble {
    std::vector<int> classes;  // ascending label vocabulary
    std::vector<Model> models; // classes[k] vs rest
};

template <typename Model, typename TrainFn>
OvrEnsemble<Model> train_one_vs_rest(const Eigen::MatrixXd& X, const std::vector<int>& y,
                                     TrainFn&& train_binary) {
    OvrEnsemble<Model> ens;
    ens.classes = y;
    std::sort(ens.classes.begin(), ens.classes.end());
    ens.classes.erase(std::unique(ens.classes.begin(), ens.classes.end()), ens.classes.end());
    if (ens.classes.size() < 2)
        throw DegenerateLabels("one-vs-rest needs at least two classes");
    for (int cls : ens.classes) {
        Eigen::VectorXd ypm(static_cast<Eigen::Index>(y.size()));
        for (std::size_t i = 0; i < y.size(); ++i) ypm[static_cast<Eigen::Index>(i)] = y[i] == cls ? 1.0 : -1.0;
        ens.models.push_back(train_binary(X, ypm));
    }
    return ens;
}

// decision_fn(model, x) -> scalar, larger means "more this class".
template <typename Model, typename DecisionFn>
std::pair<int, Eigen::VectorXd> predict_one_vs_rest(const OvrEnsemble<Model>& ens,
                                                    const Eigen::VectorXd& x,
                                                    DecisionFn&& decision_fn) {
    Eigen::VectorXd scores(static_cast<Eigen::Index>(ens.models.size()));
    for (std::size_t k = 0; k < ens.models.size(); ++k)
        scores[static_cast<Eigen::Index>(k)] = decision_fn(ens.models[k], x);
    Eigen::Index best = 0;
    for (Eigen::Index k = 1; k < scores.size(); ++k)
        if (scores[k] > scores[best]) best = k;
    return {ens.classes[static_cast<std::size_t>(best)], scores};
}

// Convenience instantiations for the three shallow classifiers.

inline OvrEnsemble<SvmModel> train_multiclass_svm(const Eigen::MatrixXd& X,
                                                  const std::vector<int>& y,
                                                  const SvmHyper& hyper = {}) {
    return train_one_vs_rest<SvmModel>(
        X, y, [&](const Eigen::MatrixXd& Xb, const Eigen::VectorXd& yb) {
            return train_svm(Xb, yb, hyper);
        });
}

inline std::pair<int, Eigen::VectorXd> predict_multiclass_svm(const OvrEnsemble<SvmModel>& ens,
                                                              const Eigen::VectorXd& x) {
    return predict_one_vs_rest(ens, x, [](const SvmModel& m, const Eigen::VectorXd& q) {
        return m.decision(q);
    });
}

inline OvrEnsemble<AdtModel> train_multiclass_adt(const Eigen::MatrixXd& X,
                                                  const std::vector<int>& y,
                                                  const AdtHyper& hyper = {}) {
    return train_one_vs_rest<AdtModel>(
        X, y, [&](const Eigen::MatrixXd& Xb, const Eigen::VectorXd& yb) {
            return train_adt(Xb, yb, hyper);
        });
}

inline std::pair<int, Eigen::VectorXd> predict_multiclass_adt(const OvrEnsemble<AdtModel>& ens,
                                                              const Eigen::VectorXd& x) {
    return predict_one_vs_rest(ens, x, [](const AdtModel& m, const Eigen::VectorXd& q) {
        return m.score(q);
    });
}

inline OvrEnsemble<RfModel> train_multiclass_rf(const Eigen::MatrixXd& X,
                                                const std::vector<int>& y,
                                                const RfHyper& hyper = {}) {
    std::size_t k = 0;
    return train_one_vs_rest<RfModel>(
        X, y, [&](const Eigen::MatrixXd& Xb, const Eigen::VectorXd& yb) {
            RfHyper h = hyper;
            h.seed = derive_seed(hyper.seed, 1000 + k++);
            std::vector<int> yv(static_cast<std::size_t>(yb.size()));
            for (Eigen::Index i = 0; i < yb.size(); ++i)
                yv[static_cast<std::size_t>(i)] = yb[i] > 0 ? 1 : -1;
            return train_rf(Xb, yv, h);
        });
}

inline std::pair<int, Eigen::VectorXd> predict_multiclass_rf(const OvrEnsemble<RfModel>& ens,
                                                             const Eigen::VectorXd& x) {
    return predict_one_vs_rest(ens, x, [](const RfModel& m, const Eigen::VectorXd& q) {
        auto [label, probs] = predict_rf(m, q);
        // Probability of the positive (+1 vs rest) class.
        for (std::size_t c = 0; c < m.classes.size(); ++c)
            if (m.classes[c] == 1) return probs[static_cast<Eigen::Index>(c)];
        return 0.0;
    });
}

}  // namespace fcp
