#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <vector>

#include "fcp/errors.hpp"
#include "fcp/rng.hpp"

namespace fcp {

// ---------------------------------------------------------------------------
// Soft-margin kernel SVM trained by sequential minimal optimization.
// ---------------------------------------------------------------------------

enum class KernelType { Linear, Rbf };

struct Kernel {
    KernelType type = KernelType::Rbf;
    double gamma = 0.0;  // <= 0 means auto: 1 / (D * var(X))

    double operator()(const Eigen::VectorXd& a, const Eigen::VectorXd& b) const {
        if (type == KernelType::Linear) return a.dot(b);
        return std::exp(-gamma * (a - b).squaredNorm());
    }
};

struct SvmHyper {
    double C = 1.0;
    Kernel kernel;
    double tol = 1e-3;
    std::size_t max_passes = 5;  // consecutive clean passes before stopping
    std::size_t max_total_passes = 20000;
    std::uint64_t seed = 0;
};

struct SvmModel {
    Eigen::MatrixXd support_vectors;  // S x D
    Eigen::VectorXd dual_coefs;       // alpha_i * y_i, only alpha > 0 retained
    double bias = 0.0;
    Kernel kernel;
    double C = 1.0;
    // Dual objective value after each outer SMO pass (non-decreasing).
    std::vector<double> objective_trace;

    double decision(const Eigen::VectorXd& x) const {
        if (support_vectors.cols() != x.size()) throw ShapeError("svm decision dim mismatch");
        double f = bias;
        for (Eigen::Index i = 0; i < support_vectors.rows(); ++i)
            f += dual_coefs[i] * kernel(support_vectors.row(i).transpose(), x);
        return f;
    }
};

inline double auto_gamma(const Eigen::MatrixXd& X) {
    const double n = static_cast<double>(X.size());
    double mean = X.mean();
    double var = (X.array() - mean).square().sum() / n;
    if (var <= 0.0) var = 1.0;
    return 1.0 / (static_cast<double>(X.cols()) * var);
}

inline SvmModel train_svm(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                          SvmHyper hyper = {}) {
    const Eigen::Index n = X.rows();
    if (n < 2) throw DegenerateLabels("svm needs at least two training points");
    bool has_pos = false, has_neg = false;
    for (Eigen::Index i = 0; i < n; ++i) {
        if (y[i] == 1.0) has_pos = true;
        else if (y[i] == -1.0) has_neg = true;
        else throw LabelError("svm labels must be -1 or +1");
    }
    if (!has_pos || !has_neg) throw DegenerateLabels("svm needs both classes present");
    if (hyper.kernel.type == KernelType::Rbf && hyper.kernel.gamma <= 0.0)
        hyper.kernel.gamma = auto_gamma(X);

    // Precomputed Gram matrix; datasets here are desk scale.
    Eigen::MatrixXd K(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i; j < n; ++j)
            K(i, j) = K(j, i) = hyper.kernel(X.row(i).transpose(), X.row(j).transpose());

    Eigen::VectorXd alpha = Eigen::VectorXd::Zero(n);
    double b = 0.0;
    const double C = hyper.C;
    const double tol = hyper.tol;
    Rng rng = make_rng(hyper.seed);
    std::uniform_int_distribution<Eigen::Index> pick(0, n - 2);

    auto f_of = [&](Eigen::Index i) {
        double f = b;
        for (Eigen::Index k = 0; k < n; ++k)
            if (alpha[k] != 0.0) f += alpha[k] * y[k] * K(k, i);
        return f;
    };
    auto objective = [&]() {
        double obj = alpha.sum();
        for (Eigen::Index i = 0; i < n; ++i) {
            if (alpha[i] == 0.0) continue;
            for (Eigen::Index j = 0; j < n; ++j)
                if (alpha[j] != 0.0) obj -= 0.5 * alpha[i] * alpha[j] * y[i] * y[j] * K(i, j);
        }
        return obj;
    };

    SvmModel model;
    std::size_t clean_passes = 0, total = 0;

    // Analytic two-variable update; returns true if alpha_j moved.
    auto take_step = [&](Eigen::Index i, Eigen::Index j, double Ei) {
        if (i == j) return false;
        double Ej = f_of(j) - y[j];
        double ai_old = alpha[i], aj_old = alpha[j];
        double L, H;
        if (y[i] != y[j]) {
            L = std::max(0.0, aj_old - ai_old);
            H = std::min(C, C + aj_old - ai_old);
        } else {
            L = std::max(0.0, ai_old + aj_old - C);
            H = std::min(C, ai_old + aj_old);
        }
        if (L >= H) return false;
        double eta = 2.0 * K(i, j) - K(i, i) - K(j, j);
        if (eta >= 0.0) return false;
        double aj = aj_old - y[j] * (Ei - Ej) / eta;
        aj = std::clamp(aj, L, H);
        if (std::abs(aj - aj_old) < 1e-8) return false;
        double ai = ai_old + y[i] * y[j] * (aj_old - aj);
        alpha[i] = ai;
        alpha[j] = aj;
        double b1 = b - Ei - y[i] * (ai - ai_old) * K(i, i) - y[j] * (aj - aj_old) * K(i, j);
        double b2 = b - Ej - y[i] * (ai - ai_old) * K(i, j) - y[j] * (aj - aj_old) * K(j, j);
        if (ai > 0 && ai < C) b = b1;
        else if (aj > 0 && aj < C) b = b2;
        else b = 0.5 * (b1 + b2);
        return true;
    };

    while (clean_passes < hyper.max_passes && total < hyper.max_total_passes) {
        int changed = 0;
        for (Eigen::Index i = 0; i < n; ++i) {
            double Ei = f_of(i) - y[i];
            if (!((y[i] * Ei < -tol && alpha[i] < C) || (y[i] * Ei > tol && alpha[i] > 0))) continue;
            Eigen::Index j = pick(rng);
            if (j >= i) ++j;
            bool moved = take_step(i, j, Ei);
            // Random partner made no progress: scan all partners once.
            for (Eigen::Index k = 0; !moved && k < n; ++k) moved = take_step(i, k, Ei);
            if (moved) ++changed;
        }
        model.objective_trace.push_back(objective());
        clean_passes = changed == 0 ? clean_passes + 1 : 0;
        ++total;
    }

    std::vector<Eigen::Index> sv;
    for (Eigen::Index i = 0; i < n; ++i)
        if (alpha[i] > 0.0) sv.push_back(i);
    model.support_vectors.resize(static_cast<Eigen::Index>(sv.size()), X.cols());
    model.dual_coefs.resize(static_cast<Eigen::Index>(sv.size()));
    for (std::size_t k = 0; k < sv.size(); ++k) {
        model.support_vectors.row(static_cast<Eigen::Index>(k)) = X.row(sv[k]);
        model.dual_coefs[static_cast<Eigen::Index>(k)] = alpha[sv[k]] * y[sv[k]];
    }
    model.bias = b;
    model.kernel = hyper.kernel;
    model.C = C;
    return model;
}

// Returns (label in {-1,+1}, decision value). Ties resolve to +1.
inline std::pair<int, double> predict_svm(const SvmModel& model, const Eigen::VectorXd& x) {
    double f = model.decision(x);
    return {f >= 0.0 ? 1 : -1, f};
}

}  // namespace fcp
