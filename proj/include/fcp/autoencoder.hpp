#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <iostream>
#include <vector>

#include "fcp/errors.hpp"
#include "fcp/rng.hpp"

namespace fcp {

// ---------------------------------------------------------------------------
// Sparse autoencoder layers, greedy stacking, softmax head and full-stack
// fine-tuning. All training is full-batch gradient descent with momentum and
// step-halving, so the per-epoch loss is non-increasing by construction.
// ---------------------------------------------------------------------------

struct SparseHyper {
    double rho = 0.1;    // target mean activation
    double beta = 4.0;   // weight of the KL sparsity penalty
    double l2 = 0.001;   // weight decay on W1/W2 during pretraining
    std::size_t epochs = 400;
    double learning_rate = 0.5;
    double momentum = 0.9;
};

struct AutoencoderLayer {
    Eigen::MatrixXd W1;  // H x D encoder
    Eigen::VectorXd b1;  // H
    Eigen::MatrixXd W2;  // D x H decoder
    Eigen::VectorXd b2;  // D

    Eigen::Index input_dim() const { return W1.cols(); }
    Eigen::Index hidden_dim() const { return W1.rows(); }
};

inline Eigen::MatrixXd sigmoid(const Eigen::MatrixXd& z) {
    return 1.0 / (1.0 + (-z.array()).exp());
}

// Row-wise encoder output h = f(x).
inline Eigen::MatrixXd encode(const AutoencoderLayer& layer, const Eigen::MatrixXd& X) {
    if (X.cols() != layer.input_dim()) throw ShapeError("encode input dim mismatch");
    return sigmoid((X * layer.W1.transpose()).rowwise() + layer.b1.transpose());
}

inline Eigen::MatrixXd reconstruct(const AutoencoderLayer& layer, const Eigen::MatrixXd& h) {
    return sigmoid((h * layer.W2.transpose()).rowwise() + layer.b2.transpose());
}

namespace detail {

inline double kl_bernoulli(double rho, double rho_hat) {
    rho_hat = std::clamp(rho_hat, 1e-12, 1.0 - 1e-12);
    return rho * std::log(rho / rho_hat) + (1.0 - rho) * std::log((1.0 - rho) / (1.0 - rho_hat));
}

}  // namespace detail

// loss = (1/N) sum_n ||x_n - r_n||^2 / 2  +  beta * sum_j KL(rho || rho_hat_j)
//        + (l2/2) (||W1||^2 + ||W2||^2)
inline double ae_loss(const AutoencoderLayer& layer, const Eigen::MatrixXd& X,
                      const SparseHyper& hyper) {
    if (X.rows() == 0) throw ShapeError("ae_loss needs a nonempty batch");
    const double n = static_cast<double>(X.rows());
    Eigen::MatrixXd h = encode(layer, X);
    Eigen::MatrixXd r = reconstruct(layer, h);
    double recon = (X - r).array().square().sum() / (2.0 * n);
    double sparse = 0.0;
    if (hyper.beta > 0.0) {
        Eigen::VectorXd rho_hat = h.colwise().mean();
        for (Eigen::Index j = 0; j < rho_hat.size(); ++j)
            sparse += detail::kl_bernoulli(hyper.rho, rho_hat[j]);
    }
    double decay = 0.5 * hyper.l2 *
                   (layer.W1.array().square().sum() + layer.W2.array().square().sum());
    return recon + hyper.beta * sparse + decay;
}

struct AeGrad {
    Eigen::MatrixXd W1;
    Eigen::VectorXd b1;
    Eigen::MatrixXd W2;
    Eigen::VectorXd b2;
};

inline AeGrad ae_grad(const AutoencoderLayer& layer, const Eigen::MatrixXd& X,
                      const SparseHyper& hyper) {
    if (X.rows() == 0) throw ShapeError("ae_grad needs a nonempty batch");
    if (X.cols() != layer.input_dim()) throw ShapeError("ae_grad input dim mismatch");
    const double n = static_cast<double>(X.rows());
    Eigen::MatrixXd h = encode(layer, X);                    // N x H
    Eigen::MatrixXd r = reconstruct(layer, h);               // N x D

    // Output delta: d(recon)/dz2 with sigmoid derivative r(1-r).
    Eigen::MatrixXd delta_r =
        ((r - X).array() * r.array() * (1.0 - r.array())).matrix() / n;  // N x D

    AeGrad g;
    g.W2 = delta_r.transpose() * h + hyper.l2 * layer.W2;
    g.b2 = delta_r.colwise().sum().transpose();

    Eigen::MatrixXd back = delta_r * layer.W2;  // N x H
    if (hyper.beta > 0.0) {
        Eigen::VectorXd rho_hat = h.colwise().mean();
        for (Eigen::Index j = 0; j < rho_hat.size(); ++j) {
            double rh = std::clamp(rho_hat[j], 1e-12, 1.0 - 1e-12);
            double dkl = -hyper.rho / rh + (1.0 - hyper.rho) / (1.0 - rh);
            back.col(j).array() += hyper.beta * dkl / n;
        }
    }
    Eigen::MatrixXd delta_h = (back.array() * h.array() * (1.0 - h.array())).matrix();
    g.W1 = delta_h.transpose() * X + hyper.l2 * layer.W1;
    g.b1 = delta_h.colwise().sum().transpose();
    return g;
}

namespace detail {

inline AutoencoderLayer init_layer(Eigen::Index input_dim, Eigen::Index hidden_dim,
                                   std::uint64_t seed) {
    Rng rng = make_rng(seed);
    auto uniform_init = [&](Eigen::Index rows, Eigen::Index cols) {
        double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
        std::uniform_real_distribution<double> dist(-limit, limit);
        Eigen::MatrixXd m(rows, cols);
        for (Eigen::Index i = 0; i < rows; ++i)
            for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = dist(rng);
        return m;
    };
    AutoencoderLayer layer;
    layer.W1 = uniform_init(hidden_dim, input_dim);
    layer.b1 = Eigen::VectorXd::Zero(hidden_dim);
    layer.W2 = uniform_init(input_dim, hidden_dim);
    layer.b2 = Eigen::VectorXd::Zero(input_dim);
    return layer;
}

// Full-batch descent step with momentum. `apply` adds a scaled update to the
// parameters; `loss_of` re-evaluates. Halves the step (and drops momentum)
// until the loss stops increasing.
template <typename Params, typename GradT, typename ApplyFn, typename LossFn, typename ScaleFn>
void descend(Params& params, GradT& velocity, const GradT& grad, double& lr, double momentum,
             double& loss, ApplyFn&& apply, LossFn&& loss_of, ScaleFn&& update_velocity) {
    const double lr0 = lr;
    for (;;) {
        GradT vel_try = update_velocity(velocity, grad, lr, momentum);
        Params candidate = params;
        apply(candidate, vel_try);
        double new_loss = loss_of(candidate);
        if (std::isfinite(new_loss) && new_loss <= loss + 1e-9) {
            params = std::move(candidate);
            velocity = std::move(vel_try);
            loss = new_loss;
            lr = std::min(lr * 1.02, lr0 * 4.0);
            return;
        }
        lr *= 0.5;
        velocity = update_velocity(velocity, grad, 0.0, 0.0);  // zero momentum state
        if (lr < 1e-18) throw NonFiniteLoss("step size underflow, loss cannot decrease");
    }
}

}  // namespace detail

inline AutoencoderLayer ae_train(const Eigen::MatrixXd& X, Eigen::Index hidden_dim,
                                 const SparseHyper& hyper, std::uint64_t seed) {
    if (hidden_dim < 1) throw ConfigError("hidden size must be >= 1");
    AutoencoderLayer layer = detail::init_layer(X.cols(), hidden_dim, seed);
    if (hyper.epochs == 0) return layer;

    AeGrad vel{Eigen::MatrixXd::Zero(hidden_dim, X.cols()), Eigen::VectorXd::Zero(hidden_dim),
               Eigen::MatrixXd::Zero(X.cols(), hidden_dim), Eigen::VectorXd::Zero(X.cols())};
    double lr = hyper.learning_rate;
    double loss = ae_loss(layer, X, hyper);
    if (!std::isfinite(loss)) throw NonFiniteLoss("initial autoencoder loss is not finite");

    for (std::size_t epoch = 0; epoch < hyper.epochs; ++epoch) {
        AeGrad g = ae_grad(layer, X, hyper);
        detail::descend(
            layer, vel, g, lr, hyper.momentum, loss,
            [](AutoencoderLayer& l, const AeGrad& v) {
                l.W1 += v.W1;
                l.b1 += v.b1;
                l.W2 += v.W2;
                l.b2 += v.b2;
            },
            [&](const AutoencoderLayer& l) { return ae_loss(l, X, hyper); },
            [](const AeGrad& v, const AeGrad& g2, double step, double mom) {
                AeGrad out;
                out.W1 = mom * v.W1 - step * g2.W1;
                out.b1 = mom * v.b1 - step * g2.b1;
                out.W2 = mom * v.W2 - step * g2.W2;
                out.b2 = mom * v.b2 - step * g2.b2;
                return out;
            });
    }
    return layer;
}

// ---------------------------------------------------------------------------
// Softmax head
// ---------------------------------------------------------------------------

struct SoftmaxHead {
    Eigen::MatrixXd W;  // K x H
    Eigen::VectorXd b;  // K
};

// Row-stochastic probabilities, max-subtracted for stability.
inline Eigen::MatrixXd softmax_probs(const SoftmaxHead& head, const Eigen::MatrixXd& H) {
    if (H.cols() != head.W.cols()) throw ShapeError("softmax input dim mismatch");
    Eigen::MatrixXd z = (H * head.W.transpose()).rowwise() + head.b.transpose();
    Eigen::MatrixXd p(z.rows(), z.cols());
    for (Eigen::Index i = 0; i < z.rows(); ++i) {
        Eigen::RowVectorXd row = z.row(i).array() - z.row(i).maxCoeff();
        Eigen::RowVectorXd e = row.array().exp();
        p.row(i) = e / e.sum();
    }
    return p;
}

inline double softmax_ce_loss(const SoftmaxHead& head, const Eigen::MatrixXd& H,
                              const std::vector<int>& y_idx) {
    Eigen::MatrixXd p = softmax_probs(head, H);
    double loss = 0.0;
    for (Eigen::Index i = 0; i < p.rows(); ++i)
        loss -= std::log(std::max(p(i, y_idx[static_cast<std::size_t>(i)]), 1e-300));
    return loss / static_cast<double>(p.rows());
}

struct SoftmaxGrad {
    Eigen::MatrixXd W;
    Eigen::VectorXd b;
};

inline SoftmaxGrad softmax_ce_grad(const SoftmaxHead& head, const Eigen::MatrixXd& H,
                                   const std::vector<int>& y_idx) {
    const double n = static_cast<double>(H.rows());
    Eigen::MatrixXd delta = softmax_probs(head, H);  // N x K
    for (Eigen::Index i = 0; i < delta.rows(); ++i)
        delta(i, y_idx[static_cast<std::size_t>(i)]) -= 1.0;
    delta /= n;
    return {delta.transpose() * H, delta.colwise().sum().transpose()};
}

inline SoftmaxHead softmax_train(const Eigen::MatrixXd& H, const std::vector<int>& y_idx,
                                 std::size_t n_classes, std::size_t epochs, std::uint64_t seed,
                                 double learning_rate = 1.0, double momentum = 0.9) {
    if (n_classes < 2) throw DegenerateLabels("softmax needs at least two classes");
    Rng rng = make_rng(seed);
    double limit = std::sqrt(6.0 / static_cast<double>(n_classes + static_cast<std::size_t>(H.cols())));
    std::uniform_real_distribution<double> dist(-limit, limit);
    SoftmaxHead head;
    head.W.resize(static_cast<Eigen::Index>(n_classes), H.cols());
    for (Eigen::Index i = 0; i < head.W.rows(); ++i)
        for (Eigen::Index j = 0; j < head.W.cols(); ++j) head.W(i, j) = dist(rng);
    head.b = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n_classes));

    SoftmaxGrad vel{Eigen::MatrixXd::Zero(head.W.rows(), head.W.cols()),
                    Eigen::VectorXd::Zero(head.b.size())};
    double lr = learning_rate;
    double loss = softmax_ce_loss(head, H, y_idx);
    for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
        SoftmaxGrad g = softmax_ce_grad(head, H, y_idx);
        detail::descend(
            head, vel, g, lr, momentum, loss,
            [](SoftmaxHead& h, const SoftmaxGrad& v) {
                h.W += v.W;
                h.b += v.b;
            },
            [&](const SoftmaxHead& h) { return softmax_ce_loss(h, H, y_idx); },
            [](const SoftmaxGrad& v, const SoftmaxGrad& g2, double step, double mom) {
                return SoftmaxGrad{mom * v.W - step * g2.W, mom * v.b - step * g2.b};
            });
    }
    return head;
}

// ---------------------------------------------------------------------------
// Stacked model
// ---------------------------------------------------------------------------

// Min-max scaling to [0,1]; constant columns map to 0.
struct MinMaxScale {
    Eigen::VectorXd min;
    Eigen::VectorXd range;  // floored to 1 when max == min

    Eigen::MatrixXd apply(const Eigen::MatrixXd& X) const {
        if (X.cols() != min.size()) throw ShapeError("min-max scale dim mismatch");
        return (X.rowwise() - min.transpose()).array().rowwise() / range.transpose().array();
    }
};

inline MinMaxScale fit_minmax(const Eigen::MatrixXd& X) {
    MinMaxScale s;
    s.min = X.colwise().minCoeff();
    Eigen::VectorXd max = X.colwise().maxCoeff();
    s.range = max - s.min;
    for (Eigen::Index j = 0; j < s.range.size(); ++j)
        if (s.range[j] <= 0.0) s.range[j] = 1.0;
    return s;
}

struct StackedModel {
    MinMaxScale scale;
    std::vector<AutoencoderLayer> layers;  // decoders kept for MSE reporting
    SoftmaxHead softmax;
    std::vector<int> classes;  // ascending label vocabulary
    bool fine_tuned = false;

    Eigen::MatrixXd deepest_activation(const Eigen::MatrixXd& X) const {
        Eigen::MatrixXd h = scale.apply(X);
        for (const auto& layer : layers) h = encode(layer, h);
        return h;
    }
};

inline double stack_ce_loss(const StackedModel& model, const Eigen::MatrixXd& X,
                            const std::vector<int>& y_idx) {
    return softmax_ce_loss(model.softmax, model.deepest_activation(X), y_idx);
}

struct StackGrad {
    std::vector<AeGrad> layers;  // only W1/b1 populated (encoders)
    SoftmaxGrad softmax;
};

// Gradient of the fine-tuning objective (pure cross-entropy through the
// encoder chain and softmax head).
inline StackGrad stack_ce_grad(const StackedModel& model, const Eigen::MatrixXd& X,
                               const std::vector<int>& y_idx) {
    const double n = static_cast<double>(X.rows());
    std::vector<Eigen::MatrixXd> acts;  // acts[0] = scaled input, acts[i] = layer i output
    acts.push_back(model.scale.apply(X));
    for (const auto& layer : model.layers) acts.push_back(encode(layer, acts.back()));

    Eigen::MatrixXd delta = softmax_probs(model.softmax, acts.back());
    for (Eigen::Index i = 0; i < delta.rows(); ++i)
        delta(i, y_idx[static_cast<std::size_t>(i)]) -= 1.0;
    delta /= n;

    StackGrad g;
    g.softmax = {delta.transpose() * acts.back(), delta.colwise().sum().transpose()};
    g.layers.resize(model.layers.size());

    Eigen::MatrixXd back = delta * model.softmax.W;  // gradient wrt deepest activation
    for (std::size_t li = model.layers.size(); li-- > 0;) {
        const Eigen::MatrixXd& h = acts[li + 1];
        Eigen::MatrixXd delta_h = (back.array() * h.array() * (1.0 - h.array())).matrix();
        g.layers[li].W1 = delta_h.transpose() * acts[li];
        g.layers[li].b1 = delta_h.colwise().sum().transpose();
        if (li > 0) back = delta_h * model.layers[li].W1;
    }
    return g;
}

inline std::pair<int, Eigen::VectorXd> predict_stack(const StackedModel& model,
                                                     const Eigen::VectorXd& x) {
    Eigen::MatrixXd p = softmax_probs(model.softmax, model.deepest_activation(x.transpose()));
    Eigen::Index best = 0;
    for (Eigen::Index k = 1; k < p.cols(); ++k)
        if (p(0, k) > p(0, best)) best = k;
    return {model.classes[static_cast<std::size_t>(best)], p.row(0).transpose()};
}

inline double stack_accuracy(const StackedModel& model, const Eigen::MatrixXd& X,
                             const std::vector<int>& y) {
    std::size_t correct = 0;
    for (Eigen::Index i = 0; i < X.rows(); ++i)
        if (predict_stack(model, X.row(i).transpose()).first == y[static_cast<std::size_t>(i)])
            ++correct;
    return X.rows() == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(X.rows());
}

struct StackConfig {
    Eigen::Index h1 = 100;
    Eigen::Index h2 = 50;
    SparseHyper hyper1;
    SparseHyper hyper2{0.1, 4.0, 0.001, 100, 0.5, 0.9};  // shorter second pretrain
    std::size_t softmax_epochs = 400;
    std::size_t finetune_epochs = 400;
    double finetune_learning_rate = 0.5;
};

inline StackedModel train_stack(const Eigen::MatrixXd& X, const std::vector<int>& y,
                                const StackConfig& cfg, std::uint64_t seed) {
    if (cfg.h2 >= cfg.h1)
        std::cerr << "warning: second hidden layer (" << cfg.h2
                  << ") is not smaller than the first (" << cfg.h1 << ")\n";

    StackedModel model;
    model.classes = y;
    std::sort(model.classes.begin(), model.classes.end());
    model.classes.erase(std::unique(model.classes.begin(), model.classes.end()),
                        model.classes.end());
    if (model.classes.size() < 2) throw DegenerateLabels("stack needs at least two classes");
    std::vector<int> y_idx(y.size());
    for (std::size_t i = 0; i < y.size(); ++i)
        y_idx[i] = static_cast<int>(std::lower_bound(model.classes.begin(), model.classes.end(),
                                                     y[i]) -
                                    model.classes.begin());

    model.scale = fit_minmax(X);
    Eigen::MatrixXd x0 = model.scale.apply(X);
    model.layers.push_back(ae_train(x0, cfg.h1, cfg.hyper1, derive_seed(seed, 1)));
    Eigen::MatrixXd h1 = encode(model.layers[0], x0);
    model.layers.push_back(ae_train(h1, cfg.h2, cfg.hyper2, derive_seed(seed, 2)));
    Eigen::MatrixXd h2 = encode(model.layers[1], h1);
    model.softmax = softmax_train(h2, y_idx, model.classes.size(), cfg.softmax_epochs,
                                  derive_seed(seed, 3));

    // End-to-end fine-tuning on cross-entropy; sparsity and decay off.
    StackGrad vel;
    vel.layers.resize(model.layers.size());
    for (std::size_t li = 0; li < model.layers.size(); ++li) {
        vel.layers[li].W1 = Eigen::MatrixXd::Zero(model.layers[li].W1.rows(),
                                                  model.layers[li].W1.cols());
        vel.layers[li].b1 = Eigen::VectorXd::Zero(model.layers[li].b1.size());
    }
    vel.softmax = {Eigen::MatrixXd::Zero(model.softmax.W.rows(), model.softmax.W.cols()),
                   Eigen::VectorXd::Zero(model.softmax.b.size())};

    double lr = cfg.finetune_learning_rate;
    double loss = stack_ce_loss(model, X, y_idx);
    for (std::size_t epoch = 0; epoch < cfg.finetune_epochs; ++epoch) {
        StackGrad g = stack_ce_grad(model, X, y_idx);
        detail::descend(
            model, vel, g, lr, 0.9, loss,
            [](StackedModel& m, const StackGrad& v) {
                for (std::size_t li = 0; li < m.layers.size(); ++li) {
                    m.layers[li].W1 += v.layers[li].W1;
                    m.layers[li].b1 += v.layers[li].b1;
                }
                m.softmax.W += v.softmax.W;
                m.softmax.b += v.softmax.b;
            },
            [&](const StackedModel& m) { return stack_ce_loss(m, X, y_idx); },
            [](const StackGrad& v, const StackGrad& g2, double step, double mom) {
                StackGrad out;
                out.layers.resize(v.layers.size());
                for (std::size_t li = 0; li < v.layers.size(); ++li) {
                    out.layers[li].W1 = mom * v.layers[li].W1 - step * g2.layers[li].W1;
                    out.layers[li].b1 = mom * v.layers[li].b1 - step * g2.layers[li].b1;
                }
                out.softmax.W = mom * v.softmax.W - step * g2.softmax.W;
                out.softmax.b = mom * v.softmax.b - step * g2.softmax.b;
                return out;
            });
    }
    model.fine_tuned = true;
    return model;
}

// ---------------------------------------------------------------------------
// Sweeps
// ---------------------------------------------------------------------------

struct SweepRow {
    Eigen::Index h1 = 0, h2 = 0;
    double accuracy = 0.0;
    double mse = 0.0;  // AE1 reconstruction MSE on the validation set
};

inline double reconstruction_mse(const AutoencoderLayer& layer, const Eigen::MatrixXd& Xs) {
    Eigen::MatrixXd r = reconstruct(layer, encode(layer, Xs));
    return (Xs - r).array().square().sum() / static_cast<double>(Xs.size());
}

inline std::vector<SweepRow> sweep_hidden_sizes(
    const Eigen::MatrixXd& Xtr, const std::vector<int>& ytr, const Eigen::MatrixXd& Xval,
    const std::vector<int>& yval, const std::vector<Eigen::Index>& h1_list,
    const std::vector<Eigen::Index>& h2_list, const StackConfig& base, std::uint64_t seed) {
    if (h1_list.empty() || h2_list.empty()) throw ConfigError("sweep ranges must be nonempty");
    std::vector<SweepRow> rows;
    for (Eigen::Index h1 : h1_list)
        for (Eigen::Index h2 : h2_list) {
            StackConfig cfg = base;
            cfg.h1 = h1;
            cfg.h2 = h2;
            StackedModel m = train_stack(Xtr, ytr, cfg, seed);
            SweepRow row;
            row.h1 = h1;
            row.h2 = h2;
            row.accuracy = stack_accuracy(m, Xval, yval);
            row.mse = reconstruction_mse(m.layers[0], m.scale.apply(Xval));
            rows.push_back(row);
        }
    return rows;
}

struct SparsitySweepRow {
    double beta = 0.0, rho = 0.0;
    double accuracy = 0.0;
};

inline std::vector<SparsitySweepRow> sweep_sparsity(
    const Eigen::MatrixXd& Xtr, const std::vector<int>& ytr, const Eigen::MatrixXd& Xval,
    const std::vector<int>& yval, const std::vector<double>& betas,
    const std::vector<double>& rhos, const StackConfig& base, std::uint64_t seed) {
    if (betas.empty() || rhos.empty()) throw ConfigError("sweep ranges must be nonempty");
    std::vector<SparsitySweepRow> rows;
    for (double beta : betas)
        for (double rho : rhos) {
            StackConfig cfg = base;
            cfg.hyper1.beta = cfg.hyper2.beta = beta;
            cfg.hyper1.rho = cfg.hyper2.rho = rho;
            StackedModel m = train_stack(Xtr, ytr, cfg, seed);
            rows.push_back({beta, rho, stack_accuracy(m, Xval, yval)});
        }
    return rows;
}

}  // namespace fcp
