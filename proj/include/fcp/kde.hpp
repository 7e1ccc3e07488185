#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "fcp/errors.hpp"
#include "fcp/ingest.hpp"
#include "fcp/rng.hpp"

namespace fcp {

// ---------------------------------------------------------------------------
// Kernel density estimation with a Gaussian product kernel, plus a
// random-walk Metropolis sampler and a direct mixture sampler.
// ---------------------------------------------------------------------------

enum class BandwidthRule { Silverman, Explicit };

struct KdeModel {
    Eigen::MatrixXd samples;    // M x D training points
    Eigen::VectorXd bandwidth;  // per-dimension h_j > 0
    std::optional<int> class_label;

    Eigen::Index m() const { return samples.rows(); }
    Eigen::Index dim() const { return samples.cols(); }
};

struct ChainConfig {
    std::size_t burn_in = 1000;
    std::size_t thin = 10;
    double proposal_scale = 1.0;
    std::uint64_t seed = 0;
};

inline void validate(const ChainConfig& cfg) {
    if (cfg.thin < 1) throw ConfigError("chain thin must be >= 1");
    if (cfg.proposal_scale <= 0.0) throw ConfigError("chain proposal_scale must be > 0");
}

inline KdeModel fit_kde(const Eigen::MatrixXd& samples, BandwidthRule rule,
                        const std::optional<Eigen::VectorXd>& explicit_bw = std::nullopt) {
    if (samples.rows() < 1) throw ConfigError("fit_kde requires at least one sample");
    if (!samples.allFinite()) throw ConfigError("fit_kde requires finite samples");
    KdeModel model;
    model.samples = samples;
    const Eigen::Index m = samples.rows();
    const Eigen::Index d = samples.cols();

    if (rule == BandwidthRule::Explicit) {
        if (!explicit_bw) throw ConfigError("explicit bandwidth rule requires a bandwidth vector");
        if (explicit_bw->size() != d) throw ShapeError("bandwidth dimension mismatch");
        if ((explicit_bw->array() <= 0.0).any())
            throw ConfigError("bandwidths must be positive");
        model.bandwidth = *explicit_bw;
        return model;
    }
    if (m < 2)
        throw ConfigError("data-driven bandwidth rule requires M >= 2; pass an explicit bandwidth");

    // Silverman per dimension: h_j = sigma_j * (4 / ((D+2) M))^(1/(D+4)),
    // with sigma_j the sample (1/(M-1)) standard deviation.
    const double factor =
        std::pow(4.0 / (static_cast<double>(d + 2) * static_cast<double>(m)),
                 1.0 / static_cast<double>(d + 4));
    Eigen::VectorXd mean = samples.colwise().mean();
    Eigen::MatrixXd centered = samples.rowwise() - mean.transpose();
    Eigen::VectorXd var =
        centered.array().square().colwise().sum() / static_cast<double>(m - 1);
    model.bandwidth.resize(d);
    for (Eigen::Index j = 0; j < d; ++j) {
        double h = std::sqrt(var[j]) * factor;
        if (h <= 0.0) h = 1e-6 * (1.0 + std::abs(mean[j]));  // zero-variance floor
        model.bandwidth[j] = h;
    }
    return model;
}

inline double log_density(const KdeModel& model, const Eigen::VectorXd& x) {
    if (x.size() != model.dim()) throw ShapeError("density query dimension mismatch");
    const Eigen::Index m = model.m();
    const Eigen::Index d = model.dim();
    double log_norm = 0.0;
    for (Eigen::Index j = 0; j < d; ++j)
        log_norm -= std::log(model.bandwidth[j] * std::sqrt(2.0 * std::numbers::pi));
    // log-sum-exp over kernels
    Eigen::VectorXd exponents(m);
    for (Eigen::Index i = 0; i < m; ++i) {
        double e = 0.0;
        for (Eigen::Index j = 0; j < d; ++j) {
            double z = (x[j] - model.samples(i, j)) / model.bandwidth[j];
            e -= 0.5 * z * z;
        }
        exponents[i] = e;
    }
    double mx = exponents.maxCoeff();
    double sum = (exponents.array() - mx).exp().sum();
    return log_norm + mx + std::log(sum) - std::log(static_cast<double>(m));
}

inline double density(const KdeModel& model, const Eigen::VectorXd& x) {
    return std::exp(log_density(model, x));
}

struct ChainStats {
    std::size_t proposals = 0;
    std::size_t accepted = 0;
    double acceptance_rate() const {
        return proposals == 0 ? 0.0 : static_cast<double>(accepted) / static_cast<double>(proposals);
    }
};

// Random-walk Metropolis targeting the KDE. Proposal is an axis-wise Gaussian
// with stddev proposal_scale * h_j. Deterministic for a fixed config.
inline Eigen::MatrixXd sample_markov(const KdeModel& model, std::size_t n,
                                     const ChainConfig& cfg, ChainStats* stats = nullptr) {
    validate(cfg);
    if (n < 1) throw ConfigError("sample count must be >= 1");
    Rng rng = make_rng(cfg.seed);
    const Eigen::Index d = model.dim();
    std::uniform_int_distribution<Eigen::Index> pick(0, model.m() - 1);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);

    Eigen::VectorXd state = model.samples.row(pick(rng)).transpose();
    double state_logp = log_density(model, state);

    Eigen::MatrixXd out(static_cast<Eigen::Index>(n), d);
    std::size_t kept = 0;
    std::size_t step = 0;
    Eigen::VectorXd proposal(d);
    while (kept < n) {
        for (Eigen::Index j = 0; j < d; ++j)
            proposal[j] = state[j] + cfg.proposal_scale * model.bandwidth[j] * gauss(rng);
        double prop_logp = log_density(model, proposal);
        double u = unif(rng);
        if (stats) stats->proposals++;
        if (std::log(u) < prop_logp - state_logp) {
            state = proposal;
            state_logp = prop_logp;
            if (stats) stats->accepted++;
        }
        ++step;
        if (step > cfg.burn_in && (step - cfg.burn_in) % cfg.thin == 0)
            out.row(static_cast<Eigen::Index>(kept++)) = state.transpose();
    }
    return out;
}

// Direct i.i.d. draws from the KDE mixture: uniform kernel center plus
// Gaussian(0, h) noise. Used as the oracle for the Metropolis sampler and
// available as an alternative generator backend.
inline Eigen::MatrixXd sample_direct(const KdeModel& model, std::size_t n, std::uint64_t seed) {
    Rng rng = make_rng(seed);
    const Eigen::Index d = model.dim();
    std::uniform_int_distribution<Eigen::Index> pick(0, model.m() - 1);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::MatrixXd out(static_cast<Eigen::Index>(n), d);
    for (std::size_t i = 0; i < n; ++i) {
        Eigen::Index c = pick(rng);
        for (Eigen::Index j = 0; j < d; ++j)
            out(static_cast<Eigen::Index>(i), j) =
                model.samples(c, j) + model.bandwidth[j] * gauss(rng);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Class taxonomy and labeled generation
// ---------------------------------------------------------------------------

struct TaxonomyClass {
    int id = 0;  // 1-based, contiguous
    std::string name;
    int severity = 0;  // severity assigned to generated records of this class
};

struct ClassTaxonomy {
    std::vector<TaxonomyClass> classes;
    std::vector<std::string> features;
    std::vector<double> priors;

    void validate() const {
        if (classes.empty()) throw ConfigError("taxonomy has no classes");
        for (std::size_t i = 0; i < classes.size(); ++i)
            if (classes[i].id != static_cast<int>(i) + 1)
                throw ConfigError("taxonomy class ids must be contiguous from 1");
        if (priors.size() != classes.size())
            throw ConfigError("taxonomy priors must match class count");
        double s = 0.0;
        for (double p : priors) {
            if (p < 0.0) throw ConfigError("priors must be nonnegative");
            s += p;
        }
        if (std::abs(s - 1.0) > 1e-9) throw ConfigError("priors must sum to 1");
    }
};

// Per-record class ids drawn sequentially from the prior; replayable.
inline std::vector<int> draw_class_ids(const std::vector<double>& priors, std::size_t n,
                                       std::uint64_t seed) {
    Rng rng = make_rng(seed);
    std::discrete_distribution<int> dist(priors.begin(), priors.end());
    std::vector<int> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = dist(rng) + 1;
    return out;
}

inline std::vector<KdeRecord> generate_labeled(const ClassTaxonomy& taxonomy,
                                               const std::vector<KdeModel>& per_class,
                                               std::size_t n, const ChainConfig& cfg,
                                               bool use_markov = true) {
    taxonomy.validate();
    validate(cfg);
    if (per_class.size() != taxonomy.classes.size())
        throw ConfigError("need one KDE model per taxonomy class");

    std::vector<int> class_ids = draw_class_ids(taxonomy.priors, n, cfg.seed);
    std::vector<std::size_t> counts(taxonomy.classes.size(), 0);
    for (int c : class_ids) counts[static_cast<std::size_t>(c - 1)]++;

    // One chain per class with a deterministically derived seed, so results
    // are independent of scheduling.
    std::vector<Eigen::MatrixXd> draws(per_class.size());
    for (std::size_t k = 0; k < per_class.size(); ++k) {
        if (counts[k] == 0) continue;
        ChainConfig ck = cfg;
        ck.seed = cfg.seed + static_cast<std::uint64_t>(taxonomy.classes[k].id);
        draws[k] = use_markov ? sample_markov(per_class[k], counts[k], ck)
                              : sample_direct(per_class[k], counts[k], ck.seed);
    }

    std::vector<std::size_t> next(per_class.size(), 0);
    std::vector<KdeRecord> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t k = static_cast<std::size_t>(class_ids[i] - 1);
        KdeRecord r;
        r.docket = static_cast<long>(i) + 1;
        r.features = draws[k].row(static_cast<Eigen::Index>(next[k]++)).transpose();
        r.severity = taxonomy.classes[k].severity;
        r.cls = taxonomy.classes[k].id;
        out.push_back(std::move(r));
    }
    return out;
}

}  // namespace fcp
