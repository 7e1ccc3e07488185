#pragma once

#include <Eigen/Dense>
#include <fstream>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "fcp/adt.hpp"
#include "fcp/autoencoder.hpp"
#include "fcp/csv.hpp"
#include "fcp/errors.hpp"
#include "fcp/ingest.hpp"
#include "fcp/ovr.hpp"
#include "fcp/rf.hpp"
#include "fcp/svm.hpp"

namespace fcp {

// ---------------------------------------------------------------------------
// Versioned JSON model files. Arrays are row-major with declared shapes;
// numbers round-trip doubles exactly, so load(save(m)) reproduces
// predictions bit-identically and save(load(f)) is byte-identical.
// ---------------------------------------------------------------------------

inline constexpr int kModelSchemaVersion = 1;

using Json = nlohmann::json;

namespace detail {

inline Json matrix_to_json(const Eigen::MatrixXd& m) {
    Json j;
    j["shape"] = {m.rows(), m.cols()};
    std::vector<double> data;
    data.reserve(static_cast<std::size_t>(m.size()));
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back(m(i, c));
    j["data"] = data;
    return j;
}

inline Eigen::MatrixXd matrix_from_json(const Json& j) {
    if (!j.contains("shape") || !j.contains("data")) throw ParseError("matrix entry missing shape/data");
    Eigen::Index r = j["shape"][0].get<Eigen::Index>();
    Eigen::Index c = j["shape"][1].get<Eigen::Index>();
    const auto& data = j["data"];
    if (!data.is_array() || static_cast<Eigen::Index>(data.size()) != r * c)
        throw ParseError("matrix data size mismatch");
    Eigen::MatrixXd m(r, c);
    std::size_t k = 0;
    for (Eigen::Index i = 0; i < r; ++i)
        for (Eigen::Index cc = 0; cc < c; ++cc) {
            if (!data[k].is_number()) throw ParseError("matrix entry is not a number");
            m(i, cc) = data[k++].get<double>();
        }
    return m;
}

inline Json vector_to_json(const Eigen::VectorXd& v) {
    std::vector<double> data(v.data(), v.data() + v.size());
    return Json(data);
}

inline Eigen::VectorXd vector_from_json(const Json& j) {
    if (!j.is_array()) throw ParseError("vector entry is not an array");
    Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_number()) throw ParseError("vector entry is not a number");
        v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
    }
    return v;
}

// --- per-model parameter blocks ---

inline Json to_json(const SvmModel& m) {
    Json j;
    j["support_vectors"] = matrix_to_json(m.support_vectors);
    j["dual_coefs"] = vector_to_json(m.dual_coefs);
    j["bias"] = m.bias;
    j["kernel"] = m.kernel.type == KernelType::Linear ? "linear" : "rbf";
    j["gamma"] = m.kernel.gamma;
    j["C"] = m.C;
    return j;
}

inline SvmModel svm_from_json(const Json& j) {
    SvmModel m;
    m.support_vectors = matrix_from_json(j.at("support_vectors"));
    m.dual_coefs = vector_from_json(j.at("dual_coefs"));
    m.bias = j.at("bias").get<double>();
    m.kernel.type = j.at("kernel").get<std::string>() == "linear" ? KernelType::Linear
                                                                  : KernelType::Rbf;
    m.kernel.gamma = j.at("gamma").get<double>();
    m.C = j.at("C").get<double>();
    return m;
}

inline Json to_json(const AdtModel& m) {
    Json j;
    j["root_value"] = m.root_value;
    j["rounds"] = m.rounds;
    Json splitters = Json::array();
    for (const auto& s : m.splitters)
        splitters.push_back({{"precondition", s.precondition},
                             {"feature", s.feature},
                             {"threshold", s.threshold},
                             {"value_lt", s.value_lt},
                             {"value_ge", s.value_ge}});
    j["splitters"] = splitters;
    Json pres = Json::array();
    for (const auto& p : m.preconditions)
        pres.push_back({{"splitter", p.splitter}, {"branch_lt", p.branch_lt}});
    j["preconditions"] = pres;
    return j;
}

inline AdtModel adt_from_json(const Json& j) {
    AdtModel m;
    m.root_value = j.at("root_value").get<double>();
    m.rounds = j.at("rounds").get<std::size_t>();
    for (const auto& s : j.at("splitters"))
        m.splitters.push_back({s.at("precondition").get<int>(), s.at("feature").get<int>(),
                               s.at("threshold").get<double>(), s.at("value_lt").get<double>(),
                               s.at("value_ge").get<double>()});
    for (const auto& p : j.at("preconditions"))
        m.preconditions.push_back({p.at("splitter").get<int>(), p.at("branch_lt").get<bool>()});
    return m;
}

inline Json to_json(const RfModel& m) {
    Json j;
    Json trees = Json::array();
    for (const auto& t : m.trees) {
        Json nodes = Json::array();
        for (const auto& nd : t.nodes)
            nodes.push_back({{"feature", nd.feature},
                             {"threshold", nd.threshold},
                             {"left", nd.left},
                             {"right", nd.right},
                             {"leaf_class", nd.leaf_class}});
        trees.push_back(nodes);
    }
    j["trees"] = trees;
    j["per_tree_seed"] = m.per_tree_seed;
    j["classes"] = m.classes;
    j["oob_error"] = m.oob_error;
    j["feature_importances"] = vector_to_json(m.feature_importances);
    j["dim"] = m.dim;
    return j;
}

inline RfModel rf_from_json(const Json& j) {
    RfModel m;
    for (const auto& t : j.at("trees")) {
        RfTree tree;
        for (const auto& nd : t)
            tree.nodes.push_back({nd.at("feature").get<int>(), nd.at("threshold").get<double>(),
                                  nd.at("left").get<int>(), nd.at("right").get<int>(),
                                  nd.at("leaf_class").get<int>()});
        m.trees.push_back(std::move(tree));
    }
    m.per_tree_seed = j.at("per_tree_seed").get<std::vector<std::uint64_t>>();
    m.classes = j.at("classes").get<std::vector<int>>();
    m.oob_error = j.at("oob_error").get<double>();
    m.feature_importances = vector_from_json(j.at("feature_importances"));
    m.dim = j.at("dim").get<Eigen::Index>();
    return m;
}

inline Json to_json(const StackedModel& m) {
    Json j;
    j["scale_min"] = vector_to_json(m.scale.min);
    j["scale_range"] = vector_to_json(m.scale.range);
    Json layers = Json::array();
    for (const auto& l : m.layers)
        layers.push_back({{"W1", matrix_to_json(l.W1)},
                          {"b1", vector_to_json(l.b1)},
                          {"W2", matrix_to_json(l.W2)},
                          {"b2", vector_to_json(l.b2)}});
    j["layers"] = layers;
    j["softmax_W"] = matrix_to_json(m.softmax.W);
    j["softmax_b"] = vector_to_json(m.softmax.b);
    j["classes"] = m.classes;
    j["fine_tuned"] = m.fine_tuned;
    return j;
}

inline StackedModel stacked_from_json(const Json& j) {
    StackedModel m;
    m.scale.min = vector_from_json(j.at("scale_min"));
    m.scale.range = vector_from_json(j.at("scale_range"));
    for (const auto& l : j.at("layers")) {
        AutoencoderLayer layer;
        layer.W1 = matrix_from_json(l.at("W1"));
        layer.b1 = vector_from_json(l.at("b1"));
        layer.W2 = matrix_from_json(l.at("W2"));
        layer.b2 = vector_from_json(l.at("b2"));
        m.layers.push_back(std::move(layer));
    }
    m.softmax.W = matrix_from_json(j.at("softmax_W"));
    m.softmax.b = vector_from_json(j.at("softmax_b"));
    m.classes = j.at("classes").get<std::vector<int>>();
    m.fine_tuned = j.at("fine_tuned").get<bool>();
    return m;
}

template <typename M>
Json ovr_to_json(const OvrEnsemble<M>& ens) {
    Json j;
    j["classes"] = ens.classes;
    Json models = Json::array();
    for (const auto& m : ens.models) models.push_back(to_json(m));
    j["models"] = models;
    return j;
}

}  // namespace detail

using AnyModel = std::variant<SvmModel, AdtModel, RfModel, OvrEnsemble<SvmModel>,
                              OvrEnsemble<AdtModel>, OvrEnsemble<RfModel>, StackedModel>;

struct SavedModel {
    int schema_version = kModelSchemaVersion;
    std::string model_type;  // svm | adt | rf | ovr_svm | ovr_adt | ovr_rf | stacked_ae
    Json hyperparameters = Json::object();
    std::optional<Standardization> standardization;
    std::vector<int> label_vocabulary;  // ascending; binary: +1 side is the higher label
    std::uint64_t seed = 0;
    AnyModel model;
};

inline std::string model_to_json_text(const SavedModel& m) {
    Json j;
    j["schema_version"] = m.schema_version;
    j["model_type"] = m.model_type;
    j["hyperparameters"] = m.hyperparameters;
    j["label_vocabulary"] = m.label_vocabulary;
    j["seed"] = m.seed;
    if (m.standardization) {
        j["preprocessing"]["standardization"]["mean"] =
            detail::vector_to_json(m.standardization->mean);
        j["preprocessing"]["standardization"]["stddev"] =
            detail::vector_to_json(m.standardization->stddev);
    } else {
        j["preprocessing"] = Json::object();
    }
    std::visit(
        [&](const auto& model) {
            using T = std::decay_t<decltype(model)>;
            if constexpr (std::is_same_v<T, OvrEnsemble<SvmModel>> ||
                          std::is_same_v<T, OvrEnsemble<AdtModel>> ||
                          std::is_same_v<T, OvrEnsemble<RfModel>>) {
                j["parameters"] = detail::ovr_to_json(model);
            } else {
                j["parameters"] = detail::to_json(model);
            }
        },
        m.model);
    return j.dump(2) + "\n";
}

inline void save_model(const SavedModel& m, const std::string& path) {
    csv::write_file_atomic(path, model_to_json_text(m));
}

inline SavedModel load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FileMissing(path);
    Json j;
    try {
        in >> j;
    } catch (const Json::exception& e) {
        throw ParseError(std::string("invalid model file: ") + e.what());
    }
    SavedModel m;
    m.schema_version = j.at("schema_version").get<int>();
    if (m.schema_version != kModelSchemaVersion)
        throw VersionError("unsupported model schema version " +
                           std::to_string(m.schema_version));
    m.model_type = j.at("model_type").get<std::string>();
    m.hyperparameters = j.value("hyperparameters", Json::object());
    m.label_vocabulary = j.at("label_vocabulary").get<std::vector<int>>();
    m.seed = j.value("seed", std::uint64_t{0});
    if (j.contains("preprocessing") && j["preprocessing"].contains("standardization")) {
        Standardization s;
        s.mean = detail::vector_from_json(j["preprocessing"]["standardization"]["mean"]);
        s.stddev = detail::vector_from_json(j["preprocessing"]["standardization"]["stddev"]);
        m.standardization = s;
    }
    const Json& p = j.at("parameters");
    try {
        if (m.model_type == "svm") m.model = detail::svm_from_json(p);
        else if (m.model_type == "adt") m.model = detail::adt_from_json(p);
        else if (m.model_type == "rf") m.model = detail::rf_from_json(p);
        else if (m.model_type == "stacked_ae") m.model = detail::stacked_from_json(p);
        else if (m.model_type == "ovr_svm" || m.model_type == "ovr_adt" ||
                 m.model_type == "ovr_rf") {
            auto classes = p.at("classes").get<std::vector<int>>();
            if (m.model_type == "ovr_svm") {
                OvrEnsemble<SvmModel> ens;
                ens.classes = classes;
                for (const auto& mj : p.at("models")) ens.models.push_back(detail::svm_from_json(mj));
                m.model = std::move(ens);
            } else if (m.model_type == "ovr_adt") {
                OvrEnsemble<AdtModel> ens;
                ens.classes = classes;
                for (const auto& mj : p.at("models")) ens.models.push_back(detail::adt_from_json(mj));
                m.model = std::move(ens);
            } else {
                OvrEnsemble<RfModel> ens;
                ens.classes = classes;
                for (const auto& mj : p.at("models")) ens.models.push_back(detail::rf_from_json(mj));
                m.model = std::move(ens);
            }
        } else {
            throw ParseError("unknown model_type: " + m.model_type);
        }
    } catch (const Json::exception& e) {
        throw ParseError(std::string("corrupted model parameters: ") + e.what());
    }
    return m;
}

// ---------------------------------------------------------------------------
// Unified prediction over the label vocabulary
// ---------------------------------------------------------------------------

namespace detail {

inline Eigen::VectorXd binary_probs(double decision) {
    double p1 = 1.0 / (1.0 + std::exp(-decision));
    Eigen::VectorXd p(2);
    p << 1.0 - p1, p1;
    return p;
}

inline Eigen::VectorXd normalize_scores(const Eigen::VectorXd& scores) {
    // Softmax over raw scores so rows are stochastic; argmax is preserved.
    Eigen::VectorXd z = scores.array() - scores.maxCoeff();
    Eigen::VectorXd e = z.array().exp();
    return e / e.sum();
}

}  // namespace detail

// Probability vector over SavedModel::label_vocabulary (ascending).
// Applies stored standardization first.
inline Eigen::VectorXd predict_proba(const SavedModel& m, const Eigen::VectorXd& x_raw) {
    Eigen::VectorXd x = x_raw;
    if (m.standardization) {
        if (x.size() != m.standardization->mean.size())
            throw ShapeError("input dimension does not match model preprocessing");
        x = (x - m.standardization->mean).array() / m.standardization->stddev.array();
    }
    return std::visit(
        [&](const auto& model) -> Eigen::VectorXd {
            using T = std::decay_t<decltype(model)>;
            if constexpr (std::is_same_v<T, SvmModel>) {
                return detail::binary_probs(model.decision(x));
            } else if constexpr (std::is_same_v<T, AdtModel>) {
                return detail::binary_probs(model.score(x));
            } else if constexpr (std::is_same_v<T, RfModel>) {
                return predict_rf(model, x).second;
            } else if constexpr (std::is_same_v<T, OvrEnsemble<SvmModel>>) {
                return detail::normalize_scores(predict_multiclass_svm(model, x).second);
            } else if constexpr (std::is_same_v<T, OvrEnsemble<AdtModel>>) {
                return detail::normalize_scores(predict_multiclass_adt(model, x).second);
            } else if constexpr (std::is_same_v<T, OvrEnsemble<RfModel>>) {
                Eigen::VectorXd s = predict_multiclass_rf(model, x).second;
                double sum = s.sum();
                if (sum <= 0.0)
                    return Eigen::VectorXd::Constant(s.size(), 1.0 / static_cast<double>(s.size()));
                return s / sum;
            } else {
                return predict_stack(model, x).second;
            }
        },
        m.model);
}

// Raw decision value for binary models (positive = higher vocabulary label).
inline double decision_value(const SavedModel& m, const Eigen::VectorXd& x_raw) {
    Eigen::VectorXd x = x_raw;
    if (m.standardization)
        x = (x - m.standardization->mean).array() / m.standardization->stddev.array();
    return std::visit(
        [&](const auto& model) -> double {
            using T = std::decay_t<decltype(model)>;
            if constexpr (std::is_same_v<T, SvmModel>) return model.decision(x);
            else if constexpr (std::is_same_v<T, AdtModel>) return model.score(x);
            else {
                Eigen::VectorXd p = predict_proba(m, x_raw);
                if (p.size() != 2) throw ConfigError("decision_value requires a binary model");
                return p[1] - p[0];
            }
        },
        m.model);
}

// Predicted original label (argmax of predict_proba, ties to lowest label).
inline int predict_label(const SavedModel& m, const Eigen::VectorXd& x_raw) {
    Eigen::VectorXd p = predict_proba(m, x_raw);
    if (static_cast<std::size_t>(p.size()) != m.label_vocabulary.size())
        throw ConfigError("model label vocabulary does not match probability length");
    Eigen::Index best = 0;
    for (Eigen::Index k = 1; k < p.size(); ++k)
        if (p[k] > p[best]) best = k;
    return m.label_vocabulary[static_cast<std::size_t>(best)];
}

}  // namespace fcp
