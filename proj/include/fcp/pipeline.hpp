#pragma once

#include <Eigen/Dense>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "fcp/errors.hpp"
#include "fcp/persist.hpp"

namespace fcp {

// ---------------------------------------------------------------------------
// Two-stage detection plus localization / severity prediction:
//   stage 1: fault vs no-fault
//   stage 2 (faults only): manifest vs impending
//   manifest  -> Layer-1 category + Layer-2 class
//   impending -> severity forecast + location hint
// ---------------------------------------------------------------------------

enum class Stage1 { NoFault, Fault };
enum class Stage2 { Manifest, Impending };

inline const char* to_string(Stage1 s) { return s == Stage1::Fault ? "Fault" : "NoFault"; }
inline const char* to_string(Stage2 s) { return s == Stage2::Manifest ? "Manifest" : "Impending"; }

struct FcpVerdict {
    long id = 0;
    Stage1 stage1 = Stage1::NoFault;
    std::optional<Stage2> stage2;
    std::optional<std::string> layer1_category;
    std::optional<std::string> layer2_class;
    bool layer2_missing = false;  // category had no Layer-2 model
    std::optional<std::string> predicted_severity;
    std::optional<std::string> location_hint;
    std::map<std::string, double> confidences;
    std::optional<std::string> error;

    // Optional-field presence rules from the routing contract.
    bool structurally_valid() const {
        if (stage2.has_value() != (stage1 == Stage1::Fault && !error)) return false;
        bool manifest = stage2 && *stage2 == Stage2::Manifest;
        bool impending = stage2 && *stage2 == Stage2::Impending;
        if (layer1_category.has_value() != manifest) return false;
        if (layer2_class && !manifest) return false;
        if (predicted_severity.has_value() != impending) return false;
        return true;
    }
};

// Binary and multiclass model interfaces; persisted models and test stubs
// both implement them.
struct BinaryModel {
    virtual ~BinaryModel() = default;
    // decision > 0 means the positive side (Fault / Manifest).
    virtual double decision(const Eigen::VectorXd& x) const = 0;
};

struct MulticlassModel {
    virtual ~MulticlassModel() = default;
    virtual std::pair<int, Eigen::VectorXd> classify(const Eigen::VectorXd& x) const = 0;
    virtual const std::vector<int>& labels() const = 0;
};

struct SavedBinaryModel : BinaryModel {
    SavedModel model;
    explicit SavedBinaryModel(SavedModel m) : model(std::move(m)) {}
    double decision(const Eigen::VectorXd& x) const override { return decision_value(model, x); }
};

struct SavedMulticlassModel : MulticlassModel {
    SavedModel model;
    explicit SavedMulticlassModel(SavedModel m) : model(std::move(m)) {}
    std::pair<int, Eigen::VectorXd> classify(const Eigen::VectorXd& x) const override {
        Eigen::VectorXd p = predict_proba(model, x);
        Eigen::Index best = 0;
        for (Eigen::Index k = 1; k < p.size(); ++k)
            if (p[k] > p[best]) best = k;
        return {model.label_vocabulary[static_cast<std::size_t>(best)], p};
    }
    const std::vector<int>& labels() const override { return model.label_vocabulary; }
};

// severity value -> stage semantics: 0 none, 1 impending, 2 and 3 manifest.
struct SeverityStageMap {
    int impending_max = 1;  // 1..impending_max are impending, above is manifest

    bool is_fault(int severity) const { return severity > 0; }
    Stage2 stage_of(int severity) const {
        return severity <= impending_max ? Stage2::Impending : Stage2::Manifest;
    }
};

struct PipelineConfig {
    std::shared_ptr<BinaryModel> stage1;
    std::shared_ptr<BinaryModel> stage2;
    std::shared_ptr<MulticlassModel> layer1;                 // category classifier
    std::map<int, std::string> layer1_names;                 // category label -> name
    std::map<std::string, std::shared_ptr<MulticlassModel>> layer2;  // per category
    std::map<int, std::string> layer2_names;                 // class label -> name
    std::shared_ptr<MulticlassModel> severity;               // impending severity predictor
    std::map<int, std::string> severity_names;               // label -> {Warning,...}
    SeverityStageMap severity_map;
    std::map<long, double> location_fault_rate;              // optional hint table
    int location_feature = -1;  // feature index holding the location id, or -1
};

inline std::pair<Stage1, double> detect_stage1(const PipelineConfig& cfg,
                                               const Eigen::VectorXd& features) {
    if (!cfg.stage1) throw ModelMissing("stage-1 model not configured");
    double d = cfg.stage1->decision(features);
    return {d > 0 ? Stage1::Fault : Stage1::NoFault, d};
}

inline std::pair<Stage2, double> detect_stage2(const PipelineConfig& cfg,
                                               const Eigen::VectorXd& features) {
    if (!cfg.stage2) throw ModelMissing("stage-2 model not configured");
    double d = cfg.stage2->decision(features);
    return {d > 0 ? Stage2::Manifest : Stage2::Impending, d};
}

struct Localization {
    std::string layer1;
    std::optional<std::string> layer2;
    bool layer2_missing = false;
    Eigen::VectorXd layer1_probs;
    Eigen::VectorXd layer2_probs;
};

inline Localization localize_manifest(const PipelineConfig& cfg, const Eigen::VectorXd& features) {
    if (!cfg.layer1) throw ModelMissing("layer-1 localizer not configured");
    auto [cat_label, cat_probs] = cfg.layer1->classify(features);
    Localization loc;
    auto it = cfg.layer1_names.find(cat_label);
    loc.layer1 = it != cfg.layer1_names.end() ? it->second : std::to_string(cat_label);
    loc.layer1_probs = cat_probs;
    auto m = cfg.layer2.find(loc.layer1);
    if (m == cfg.layer2.end() || !m->second) {
        loc.layer2_missing = true;
        return loc;
    }
    auto [cls_label, cls_probs] = m->second->classify(features);
    auto nit = cfg.layer2_names.find(cls_label);
    loc.layer2 = nit != cfg.layer2_names.end() ? nit->second : std::to_string(cls_label);
    loc.layer2_probs = cls_probs;
    return loc;
}

struct ImpendingForecast {
    std::string severity;
    std::string location_hint;
    Eigen::VectorXd probs;
};

inline ImpendingForecast predict_impending(const PipelineConfig& cfg,
                                           const Eigen::VectorXd& features) {
    if (!cfg.severity) throw ModelMissing("severity predictor not configured");
    auto [label, probs] = cfg.severity->classify(features);
    ImpendingForecast f;
    auto it = cfg.severity_names.find(label);
    f.severity = it != cfg.severity_names.end() ? it->second : std::to_string(label);
    f.probs = probs;
    if (cfg.location_feature >= 0 && cfg.location_feature < features.size()) {
        long loc = static_cast<long>(features[cfg.location_feature]);
        std::ostringstream os;
        os << "location " << loc;
        auto rit = cfg.location_fault_rate.find(loc);
        if (rit != cfg.location_fault_rate.end()) os << " (historical fault rate " << rit->second << ")";
        f.location_hint = os.str();
    }
    return f;
}

inline FcpVerdict run_one(const PipelineConfig& cfg, long id, const Eigen::VectorXd& features) {
    FcpVerdict v;
    v.id = id;
    try {
        auto [s1, d1] = detect_stage1(cfg, features);
        v.stage1 = s1;
        v.confidences["stage1"] = d1;
        if (s1 == Stage1::NoFault) return v;
        auto [s2, d2] = detect_stage2(cfg, features);
        v.stage2 = s2;
        v.confidences["stage2"] = d2;
        if (s2 == Stage2::Manifest) {
            Localization loc = localize_manifest(cfg, features);
            v.layer1_category = loc.layer1;
            v.layer2_class = loc.layer2;
            v.layer2_missing = loc.layer2_missing;
            if (loc.layer1_probs.size() > 0)
                v.confidences["layer1"] = loc.layer1_probs.maxCoeff();
            if (loc.layer2_probs.size() > 0)
                v.confidences["layer2"] = loc.layer2_probs.maxCoeff();
        } else {
            ImpendingForecast f = predict_impending(cfg, features);
            v.predicted_severity = f.severity;
            if (!f.location_hint.empty()) v.location_hint = f.location_hint;
            if (f.probs.size() > 0) v.confidences["severity"] = f.probs.maxCoeff();
        }
    } catch (const FcpError& e) {
        // Record and continue with the batch; downstream fields stay absent.
        v.error = e.what();
        v.stage2.reset();
        v.layer1_category.reset();
        v.layer2_class.reset();
        v.predicted_severity.reset();
    }
    return v;
}

inline std::vector<FcpVerdict> run_pipeline(const std::vector<long>& ids,
                                            const Eigen::MatrixXd& records,
                                            const PipelineConfig& cfg) {
    if (static_cast<Eigen::Index>(ids.size()) != records.rows())
        throw ShapeError("record id count mismatch");
    std::vector<FcpVerdict> out;
    out.reserve(ids.size());
    for (Eigen::Index i = 0; i < records.rows(); ++i)
        out.push_back(run_one(cfg, ids[static_cast<std::size_t>(i)], records.row(i).transpose()));
    return out;
}

inline std::string verdicts_to_csv(const std::vector<FcpVerdict>& verdicts) {
    std::ostringstream os;
    os << "id,stage1,stage2,layer1,layer2,severity,confidence_stage1,confidence_stage2,"
          "confidence_final,error\n";
    for (const auto& v : verdicts) {
        auto conf = [&](const char* key) {
            auto it = v.confidences.find(key);
            return it == v.confidences.end() ? std::string()
                                             : detail::num_to_string(it->second);
        };
        std::string final_conf = conf("severity");
        if (final_conf.empty()) final_conf = conf("layer2");
        if (final_conf.empty()) final_conf = conf("layer1");
        os << v.id << ',' << to_string(v.stage1) << ','
           << (v.stage2 ? to_string(*v.stage2) : "") << ','
           << v.layer1_category.value_or("") << ',' << v.layer2_class.value_or("") << ','
           << v.predicted_severity.value_or("") << ',' << conf("stage1") << ','
           << conf("stage2") << ',' << final_conf << ',' << v.error.value_or("") << '\n';
    }
    return os.str();
}

inline Json verdicts_to_json(const std::vector<FcpVerdict>& verdicts) {
    Json arr = Json::array();
    for (const auto& v : verdicts) {
        Json j;
        j["id"] = v.id;
        j["stage1"] = to_string(v.stage1);
        if (v.stage2) j["stage2"] = to_string(*v.stage2);
        if (v.layer1_category) j["layer1"] = *v.layer1_category;
        if (v.layer2_class) j["layer2"] = *v.layer2_class;
        if (v.layer2_missing) j["layer2_missing"] = true;
        if (v.predicted_severity) j["severity"] = *v.predicted_severity;
        if (v.location_hint) j["location_hint"] = *v.location_hint;
        j["confidences"] = v.confidences;
        if (v.error) j["error"] = *v.error;
        arr.push_back(j);
    }
    return arr;
}

}  // namespace fcp
