// fcp: fault-and-performance prediction toolkit.
// Subcommands: synth, ingest, train, eval, sweep, run.
// Exit codes: 0 success, 1 usage error, 2 data error.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

#include "fcp/eval.hpp"
#include "fcp/ingest.hpp"
#include "fcp/kde.hpp"
#include "fcp/persist.hpp"
#include "fcp/pipeline.hpp"

namespace {

using fcp::Json;

std::vector<double> parse_list_d(const std::string& s) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(std::stod(item));
    return out;
}

std::vector<Eigen::Index> parse_list_i(const std::string& s) {
    std::vector<Eigen::Index> out;
    for (double v : parse_list_d(s)) out.push_back(static_cast<Eigen::Index>(v));
    return out;
}

Json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw fcp::FileMissing(path);
    Json j;
    try {
        in >> j;
    } catch (const Json::exception& e) {
        throw fcp::ParseError(path + ": " + e.what());
    }
    return j;
}

// --------------------------------------------------------------------------
// synth: taxonomy JSON -> labeled KDE-schema CSV
// --------------------------------------------------------------------------

struct SynthArgs {
    std::string taxonomy;
    std::string out;
    std::size_t n = 0;
    std::uint64_t seed = 0;
    std::size_t burn_in = 1000;
    std::size_t thin = 10;
    double proposal_scale = 1.0;
    bool direct = false;  // i.i.d. mixture draws instead of the Markov chain
};

int cmd_synth(const SynthArgs& a) {
    Json j = read_json_file(a.taxonomy);
    fcp::ClassTaxonomy tax;
    std::vector<fcp::KdeModel> models;
    tax.features = j.value("features", fcp::kde_feature_names());
    tax.priors = j.at("priors").get<std::vector<double>>();
    for (const auto& c : j.at("classes")) {
        fcp::TaxonomyClass tc;
        tc.id = c.at("id").get<int>();
        tc.name = c.at("name").get<std::string>();
        tc.severity = c.at("severity").get<int>();
        tax.classes.push_back(tc);

        const auto& samples = c.at("samples");
        Eigen::MatrixXd s(static_cast<Eigen::Index>(samples.size()),
                          static_cast<Eigen::Index>(tax.features.size()));
        for (std::size_t r = 0; r < samples.size(); ++r) {
            if (samples[r].size() != tax.features.size())
                throw fcp::ParseError("taxonomy class " + tc.name + ": sample " +
                                      std::to_string(r) + " has wrong dimension");
            for (std::size_t f = 0; f < tax.features.size(); ++f)
                s(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(f)) =
                    samples[r][f].get<double>();
        }
        auto m = fcp::fit_kde(s, fcp::BandwidthRule::Silverman);
        m.class_label = tc.id;
        models.push_back(std::move(m));
    }
    fcp::ChainConfig cfg;
    cfg.seed = a.seed;
    cfg.burn_in = a.burn_in;
    cfg.thin = a.thin;
    cfg.proposal_scale = a.proposal_scale;
    auto records = fcp::generate_labeled(tax, models, a.n, cfg, !a.direct);
    fcp::csv::write_file_atomic(a.out, fcp::kde_table_to_csv(records, true));
    std::cout << "wrote " << records.size() << " records to " << a.out << "\n";
    return 0;
}

// --------------------------------------------------------------------------
// ingest: raw tables -> feature CSV
// --------------------------------------------------------------------------

struct IngestArgs {
    std::string dir;        // five-table directory
    std::string kde;        // or a KDE-schema CSV
    std::string out;
    std::string label = "severity";  // severity | class (KDE input only)
};

int cmd_ingest(const IngestArgs& a) {
    fcp::DesignMatrix m;
    if (!a.dir.empty()) {
        m = fcp::assemble_features(fcp::load_telstra(a.dir));
    } else {
        auto records = fcp::load_kde_table(a.kde);
        m = fcp::kde_design_matrix(records, a.label == "class");
    }
    fcp::csv::write_file_atomic(a.out, fcp::features_to_csv(m));
    std::cout << "wrote " << m.n() << " x " << m.dim() << " feature matrix to " << a.out << "\n";
    return 0;
}

// --------------------------------------------------------------------------
// train
// --------------------------------------------------------------------------

struct TrainArgs {
    std::string task;   // detect1 | detect2 | localize | severity
    std::string model;  // svm | adt | rf | sae
    std::string data;
    std::string out;
    std::uint64_t seed = 0;
    bool no_standardize = false;
    int impending_max = 1;
    // shallow hyperparameters
    double c = 1.0;
    double gamma = 0.0;
    std::string kernel = "rbf";
    std::size_t rounds = 10;
    std::size_t trees = 100;
    std::size_t mtry = 0;
    // stacked autoencoder hyperparameters
    Eigen::Index h1 = 100, h2 = 50;
    double beta = 4.0, rho = 0.1, l2 = 0.001;
    std::size_t epochs1 = 400, epochs2 = 100, softmax_epochs = 400, finetune_epochs = 400;
};

// Task-specific label mapping over the raw labels in the feature CSV.
std::vector<int> task_labels(const std::string& task, const std::vector<int>& raw,
                             int impending_max, std::vector<std::size_t>* keep) {
    std::vector<int> y;
    for (std::size_t i = 0; i < raw.size(); ++i) {
        if (task == "detect1") {
            y.push_back(raw[i] > 0 ? 1 : 0);
            if (keep) keep->push_back(i);
        } else if (task == "detect2") {
            if (raw[i] <= 0) continue;  // faults only
            y.push_back(raw[i] > impending_max ? 1 : 0);
            if (keep) keep->push_back(i);
        } else {
            y.push_back(raw[i]);
            if (keep) keep->push_back(i);
        }
    }
    return y;
}

int cmd_train(const TrainArgs& a) {
    auto m = fcp::features_from_csv(a.data);
    std::vector<std::size_t> keep;
    std::vector<int> y = task_labels(a.task, m.labels, a.impending_max, &keep);
    if (y.empty()) throw fcp::DegenerateLabels("no training rows left for task " + a.task);

    Eigen::MatrixXd X(static_cast<Eigen::Index>(keep.size()), m.dim());
    for (std::size_t i = 0; i < keep.size(); ++i)
        X.row(static_cast<Eigen::Index>(i)) = m.rows.row(static_cast<Eigen::Index>(keep[i]));

    fcp::SavedModel saved;
    saved.seed = a.seed;
    std::vector<int> vocab = y;
    std::sort(vocab.begin(), vocab.end());
    vocab.erase(std::unique(vocab.begin(), vocab.end()), vocab.end());
    saved.label_vocabulary = vocab;

    const bool binary_task = a.task == "detect1" || a.task == "detect2";
    if (binary_task && vocab.size() != 2)
        throw fcp::DegenerateLabels("task " + a.task + " needs both classes in the data");

    if (a.model == "sae") {
        fcp::StackConfig cfg;
        cfg.h1 = a.h1;
        cfg.h2 = a.h2;
        cfg.hyper1.beta = cfg.hyper2.beta = a.beta;
        cfg.hyper1.rho = cfg.hyper2.rho = a.rho;
        cfg.hyper1.l2 = cfg.hyper2.l2 = a.l2;
        cfg.hyper1.epochs = a.epochs1;
        cfg.hyper2.epochs = a.epochs2;
        cfg.softmax_epochs = a.softmax_epochs;
        cfg.finetune_epochs = a.finetune_epochs;
        saved.model_type = "stacked_ae";
        saved.hyperparameters = {{"h1", a.h1},
                                 {"h2", a.h2},
                                 {"beta", a.beta},
                                 {"rho", a.rho},
                                 {"l2", a.l2},
                                 {"epochs1", a.epochs1},
                                 {"epochs2", a.epochs2},
                                 {"softmax_epochs", a.softmax_epochs},
                                 {"finetune_epochs", a.finetune_epochs}};
        saved.model = fcp::train_stack(X, y, cfg, a.seed);
        fcp::save_model(saved, a.out);
        std::cout << "wrote stacked_ae model to " << a.out << "\n";
        return 0;
    }

    // Shallow models train on standardized features by default.
    if (!a.no_standardize) {
        fcp::DesignMatrix dm;
        dm.rows = X;
        dm.labels = y;
        dm.ids.assign(keep.size(), 0);
        dm.feature_names = m.feature_names;
        auto [std_m, stats] = fcp::standardize(dm);
        X = std_m.rows;
        saved.standardization = stats;
    }

    fcp::Kernel kernel;
    kernel.type = a.kernel == "linear" ? fcp::KernelType::Linear : fcp::KernelType::Rbf;
    kernel.gamma = a.gamma;

    if (a.model == "svm") {
        fcp::SvmHyper hyper;
        hyper.C = a.c;
        hyper.kernel = kernel;
        hyper.seed = a.seed;
        saved.hyperparameters = {{"C", a.c}, {"kernel", a.kernel}, {"gamma", a.gamma}};
        if (binary_task) {
            Eigen::VectorXd ypm(X.rows());
            for (Eigen::Index i = 0; i < ypm.size(); ++i)
                ypm[i] = y[static_cast<std::size_t>(i)] == vocab[1] ? 1.0 : -1.0;
            saved.model_type = "svm";
            saved.model = fcp::train_svm(X, ypm, hyper);
        } else {
            saved.model_type = "ovr_svm";
            saved.model = fcp::train_multiclass_svm(X, y, hyper);
        }
    } else if (a.model == "adt") {
        fcp::AdtHyper hyper;
        hyper.rounds = a.rounds;
        saved.hyperparameters = {{"rounds", a.rounds}};
        if (binary_task) {
            Eigen::VectorXd ypm(X.rows());
            for (Eigen::Index i = 0; i < ypm.size(); ++i)
                ypm[i] = y[static_cast<std::size_t>(i)] == vocab[1] ? 1.0 : -1.0;
            saved.model_type = "adt";
            saved.model = fcp::train_adt(X, ypm, hyper);
        } else {
            saved.model_type = "ovr_adt";
            saved.model = fcp::train_multiclass_adt(X, y, hyper);
        }
    } else if (a.model == "rf") {
        fcp::RfHyper hyper;
        hyper.n_trees = a.trees;
        hyper.mtry = a.mtry;
        hyper.seed = a.seed;
        saved.hyperparameters = {{"trees", a.trees}, {"mtry", a.mtry}};
        saved.model_type = "rf";  // natively multiclass
        saved.model = fcp::train_rf(X, y, hyper);
    } else {
        throw CLI::ValidationError("--model", "unknown model: " + a.model);
    }
    fcp::save_model(saved, a.out);
    std::cout << "wrote " << saved.model_type << " model to " << a.out << "\n";
    return 0;
}

// --------------------------------------------------------------------------
// eval
// --------------------------------------------------------------------------

Json report_to_json(const fcp::MetricsReport& r) {
    Json j;
    j["n"] = r.n;
    j["accuracy"] = r.accuracy;
    j["precision"] = r.precision;
    j["tp_rate"] = r.tp_rate;
    j["fp_rate"] = r.fp_rate;
    j["weighted_precision"] = r.weighted_precision;
    j["macro_precision"] = r.macro_precision;
    j["mae"] = r.mae;
    j["rmse"] = r.rmse;
    Json conf = Json::array();
    for (Eigen::Index i = 0; i < r.confusion.rows(); ++i) {
        Json row = Json::array();
        for (Eigen::Index c = 0; c < r.confusion.cols(); ++c) row.push_back(r.confusion(i, c));
        conf.push_back(row);
    }
    j["confusion"] = conf;
    return j;
}

std::string report_to_csv(const fcp::MetricsReport& r) {
    std::ostringstream os;
    os << "metric,value\n";
    os << "n," << r.n << "\n";
    os << "accuracy," << fcp::detail::num_to_string(r.accuracy) << "\n";
    for (std::size_t c = 0; c < r.precision.size(); ++c) {
        os << "precision_" << c << "," << fcp::detail::num_to_string(r.precision[c]) << "\n";
        os << "tp_rate_" << c << "," << fcp::detail::num_to_string(r.tp_rate[c]) << "\n";
        os << "fp_rate_" << c << "," << fcp::detail::num_to_string(r.fp_rate[c]) << "\n";
    }
    os << "weighted_precision," << fcp::detail::num_to_string(r.weighted_precision) << "\n";
    os << "macro_precision," << fcp::detail::num_to_string(r.macro_precision) << "\n";
    os << "mae," << fcp::detail::num_to_string(r.mae) << "\n";
    os << "rmse," << fcp::detail::num_to_string(r.rmse) << "\n";
    return os.str();
}

std::string confusion_to_csv(const Eigen::MatrixXd& c) {
    std::ostringstream os;
    os << "true\\pred";
    for (Eigen::Index j = 0; j < c.cols(); ++j) os << ',' << j;
    os << '\n';
    for (Eigen::Index i = 0; i < c.rows(); ++i) {
        os << i;
        for (Eigen::Index j = 0; j < c.cols(); ++j) os << ',' << c(i, j);
        os << '\n';
    }
    return os.str();
}

struct EvalArgs {
    std::string model;
    std::string data;
    std::string probs;  // direct probability-table mode
    std::string task = "raw";
    int impending_max = 1;
    std::string out;        // JSON report
    std::string csv_out;    // flat CSV
    std::string confusion_out;
};

int cmd_eval(const EvalArgs& a) {
    fcp::MetricsReport report;
    if (!a.probs.empty()) {
        // `y_true,p0,...,pK-1` table, classes 0..K-1
        auto t = fcp::csv::read_file(a.probs);
        fcp::csv::expect_header(t, {"y_true"}, a.probs);
        const std::size_t k = t.header.size() - 1;
        std::vector<int> y;
        Eigen::MatrixXd probs(static_cast<Eigen::Index>(t.rows.size()),
                              static_cast<Eigen::Index>(k));
        for (std::size_t i = 0; i < t.rows.size(); ++i) {
            fcp::detail::check_arity(t.rows[i], k + 1, a.probs, t.line_numbers[i]);
            y.push_back(static_cast<int>(
                fcp::csv::parse_long(t.rows[i][0], a.probs, t.line_numbers[i])));
            for (std::size_t c = 0; c < k; ++c)
                probs(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) =
                    fcp::csv::parse_double(t.rows[i][c + 1], a.probs, t.line_numbers[i]);
        }
        report = fcp::metrics(y, probs);
    } else {
        auto saved = fcp::load_model(a.model);
        auto m = fcp::features_from_csv(a.data);
        std::vector<std::size_t> keep;
        std::vector<int> y = task_labels(a.task == "raw" ? "localize" : a.task, m.labels,
                                         a.impending_max, &keep);
        auto label_index = [&](int label) {
            auto it = std::lower_bound(saved.label_vocabulary.begin(),
                                       saved.label_vocabulary.end(), label);
            if (it == saved.label_vocabulary.end() || *it != label)
                throw fcp::LabelError("data label " + std::to_string(label) +
                                      " not in model vocabulary");
            return static_cast<int>(it - saved.label_vocabulary.begin());
        };
        std::vector<int> y_idx;
        Eigen::MatrixXd probs(static_cast<Eigen::Index>(keep.size()),
                              static_cast<Eigen::Index>(saved.label_vocabulary.size()));
        for (std::size_t i = 0; i < keep.size(); ++i) {
            y_idx.push_back(label_index(y[i]));
            probs.row(static_cast<Eigen::Index>(i)) =
                fcp::predict_proba(saved, m.rows.row(static_cast<Eigen::Index>(keep[i]))
                                              .transpose())
                    .transpose();
        }
        report = fcp::metrics(y_idx, probs);
    }

    Json j = report_to_json(report);
    if (!a.out.empty()) fcp::csv::write_file_atomic(a.out, j.dump(2) + "\n");
    else std::cout << j.dump(2) << "\n";
    if (!a.csv_out.empty()) fcp::csv::write_file_atomic(a.csv_out, report_to_csv(report));
    if (!a.confusion_out.empty())
        fcp::csv::write_file_atomic(a.confusion_out, confusion_to_csv(report.confusion));
    return 0;
}

// --------------------------------------------------------------------------
// sweep
// --------------------------------------------------------------------------

struct SweepArgs {
    std::string data;
    std::string out;
    std::string h1 = "25,50,100,150";
    std::string h2 = "25,50";
    std::string betas;  // when set, runs the sparsity grid instead
    std::string rhos = "0.1";
    double val_fraction = 0.25;
    std::uint64_t seed = 0;
    std::size_t epochs1 = 400, epochs2 = 100, softmax_epochs = 400, finetune_epochs = 400;
};

int cmd_sweep(const SweepArgs& a) {
    auto m = fcp::features_from_csv(a.data);
    auto parts = fcp::split(m, {1.0 - a.val_fraction, a.val_fraction, 0.0}, a.seed);
    const auto& tr = parts[0];
    const auto& val = parts[1];

    fcp::StackConfig base;
    base.hyper1.epochs = a.epochs1;
    base.hyper2.epochs = a.epochs2;
    base.softmax_epochs = a.softmax_epochs;
    base.finetune_epochs = a.finetune_epochs;

    std::ostringstream os;
    if (!a.betas.empty()) {
        auto rows = fcp::sweep_sparsity(tr.rows, tr.labels, val.rows, val.labels,
                                        parse_list_d(a.betas), parse_list_d(a.rhos), base,
                                        a.seed);
        os << "beta,rho,accuracy\n";
        for (const auto& r : rows)
            os << fcp::detail::num_to_string(r.beta) << ',' << fcp::detail::num_to_string(r.rho)
               << ',' << fcp::detail::num_to_string(r.accuracy) << '\n';
    } else {
        auto rows = fcp::sweep_hidden_sizes(tr.rows, tr.labels, val.rows, val.labels,
                                            parse_list_i(a.h1), parse_list_i(a.h2), base,
                                            a.seed);
        os << "h1,h2,accuracy,mse\n";
        for (const auto& r : rows)
            os << r.h1 << ',' << r.h2 << ',' << fcp::detail::num_to_string(r.accuracy) << ','
               << fcp::detail::num_to_string(r.mse) << '\n';
    }
    fcp::csv::write_file_atomic(a.out, os.str());
    std::cout << "wrote sweep table to " << a.out << "\n";
    return 0;
}

// --------------------------------------------------------------------------
// run
// --------------------------------------------------------------------------

struct RunArgs {
    std::string config;
    std::string data;
    std::string out;
    std::string json_out;
};

std::map<int, std::string> names_from_json(const Json& j) {
    std::map<int, std::string> out;
    for (auto it = j.begin(); it != j.end(); ++it) out[std::stoi(it.key())] = it.value();
    return out;
}

int cmd_run(const RunArgs& a) {
    Json j = read_json_file(a.config);
    fcp::PipelineConfig cfg;
    auto binary = [](const std::string& path) {
        return std::make_shared<fcp::SavedBinaryModel>(fcp::load_model(path));
    };
    auto multiclass = [](const std::string& path) {
        return std::make_shared<fcp::SavedMulticlassModel>(fcp::load_model(path));
    };
    if (j.contains("stage1")) cfg.stage1 = binary(j["stage1"].get<std::string>());
    if (j.contains("stage2")) cfg.stage2 = binary(j["stage2"].get<std::string>());
    if (j.contains("layer1")) cfg.layer1 = multiclass(j["layer1"].get<std::string>());
    if (j.contains("layer1_names")) cfg.layer1_names = names_from_json(j["layer1_names"]);
    if (j.contains("layer2_models"))
        for (auto it = j["layer2_models"].begin(); it != j["layer2_models"].end(); ++it)
            cfg.layer2[it.key()] = multiclass(it.value().get<std::string>());
    if (j.contains("layer2_names")) cfg.layer2_names = names_from_json(j["layer2_names"]);
    if (j.contains("severity")) cfg.severity = multiclass(j["severity"].get<std::string>());
    if (j.contains("severity_names")) cfg.severity_names = names_from_json(j["severity_names"]);
    cfg.severity_map.impending_max = j.value("impending_max", 1);
    cfg.location_feature = j.value("location_feature", -1);
    if (j.contains("location_fault_rate"))
        for (auto it = j["location_fault_rate"].begin(); it != j["location_fault_rate"].end();
             ++it)
            cfg.location_fault_rate[std::stol(it.key())] = it.value().get<double>();

    auto m = fcp::features_from_csv(a.data);
    auto verdicts = fcp::run_pipeline(m.ids, m.rows, cfg);
    fcp::csv::write_file_atomic(a.out, fcp::verdicts_to_csv(verdicts));
    if (!a.json_out.empty())
        fcp::csv::write_file_atomic(a.json_out, fcp::verdicts_to_json(verdicts).dump(2) + "\n");
    std::cout << "wrote " << verdicts.size() << " verdicts to " << a.out << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"NFV fault-and-performance prediction toolkit"};
    app.require_subcommand(1);

    SynthArgs synth;
    auto* s = app.add_subcommand("synth", "generate a labeled KDE-schema CSV from a taxonomy");
    s->add_option("--taxonomy", synth.taxonomy, "taxonomy JSON")->required();
    s->add_option("--n", synth.n, "number of records")->required();
    s->add_option("--out", synth.out, "output CSV")->required();
    s->add_option("--seed", synth.seed, "master seed");
    s->add_option("--burn-in", synth.burn_in, "chain burn-in");
    s->add_option("--thin", synth.thin, "chain thinning");
    s->add_option("--proposal-scale", synth.proposal_scale, "proposal stddev scale");
    s->add_flag("--direct", synth.direct, "use direct i.i.d. sampling instead of the chain");

    IngestArgs ingest;
    auto* i = app.add_subcommand("ingest", "assemble a feature CSV from raw tables");
    auto* dir_opt = i->add_option("--dir", ingest.dir, "five-table directory");
    i->add_option("--kde", ingest.kde, "KDE-schema CSV")->excludes(dir_opt);
    i->add_option("--out", ingest.out, "output feature CSV")->required();
    i->add_option("--label", ingest.label, "label column for KDE input: severity|class")
        ->check(CLI::IsMember({"severity", "class"}));

    TrainArgs train;
    auto* t = app.add_subcommand("train", "train a model on a feature CSV");
    t->add_option("--task", train.task, "detect1|detect2|localize|severity")
        ->required()
        ->check(CLI::IsMember({"detect1", "detect2", "localize", "severity"}));
    t->add_option("--model", train.model, "svm|adt|rf|sae")
        ->required()
        ->check(CLI::IsMember({"svm", "adt", "rf", "sae"}));
    t->add_option("--data", train.data, "feature CSV")->required();
    t->add_option("--out", train.out, "model file")->required();
    t->add_option("--seed", train.seed, "master seed");
    t->add_flag("--no-standardize", train.no_standardize, "skip feature standardization");
    t->add_option("--impending-max", train.impending_max, "highest impending severity");
    t->add_option("--c", train.c, "SVM C");
    t->add_option("--gamma", train.gamma, "SVM rbf gamma (0 = auto)");
    t->add_option("--kernel", train.kernel, "SVM kernel: rbf|linear")
        ->check(CLI::IsMember({"rbf", "linear"}));
    t->add_option("--rounds", train.rounds, "ADT boosting rounds");
    t->add_option("--trees", train.trees, "RF tree count");
    t->add_option("--mtry", train.mtry, "RF features per split (0 = sqrt)");
    t->add_option("--h1", train.h1, "first hidden size");
    t->add_option("--h2", train.h2, "second hidden size");
    t->add_option("--beta", train.beta, "sparsity regularization weight");
    t->add_option("--rho", train.rho, "sparsity proportion");
    t->add_option("--l2", train.l2, "pretraining weight decay");
    t->add_option("--epochs1", train.epochs1, "AE1 epochs");
    t->add_option("--epochs2", train.epochs2, "AE2 epochs");
    t->add_option("--softmax-epochs", train.softmax_epochs, "softmax epochs");
    t->add_option("--finetune-epochs", train.finetune_epochs, "fine-tune epochs");

    EvalArgs eval;
    auto* e = app.add_subcommand("eval", "evaluate a model or a probability table");
    auto* model_opt = e->add_option("--model", eval.model, "model file");
    e->add_option("--data", eval.data, "feature CSV")->needs(model_opt);
    e->add_option("--probs", eval.probs, "y_true,p0..pK-1 CSV")->excludes(model_opt);
    e->add_option("--task", eval.task, "label mapping: raw|detect1|detect2");
    e->add_option("--impending-max", eval.impending_max, "highest impending severity");
    e->add_option("--out", eval.out, "JSON report (stdout when omitted)");
    e->add_option("--csv", eval.csv_out, "flat CSV report");
    e->add_option("--confusion", eval.confusion_out, "confusion matrix CSV");

    SweepArgs sweep;
    auto* w = app.add_subcommand("sweep", "hidden-size or sparsity grid for the stacked AE");
    w->add_option("--data", sweep.data, "feature CSV")->required();
    w->add_option("--out", sweep.out, "output CSV")->required();
    w->add_option("--h1", sweep.h1, "comma list of first hidden sizes");
    w->add_option("--h2", sweep.h2, "comma list of second hidden sizes");
    w->add_option("--betas", sweep.betas, "comma list of betas (switches to sparsity grid)");
    w->add_option("--rhos", sweep.rhos, "comma list of rhos");
    w->add_option("--val-fraction", sweep.val_fraction, "validation fraction");
    w->add_option("--seed", sweep.seed, "master seed");
    w->add_option("--epochs1", sweep.epochs1, "AE1 epochs");
    w->add_option("--epochs2", sweep.epochs2, "AE2 epochs");
    w->add_option("--softmax-epochs", sweep.softmax_epochs, "softmax epochs");
    w->add_option("--finetune-epochs", sweep.finetune_epochs, "fine-tune epochs");

    RunArgs run;
    auto* r = app.add_subcommand("run", "run the detection pipeline over records");
    r->add_option("--config", run.config, "pipeline config JSON")->required();
    r->add_option("--data", run.data, "feature CSV")->required();
    r->add_option("--out", run.out, "verdict CSV")->required();
    r->add_option("--json", run.json_out, "verdict JSON");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& ex) {
        return app.exit(ex) == 0 ? 0 : 1;
    }

    try {
        if (s->parsed()) return cmd_synth(synth);
        if (i->parsed()) {
            if (ingest.dir.empty() && ingest.kde.empty()) {
                std::cerr << "ingest: one of --dir or --kde is required\n";
                return 1;
            }
            return cmd_ingest(ingest);
        }
        if (t->parsed()) return cmd_train(train);
        if (e->parsed()) {
            if (eval.model.empty() && eval.probs.empty()) {
                std::cerr << "eval: one of --model or --probs is required\n";
                return 1;
            }
            if (!eval.model.empty() && eval.data.empty()) {
                std::cerr << "eval: --model requires --data\n";
                return 1;
            }
            return cmd_eval(eval);
        }
        if (w->parsed()) return cmd_sweep(sweep);
        if (r->parsed()) return cmd_run(run);
    } catch (const CLI::Error& ex) {
        std::cerr << ex.what() << "\n";
        return 1;
    } catch (const fcp::FcpError& ex) {
        std::cerr << "error: " << ex.what() << "\n";
        return 2;
    }
    return 1;
}
