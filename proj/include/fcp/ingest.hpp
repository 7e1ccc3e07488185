#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "fcp/csv.hpp"
#include "fcp/errors.hpp"
#include "fcp/rng.hpp"

namespace fcp {

// ---------------------------------------------------------------------------
// Raw relational tables (train + four auxiliary tables joined on id)
// ---------------------------------------------------------------------------

struct TrainRow {
    long id = 0;
    std::string location;
    int fault_severity = 0;  // 0 none, 1 few, 2 many
};

struct TokenRow {
    long id = 0;
    std::string token;
};

struct VolumeRow {
    long id = 0;
    std::string token;
    long volume = 0;
};

struct RawFaultTables {
    std::vector<TrainRow> train;
    std::vector<TokenRow> event_type;
    std::vector<VolumeRow> log_feature;
    std::vector<TokenRow> resource_type;
    std::vector<TokenRow> severity_type;
};

struct DesignMatrix {
    Eigen::MatrixXd rows;                    // N x D
    std::vector<int> labels;                 // N
    std::vector<std::string> feature_names;  // D
    std::vector<long> ids;                   // N

    Eigen::Index n() const { return rows.rows(); }
    Eigen::Index dim() const { return rows.cols(); }
};

struct Standardization {
    Eigen::VectorXd mean;
    Eigen::VectorXd stddev;  // floored, always > 0
};

// One record in the KDE-table schema (eight telemetry features + severity).
struct KdeRecord {
    long docket = 0;
    Eigen::VectorXd features;
    int severity = 0;              // 0 none, 1 impending, 2 major, 3 critical
    std::optional<int> cls;        // taxonomy class id, when labeled
};

inline const std::vector<std::string>& kde_feature_names() {
    static const std::vector<std::string> names = {
        "ci_ratio",        "power_margin_dbm", "poi_cong_pct",
        "cssr_pct",        "tch_cong_pct",     "sdcch_cong_pct",
        "signal_strength_dbm", "packet_loss_pct"};
    return names;
}

// ---------------------------------------------------------------------------
// Loading
// ---------------------------------------------------------------------------

namespace detail {

inline void check_arity(const std::vector<std::string>& row, std::size_t want,
                        const std::string& path, std::size_t line) {
    if (row.size() != want)
        throw ParseError(path, line,
                         "expected " + std::to_string(want) + " fields, found " +
                             std::to_string(row.size()));
}

inline std::vector<TokenRow> load_token_table(const std::string& path,
                                              const std::string& column) {
    auto t = csv::read_file(path);
    csv::expect_header(t, {"id", column}, path);
    std::vector<TokenRow> out;
    out.reserve(t.rows.size());
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        check_arity(t.rows[i], 2, path, t.line_numbers[i]);
        out.push_back({csv::parse_long(t.rows[i][0], path, t.line_numbers[i]), t.rows[i][1]});
    }
    return out;
}

// "location 120" / "feature 3" -> 120 / 3; tokens without a trailing integer -> 0.
inline long trailing_index(const std::string& token) {
    auto pos = token.find_last_not_of("0123456789");
    if (pos == std::string::npos || pos + 1 >= token.size()) return 0;
    return std::stol(token.substr(pos + 1));
}

// Numeric-aware token order so "feature 2" sorts before "feature 10".
inline bool token_less(const std::string& a, const std::string& b) {
    long ia = trailing_index(a), ib = trailing_index(b);
    if (ia != ib) return ia < ib;
    return a < b;
}

}  // namespace detail

inline RawFaultTables load_telstra(const std::string& dir) {
    RawFaultTables t;
    {
        const std::string path = dir + "/train.csv";
        auto tab = csv::read_file(path);
        csv::expect_header(tab, {"id", "location", "fault_severity"}, path);
        for (std::size_t i = 0; i < tab.rows.size(); ++i) {
            detail::check_arity(tab.rows[i], 3, path, tab.line_numbers[i]);
            TrainRow r;
            r.id = csv::parse_long(tab.rows[i][0], path, tab.line_numbers[i]);
            r.location = tab.rows[i][1];
            long sev = csv::parse_long(tab.rows[i][2], path, tab.line_numbers[i]);
            if (sev < 0 || sev > 2)
                throw ParseError(path, tab.line_numbers[i],
                                 "fault_severity must be 0..2, found " + std::to_string(sev));
            r.fault_severity = static_cast<int>(sev);
            t.train.push_back(r);
        }
    }
    t.event_type = detail::load_token_table(dir + "/event_type.csv", "event_type");
    t.resource_type = detail::load_token_table(dir + "/resource_type.csv", "resource_type");
    t.severity_type = detail::load_token_table(dir + "/severity_type.csv", "severity_type");
    {
        const std::string path = dir + "/log_feature.csv";
        auto tab = csv::read_file(path);
        csv::expect_header(tab, {"id", "log_feature", "volume"}, path);
        for (std::size_t i = 0; i < tab.rows.size(); ++i) {
            detail::check_arity(tab.rows[i], 3, path, tab.line_numbers[i]);
            VolumeRow r;
            r.id = csv::parse_long(tab.rows[i][0], path, tab.line_numbers[i]);
            r.token = tab.rows[i][1];
            r.volume = csv::parse_long(tab.rows[i][2], path, tab.line_numbers[i]);
            if (r.volume < 0)
                throw ParseError(path, tab.line_numbers[i], "volume must be nonnegative");
            t.log_feature.push_back(r);
        }
    }
    return t;
}

// ---------------------------------------------------------------------------
// Feature assembly
// ---------------------------------------------------------------------------

// Vocabularies computed on a training set. Applying the schema to unseen
// tables never grows it; unknown tokens contribute zeros.
struct FeatureSchema {
    std::vector<std::string> log_feature_vocab;
    std::vector<std::string> event_vocab;
    std::vector<std::string> resource_vocab;
    std::vector<std::string> severity_vocab;
    std::map<std::string, long> location_counts;  // train rows per location

    std::size_t dim() const {
        return log_feature_vocab.size() + event_vocab.size() + resource_vocab.size() +
               severity_vocab.size() + 2;
    }
};

namespace detail {

template <typename Row>
std::vector<std::string> vocab_of(const std::vector<Row>& rows) {
    std::vector<std::string> v;
    for (const auto& r : rows) v.push_back(r.token);
    std::sort(v.begin(), v.end(), token_less);
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
}

inline std::unordered_map<std::string, int> index_of(const std::vector<std::string>& vocab,
                                                     int offset) {
    std::unordered_map<std::string, int> m;
    for (std::size_t i = 0; i < vocab.size(); ++i) m[vocab[i]] = offset + static_cast<int>(i);
    return m;
}

}  // namespace detail

inline FeatureSchema build_schema(const RawFaultTables& tables) {
    FeatureSchema s;
    s.log_feature_vocab = detail::vocab_of(tables.log_feature);
    s.event_vocab = detail::vocab_of(tables.event_type);
    s.resource_vocab = detail::vocab_of(tables.resource_type);
    s.severity_vocab = detail::vocab_of(tables.severity_type);
    for (const auto& r : tables.train) s.location_counts[r.location]++;
    return s;
}

inline DesignMatrix assemble_features(const RawFaultTables& tables, const FeatureSchema& schema) {
    const int n_log = static_cast<int>(schema.log_feature_vocab.size());
    const int n_event = static_cast<int>(schema.event_vocab.size());
    const int n_res = static_cast<int>(schema.resource_vocab.size());
    const int n_sev = static_cast<int>(schema.severity_vocab.size());
    const int dim = n_log + n_event + n_res + n_sev + 2;

    auto log_idx = detail::index_of(schema.log_feature_vocab, 0);
    auto event_idx = detail::index_of(schema.event_vocab, n_log);
    auto res_idx = detail::index_of(schema.resource_vocab, n_log + n_event);
    auto sev_idx = detail::index_of(schema.severity_vocab, n_log + n_event + n_res);

    // Row order is canonical: ascending id. This makes assembly invariant to
    // the order of rows in the input tables.
    std::vector<TrainRow> train = tables.train;
    std::sort(train.begin(), train.end(),
              [](const TrainRow& a, const TrainRow& b) { return a.id < b.id; });

    std::unordered_map<long, int> row_of;
    for (std::size_t i = 0; i < train.size(); ++i) row_of[train[i].id] = static_cast<int>(i);

    DesignMatrix m;
    m.rows = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(train.size()), dim);
    m.labels.resize(train.size());
    m.ids.resize(train.size());

    for (std::size_t i = 0; i < train.size(); ++i) {
        m.ids[i] = train[i].id;
        m.labels[i] = train[i].fault_severity;
        m.rows(static_cast<Eigen::Index>(i), dim - 2) =
            static_cast<double>(detail::trailing_index(train[i].location));
        auto it = schema.location_counts.find(train[i].location);
        m.rows(static_cast<Eigen::Index>(i), dim - 1) =
            it == schema.location_counts.end() ? 0.0 : static_cast<double>(it->second);
    }

    auto add = [&](long id, int col, double v) {
        auto it = row_of.find(id);
        if (it != row_of.end()) m.rows(it->second, col) += v;
    };
    for (const auto& r : tables.log_feature) {
        auto it = log_idx.find(r.token);
        if (it != log_idx.end()) add(r.id, it->second, static_cast<double>(r.volume));
    }
    for (const auto& r : tables.event_type) {
        auto it = event_idx.find(r.token);
        if (it != event_idx.end()) add(r.id, it->second, 1.0);
    }
    for (const auto& r : tables.resource_type) {
        auto it = res_idx.find(r.token);
        if (it != res_idx.end()) add(r.id, it->second, 1.0);
    }
    for (const auto& r : tables.severity_type) {
        auto it = sev_idx.find(r.token);
        if (it != sev_idx.end()) add(r.id, it->second, 1.0);
    }

    m.feature_names = schema.log_feature_vocab;
    m.feature_names.insert(m.feature_names.end(), schema.event_vocab.begin(),
                           schema.event_vocab.end());
    m.feature_names.insert(m.feature_names.end(), schema.resource_vocab.begin(),
                           schema.resource_vocab.end());
    m.feature_names.insert(m.feature_names.end(), schema.severity_vocab.begin(),
                           schema.severity_vocab.end());
    m.feature_names.push_back("location_index");
    m.feature_names.push_back("location_frequency");
    return m;
}

inline DesignMatrix assemble_features(const RawFaultTables& tables) {
    return assemble_features(tables, build_schema(tables));
}

// ---------------------------------------------------------------------------
// Standardization (population convention, stddev floored to 1 when constant)
// ---------------------------------------------------------------------------

inline std::pair<DesignMatrix, Standardization> standardize(
    const DesignMatrix& m, const std::optional<Standardization>& stats = std::nullopt) {
    Standardization s;
    if (stats) {
        if (stats->mean.size() != m.dim())
            throw ShapeError("standardization stats dimension " +
                             std::to_string(stats->mean.size()) + " != matrix dim " +
                             std::to_string(m.dim()));
        s = *stats;
    } else {
        const double n = static_cast<double>(m.n());
        s.mean = m.rows.colwise().mean();
        Eigen::MatrixXd centered = m.rows.rowwise() - s.mean.transpose();
        s.stddev = (centered.array().square().colwise().sum() / n).sqrt();
        for (Eigen::Index j = 0; j < s.stddev.size(); ++j)
            if (s.stddev[j] <= 0.0) s.stddev[j] = 1.0;
    }
    DesignMatrix out = m;
    out.rows = (m.rows.rowwise() - s.mean.transpose()).array().rowwise() /
               s.stddev.transpose().array();
    return {std::move(out), std::move(s)};
}

// ---------------------------------------------------------------------------
// Stratified split
// ---------------------------------------------------------------------------

namespace detail {

inline DesignMatrix take_rows(const DesignMatrix& m, const std::vector<int>& idx) {
    DesignMatrix out;
    out.feature_names = m.feature_names;
    out.rows.resize(static_cast<Eigen::Index>(idx.size()), m.dim());
    out.labels.resize(idx.size());
    out.ids.resize(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i) {
        out.rows.row(static_cast<Eigen::Index>(i)) = m.rows.row(idx[i]);
        out.labels[i] = m.labels[idx[i]];
        out.ids[i] = m.ids[idx[i]];
    }
    return out;
}

}  // namespace detail

inline std::array<DesignMatrix, 3> split(const DesignMatrix& m,
                                         const std::array<double, 3>& ratios,
                                         std::uint64_t seed) {
    double sum = ratios[0] + ratios[1] + ratios[2];
    if (std::abs(sum - 1.0) > 1e-9 || ratios[0] < 0 || ratios[1] < 0 || ratios[2] < 0)
        throw ConfigError("split ratios must be nonnegative and sum to 1");
    std::size_t parts = 0;
    for (double r : ratios)
        if (r > 0) ++parts;

    std::map<int, std::vector<int>> by_label;
    for (Eigen::Index i = 0; i < m.n(); ++i)
        by_label[m.labels[static_cast<std::size_t>(i)]].push_back(static_cast<int>(i));

    Rng rng = make_rng(seed);
    std::array<std::vector<int>, 3> picks;
    for (auto& [label, idx] : by_label) {
        if (idx.size() < parts)
            throw StratifyError("label " + std::to_string(label) + " has " +
                                std::to_string(idx.size()) + " rows, fewer than " +
                                std::to_string(parts) + " split parts");
        std::shuffle(idx.begin(), idx.end(), rng);
        // Largest-remainder allocation of this class across the three parts.
        const double n = static_cast<double>(idx.size());
        std::array<std::size_t, 3> count{};
        std::array<double, 3> frac{};
        std::size_t assigned = 0;
        for (int p = 0; p < 3; ++p) {
            double target = n * ratios[p];
            count[p] = static_cast<std::size_t>(std::floor(target));
            frac[p] = target - static_cast<double>(count[p]);
            assigned += count[p];
        }
        std::array<int, 3> order{0, 1, 2};
        std::stable_sort(order.begin(), order.end(),
                         [&](int a, int b) { return frac[a] > frac[b]; });
        for (std::size_t r = 0; assigned < idx.size(); ++r, ++assigned) count[order[r % 3]]++;
        std::size_t pos = 0;
        for (int p = 0; p < 3; ++p)
            for (std::size_t k = 0; k < count[p]; ++k) picks[p].push_back(idx[pos++]);
    }
    return {detail::take_rows(m, picks[0]), detail::take_rows(m, picks[1]),
            detail::take_rows(m, picks[2])};
}

// ---------------------------------------------------------------------------
// KDE-table I/O
// ---------------------------------------------------------------------------

inline std::vector<KdeRecord> load_kde_table(const std::string& path) {
    auto t = csv::read_file(path);
    std::vector<std::string> base = {"docket"};
    for (const auto& n : kde_feature_names()) base.push_back(n);
    base.push_back("severity");
    csv::expect_header(t, base, path);
    const bool has_class = t.header.size() > base.size() && t.header[base.size()] == "class";
    const std::size_t want = base.size() + (has_class ? 1 : 0);
    // Percentage columns, clamped to [0, 120] (raw files may exceed nominal range).
    static const std::array<int, 5> pct_cols = {2, 3, 4, 5, 7};

    std::vector<KdeRecord> out;
    out.reserve(t.rows.size());
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        detail::check_arity(t.rows[i], want, path, t.line_numbers[i]);
        KdeRecord r;
        r.docket = csv::parse_long(t.rows[i][0], path, t.line_numbers[i]);
        r.features.resize(8);
        for (int j = 0; j < 8; ++j)
            r.features[j] = csv::parse_double(t.rows[i][1 + j], path, t.line_numbers[i]);
        for (int c : pct_cols) r.features[c] = std::clamp(r.features[c], 0.0, 120.0);
        long sev = csv::parse_long(t.rows[i][9], path, t.line_numbers[i]);
        if (sev < 0 || sev > 3)
            throw ParseError(path, t.line_numbers[i],
                             "severity must be 0..3, found " + std::to_string(sev));
        r.severity = static_cast<int>(sev);
        if (has_class) {
            long c = csv::parse_long(t.rows[i][10], path, t.line_numbers[i]);
            if (c < 1) throw ParseError(path, t.line_numbers[i], "class id must be >= 1");
            r.cls = static_cast<int>(c);
        }
        out.push_back(std::move(r));
    }
    return out;
}

namespace detail {
inline std::string num_to_string(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    // Trim to shortest representation that round-trips.
    for (int prec = 1; prec < 17; ++prec) {
        std::ostringstream t;
        t.precision(prec);
        t << v;
        if (std::stod(t.str()) == v) return t.str();
    }
    return os.str();
}
}  // namespace detail

inline std::string kde_table_to_csv(const std::vector<KdeRecord>& records, bool with_class) {
    std::ostringstream os;
    os << "docket";
    for (const auto& n : kde_feature_names()) os << ',' << n;
    os << ",severity";
    if (with_class) os << ",class";
    os << '\n';
    for (const auto& r : records) {
        os << r.docket;
        for (Eigen::Index j = 0; j < r.features.size(); ++j)
            os << ',' << detail::num_to_string(r.features[j]);
        os << ',' << r.severity;
        if (with_class) os << ',' << (r.cls ? *r.cls : 0);
        os << '\n';
    }
    return os.str();
}

// Design-matrix view of KDE records. label_from_class=true uses the taxonomy
// class id, otherwise the severity.
inline DesignMatrix kde_design_matrix(const std::vector<KdeRecord>& records,
                                      bool label_from_class = false) {
    DesignMatrix m;
    m.feature_names = kde_feature_names();
    m.rows.resize(static_cast<Eigen::Index>(records.size()), 8);
    m.labels.resize(records.size());
    m.ids.resize(records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
        m.rows.row(static_cast<Eigen::Index>(i)) = records[i].features.transpose();
        if (label_from_class) {
            if (!records[i].cls)
                throw LabelError("record docket " + std::to_string(records[i].docket) +
                                 " has no class label");
            m.labels[i] = *records[i].cls;
        } else {
            m.labels[i] = records[i].severity;
        }
        m.ids[i] = records[i].docket;
    }
    return m;
}

// ---------------------------------------------------------------------------
// Feature-matrix CSV (output of `ingest`, input of `train`)
// ---------------------------------------------------------------------------

inline std::string features_to_csv(const DesignMatrix& m) {
    std::ostringstream os;
    os << "id,label";
    for (const auto& n : m.feature_names) os << ',' << n;
    os << '\n';
    for (Eigen::Index i = 0; i < m.n(); ++i) {
        os << m.ids[static_cast<std::size_t>(i)] << ',' << m.labels[static_cast<std::size_t>(i)];
        for (Eigen::Index j = 0; j < m.dim(); ++j) os << ',' << detail::num_to_string(m.rows(i, j));
        os << '\n';
    }
    return os.str();
}

inline DesignMatrix features_from_csv(const std::string& path) {
    auto t = csv::read_file(path);
    csv::expect_header(t, {"id", "label"}, path);
    DesignMatrix m;
    m.feature_names.assign(t.header.begin() + 2, t.header.end());
    const std::size_t dim = m.feature_names.size();
    m.rows.resize(static_cast<Eigen::Index>(t.rows.size()), static_cast<Eigen::Index>(dim));
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        detail::check_arity(t.rows[i], dim + 2, path, t.line_numbers[i]);
        m.ids.push_back(csv::parse_long(t.rows[i][0], path, t.line_numbers[i]));
        m.labels.push_back(
            static_cast<int>(csv::parse_long(t.rows[i][1], path, t.line_numbers[i])));
        for (std::size_t j = 0; j < dim; ++j)
            m.rows(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                csv::parse_double(t.rows[i][2 + j], path, t.line_numbers[i]);
    }
    return m;
}

}  // namespace fcp
