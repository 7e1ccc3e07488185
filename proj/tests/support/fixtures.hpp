#pragma once

// Seeded data generators shared by the unit and acceptance tests: Gaussian
// blob tasks and a synthetic fault-log corpus in the five-table layout.

#include <Eigen/Dense>
#include <random>
#include <string>
#include <vector>

#include "fcp/ingest.hpp"
#include "fcp/rng.hpp"

namespace fixtures {

struct Blobs {
    Eigen::MatrixXd X;
    std::vector<int> y;
};

inline Blobs make_blobs(const std::vector<Eigen::VectorXd>& centers, std::size_t per_class,
                        double sigma, std::uint64_t seed) {
    fcp::Rng rng = fcp::make_rng(seed);
    std::normal_distribution<double> gauss(0.0, sigma);
    Blobs b;
    const Eigen::Index d = centers.front().size();
    b.X.resize(static_cast<Eigen::Index>(centers.size() * per_class), d);
    Eigen::Index row = 0;
    for (std::size_t c = 0; c < centers.size(); ++c)
        for (std::size_t i = 0; i < per_class; ++i) {
            for (Eigen::Index j = 0; j < d; ++j) b.X(row, j) = centers[c][j] + gauss(rng);
            b.y.push_back(static_cast<int>(c));
            ++row;
        }
    return b;
}

// Synthetic fault-log corpus in the five-table relational layout. Class
// structure: fault_severity depends on which log features fire (and their
// volumes), on the event/resource mix, and strongly on the warning-intensity
// severity_type, with enough noise that nothing is trivially separable.
inline fcp::RawFaultTables make_fault_tables(std::size_t n, std::uint64_t seed) {
    fcp::Rng rng = fcp::make_rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    constexpr int kLocations = 40;
    constexpr int kLogFeatures = 30;
    constexpr int kEvents = 12;
    constexpr int kResources = 10;
    constexpr int kSeverityTypes = 5;

    // Per-location fault propensity in [0.15, 0.75].
    std::vector<double> loc_rate(kLocations);
    for (auto& r : loc_rate) r = 0.15 + 0.6 * unif(rng);

    fcp::RawFaultTables t;
    for (std::size_t i = 0; i < n; ++i) {
        long id = static_cast<long>(i) + 1000;
        int loc = static_cast<int>(unif(rng) * kLocations);
        if (loc >= kLocations) loc = kLocations - 1;

        // Ground-truth class: 0 no fault, 1 a few, 2 many.
        double p_fault = loc_rate[static_cast<std::size_t>(loc)];
        int cls = 0;
        if (unif(rng) < p_fault) cls = unif(rng) < 0.45 ? 2 : 1;

        t.train.push_back({id, "location " + std::to_string(loc + 1), cls});

        // severity_type: warning intensity, correlated with the class.
        // class 0 -> types 1-2, class 1 -> 2-3, class 2 -> 4-5, 12% noise.
        int sev_type;
        double u = unif(rng);
        if (u < 0.12) {
            sev_type = 1 + static_cast<int>(unif(rng) * kSeverityTypes);
        } else if (cls == 0) {
            sev_type = unif(rng) < 0.6 ? 1 : 2;
        } else if (cls == 1) {
            sev_type = unif(rng) < 0.5 ? 2 : 3;
        } else {
            sev_type = unif(rng) < 0.5 ? 4 : 5;
        }
        if (sev_type > kSeverityTypes) sev_type = kSeverityTypes;
        t.severity_type.push_back({id, "severity_type " + std::to_string(sev_type)});

        // Events: one or two, with class-shifted ids.
        int n_events = 1 + (unif(rng) < 0.4 ? 1 : 0);
        for (int e = 0; e < n_events; ++e) {
            int base = cls * 4;  // classes favor disjoint-but-overlapping bands
            int ev = 1 + (base + static_cast<int>(unif(rng) * 6)) % kEvents;
            t.event_type.push_back({id, "event_type " + std::to_string(ev)});
        }

        // Resources: faults touch higher resource ids more often.
        int res = 1 + static_cast<int>(unif(rng) * (cls == 0 ? 6 : kResources));
        t.resource_type.push_back({id, "resource_type " + std::to_string(res)});

        // Log features: 2-4 per record; volumes grow with the class.
        int n_feats = 2 + static_cast<int>(unif(rng) * 3);
        for (int f = 0; f < n_feats; ++f) {
            int band = cls * 8;
            int feat = 1 + (band + static_cast<int>(unif(rng) * 14)) % kLogFeatures;
            long vol = 1 + static_cast<long>(unif(rng) * (3 + 5 * cls));
            t.log_feature.push_back({id, "feature " + std::to_string(feat), vol});
        }
    }
    return t;
}

// Writes the five-table corpus as CSV files under dir (which must exist).
inline void write_fault_tables(const fcp::RawFaultTables& t, const std::string& dir) {
    std::string s = "id,location,fault_severity\n";
    for (const auto& r : t.train)
        s += std::to_string(r.id) + "," + r.location + "," + std::to_string(r.fault_severity) + "\n";
    fcp::csv::write_file_atomic(dir + "/train.csv", s);

    auto dump_tokens = [&](const std::vector<fcp::TokenRow>& rows, const std::string& col,
                           const std::string& file) {
        std::string out = "id," + col + "\n";
        for (const auto& r : rows) out += std::to_string(r.id) + "," + r.token + "\n";
        fcp::csv::write_file_atomic(dir + "/" + file, out);
    };
    dump_tokens(t.event_type, "event_type", "event_type.csv");
    dump_tokens(t.resource_type, "resource_type", "resource_type.csv");
    dump_tokens(t.severity_type, "severity_type", "severity_type.csv");

    std::string lf = "id,log_feature,volume\n";
    for (const auto& r : t.log_feature)
        lf += std::to_string(r.id) + "," + r.token + "," + std::to_string(r.volume) + "\n";
    fcp::csv::write_file_atomic(dir + "/log_feature.csv", lf);
}

// Stratified subsample of `per_total` rows (balanced across binary labels).
inline fcp::DesignMatrix binary_detection_subset(const fcp::DesignMatrix& m, std::size_t total,
                                                 std::uint64_t seed) {
    std::vector<int> pos, neg;
    for (Eigen::Index i = 0; i < m.n(); ++i)
        (m.labels[static_cast<std::size_t>(i)] > 0 ? pos : neg).push_back(static_cast<int>(i));
    fcp::Rng rng = fcp::make_rng(seed);
    std::shuffle(pos.begin(), pos.end(), rng);
    std::shuffle(neg.begin(), neg.end(), rng);
    std::vector<int> picks;
    for (std::size_t i = 0; i < total / 2 && i < neg.size(); ++i) picks.push_back(neg[i]);
    for (std::size_t i = 0; i < total - total / 2 && i < pos.size(); ++i) picks.push_back(pos[i]);
    fcp::DesignMatrix out;
    out.feature_names = m.feature_names;
    out.rows.resize(static_cast<Eigen::Index>(picks.size()), m.dim());
    for (std::size_t i = 0; i < picks.size(); ++i) {
        out.rows.row(static_cast<Eigen::Index>(i)) = m.rows.row(picks[i]);
        out.labels.push_back(m.labels[static_cast<std::size_t>(picks[i])] > 0 ? 1 : 0);
        out.ids.push_back(m.ids[static_cast<std::size_t>(picks[i])]);
    }
    return out;
}

}  // namespace fixtures
