#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "support/approx.hpp"

#include <filesystem>
#include <fstream>
#include <set>

#include "fcp/ingest.hpp"
#include "support/fixtures.hpp"

using namespace fcp;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("fcp_ingest_" + std::to_string(std::random_device{}()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

void write(const fs::path& p, const std::string& s) {
    std::ofstream(p, std::ios::binary) << s;
}

void write_minimal_telstra(const fs::path& dir, const std::string& train_body = "") {
    write(dir / "train.csv", "id,location,fault_severity\n" + train_body);
    write(dir / "event_type.csv", "id,event_type\n");
    write(dir / "log_feature.csv", "id,log_feature,volume\n");
    write(dir / "resource_type.csv", "id,resource_type\n");
    write(dir / "severity_type.csv", "id,severity_type\n");
}

}  // namespace

TEST_CASE("load_telstra parses canonical rows") {
    TempDir d;
    write_minimal_telstra(d.path, "14804,location 120,0\r\n1412,location 118,1\n");
    write(d.path / "resource_type.csv", "id,resource_type\n6597,resource_type 8\n");

    auto t = load_telstra(d.path.string());
    REQUIRE(t.train.size() == 2);
    CHECK(t.train[0].id == 14804);
    CHECK(t.train[0].location == "location 120");
    CHECK(t.train[0].fault_severity == 0);
    REQUIRE(t.resource_type.size() == 1);
    CHECK(t.resource_type[0].id == 6597);
    CHECK(t.resource_type[0].token == "resource_type 8");
    // empty auxiliary files with valid headers are fine
    CHECK(t.event_type.empty());
    CHECK(t.log_feature.empty());
}

TEST_CASE("load_telstra error paths") {
    TempDir d;
    write_minimal_telstra(d.path);
    fs::remove(d.path / "severity_type.csv");
    CHECK_THROWS_AS(load_telstra(d.path.string()), FileMissing);

    write(d.path / "severity_type.csv", "id,severity_type\n");
    write(d.path / "train.csv", "id,location,fault_severity\n1,loc\n");
    CHECK_THROWS_AS(load_telstra(d.path.string()), ParseError);

    write(d.path / "train.csv", "id,location,fault_severity\n1,loc,7\n");
    CHECK_THROWS_AS(load_telstra(d.path.string()), ParseError);

    write(d.path / "train.csv", "id,location,fault_severity\n1,loc,0\n");
    write(d.path / "log_feature.csv", "id,log_feature,volume\n1,feature 1,notanumber\n");
    CHECK_THROWS_AS(load_telstra(d.path.string()), ParseError);
}

TEST_CASE("assemble_features block layout") {
    RawFaultTables t;
    t.train.push_back({1, "location 7", 2});
    t.log_feature = {{1, "feature 1", 0}, {1, "feature 3", 5},
                     {2, "feature 2", 1}, {2, "feature 4", 1}};
    // id 2 exists only in aux tables and is ignored; vocabulary still sees it.
    auto m = assemble_features(t);
    REQUIRE(m.n() == 1);
    // log-feature block over vocab [feature 1..4]
    CHECK(m.rows(0, 0) == 0.0);
    CHECK(m.rows(0, 1) == 0.0);
    CHECK(m.rows(0, 2) == 5.0);
    CHECK(m.rows(0, 3) == 0.0);
    CHECK(m.feature_names[2] == "feature 3");
    CHECK(m.rows(0, m.dim() - 2) == 7.0);  // parsed location index
    CHECK(m.rows(0, m.dim() - 1) == 1.0);  // location frequency
    CHECK(m.labels[0] == 2);
}

TEST_CASE("assemble_features counts repeated tokens") {
    RawFaultTables t;
    t.train.push_back({10, "location 1", 0});
    t.resource_type = {{10, "resource_type 8"}, {10, "resource_type 8"}};
    auto m = assemble_features(t);
    // single resource slot, counted twice
    REQUIRE(m.dim() == 3);  // resource slot + 2 location features
    CHECK(m.rows(0, 0) == 2.0);
}

TEST_CASE("assemble_features dimension matches independent recount") {
    auto tables = fixtures::make_fault_tables(300, 7);
    auto m = assemble_features(tables);

    // Independent recount oracle straight over the raw rows.
    std::set<std::string> logs, events, resources, sevs;
    for (const auto& r : tables.log_feature) logs.insert(r.token);
    for (const auto& r : tables.event_type) events.insert(r.token);
    for (const auto& r : tables.resource_type) resources.insert(r.token);
    for (const auto& r : tables.severity_type) sevs.insert(r.token);
    CHECK(static_cast<std::size_t>(m.dim()) ==
          logs.size() + events.size() + resources.size() + sevs.size() + 2);
    CHECK(m.rows.allFinite());
}

TEST_CASE("assemble_features is invariant to input row order") {
    auto tables = fixtures::make_fault_tables(100, 11);
    auto m1 = assemble_features(tables);
    auto shuffled = tables;
    Rng rng = make_rng(3);
    std::shuffle(shuffled.train.begin(), shuffled.train.end(), rng);
    std::shuffle(shuffled.log_feature.begin(), shuffled.log_feature.end(), rng);
    std::shuffle(shuffled.event_type.begin(), shuffled.event_type.end(), rng);
    auto m2 = assemble_features(shuffled);
    CHECK(m1.ids == m2.ids);
    CHECK(m1.rows == m2.rows);
    CHECK(m1.labels == m2.labels);
}

TEST_CASE("vocabulary stability: unseen tokens contribute zeros") {
    auto train_tables = fixtures::make_fault_tables(200, 21);
    auto schema = build_schema(train_tables);
    const std::size_t d = schema.dim();

    RawFaultTables test_tables;
    test_tables.train.push_back({99999, "location 9999", 0});
    test_tables.event_type.push_back({99999, "event_type 777"});  // unseen
    test_tables.log_feature.push_back({99999, "feature 777", 42});  // unseen
    auto m = assemble_features(test_tables, schema);
    REQUIRE(static_cast<std::size_t>(m.dim()) == d);  // never grows
    // everything but the location index is zero (location 9999 unseen -> freq 0)
    CHECK(m.rows.row(0).head(static_cast<Eigen::Index>(d) - 2).isZero());
    CHECK(m.rows(0, static_cast<Eigen::Index>(d) - 1) == 0.0);
}

TEST_CASE("standardize basics") {
    DesignMatrix m;
    m.rows.resize(2, 2);
    m.rows << 0, 3, 2, 3;  // col0 = [0,2], col1 constant
    m.labels = {0, 1};
    m.ids = {1, 2};
    m.feature_names = {"a", "b"};
    auto [out, stats] = standardize(m);
    CHECK(stats.mean[0] == Approx(1.0));
    CHECK(stats.stddev[0] == Approx(1.0));  // population convention
    CHECK(out.rows(0, 0) == Approx(-1.0));
    CHECK(out.rows(1, 0) == Approx(1.0));
    CHECK(stats.stddev[1] == 1.0);  // floored
    CHECK(out.rows(0, 1) == 0.0);
    CHECK(out.rows(1, 1) == 0.0);

    Standardization bad;
    bad.mean = Eigen::VectorXd::Zero(3);
    bad.stddev = Eigen::VectorXd::Ones(3);
    CHECK_THROWS_AS(standardize(m, bad), ShapeError);
}

TEST_CASE("standardize moments oracle on random matrix") {
    Rng rng = make_rng(5);
    std::normal_distribution<double> gauss(3.0, 2.5);
    DesignMatrix m;
    m.rows.resize(100, 10);
    for (Eigen::Index i = 0; i < 100; ++i)
        for (Eigen::Index j = 0; j < 10; ++j) m.rows(i, j) = gauss(rng);
    m.labels.assign(100, 0);
    m.ids.resize(100);
    auto [out, stats] = standardize(m);
    for (Eigen::Index j = 0; j < 10; ++j) {
        // independent recomputation of the post-transform moments
        double mu = 0, var = 0;
        for (Eigen::Index i = 0; i < 100; ++i) mu += out.rows(i, j);
        mu /= 100;
        for (Eigen::Index i = 0; i < 100; ++i) {
            double d = out.rows(i, j) - mu;
            var += d * d;
        }
        var /= 100;
        CHECK(std::abs(mu) < 1e-12);
        CHECK(std::abs(std::sqrt(var) - 1.0) < 1e-12);
    }
    // re-standardizing with the returned stats leaves the matrix unchanged
    auto [twice, stats2] = standardize(out, stats);
    (void)stats2;
    auto [once_more, s3] = standardize(twice, stats);
    (void)s3;
    // idempotence applies to the (matrix, stats) pair contract
    auto [apply1, sa] = standardize(m, stats);
    auto [apply2, sb] = standardize(m, stats);
    (void)sa;
    (void)sb;
    CHECK((apply1.rows - apply2.rows).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("split contracts") {
    auto tables = fixtures::make_fault_tables(400, 31);
    auto m = assemble_features(tables);

    SUBCASE("ratios (1,0,0) puts everything in train") {
        auto [tr, va, te] = split(m, {1.0, 0.0, 0.0}, 9);
        CHECK(tr.n() == m.n());
        CHECK(va.n() == 0);
        CHECK(te.n() == 0);
        auto ids = tr.ids;
        std::sort(ids.begin(), ids.end());
        CHECK(ids == m.ids);  // m.ids are ascending already
    }
    SUBCASE("stratification keeps label balance") {
        DesignMatrix b;
        b.rows = Eigen::MatrixXd::Random(100, 3);
        for (int i = 0; i < 100; ++i) {
            b.labels.push_back(i < 50 ? 0 : 1);
            b.ids.push_back(i);
        }
        b.feature_names = {"x", "y", "z"};
        auto [tr, va, te] = split(b, {0.7, 0.15, 0.15}, 1);
        auto frac_pos = [](const DesignMatrix& p) {
            double c = 0;
            for (int l : p.labels) c += l;
            return c / static_cast<double>(p.labels.size());
        };
        CHECK(tr.n() + va.n() + te.n() == 100);
        CHECK(std::abs(frac_pos(tr) - 0.5) <= 0.01);
        CHECK(std::abs(frac_pos(va) - 0.5) <= 0.01);
        CHECK(std::abs(frac_pos(te) - 0.5) <= 0.01);
    }
    SUBCASE("deterministic replay") {
        auto a = split(m, {0.7, 0.15, 0.15}, 42);
        auto b = split(m, {0.7, 0.15, 0.15}, 42);
        for (int p = 0; p < 3; ++p) {
            CHECK(a[p].ids == b[p].ids);
            CHECK(a[p].rows == b[p].rows);
        }
    }
    SUBCASE("partition is exact") {
        auto [tr, va, te] = split(m, {0.6, 0.2, 0.2}, 7);
        std::vector<long> all = tr.ids;
        all.insert(all.end(), va.ids.begin(), va.ids.end());
        all.insert(all.end(), te.ids.begin(), te.ids.end());
        std::sort(all.begin(), all.end());
        CHECK(all == m.ids);
    }
    SUBCASE("class smaller than part count") {
        DesignMatrix tiny;
        tiny.rows = Eigen::MatrixXd::Random(3, 2);
        tiny.labels = {0, 0, 1};  // class 1 has one row, three nonzero parts
        tiny.ids = {1, 2, 3};
        tiny.feature_names = {"a", "b"};
        CHECK_THROWS_AS(split(tiny, {0.4, 0.3, 0.3}, 1), StratifyError);
    }
    SUBCASE("bad ratios") {
        CHECK_THROWS_AS(split(m, {0.5, 0.2, 0.2}, 1), ConfigError);
    }
}

TEST_CASE("load_kde_table parses and clamps") {
    TempDir d;
    std::string header =
        "docket,ci_ratio,power_margin_dbm,poi_cong_pct,cssr_pct,tch_cong_pct,"
        "sdcch_cong_pct,signal_strength_dbm,packet_loss_pct,severity";
    write(d.path / "kde.csv",
          header +
              "\n68,28,20,1,96,1,1,100,1,0\n"
              "52,10,13,8,83,10,0,109,2,1\n"
              "69,-10,-15,11,91,6,0,98,0,1\n"
              "7,5,5,150,96,1,1,100,1,2\n");
    auto recs = load_kde_table((d.path / "kde.csv").string());
    REQUIRE(recs.size() == 4);
    CHECK(recs[0].docket == 68);
    CHECK(recs[0].severity == 0);
    CHECK(recs[1].severity == 1);
    CHECK(recs[1].features[6] == 109.0);  // out-of-nominal signal kept
    CHECK(recs[2].features[0] == -10.0);  // negative margins are physical
    CHECK(recs[2].features[1] == -15.0);
    CHECK(recs[3].features[2] == 120.0);  // percentage clamped to 120
    CHECK_FALSE(recs[0].cls.has_value());

    write(d.path / "bad.csv", header + "\n1,1,1,1,1,1,1,1,1,9\n");
    CHECK_THROWS_AS(load_kde_table((d.path / "bad.csv").string()), ParseError);

    write(d.path / "cls.csv", header + ",class\n1,1,1,1,1,1,1,1,1,2,3\n");
    auto labeled = load_kde_table((d.path / "cls.csv").string());
    REQUIRE(labeled.size() == 1);
    CHECK(labeled[0].cls == 3);
}

TEST_CASE("features CSV round trip") {
    auto tables = fixtures::make_fault_tables(50, 77);
    auto m = assemble_features(tables);
    TempDir d;
    csv::write_file_atomic((d.path / "f.csv").string(), features_to_csv(m));
    auto back = features_from_csv((d.path / "f.csv").string());
    CHECK(back.ids == m.ids);
    CHECK(back.labels == m.labels);
    CHECK(back.feature_names == m.feature_names);
    CHECK((back.rows - m.rows).cwiseAbs().maxCoeff() == 0.0);
}
