#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "support/approx.hpp"

#include "fcp/adt.hpp"
#include "support/fixtures.hpp"

using namespace fcp;

namespace {

// Independent score computation: enumerate every splitter, re-walk its
// precondition chain with a separate loop, and add the branch value.
double path_enumeration_score(const AdtModel& m, const Eigen::VectorXd& x) {
    double total = m.root_value;
    for (const auto& s : m.splitters) {
        bool reachable = true;
        int pre = s.precondition;
        while (pre != 0 && reachable) {
            const auto& p = m.preconditions[static_cast<std::size_t>(pre)];
            const auto& parent = m.splitters[static_cast<std::size_t>(p.splitter)];
            bool went_lt = x[parent.feature] < parent.threshold;
            reachable = went_lt == p.branch_lt;
            pre = parent.precondition;
        }
        if (reachable) total += x[s.feature] < s.threshold ? s.value_lt : s.value_ge;
    }
    return total;
}

double exp_loss(const AdtModel& m, const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
    double loss = 0.0;
    for (Eigen::Index i = 0; i < X.rows(); ++i)
        loss += std::exp(-y[i] * m.score(X.row(i).transpose()));
    return loss;
}

}  // namespace

TEST_CASE("train_adt input validation") {
    Eigen::MatrixXd X(2, 1);
    X << 0, 1;
    Eigen::VectorXd y(2);
    y << 1, 1;
    CHECK_THROWS_AS(train_adt(X, y), DegenerateLabels);
    y << 1, 2;
    CHECK_THROWS_AS(train_adt(X, y), LabelError);
}

TEST_CASE("single cut separates 1-D data in one round") {
    Eigen::MatrixXd X(8, 1);
    X << -4, -3, -2, -1, 0.5, 1, 2, 3;
    Eigen::VectorXd y(8);
    y << -1, -1, -1, -1, 1, 1, 1, 1;
    AdtHyper hyper;
    hyper.rounds = 1;
    auto m = train_adt(X, y, hyper);

    REQUIRE(m.splitters.size() == 1);
    CHECK(m.splitters[0].threshold > -1.0);
    CHECK(m.splitters[0].threshold < 0.5);
    for (Eigen::Index i = 0; i < 8; ++i)
        CHECK(predict_adt(m, X.row(i).transpose()).first == (y[i] > 0 ? 1 : -1));
}

TEST_CASE("root value is the smoothed half log odds") {
    Eigen::MatrixXd X(4, 1);
    X << 1, 2, 3, 4;
    Eigen::VectorXd y(4);
    y << 1, 1, 1, -1;
    AdtHyper hyper;
    hyper.rounds = 0;
    auto m = train_adt(X, y, hyper);
    double eps = 1.0 / 8.0;
    CHECK(m.root_value == Approx(0.5 * std::log((3.0 + eps) / (1.0 + eps))).epsilon(1e-12));
    CHECK(m.splitters.empty());
}

TEST_CASE("score matches the path-enumeration oracle") {
    auto blobs = fixtures::make_blobs(
        {Eigen::Vector2d(-1, -1), Eigen::Vector2d(1, 1)}, 60, 1.2, 5);
    Eigen::VectorXd y(blobs.X.rows());
    for (Eigen::Index i = 0; i < y.size(); ++i) y[i] = blobs.y[static_cast<std::size_t>(i)] == 0 ? -1 : 1;
    AdtHyper hyper;
    hyper.rounds = 8;
    auto m = train_adt(blobs.X, y, hyper);
    CHECK(m.splitters.size() >= 2);  // deep enough to exercise preconditions

    Rng rng = make_rng(77);
    std::normal_distribution<double> gauss(0.0, 2.0);
    for (int q = 0; q < 50; ++q) {
        Eigen::VectorXd x(2);
        x << gauss(rng), gauss(rng);
        CHECK(m.score(x) == Approx(path_enumeration_score(m, x)).margin(1e-12));
    }
}

TEST_CASE("exponential loss is non-increasing per boosting round") {
    auto blobs = fixtures::make_blobs(
        {Eigen::Vector2d(-1, 0), Eigen::Vector2d(1, 0)}, 50, 1.5, 21);
    Eigen::VectorXd y(blobs.X.rows());
    for (Eigen::Index i = 0; i < y.size(); ++i) y[i] = blobs.y[static_cast<std::size_t>(i)] == 0 ? -1 : 1;

    double prev = std::numeric_limits<double>::infinity();
    for (std::size_t r = 0; r <= 10; ++r) {
        AdtHyper hyper;
        hyper.rounds = r;
        auto m = train_adt(blobs.X, y, hyper);
        double loss = exp_loss(m, blobs.X, y);
        CHECK(loss <= prev + 1e-9);
        prev = loss;
    }
}

TEST_CASE("training is deterministic and stops when nothing is splittable") {
    Eigen::MatrixXd X(4, 1);
    X << 0, 0, 1, 1;  // only one distinct cut exists
    Eigen::VectorXd y(4);
    y << -1, -1, 1, 1;
    AdtHyper hyper;
    hyper.rounds = 50;
    auto m = train_adt(X, y, hyper);
    auto m2 = train_adt(X, y, hyper);
    CHECK(m.splitters.size() == m2.splitters.size());
    CHECK(m.splitters.size() < 50);  // early stop, not 50 forced rounds
    CHECK(m.root_value == m2.root_value);
    for (std::size_t i = 0; i < m.splitters.size(); ++i) {
        CHECK(m.splitters[i].threshold == m2.splitters[i].threshold);
        CHECK(m.splitters[i].value_lt == m2.splitters[i].value_lt);
    }

    Eigen::VectorXd x(1);
    x << 0.2;
    auto [label, score] = predict_adt(m, x);
    CHECK(label == (score >= 0 ? 1 : -1));
}

TEST_CASE("tie at score zero resolves to +1") {
    AdtModel m;
    m.root_value = 0.0;
    m.preconditions.push_back({-1, false});
    Eigen::VectorXd x(1);
    x << 0.0;
    CHECK(predict_adt(m, x).first == 1);
}
