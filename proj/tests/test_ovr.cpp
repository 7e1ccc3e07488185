#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "fcp/ovr.hpp"
#include "support/fixtures.hpp"

using namespace fcp;

namespace {

std::vector<Eigen::VectorXd> far_centers() {
    // pairwise distance 10 sigma at sigma = 1
    return {Eigen::Vector2d(0, 0), Eigen::Vector2d(10, 0), Eigen::Vector2d(0, 10)};
}

template <typename Ens, typename PredictFn>
double train_accuracy(const Ens& ens, PredictFn&& predict, const Eigen::MatrixXd& X,
                      const std::vector<int>& y) {
    std::size_t ok = 0;
    for (Eigen::Index i = 0; i < X.rows(); ++i)
        if (predict(ens, X.row(i).transpose()).first == y[static_cast<std::size_t>(i)]) ++ok;
    return static_cast<double>(ok) / static_cast<double>(X.rows());
}

}  // namespace

TEST_CASE("one-vs-rest requires at least two classes") {
    Eigen::MatrixXd X(3, 1);
    X << 0, 1, 2;
    CHECK_THROWS_AS(train_multiclass_svm(X, {4, 4, 4}), DegenerateLabels);
}

TEST_CASE("well-separated 3-class blobs reach 100% for all three learners") {
    auto tr = fixtures::make_blobs(far_centers(), 40, 1.0, 11);
    auto te = fixtures::make_blobs(far_centers(), 20, 1.0, 12);

    SUBCASE("svm") {
        auto ens = train_multiclass_svm(tr.X, tr.y);
        CHECK(ens.models.size() == 3);
        CHECK(train_accuracy(ens, [](const auto& e, const Eigen::VectorXd& x) {
                  return predict_multiclass_svm(e, x);
              }, te.X, te.y) == 1.0);
    }
    SUBCASE("adt") {
        auto ens = train_multiclass_adt(tr.X, tr.y);
        CHECK(train_accuracy(ens, [](const auto& e, const Eigen::VectorXd& x) {
                  return predict_multiclass_adt(e, x);
              }, te.X, te.y) == 1.0);
    }
    SUBCASE("rf") {
        RfHyper hyper;
        hyper.n_trees = 30;
        hyper.seed = 3;
        auto ens = train_multiclass_rf(tr.X, tr.y, hyper);
        CHECK(train_accuracy(ens, [](const auto& e, const Eigen::VectorXd& x) {
                  return predict_multiclass_rf(e, x);
              }, te.X, te.y) == 1.0);
    }
}

TEST_CASE("K=2 reduction agrees with the plain binary model") {
    auto blobs = fixtures::make_blobs({Eigen::Vector2d(-2, 0), Eigen::Vector2d(2, 0)}, 60, 1.2, 19);
    Eigen::VectorXd ypm(blobs.X.rows());
    for (Eigen::Index i = 0; i < ypm.size(); ++i)
        ypm[i] = blobs.y[static_cast<std::size_t>(i)] == 0 ? -1 : 1;

    SvmHyper hyper;
    hyper.seed = 42;
    auto binary = train_svm(blobs.X, ypm, hyper);
    auto ens = train_multiclass_svm(blobs.X, blobs.y, hyper);

    std::size_t agree = 0;
    for (Eigen::Index i = 0; i < blobs.X.rows(); ++i) {
        int b = predict_svm(binary, blobs.X.row(i).transpose()).first == 1 ? 1 : 0;
        int o = predict_multiclass_svm(ens, blobs.X.row(i).transpose()).first;
        if (b == o) ++agree;
    }
    CHECK(static_cast<double>(agree) / static_cast<double>(blobs.X.rows()) >= 0.99);
}

TEST_CASE("argmax ties resolve to the lowest class id") {
    struct Constant {
        double value;
    };
    OvrEnsemble<Constant> ens;
    ens.classes = {3, 5, 9};
    ens.models = {{1.0}, {1.0}, {0.5}};
    Eigen::VectorXd x(1);
    x << 0;
    auto [label, scores] = predict_one_vs_rest(
        ens, x, [](const Constant& m, const Eigen::VectorXd&) { return m.value; });
    CHECK(label == 3);
    CHECK(scores[0] == 1.0);
    CHECK(scores[2] == 0.5);
}

TEST_CASE("classes vocabulary is ascending and deduplicated") {
    Eigen::MatrixXd X(6, 1);
    X << 0, 1, 5, 6, 10, 11;
    std::vector<int> y = {9, 9, 2, 2, 4, 4};
    auto ens = train_multiclass_adt(X, y);
    CHECK(ens.classes == std::vector<int>{2, 4, 9});
    CHECK(ens.models.size() == 3);
}
