#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "support/approx.hpp"

#include <numbers>

#include "fcp/kde.hpp"

using namespace fcp;

namespace {

// Independent naive evaluation: explicit double loop over samples and
// dimensions, plain product of univariate Gaussian kernels.
double naive_density(const Eigen::MatrixXd& samples, const Eigen::VectorXd& h,
                     const Eigen::VectorXd& x) {
    double sum = 0.0;
    for (Eigen::Index i = 0; i < samples.rows(); ++i) {
        double prod = 1.0;
        for (Eigen::Index j = 0; j < samples.cols(); ++j) {
            double z = (x[j] - samples(i, j)) / h[j];
            prod *= std::exp(-0.5 * z * z) / (h[j] * std::sqrt(2.0 * std::numbers::pi));
        }
        sum += prod;
    }
    return sum / static_cast<double>(samples.rows());
}

double ks_statistic(std::vector<double> a, std::vector<double> b) {
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    double d = 0.0;
    std::size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        if (a[i] <= b[j]) ++i;
        else ++j;
        double fa = static_cast<double>(i) / static_cast<double>(a.size());
        double fb = static_cast<double>(j) / static_cast<double>(b.size());
        d = std::max(d, std::abs(fa - fb));
    }
    return d;
}

}  // namespace

TEST_CASE("fit_kde bandwidth rules") {
    SUBCASE("single sample needs an explicit bandwidth") {
        Eigen::MatrixXd one(1, 1);
        one << 0.0;
        CHECK_THROWS_AS(fit_kde(one, BandwidthRule::Silverman), ConfigError);
        Eigen::VectorXd h(1);
        h << 1.0;
        auto m = fit_kde(one, BandwidthRule::Explicit, h);
        CHECK(m.bandwidth[0] == 1.0);
    }
    SUBCASE("Silverman matches the hand formula in 1-D") {
        Rng rng = make_rng(123);
        std::normal_distribution<double> gauss(0.0, 1.0);
        Eigen::MatrixXd samples(1000, 1);
        for (int i = 0; i < 1000; ++i) samples(i, 0) = gauss(rng);
        auto m = fit_kde(samples, BandwidthRule::Silverman);
        double mean = samples.mean();
        double var = (samples.array() - mean).square().sum() / 999.0;
        double expected = std::sqrt(var) * std::pow(4.0 / (3.0 * 1000.0), 0.2);
        CHECK(m.bandwidth[0] == Approx(expected).epsilon(1e-12));
    }
    SUBCASE("duplicated samples trigger the zero-variance floor") {
        Eigen::MatrixXd dup(5, 2);
        dup << 2, 3, 2, 3, 2, 3, 2, 3, 2, 3;
        auto m = fit_kde(dup, BandwidthRule::Silverman);
        CHECK(m.bandwidth[0] == Approx(1e-6 * 3.0));
        CHECK(m.bandwidth[1] == Approx(1e-6 * 4.0));
    }
}

TEST_CASE("density closed forms") {
    Eigen::MatrixXd s(1, 1);
    s << 0.7;
    Eigen::VectorXd h(1);
    h << 1.0;
    auto m = fit_kde(s, BandwidthRule::Explicit, h);
    Eigen::VectorXd x(1);
    x << 0.7;
    CHECK(density(m, x) == Approx(1.0 / std::sqrt(2.0 * std::numbers::pi)).epsilon(1e-12));

    Eigen::MatrixXd pm(2, 1);
    pm << -1.0, 1.0;
    auto m2 = fit_kde(pm, BandwidthRule::Explicit, h);
    Eigen::VectorXd zero(1);
    zero << 0.0;
    CHECK(density(m2, zero) ==
          Approx(std::exp(-0.5) / std::sqrt(2.0 * std::numbers::pi)).epsilon(1e-12));

    Eigen::VectorXd wrong(2);
    CHECK_THROWS_AS(density(m2, wrong), ShapeError);
}

TEST_CASE("density matches the naive double-loop oracle in 8-D") {
    Rng rng = make_rng(9);
    std::normal_distribution<double> gauss(0.0, 2.0);
    Eigen::MatrixXd samples(50, 8);
    for (Eigen::Index i = 0; i < samples.size(); ++i) samples(i) = gauss(rng);
    auto m = fit_kde(samples, BandwidthRule::Silverman);
    for (int q = 0; q < 10; ++q) {
        Eigen::VectorXd x(8);
        for (int j = 0; j < 8; ++j) x[j] = gauss(rng);
        double got = density(m, x);
        double want = naive_density(samples, m.bandwidth, x);
        CHECK(std::abs(got - want) <= 1e-12 * std::abs(want));
    }
}

TEST_CASE("1-D density integrates to one") {
    Rng rng = make_rng(17);
    std::normal_distribution<double> gauss(5.0, 3.0);
    Eigen::MatrixXd samples(200, 1);
    for (int i = 0; i < 200; ++i) samples(i, 0) = gauss(rng);
    auto m = fit_kde(samples, BandwidthRule::Silverman);
    double lo = samples.minCoeff() - 10.0 * m.bandwidth[0];
    double hi = samples.maxCoeff() + 10.0 * m.bandwidth[0];
    const int steps = 20000;
    double dx = (hi - lo) / steps;
    double integral = 0.0;
    Eigen::VectorXd x(1);
    for (int i = 0; i <= steps; ++i) {
        x[0] = lo + dx * i;
        double w = (i == 0 || i == steps) ? 0.5 : 1.0;
        integral += w * density(m, x);
    }
    integral *= dx;
    CHECK(integral == Approx(1.0).margin(1e-6));
}

TEST_CASE("sample_markov contracts") {
    Rng rng = make_rng(33);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::MatrixXd samples(300, 1);
    for (int i = 0; i < 300; ++i) samples(i, 0) = gauss(rng);
    auto m = fit_kde(samples, BandwidthRule::Silverman);

    SUBCASE("proposal_scale must be positive") {
        ChainConfig cfg;
        cfg.proposal_scale = 0.0;
        CHECK_THROWS_AS(sample_markov(m, 1, cfg), ConfigError);
    }
    SUBCASE("same seed gives identical output") {
        ChainConfig cfg;
        cfg.seed = 4;
        cfg.burn_in = 10;
        cfg.thin = 2;
        auto a = sample_markov(m, 50, cfg);
        auto b = sample_markov(m, 50, cfg);
        CHECK(a == b);
    }
    SUBCASE("chain mean matches direct i.i.d. KDE sampling") {
        ChainConfig cfg;
        cfg.seed = 99;
        cfg.burn_in = 1000;
        cfg.thin = 10;
        auto chain = sample_markov(m, 5000, cfg);
        auto direct = sample_direct(m, 5000, 1234);
        double chain_mean = chain.mean();
        double direct_mean = direct.mean();
        double direct_sd = std::sqrt((direct.array() - direct_mean).square().sum() / 4999.0);
        double se = direct_sd / std::sqrt(5000.0);
        // thinned chain draws are close to independent; allow a wide band
        CHECK(std::abs(chain_mean - direct_mean) < 10.0 * se);

        std::vector<double> a(chain.data(), chain.data() + chain.size());
        std::vector<double> b(direct.data(), direct.data() + direct.size());
        CHECK(ks_statistic(a, b) < 0.05);
    }
    SUBCASE("acceptance rate is sane at the default proposal scale") {
        ChainConfig cfg;
        cfg.seed = 5;
        ChainStats stats;
        sample_markov(m, 2000, cfg, &stats);
        CHECK(stats.acceptance_rate() > 0.05);
        CHECK(stats.acceptance_rate() < 0.95);
    }
}

namespace {

ClassTaxonomy table_v_taxonomy() {
    ClassTaxonomy tax;
    tax.classes = {{1, "Call drop", 2},      {2, "Call setup", 2}, {3, "No Roaming", 2},
                   {4, "Weak Signal", 1},    {5, "No registration", 3},
                   {6, "No outgoing", 3},    {7, "Data not working", 1}};
    tax.features = kde_feature_names();
    tax.priors.assign(7, 1.0 / 7.0);
    return tax;
}

std::vector<KdeModel> dummy_models(int classes) {
    std::vector<KdeModel> models;
    Rng rng = make_rng(8);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int c = 0; c < classes; ++c) {
        Eigen::MatrixXd s(20, 8);
        for (Eigen::Index i = 0; i < s.size(); ++i) s(i) = 10.0 * c + gauss(rng);
        models.push_back(fit_kde(s, BandwidthRule::Silverman));
        models.back().class_label = c + 1;
    }
    return models;
}

}  // namespace

TEST_CASE("generate_labeled routing and counts") {
    auto tax = table_v_taxonomy();
    auto models = dummy_models(7);
    ChainConfig cfg;
    cfg.seed = 42;
    cfg.burn_in = 50;
    cfg.thin = 2;

    SUBCASE("one-hot prior routes everything to class 3") {
        tax.priors.assign(7, 0.0);
        tax.priors[2] = 1.0;
        auto recs = generate_labeled(tax, models, 25, cfg);
        REQUIRE(recs.size() == 25);
        for (const auto& r : recs) {
            CHECK(r.cls == 3);
            CHECK(r.severity == 2);
        }
        CHECK(tax.classes[2].name == "No Roaming");
    }
    SUBCASE("n = 0 gives an empty list") {
        CHECK(generate_labeled(tax, models, 0, cfg).empty());
    }
    SUBCASE("class counts replay the seeded multinomial draw exactly") {
        auto recs = generate_labeled(tax, models, 7000, cfg);
        // independent replay of the documented derivation
        Rng rng = make_rng(cfg.seed);
        std::discrete_distribution<int> dist(tax.priors.begin(), tax.priors.end());
        std::vector<std::size_t> expected(7, 0);
        for (int i = 0; i < 7000; ++i) expected[static_cast<std::size_t>(dist(rng))]++;
        std::vector<std::size_t> got(7, 0);
        for (const auto& r : recs) got[static_cast<std::size_t>(*r.cls - 1)]++;
        CHECK(got == expected);
    }
    SUBCASE("missing model is a config error") {
        models.pop_back();
        CHECK_THROWS_AS(generate_labeled(tax, models, 10, cfg), ConfigError);
    }
}
