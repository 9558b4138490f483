#include <cmath>
#include <vector>

#include "doctest.h"
#include "synthpanel/errors.hpp"
#include "synthpanel/rng.hpp"
#include "synthpanel/transform.hpp"

using namespace synthpanel;

TEST_CASE("identity leaves the series alone") {
    std::vector<double> s{1.0, -2.5, 3.0};
    CHECK(apply_transform(s, {TransformKind::identity}) == s);
}

TEST_CASE("log maps {e, e^2} to {1, 2} and inverts exp") {
    std::vector<double> s{std::exp(1.0), std::exp(2.0)};
    auto out = apply_transform(s, {TransformKind::log});
    CHECK(out[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(out[1] == doctest::Approx(2.0).epsilon(1e-12));

    std::vector<double> raw{0.3, 7.0, 123.4};
    auto logged = apply_transform(raw, {TransformKind::log});
    for (std::size_t i = 0; i < raw.size(); ++i)
        CHECK(std::exp(logged[i]) == doctest::Approx(raw[i]).epsilon(1e-12));
}

TEST_CASE("log_normalized is the natural log of the raw level") {
    // rial/USD level consistent with a 1996 log-FX value of 7.69
    std::vector<double> fx{2191.8};
    auto out = apply_transform(fx, {TransformKind::log_normalized});
    CHECK(out[0] == doctest::Approx(7.6925).epsilon(1e-4));
}

TEST_CASE("log-family transforms reject non-positive values and name the period") {
    std::vector<double> s{1.0, -3.0, 2.0};
    std::vector<int> periods{2001, 2002, 2003};
    CHECK_THROWS_WITH_AS(apply_transform(s, {TransformKind::log}, periods),
                         doctest::Contains("2002"), NonPositiveValue);
    CHECK_THROWS_AS(apply_transform(std::vector<double>{0.0}, {TransformKind::log_normalized}),
                    NonPositiveValue);
}

TEST_CASE("log offset admits non-positive inputs when configured") {
    std::vector<double> s{-0.5, 0.0, 1.0};
    TransformSpec spec{TransformKind::log, 1.0};
    auto out = apply_transform(s, spec);
    CHECK(out[0] == doctest::Approx(std::log(0.5)));
    CHECK(out[1] == doctest::Approx(0.0));
    CHECK(out[2] == doctest::Approx(std::log(2.0)));
}

TEST_CASE("transform kind string round trip") {
    for (auto k : {TransformKind::identity, TransformKind::log, TransformKind::log_normalized,
                   TransformKind::zscore}) {
        CHECK(transform_kind_from_string(to_string(k)) == k);
    }
    CHECK_THROWS_AS(transform_kind_from_string("bogus"), ConfigError);
}

TEST_CASE("zscore_columns standardizes with denominator n-1") {
    Eigen::MatrixXd m(3, 2);
    m << 1, 10, 2, 20, 3, 30;
    Eigen::MatrixXd z = zscore_columns(m);
    CHECK(z(0, 0) == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(z(1, 0) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(z(2, 0) == doctest::Approx(1.0).epsilon(1e-12));
    // idempotence
    CHECK(zscore_columns(z).isApprox(z, 1e-12));
}

TEST_CASE("zscore_columns rejects constant columns") {
    Eigen::MatrixXd m(3, 2);
    m << 1, 5, 2, 5, 3, 5;
    CHECK_THROWS_AS(zscore_columns(m), ZeroVarianceColumn);
}

TEST_CASE("first PC of two identical columns explains everything") {
    Eigen::MatrixXd m(4, 2);
    m << 1, 1, 2, 2, 4, 4, 8, 8;
    auto pc = first_principal_component(m);
    CHECK(pc.explained_variance_ratio == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(pc.loadings(0) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));
    CHECK(pc.loadings(1) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));
}

TEST_CASE("anti-correlated columns give ratio 1 with opposite-sign loadings") {
    Eigen::MatrixXd m(4, 2);
    m << 1, -1, 2, -2, 4, -4, 8, -8;
    auto pc = first_principal_component(m);
    CHECK(pc.explained_variance_ratio == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(pc.loadings(0) * pc.loadings(1) < 0.0);
    CHECK(pc.loadings.norm() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(pc.loadings.sum() >= 0.0);
}

TEST_CASE("one-factor indicators recover the factor") {
    Rng rng(17);
    const int n = 200, k = 3;
    Eigen::VectorXd factor(n);
    for (int i = 0; i < n; ++i) factor(i) = rng.normal();
    Eigen::MatrixXd m(n, k);
    double load[k] = {1.0, 0.8, 1.2};
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < k; ++j) m(i, j) = load[j] * factor(i) + 0.05 * rng.normal();

    auto pc = first_principal_component(m);
    CHECK(pc.explained_variance_ratio > 0.9);

    // correlation between scores and the factor
    Eigen::VectorXd s = pc.scores.array() - pc.scores.mean();
    Eigen::VectorXd f = factor.array() - factor.mean();
    double corr = std::abs(s.dot(f)) / (s.norm() * f.norm());
    CHECK(corr > 0.99);
}

TEST_CASE("PC scores are invariant under column reordering") {
    Rng rng(23);
    Eigen::MatrixXd m(50, 3);
    for (int i = 0; i < 50; ++i) {
        double f = rng.normal();
        for (int j = 0; j < 3; ++j) m(i, j) = (j + 1) * f + 0.1 * rng.normal();
    }
    Eigen::MatrixXd swapped = m;
    swapped.col(0).swap(swapped.col(2));
    auto a = first_principal_component(m);
    auto b = first_principal_component(swapped);
    CHECK(a.explained_variance_ratio == doctest::Approx(b.explained_variance_ratio).epsilon(1e-12));
    CHECK((a.scores - b.scores).lpNorm<Eigen::Infinity>() < 1e-9);
}

TEST_CASE("explained_variance_ratio is top eigenvalue over k") {
    Rng rng(29);
    Eigen::MatrixXd m(40, 4);
    for (int i = 0; i < 40; ++i)
        for (int j = 0; j < 4; ++j) m(i, j) = rng.normal();
    auto pc = first_principal_component(m);
    Eigen::MatrixXd z = zscore_columns(m);
    Eigen::MatrixXd corr = (z.transpose() * z) / (m.rows() - 1.0);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(corr);
    double top = es.eigenvalues().maxCoeff();
    CHECK(pc.explained_variance_ratio == doctest::Approx(top / 4.0).epsilon(1e-10));
}
