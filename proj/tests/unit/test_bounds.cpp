#include "kdlab/bounds.hpp"
#include "kdlab/error.hpp"
#include "kdlab/model.hpp"

#include <doctest.h>

#include <cmath>

using namespace kdlab;
using namespace kdlab::bounds;

TEST_CASE("margin_loss") {
    CHECK(margin_loss(-1.0, 0.5) == 1.0);
    CHECK(margin_loss(0.0, 0.5) == 1.0);
    CHECK(margin_loss(0.25, 0.5) == doctest::Approx(0.5));
    CHECK(margin_loss(0.5, 0.5) == 0.0);
    CHECK(margin_loss(3.0, 0.5) == 0.0);
    CHECK_THROWS_AS(margin_loss(1.0, 0.0), InvalidSpec);
}

TEST_CASE("prediction_margin") {
    Vector logits(3);
    logits << 2.0, 5.0, 1.0;
    CHECK(prediction_margin(logits, 1) == 3.0);
    CHECK(prediction_margin(logits, 0) == -3.0);
    CHECK_THROWS_AS(prediction_margin(logits, 3), InvalidLabel);
    CHECK_THROWS_AS(prediction_margin(Vector::Ones(1), 0), DimensionMismatch);
}

TEST_CASE("binary_bound example") {
    const int n = 100;
    Vector targets(n), preds(n);
    for (int i = 0; i < n; ++i) {
        targets(i) = i % 2 == 0 ? 1.0 : -1.0;
        preds(i) = 2.0 * targets(i);
    }
    const auto r = binary_bound(preds, targets, 10.0, 100.0, 4.0, n, MarginParams{1.0, 0.05});
    CHECK(r.empirical_margin_term == 0.0);
    CHECK(r.complexity_term == doctest::Approx((2.0 * std::sqrt(10.0) + 2.0) / 100.0 * 10.0).epsilon(1e-14));
    CHECK(r.complexity_term == doctest::Approx(0.8325).epsilon(1e-4));
    CHECK(r.m0 == 3);
    CHECK_FALSE(r.m0_clamped);
    CHECK(r.confidence_term == doctest::Approx(3.0 * std::sqrt(std::log(120.0) / 200.0)).epsilon(1e-14));
    CHECK(r.confidence_term == doctest::Approx(0.4640).epsilon(1e-3));
    CHECK(r.total == doctest::Approx(r.complexity_term + r.confidence_term));
    CHECK(r.kappa == 4.0);
    CHECK(r.gamma == 1.0);
    CHECK_FALSE(r.teacher_risk_term.has_value());

    // Half the points inside the margin at α = γ/2 contribute 0.5 each.
    for (int i = 0; i < n; i += 2) preds(i) = 0.5;
    const auto half = binary_bound(preds, targets, 10.0, 100.0, 4.0, n, MarginParams{1.0, 0.05});
    CHECK(half.empirical_margin_term == doctest::Approx(0.25));
}

TEST_CASE("multiclass_bound example") {
    const int n = 64;
    Vector margins = Vector::Constant(n, 1.0);
    margins.head(16).setConstant(0.25);
    const auto r = multiclass_bound(margins, 2.0, 64.0, 1.0, n, 4, MarginParams{0.5, 0.1});
    CHECK(r.empirical_margin_term == doctest::Approx(0.25));
    CHECK(r.complexity_term == doctest::Approx(12.0).epsilon(1e-14));
    CHECK(r.m0 == 1);
    CHECK(r.m0_clamped);
    CHECK(r.confidence_term == doctest::Approx(3.0 * std::sqrt(std::log(20.0) / 128.0)).epsilon(1e-14));
    CHECK(r.confidence_term == doctest::Approx(0.459).epsilon(1e-3));
    CHECK(r.total == doctest::Approx(0.25 + 12.0 + r.confidence_term));
    CHECK_THROWS_AS(multiclass_bound(margins, 2.0, 64.0, 1.0, n, 1, MarginParams{0.5, 0.1}), InvalidSpec);
}

TEST_CASE("distillation_bound recomposes its terms") {
    const int n = 50;
    Vector soft(n), preds(n);
    for (int i = 0; i < n; ++i) {
        soft(i) = (i % 3 == 0 ? -0.4 : 0.7);
        preds(i) = 0.9 * soft(i);
    }
    const MarginParams p{0.25, 0.05};
    const auto student = binary_bound(preds, soft, 0.3, 20.0, 2.0, n, p);
    const auto r = distillation_bound(0.08, preds, soft, 0.3, 20.0, 2.0, n, p);
    REQUIRE(r.teacher_risk_term.has_value());
    CHECK(*r.teacher_risk_term == 0.08);
    CHECK(r.empirical_margin_term == student.empirical_margin_term);
    CHECK(r.complexity_term == student.complexity_term);
    CHECK(r.confidence_term == student.confidence_term);
    CHECK(r.total == doctest::Approx(0.08 + student.total).epsilon(1e-15));
    CHECK_THROWS_AS(distillation_bound(1.5, preds, soft, 0.3, 20.0, 2.0, n, p), InvalidSpec);
}

TEST_CASE("bound parameter validation") {
    const Vector v = Vector::Ones(4);
    CHECK_THROWS_AS(binary_bound(v, v, 1.0, 1.0, 1.0, 4, MarginParams{0.0, 0.05}), InvalidSpec);
    CHECK_THROWS_AS(binary_bound(v, v, 1.0, 1.0, 1.0, 4, MarginParams{1.0, 1.0}), InvalidSpec);
    CHECK_THROWS_AS(binary_bound(v, v, 1.0, 1.0, 0.0, 4, MarginParams{1.0, 0.05}), InvalidSpec);
}

TEST_CASE("estimate_kappa of a linear layer over unit inputs") {
    auto c = model::init(model::MlpSpec{{3, 1}, model::Activation::relu, model::Init::he_normal, 4});
    Eigen::MatrixXd xs(3, 3);
    xs << 1.0, 0.0, 0.0, 0.0, 0.6, 0.8, 0.0, 0.0, 0.5;
    CHECK(estimate_kappa(c, xs) == doctest::Approx(2.0).epsilon(1e-14));
    CHECK_THROWS_AS(estimate_kappa(c, Eigen::MatrixXd(0, 3)), InvalidSpec);
}
