#include "kdlab/error.hpp"
#include "kdlab/loss.hpp"
#include "kdlab/model.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <cmath>

using namespace kdlab;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

namespace {

Matrix softmax_rows(const Matrix& z) {
    Matrix p(z.rows(), z.cols());
    for (Eigen::Index i = 0; i < z.rows(); ++i) {
        const Eigen::RowVectorXd e = (z.row(i).array() - z.row(i).maxCoeff()).exp();
        p.row(i) = e / e.sum();
    }
    return p;
}

Matrix random_matrix(int r, int c, std::uint64_t seed) {
    const Vector v = oracle::random_vector(r * c, seed);
    return Eigen::Map<const Matrix>(v.data(), r, c);
}

Matrix one_hot(const std::vector<int>& labels, int d) {
    Matrix y = Matrix::Zero(static_cast<Eigen::Index>(labels.size()), d);
    for (std::size_t i = 0; i < labels.size(); ++i) y(static_cast<Eigen::Index>(i), labels[i]) = 1.0;
    return y;
}

}  // namespace

TEST_CASE("loss tags parse") {
    for (LossTag t : {LossTag::ce, LossTag::kd_ce, LossTag::mse, LossTag::kd_mse, LossTag::mixture})
        CHECK(loss_tag_from_string(to_string(t)) == t);
    CHECK_THROWS_AS(loss_tag_from_string("hinge"), InvalidSpec);
    CHECK_THROWS_AS(LossKind({LossTag::kd_ce, 0.0, 1.0}).validate(), InvalidSpec);
    CHECK_THROWS_AS(LossKind({LossTag::mixture, 1.0, 1.5}).validate(), InvalidSpec);
}

TEST_CASE("compute_loss examples") {
    const Matrix zeros = Matrix::Zero(1, 2);
    LossTargets t;
    t.teacher_logits = zeros;
    CHECK(compute_loss({LossTag::kd_ce, 1.0}, zeros, t) == doctest::Approx(std::log(2.0)).epsilon(1e-15));

    const Matrix g = random_matrix(5, 3, 1);
    const Matrix f = random_matrix(5, 3, 2);
    LossTargets tg;
    tg.teacher_logits = g;
    // kd_mse is zero when the student outputs σ(g/τ).
    const double tau = 3.0;
    CHECK(compute_loss({LossTag::kd_mse, tau}, kd_mse_target(g, tau), tg) == doctest::Approx(0.0).scale(1.0));
    CHECK(kd_mse_target(g, tau).row(0).sum() == doctest::Approx(1.0));

    // kd_ce at τ = 1 equals plain CE of student softmax against teacher softmax.
    LossTargets soft;
    soft.hard_targets = softmax_rows(g);
    CHECK(compute_loss({LossTag::kd_ce, 1.0}, f, tg) ==
          doctest::Approx(compute_loss({LossTag::ce}, f, soft)).epsilon(1e-12));

    LossTargets both;
    both.teacher_logits = g;
    both.hard_targets = one_hot({0, 2, 1, 1, 0}, 3);
    CHECK(compute_loss({LossTag::mixture, 2.0, 0.0}, f, both) ==
          doctest::Approx(compute_loss({LossTag::ce}, f, both)).epsilon(1e-12));
    CHECK(compute_loss({LossTag::mixture, 2.0, 1.0}, f, both) ==
          doctest::Approx(compute_loss({LossTag::kd_ce, 2.0}, f, both)).epsilon(1e-12));

    CHECK_THROWS_AS(compute_loss({LossTag::kd_ce, 1.0}, f, LossTargets{}), MissingTargets);
    CHECK_THROWS_AS(compute_loss({LossTag::mse}, f, LossTargets{}), MissingTargets);
    LossTargets teacher_only;
    teacher_only.teacher_logits = g;
    CHECK_THROWS_AS(compute_loss({LossTag::mixture, 1.0, 0.5}, f, teacher_only), MissingTargets);
}

TEST_CASE("kd_ce is bounded below by the scaled teacher entropy") {
    const Matrix g = random_matrix(4, 3, 8);
    LossTargets t;
    t.teacher_logits = g;
    for (double tau : {0.5, 1.0, 4.0}) {
        const Matrix p = softmax_rows(g / tau);
        double entropy = 0.0;
        for (Eigen::Index i = 0; i < p.rows(); ++i)
            for (Eigen::Index y = 0; y < p.cols(); ++y) entropy -= p(i, y) * std::log(p(i, y));
        entropy /= static_cast<double>(p.rows());
        CHECK(compute_loss({LossTag::kd_ce, tau}, g, t) == doctest::Approx(tau * tau * entropy).epsilon(1e-12));
        CHECK(compute_loss({LossTag::kd_ce, tau}, random_matrix(4, 3, 9), t) >= tau * tau * entropy);
    }
}

TEST_CASE("single-output heads use signed targets") {
    Matrix g(3, 1);
    g << 2.0, -1.0, 0.0;
    const Matrix target = kd_mse_target(g, 2.0);
    CHECK(target(0, 0) == doctest::Approx(std::tanh(0.5)));
    CHECK(target(2, 0) == 0.0);
    LossTargets t;
    t.teacher_logits = g;
    CHECK_THROWS_AS(compute_loss({LossTag::kd_ce, 1.0}, g, t), DimensionMismatch);
}

TEST_CASE("logit gradients match central differences for every loss") {
    const Matrix g = random_matrix(4, 3, 3);
    const Matrix f0 = random_matrix(4, 3, 4);
    LossTargets t;
    t.teacher_logits = g;
    t.hard_targets = one_hot({1, 0, 2, 2}, 3);
    const LossKind kinds[] = {{LossTag::ce}, {LossTag::kd_ce, 2.5}, {LossTag::mse}, {LossTag::kd_mse, 3.0},
                              {LossTag::mixture, 4.0, 0.3}};
    for (const LossKind& kind : kinds) {
        const Matrix analytic = loss_logit_gradient(kind, f0, t);
        const Vector flat = Eigen::Map<const Vector>(f0.data(), f0.size());
        const Vector fd = oracle::central_gradient(
            [&](const Vector& v) { return compute_loss(kind, Eigen::Map<const Matrix>(v.data(), 4, 3), t); }, flat);
        const Vector a = Eigen::Map<const Vector>(analytic.data(), analytic.size());
        for (Eigen::Index k = 0; k < fd.size(); ++k)
            CHECK(a(k) == doctest::Approx(fd(k)).epsilon(1e-6).scale(1e-3));
    }
}

TEST_CASE("parameter gradients match central differences for every loss") {
    for (model::Activation act : {model::Activation::tanh, model::Activation::relu}) {
        const auto c = model::init({{3, 6, 3}, act, model::Init::he_normal, 31});
        Matrix xs = random_matrix(5, 3, 12);
        LossTargets t;
        t.teacher_logits = random_matrix(5, 3, 13);
        t.hard_targets = one_hot({0, 1, 2, 0, 1}, 3);
        // Keep the finite-difference stencil away from ReLU kinks.
        const Matrix w1 = Eigen::Map<const Eigen::Matrix<double, 6, 3, Eigen::RowMajor>>(c.params.data());
        const Vector b1 = c.params.segment(18, 6);
        const Matrix pre = (xs * w1.transpose()).rowwise() + b1.transpose();
        REQUIRE(pre.cwiseAbs().minCoeff() > 1e-3);
        const LossKind kinds[] = {{LossTag::ce}, {LossTag::kd_ce, 2.0}, {LossTag::mse}, {LossTag::kd_mse, 2.0},
                                  {LossTag::mixture, 2.0, 0.5}};
        for (const LossKind& kind : kinds) {
            const Vector grad = model::loss_grad(c, xs, kind, t);
            const Vector fd = oracle::central_gradient(
                [&](const Vector& p) {
                    model::Checkpoint q = c;
                    q.params = p;
                    return compute_loss(kind, model::forward_batch(q, xs), t);
                },
                c.params);
            for (Eigen::Index k = 0; k < fd.size(); ++k)
                CHECK(grad(k) == doctest::Approx(fd(k)).epsilon(1e-6).scale(1e-3));
            const auto lg = model::loss_and_grad(c, xs, kind, t);
            CHECK((lg.grad - grad).cwiseAbs().maxCoeff() == 0.0);
            CHECK(lg.loss == compute_loss(kind, model::forward_batch(c, xs), t));
        }
    }
}
