#include "kdlab/error.hpp"
#include "kdlab/kernel_machine.hpp"
#include "kdlab/linnet.hpp"
#include "kdlab/ntk.hpp"
#include "kdlab/model.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace kdlab;
using namespace kdlab::linnet;

namespace {

model::Checkpoint seeded(std::vector<int> widths, std::uint64_t seed) {
    return model::init(model::MlpSpec{std::move(widths), model::Activation::tanh, model::Init::he_normal, seed});
}

Matrix random_inputs(int n, int p, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    Matrix xs(n, p);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < p; ++j) xs(i, j) = normal(rng);
    return xs;
}

Vector flatten(const Matrix& m) {
    Vector v(m.size());
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index y = 0; y < m.cols(); ++y) v(i * m.cols() + y) = m(i, y);
    return v;
}

}  // namespace

TEST_CASE("linearize reproduces the anchor") {
    const auto c = seeded({3, 8, 2}, 1);
    const auto lm = linearize(c);
    CHECK(lm.delta.size() == c.params.size());
    CHECK(lm.delta.cwiseAbs().maxCoeff() == 0.0);
    const Matrix xs = random_inputs(5, 3, 2);
    CHECK((lm.predict_batch(xs) - model::forward_batch(c, xs)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("linearized prediction moves along a Jacobian column") {
    const auto c = seeded({3, 8, 2}, 3);
    const Vector x = random_inputs(1, 3, 4).row(0).transpose();
    const Matrix jac = model::jacobian(c, x);
    for (Eigen::Index k : {0, 7, 20, 41}) {
        auto lm = linearize(c);
        const double h = 0.37;
        lm.delta(k) = h;
        const Vector change = lm.predict(x) - model::forward(c, x);
        CHECK((change - jac.col(k) * h).cwiseAbs().maxCoeff() < 1e-10);
    }
}

TEST_CASE("gradient_flow with exact targets stays put") {
    const auto lm = linearize(seeded({2, 8, 1}, 5));
    const Matrix xs = random_inputs(6, 2, 6);
    const Matrix y = lm.predict_batch(xs);
    FlowOptions opts;
    opts.num_steps = 50;
    const auto r = gradient_flow(lm, xs, y, xs, opts);
    CHECK((r.snapshots.back().train - flatten(y)).cwiseAbs().maxCoeff() == 0.0);
    CHECK(r.steps_taken == 50);
}

TEST_CASE("gradient_flow on a scalar problem follows exponential decay") {
    auto c = seeded({1, 1}, 7);
    c.params << 0.5, -0.2;
    const auto lm = linearize(c);
    Matrix x(1, 1);
    x << 1.5;
    const double k = 1.5 * 1.5 + 1.0;
    const double f0 = 0.5 * 1.5 - 0.2;
    Matrix y(1, 1);
    y << 2.0;
    FlowOptions opts;
    opts.eta = 0.8;
    opts.step_size = 1e-4;
    opts.num_steps = 10000;
    const auto r = gradient_flow(lm, x, y, x, opts);
    const double t = r.snapshots.back().time;
    CHECK(t == doctest::Approx(1.0));
    const double expected = 2.0 + (f0 - 2.0) * std::exp(-opts.eta * k * t);
    CHECK(std::abs(r.snapshots.back().train(0) - expected) < 1e-4);
    CHECK(r.lambda_max == doctest::Approx(k).epsilon(1e-9));
}

TEST_CASE("gradient_flow converges on a full-rank kernel") {
    const auto lm = linearize(seeded({2, 32, 1}, 8));
    const Matrix xs = random_inputs(8, 2, 9);
    const Matrix y = random_inputs(8, 1, 10);
    FlowOptions opts;
    opts.num_steps = 200000;
    opts.relative_tolerance = 1e-4;
    const auto r = gradient_flow(lm, xs, y, xs, opts);
    const double start = (r.snapshots.front().train - flatten(y)).norm();
    const double end = (r.snapshots.back().train - flatten(y)).norm();
    CHECK(end <= 1e-3 * start);
    CHECK(r.steps_taken < 200000);
}

TEST_CASE("function-space and parameter-space flows agree") {
    const auto lm = linearize(seeded({2, 8, 2}, 11));
    const Matrix xs = random_inputs(5, 2, 12);
    const Matrix y = random_inputs(5, 2, 13);
    FlowOptions opts;
    opts.eta = 0.5;
    opts.num_steps = 300;
    const auto r = gradient_flow(lm, xs, y, xs, opts);
    auto moved = lm;
    moved.delta = parameter_space_flow(lm, xs, y, opts.eta, r.step_size, opts.num_steps);
    CHECK((flatten(moved.predict_batch(xs)) - r.snapshots.back().train).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("gradient_flow snapshots") {
    const auto lm = linearize(seeded({2, 8, 1}, 14));
    const Matrix xs = random_inputs(4, 2, 15);
    const Matrix ts = random_inputs(3, 2, 16);
    const Matrix y = random_inputs(4, 1, 17);
    FlowOptions opts;
    opts.num_steps = 25;
    opts.snapshot_every = 10;
    const auto r = gradient_flow(lm, xs, y, ts, opts);
    REQUIRE(r.snapshots.size() == 4);
    CHECK(r.snapshots[1].step == 10);
    CHECK(r.snapshots[3].step == 25);
    CHECK(r.snapshots[0].test.size() == 3);
}

TEST_CASE("gradient_flow rejects unstable steps") {
    const auto lm = linearize(seeded({2, 8, 1}, 18));
    const Matrix xs = random_inputs(4, 2, 19);
    const Matrix y = random_inputs(4, 1, 20);
    FlowOptions opts;
    opts.step_size = 1e3;
    CHECK_THROWS_AS(gradient_flow(lm, xs, y, xs, opts), UnstableStep);
}

TEST_CASE("gradient flow matches the residual kernel solution") {
    FlowOptions opts;
    SUBCASE("scalar problem") {
        const auto lm = linearize(seeded({1, 4, 1}, 21));
        Matrix x(1, 1), y(1, 1), t(2, 1);
        x << 0.3;
        y << 1.2;
        t << -1.0, 2.0;
        const auto rep = equivalence_check(lm, x, y, t, 1e-12, opts);
        CHECK(rep.max_train_gap < 1e-6);
        CHECK(rep.max_test_gap < 1e-6);
    }
    SUBCASE("seeded tanh network") {
        const auto lm = linearize(seeded({2, 16, 1}, 22));
        const Matrix xs = random_inputs(32, 2, 23);
        const Matrix ts = random_inputs(16, 2, 24);
        Matrix y(32, 1);
        for (int i = 0; i < 32; ++i) y(i, 0) = xs(i, 0) * xs(i, 1) > 0.0 ? 1.0 : -1.0;
        const auto rep = equivalence_check(lm, xs, y, ts, 0.0, opts);
        CHECK(rep.flow_relative_residual <= 1e-12);
        CHECK(rep.max_train_gap < 1e-3);
        CHECK(rep.max_test_gap < 1e-3);
    }
    SUBCASE("regularization pulls the kernel solution away") {
        const auto lm = linearize(seeded({2, 16, 1}, 25));
        const Matrix xs = random_inputs(12, 2, 26);
        const Matrix y = random_inputs(12, 1, 27);
        double previous = -1.0;
        for (double lambda : {1e-6, 1e-4, 1e-2, 1e-1}) {
            const auto rep = equivalence_check(lm, xs, y, xs, lambda, opts);
            CHECK(rep.max_train_gap > previous);
            previous = rep.max_train_gap;
        }
    }
}

TEST_CASE("gradient_flow_limit reproduces the Euler iterates") {
    const auto lm = linearize(seeded({2, 8, 2}, 28));
    const Matrix xs = random_inputs(5, 2, 29);
    const Matrix ts = random_inputs(3, 2, 30);
    const Matrix y = random_inputs(5, 2, 31);
    FlowOptions opts;
    opts.num_steps = 1024;
    const auto flow = gradient_flow(lm, xs, y, ts, opts);
    const auto limit = gradient_flow_limit(lm, xs, y, ts, opts, 10);
    CHECK(limit.steps == 1024);
    CHECK(limit.doublings == 10);
    CHECK((limit.train - flow.snapshots.back().train).cwiseAbs().maxCoeff() < 1e-9);
    CHECK((limit.test - flow.snapshots.back().test).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("gradient flow reaches the minimum-norm interpolant") {
    const auto lm = linearize(seeded({2, 32, 1}, 32));
    const Matrix xs = random_inputs(4, 2, 33);
    const Matrix y = random_inputs(4, 1, 34);
    FlowOptions opts;
    opts.num_steps = 1;
    const auto probe = gradient_flow(lm, xs, y, Matrix(), opts);
    const model::ParamVector delta = parameter_space_flow(lm, xs, y, 1.0, probe.step_size, 200000);
    auto moved = lm;
    moved.delta = delta;
    REQUIRE((moved.predict_batch(xs) - y).cwiseAbs().maxCoeff() < 1e-9);

    const ntk::NtkMatrix k = ntk::batch_kernel(lm.anchor, xs);
    const Vector f0 = model::forward_batch(lm.anchor, xs).col(0);
    const auto sol = kernel::ridge_solve_residual(k.base, y.col(0), f0, kernel::KernelRidgeConfig{1e-14, 1});
    CHECK(delta.squaredNorm() == doctest::Approx(sol.rkhs_norm_sq).epsilon(1e-6));

    // Any other interpolating delta is longer: add a null-space direction of the Jacobian.
    Matrix g(4, lm.delta.size());
    for (int i = 0; i < 4; ++i) g.row(i) = model::jacobian(lm.anchor, xs.row(i).transpose());
    const Vector v = oracle::random_vector(static_cast<int>(lm.delta.size()), 35);
    const Vector null_dir = v - g.transpose() * (g * g.transpose()).ldlt().solve(g * v);
    CHECK((delta + null_dir).squaredNorm() > delta.squaredNorm());
}
