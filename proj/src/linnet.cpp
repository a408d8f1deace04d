#include "kdlab/linnet.hpp"

#include "kdlab/error.hpp"
#include "kdlab/kernel_machine.hpp"
#include "kdlab/linalg.hpp"
#include "kdlab/ntk.hpp"

#include <cmath>
#include <string>

namespace kdlab::linnet {

Vector LinearizedModel::predict(const Vector& x) const {
    return model::forward(anchor, x) + model::jvp(anchor, x, delta);
}

Matrix LinearizedModel::predict_batch(const Matrix& xs) const {
    Matrix out = model::forward_batch(anchor, xs);
    for (Eigen::Index i = 0; i < xs.rows(); ++i)
        out.row(i) += model::jvp(anchor, xs.row(i).transpose(), delta).transpose();
    return out;
}

LinearizedModel linearize(const model::Checkpoint& c) {
    return LinearizedModel{c, model::ParamVector::Zero(c.spec.num_params())};
}

namespace {

Vector flatten(const Matrix& m) {
    const Matrix t = m.transpose();  // column-major storage of mᵀ is row-major of m
    return Eigen::Map<const Vector>(t.data(), t.size());
}

void check_targets(const LinearizedModel& lm, const Matrix& train_x, const Matrix& targets) {
    detail::require_dims(targets.rows() == train_x.rows() && targets.cols() == lm.anchor.spec.output_dim(),
                         "train targets must be n×d with d the model output width");
}

}  // namespace

namespace {

struct FlowSetup {
    ntk::NtkMatrix k;
    Matrix k_cross;
    double lambda_max = 0.0;
    double step_size = 0.0;
};

FlowSetup prepare_flow(const LinearizedModel& lm, const Matrix& train_x, const Matrix& train_targets,
                       const Matrix& test_x, const FlowOptions& opts) {
    check_targets(lm, train_x, train_targets);
    if (!(opts.eta > 0.0)) throw InvalidSpec("gradient_flow: eta must be > 0");
    if (opts.num_steps < 0) throw InvalidSpec("gradient_flow: num_steps must be >= 0");

    const double n = static_cast<double>(train_x.rows());
    FlowSetup s{ntk::batch_kernel(lm.anchor, train_x), Matrix(), 0.0, 0.0};
    if (test_x.rows() > 0) s.k_cross = ntk::cross_kernel(lm.anchor, test_x, train_x);
    s.lambda_max = linalg::power_iteration_max_eigenvalue(
        [&](const Vector& v) { return Vector(s.k.base.apply(v) / n); }, s.k.base.order(), 50, 0x5eedULL);
    s.step_size = opts.step_size > 0.0 ? opts.step_size : 1.0 / (2.0 * opts.eta * s.lambda_max);
    if (!(s.step_size * opts.eta * s.lambda_max < 2.0))
        throw UnstableStep("Euler step " + std::to_string(s.step_size) + " with eta " + std::to_string(opts.eta) +
                           " exceeds the stability limit 2/lambda_max = " + std::to_string(2.0 / s.lambda_max));
    return s;
}

}  // namespace

FlowResult gradient_flow(const LinearizedModel& lm, const Matrix& train_x, const Matrix& train_targets,
                         const Matrix& test_x, const FlowOptions& opts) {
    const FlowSetup setup = prepare_flow(lm, train_x, train_targets, test_x, opts);
    const bool has_test = test_x.rows() > 0;
    const double n = static_cast<double>(train_x.rows());

    FlowResult result;
    result.lambda_max = setup.lambda_max;
    result.step_size = setup.step_size;

    const Vector y = flatten(train_targets);
    Vector f_train = flatten(lm.predict_batch(train_x));
    Vector f_test = has_test ? flatten(lm.predict_batch(test_x)) : Vector();
    const double rate = result.step_size * opts.eta / n;
    const double initial_residual = (f_train - y).norm();

    auto snapshot = [&](int step) {
        result.snapshots.push_back(FlowSnapshot{step, step * result.step_size, f_train, f_test});
    };
    snapshot(0);
    int step = 0;
    while (step < opts.num_steps) {
        const Vector r = f_train - y;
        if (opts.relative_tolerance > 0.0 && r.norm() <= opts.relative_tolerance * initial_residual) break;
        f_train.noalias() -= rate * (setup.k.base.matrix() * r);
        if (has_test) f_test.noalias() -= rate * (setup.k_cross * r);
        ++step;
        if (opts.snapshot_every > 0 && step % opts.snapshot_every == 0) snapshot(step);
    }
    if (result.snapshots.back().step != step) snapshot(step);
    result.steps_taken = step;
    return result;
}

FlowLimit gradient_flow_limit(const LinearizedModel& lm, const Matrix& train_x, const Matrix& train_targets,
                              const Matrix& test_x, const FlowOptions& opts, int max_doublings) {
    if (max_doublings < 0 || max_doublings > 62) throw InvalidSpec("gradient_flow_limit: max_doublings must lie in [0, 62]");
    const FlowSetup setup = prepare_flow(lm, train_x, train_targets, test_x, opts);
    const double n = static_cast<double>(train_x.rows());
    const double rate = setup.step_size * opts.eta / n;
    const double tol = opts.relative_tolerance > 0.0 ? opts.relative_tolerance : 1e-12;

    const Vector y = flatten(train_targets);
    const Vector f_train = flatten(lm.predict_batch(train_x));
    const Vector r0 = f_train - y;
    const auto order = setup.k.base.order();

    // One Euler step maps the residual r to A·r with A = I − rate·K. After s
    // steps the residual is P·r₀ with P = Aˢ, and the accumulated residual sum
    // is S·r₀ with S = Σ_{j<s} Aʲ. Doubling: S ← S + P·S, P ← P·P.
    Matrix a = Matrix::Identity(order, order) - rate * setup.k.base.matrix();
    Matrix p = a;
    Matrix sum = Matrix::Identity(order, order);
    FlowLimit out;
    out.step_size = setup.step_size;
    out.lambda_max = setup.lambda_max;
    out.steps = 1;
    const double r0_norm = r0.norm();
    while ((p * r0).norm() > tol * r0_norm && out.doublings < max_doublings) {
        sum = (sum + p * sum).eval();
        p = (p * p).eval();
        out.steps *= 2;
        ++out.doublings;
    }
    out.train = y + p * r0;
    if (test_x.rows() > 0)
        out.test = flatten(lm.predict_batch(test_x)) - rate * (setup.k_cross * (sum * r0));
    out.relative_residual = r0_norm > 0.0 ? (p * r0).norm() / r0_norm : 0.0;
    return out;
}

model::ParamVector parameter_space_flow(const LinearizedModel& lm, const Matrix& train_x,
                                        const Matrix& train_targets, double eta, double step_size, int num_steps) {
    check_targets(lm, train_x, train_targets);
    const int d = lm.anchor.spec.output_dim();
    const double n = static_cast<double>(train_x.rows());
    Matrix g(train_x.rows() * d, lm.anchor.spec.num_params());
    for (Eigen::Index i = 0; i < train_x.rows(); ++i)
        g.middleRows(i * d, d) = model::jacobian(lm.anchor, train_x.row(i).transpose());
    const Vector f0 = flatten(model::forward_batch(lm.anchor, train_x));
    const Vector y = flatten(train_targets);

    model::ParamVector omega = lm.delta;
    for (int s = 0; s < num_steps; ++s) {
        const Vector r = f0 + g * omega - y;
        omega -= (step_size * eta / n) * (g.transpose() * r);
    }
    return omega;
}

EquivalenceReport equivalence_check(const LinearizedModel& lm, const Matrix& train_x, const Matrix& train_targets,
                                    const Matrix& test_x, double lambda_small, const FlowOptions& opts) {
    check_targets(lm, train_x, train_targets);
    const FlowLimit last = gradient_flow_limit(lm, train_x, train_targets, test_x, opts);

    const int d = lm.anchor.spec.output_dim();
    const ntk::NtkMatrix k = ntk::batch_kernel(lm.anchor, train_x);
    double lambda = lambda_small;
    if (!(lambda > 0.0)) {
        // Ridge shift nλ/2 at 1e-6 of the smallest kernel eigenvalue.
        const double eig_min = linalg::eigenvalues(k.base).minCoeff();
        const double n = static_cast<double>(train_x.rows());
        lambda = eig_min > 0.0 ? 2e-6 * eig_min / n : kernel::default_lambda(k.base);
    }
    const Vector offset_train = flatten(lm.predict_batch(train_x));
    const auto sol =
        kernel::ridge_solve_residual(k.base, flatten(train_targets), offset_train, kernel::KernelRidgeConfig{lambda, d});

    EquivalenceReport report;
    report.flow_steps = last.steps;
    report.flow_relative_residual = last.relative_residual;
    report.lambda = lambda;
    report.max_train_gap = (sol.train_predictions - last.train).cwiseAbs().maxCoeff();
    if (test_x.rows() > 0) {
        const Matrix k_cross = ntk::cross_kernel(lm.anchor, test_x, train_x);
        const Vector ridge_test = kernel::evaluate(sol, k_cross, flatten(lm.predict_batch(test_x)));
        report.max_test_gap = (ridge_test - last.test).cwiseAbs().maxCoeff();
    }
    return report;
}

}  // namespace kdlab::linnet
