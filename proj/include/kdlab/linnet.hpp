#pragma once

#include "kdlab/model.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

namespace kdlab::linnet {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// First-order Taylor model around an anchor: f(x) = f_anchor(x) + J_anchor(x)·delta.
struct LinearizedModel {
    model::Checkpoint anchor;
    model::ParamVector delta;

    Vector predict(const Vector& x) const;
    Matrix predict_batch(const Matrix& xs) const;  // n×d
};

LinearizedModel linearize(const model::Checkpoint& c);

/// Function-space snapshot of a gradient-flow trajectory, flattened i·d + y.
struct FlowSnapshot {
    int step = 0;
    double time = 0.0;
    Vector train;
    Vector test;
};

struct FlowOptions {
    double eta = 1.0;
    int num_steps = 1000;
    /// Euler step; ≤ 0 selects 1/(2·η·λ_max) with λ_max estimated by 50
    /// power iterations on the per-example-normalized kernel K/n.
    double step_size = 0.0;
    /// Record a snapshot every this many steps (the last step is always kept).
    int snapshot_every = 0;
    /// Stop early once ‖f(train) − Y‖ ≤ tolerance·‖f₀(train) − Y‖. 0 disables.
    double relative_tolerance = 0.0;
};

struct FlowResult {
    std::vector<FlowSnapshot> snapshots;
    double step_size = 0.0;
    double lambda_max = 0.0;  // of K/n
    int steps_taken = 0;
};

/// Explicit Euler integration of gradient flow on the MSE loss
/// (1/2n)·Σ‖f(xᵢ) − yᵢ‖² in function space:
///   f_{k+1}(x') = f_k(x') − h·η·K(x', X)·(f_k(X) − Y)/n.
/// Throws UnstableStep unless h·η·λ_max(K/n) < 2.
FlowResult gradient_flow(const LinearizedModel& lm, const Matrix& train_x, const Matrix& train_targets,
                         const Matrix& test_x, const FlowOptions& opts);

struct FlowLimit {
    Vector train;
    Vector test;
    std::int64_t steps = 0;  // Euler steps taken, a power of two
    int doublings = 0;
    double relative_residual = 0.0;  // ‖f(train) − Y‖ / ‖f₀(train) − Y‖
    double step_size = 0.0;
    double lambda_max = 0.0;
};

/// The Euler iterate of gradient_flow after 2^k steps, evaluated by repeated
/// squaring of the one-step affine map. k grows until the relative train
/// residual is at most opts.relative_tolerance (1e-12 when unset) or k
/// reaches max_doublings. opts.num_steps is ignored.
FlowLimit gradient_flow_limit(const LinearizedModel& lm, const Matrix& train_x, const Matrix& train_targets,
                              const Matrix& test_x, const FlowOptions& opts, int max_doublings = 62);

/// The same dynamics run on delta directly (full-batch gradient descent on
/// the linearized model). Returns the final delta.
model::ParamVector parameter_space_flow(const LinearizedModel& lm, const Matrix& train_x,
                                        const Matrix& train_targets, double eta, double step_size, int num_steps);

struct EquivalenceReport {
    double max_train_gap = 0.0;
    double max_test_gap = 0.0;
    std::int64_t flow_steps = 0;
    double flow_relative_residual = 0.0;
    double lambda = 0.0;
};

/// Compares the gradient-flow limit (gradient_flow_limit) with the residual-form
/// ridge solution (targets y − f_anchor, offset f_anchor) on train and test
/// points. lambda_small ≤ 0 selects λ with nλ/2 = 1e-6·λ_min(K), so the
/// ridge solution stays within a relative 1e-6 of interpolation.
EquivalenceReport equivalence_check(const LinearizedModel& lm, const Matrix& train_x, const Matrix& train_targets,
                                    const Matrix& test_x, double lambda_small, const FlowOptions& opts);

}  // namespace kdlab::linnet
