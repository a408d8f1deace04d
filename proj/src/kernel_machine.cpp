#include "kdlab/kernel_machine.hpp"

#include "kdlab/error.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace kdlab::kernel {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

int example_count(const SymMatrix& k, int output_dim) {
    if (output_dim < 1 || k.order() % output_dim != 0)
        throw DimensionMismatch("kernel order " + std::to_string(k.order()) + " is not a multiple of output_dim " +
                                std::to_string(output_dim));
    return static_cast<int>(k.order() / output_dim);
}

}  // namespace

double default_lambda(const SymMatrix& k) { return 1e-8 * linalg::trace(k) / static_cast<double>(k.order()); }

double default_max_jitter(const SymMatrix& k) {
    return 1e-6 * std::max(linalg::trace(k) / static_cast<double>(k.order()), 1e-12);
}

double ridge_objective(const SymMatrix& k, const Vector& alpha, const Vector& targets, const KernelRidgeConfig& cfg) {
    detail::require_dims(alpha.size() == k.order() && targets.size() == k.order(),
                         "ridge_objective: vector lengths must match kernel order");
    const double n = example_count(k, cfg.output_dim);
    const Vector ka = k.apply(alpha);
    return (ka - targets).squaredNorm() / n + 0.5 * cfg.lambda * alpha.dot(ka);
}

KernelSolution ridge_solve(const SymMatrix& k, const Vector& targets, const KernelRidgeConfig& cfg) {
    detail::require_dims(targets.size() == k.order(), "ridge_solve: targets length " +
                                                          std::to_string(targets.size()) +
                                                          " does not match kernel order " +
                                                          std::to_string(k.order()));
    if (!(cfg.lambda > 0.0)) throw InvalidSpec("ridge_solve: lambda must be > 0");
    const double n = example_count(k, cfg.output_dim);
    const double shift = 0.5 * n * cfg.lambda;

    Matrix shifted = k.matrix();
    shifted.diagonal().array() += shift;
    const auto f = linalg::factor_psd(SymMatrix(shifted), default_max_jitter(k));

    KernelSolution sol;
    sol.alpha = linalg::solve_psd(f, targets);
    sol.train_predictions = k.apply(sol.alpha);
    sol.rkhs_norm_sq = sol.alpha.dot(sol.train_predictions);
    sol.lambda = cfg.lambda;
    sol.jitter_used = f.jitter_used;
    return sol;
}

KernelSolution ridge_solve(const ntk::NtkMatrix& k, const Vector& targets, double lambda) {
    return ridge_solve(k.base, targets, KernelRidgeConfig{lambda, k.output_dim});
}

KernelSolution ridge_solve_residual(const SymMatrix& k, const Vector& targets, const Vector& offset,
                                    const KernelRidgeConfig& cfg) {
    detail::require_dims(offset.size() == targets.size(), "ridge_solve_residual: offset length mismatch");
    KernelSolution sol = ridge_solve(k, targets - offset, cfg);
    sol.offset = offset;
    sol.train_predictions = offset + sol.train_predictions;
    return sol;
}

Vector evaluate(const KernelSolution& sol, const Matrix& k_cross, const Vector& offset) {
    detail::require_dims(k_cross.cols() == sol.alpha.size(), "evaluate: cross kernel has " +
                                                                 std::to_string(k_cross.cols()) +
                                                                 " columns, expected " +
                                                                 std::to_string(sol.alpha.size()));
    Vector out = k_cross * sol.alpha;
    if (offset.size() == 0) return out;
    detail::require_dims(offset.size() == out.size(), "evaluate: offset length mismatch");
    return offset + out;
}

double supervision_complexity(const SymMatrix& k, const Vector& targets, double max_jitter) {
    detail::require_dims(targets.size() == k.order(), "supervision_complexity: targets length mismatch");
    try {
        const auto f = linalg::factor_psd(k, max_jitter);
        return targets.dot(linalg::solve_psd(f, targets));
    } catch (const NotPositiveDefinite&) {
        return kInf;
    }
}

double supervision_complexity(const SymMatrix& k, const Vector& targets) {
    return supervision_complexity(k, targets, default_max_jitter(k));
}

ComplexityReport adjusted_complexity(const SymMatrix& k, const Vector& targets, const Vector& initial_predictions,
                                     int m) {
    detail::require_dims(targets.size() == k.order() && initial_predictions.size() == k.order(),
                         "adjusted_complexity: vector lengths must match kernel order");
    if (m < 1) throw InvalidSpec("adjusted_complexity: m must be >= 1");

    ComplexityReport r;
    r.m = m;
    r.trace_k = linalg::trace(k);
    const Vector residual = targets - initial_predictions;
    r.normalizer = std::sqrt(static_cast<double>(m)) * residual.norm();

    try {
        const auto f = linalg::factor_psd(k, default_max_jitter(k));
        r.jitter_used = f.jitter_used;
        r.raw = targets.dot(linalg::solve_psd(f, targets));
        r.residual_raw = residual.dot(linalg::solve_psd(f, residual));
    } catch (const NotPositiveDefinite&) {
        r.raw = kInf;
        r.residual_raw = residual.squaredNorm() == 0.0 ? 0.0 : kInf;
        r.jitter_used = kInf;
    }
    const double inv_m = 1.0 / static_cast<double>(m);
    r.adjusted = inv_m * std::sqrt(std::max(r.residual_raw, 0.0) * r.trace_k);
    r.adjusted_star = inv_m * std::sqrt(std::max(r.raw, 0.0) * r.trace_k);
    r.normalized = r.normalizer > 0.0 ? r.adjusted / r.normalizer : 0.0;
    return r;
}

}  // namespace kdlab::kernel
