#pragma once

#include "kdlab/linalg.hpp"
#include "kdlab/ntk.hpp"

namespace kdlab::kernel {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using linalg::SymMatrix;

/// Regularized least squares in an RKHS:
///   (1/n)·Σᵢ ‖f(Xᵢ) − Yᵢ‖² + (λ/2)·‖f‖²_H
/// with n the number of examples (kernel order / output_dim).
struct KernelRidgeConfig {
    double lambda = 1e-8;
    int output_dim = 1;
};

struct KernelSolution {
    Vector alpha;
    double rkhs_norm_sq = 0.0;    // αᵀKα
    Vector train_predictions;     // offset + Kα
    Vector offset;                // empty unless solved in residual form
    double lambda = 0.0;
    double jitter_used = 0.0;
};

/// λ = 1e-8·trace(K)/order, small enough to interpolate yet unit-free.
double default_lambda(const SymMatrix& k);

/// Objective value of the coefficient vector alpha under cfg.
double ridge_objective(const SymMatrix& k, const Vector& alpha, const Vector& targets, const KernelRidgeConfig& cfg);

/// Unique minimizer over f = Σ αᵢ k(xᵢ, ·). Stationarity gives
/// (K + (nλ/2)·I)·α = Y.
KernelSolution ridge_solve(const SymMatrix& k, const Vector& targets, const KernelRidgeConfig& cfg);
KernelSolution ridge_solve(const ntk::NtkMatrix& k, const Vector& targets, double lambda);

/// Residual form: fits targets − offset and predicts offset + h(x).
KernelSolution ridge_solve_residual(const SymMatrix& k, const Vector& targets, const Vector& offset,
                                    const KernelRidgeConfig& cfg);

/// offset + K_cross·α, where K_cross is (new points)×(train points) in the
/// shared i·d + y indexing. An empty offset means zero.
Vector evaluate(const KernelSolution& sol, const Matrix& k_cross, const Vector& offset = Vector());

/// Largest jitter tried before a kernel is declared singular.
double default_max_jitter(const SymMatrix& k);

/// YᵀK⁻¹Y, or +infinity when K cannot be factored within max_jitter.
double supervision_complexity(const SymMatrix& k, const Vector& targets);
double supervision_complexity(const SymMatrix& k, const Vector& targets, double max_jitter);

struct ComplexityReport {
    double raw = 0.0;            // YᵀK⁻¹Y
    double residual_raw = 0.0;   // (Y − f₀)ᵀK⁻¹(Y − f₀)
    double adjusted = 0.0;       // (1/m)·√(residual_raw · trace K)
    double adjusted_star = 0.0;  // (1/m)·√(raw · trace K)
    double normalized = 0.0;     // adjusted / normalizer
    double normalizer = 0.0;     // √m·‖Y − f₀‖₂
    double trace_k = 0.0;
    double jitter_used = 0.0;
    int m = 0;
};

/// Complexity metrics of targets against kernel k over m evaluation
/// examples, with f₀ the current predictions. One factorization serves every
/// field.
ComplexityReport adjusted_complexity(const SymMatrix& k, const Vector& targets, const Vector& initial_predictions,
                                     int m);

}  // namespace kdlab::kernel
