#pragma once

#include "kdlab/model.hpp"

#include <Eigen/Dense>

#include <optional>

namespace kdlab::bounds {

using Vector = Eigen::VectorXd;

struct MarginParams {
    double gamma = 1.0;
    double delta = 0.05;

    void validate() const;
};

/// Terms of a margin-based generalization bound. total is the sum of the
/// present terms.
struct BoundReport {
    double empirical_margin_term = 0.0;
    double complexity_term = 0.0;
    double confidence_term = 0.0;
    std::optional<double> teacher_risk_term;
    double total = 0.0;
    double kappa = 0.0;
    double gamma = 0.0;
    long long m0 = 1;
    /// The ceiling defining M₀ fell below 1 and was clamped; the union grid
    /// is empty there and the bound is vacuous.
    bool m0_clamped = false;
};

/// Ramp loss: 1 for α ≤ 0, 1 − α/γ on (0, γ], 0 above γ.
double margin_loss(double alpha, double gamma);

/// f(x)_y − max_{y'≠y} f(x)_{y'}.
double prediction_margin(const Vector& logits, int label);

/// Binary kernel-classifier bound:
///   (1/n)Σ φ_γ(sign(Yᵢ)·f(Xᵢ)) + (2√(YᵀK⁻¹Y) + 2)·√trace(K)/(γn)
///   + 3√(ln(2M₀/δ)/(2n)),  M₀ = ⌈γ√n/(2√κ)⌉.
BoundReport binary_bound(const Vector& predictions, const Vector& targets, double complexity, double trace_k,
                         double kappa, int n, const MarginParams& params);

/// Multiclass analogue over prediction margins ρᵢ:
///   (1/n)Σ 1{ρᵢ ≤ γ} + 4d(YᵀK⁻¹Y + 1)·√trace(K)/(γn) + 3√(ln(2M₀/δ)/(2n)),
///   M₀ = ⌈γ√n/(4d√κ)⌉.
BoundReport multiclass_bound(const Vector& margins, double complexity, double trace_k, double kappa, int n, int d,
                             const MarginParams& params);

/// Student risk bound under distillation: the teacher's held-out risk plus the
/// binary bound with the soft teacher predictions as targets.
BoundReport distillation_bound(double teacher_risk_estimate, const Vector& student_predictions,
                               const Vector& soft_teacher_targets, double complexity_of_teacher_targets,
                               double trace_k, double kappa, int n, const MarginParams& params);

/// Sample maximum of the NTK diagonal k(x, x)_{y,y} over the rows of xs.
/// This under-estimates the supremum over the input space.
double estimate_kappa(const model::Checkpoint& c, const Eigen::MatrixXd& xs);

}  // namespace kdlab::bounds
