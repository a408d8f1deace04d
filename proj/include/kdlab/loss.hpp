#pragma once

#include <Eigen/Dense>

#include <string>
#include <string_view>

namespace kdlab {

enum class LossTag { ce, kd_ce, mse, kd_mse, mixture };

std::string_view to_string(LossTag t);
LossTag loss_tag_from_string(std::string_view s);

/// Training objective. tau applies to the distillation kinds; alpha weights
/// kd_ce inside the mixture (1 − α)·ce + α·kd_ce.
struct LossKind {
    LossTag tag = LossTag::ce;
    double tau = 1.0;
    double alpha = 1.0;

    bool needs_teacher() const noexcept;
    bool needs_hard_targets() const noexcept;
    void validate() const;
};

/// Everything a loss can be evaluated against. Either matrix may be empty
/// when the kind does not need it.
struct LossTargets {
    Eigen::MatrixXd teacher_logits;  // n×d
    Eigen::MatrixXd hard_targets;    // n×d (one-hot, or n×1 signed ±1)
};

/// Batch-mean loss of student logits (n×d).
///
/// Single-output heads are binary: kd_mse then fits the signed soft target
/// 2·sigmoid(g/τ) − 1, and the cross-entropy kinds require d ≥ 2.
double compute_loss(const LossKind& kind, const Eigen::MatrixXd& student_logits, const LossTargets& targets);

/// ∂(batch-mean loss)/∂(student logits), n×d. The 1/n factor is included.
Eigen::MatrixXd loss_logit_gradient(const LossKind& kind, const Eigen::MatrixXd& student_logits,
                                    const LossTargets& targets);

/// The target the kd_mse loss regresses onto.
Eigen::MatrixXd kd_mse_target(const Eigen::MatrixXd& teacher_logits, double tau);

}  // namespace kdlab
