#include "kdlab/loss.hpp"

#include "kdlab/data.hpp"
#include "kdlab/error.hpp"

#include <cmath>

namespace kdlab {

std::string_view to_string(LossTag t) {
    switch (t) {
        case LossTag::ce: return "ce";
        case LossTag::kd_ce: return "kd_ce";
        case LossTag::mse: return "mse";
        case LossTag::kd_mse: return "kd_mse";
        case LossTag::mixture: return "mixture";
    }
    return "unknown";
}

LossTag loss_tag_from_string(std::string_view s) {
    if (s == "ce") return LossTag::ce;
    if (s == "kd_ce") return LossTag::kd_ce;
    if (s == "mse") return LossTag::mse;
    if (s == "kd_mse") return LossTag::kd_mse;
    if (s == "mixture") return LossTag::mixture;
    throw InvalidSpec("unknown loss '" + std::string(s) + "'");
}

bool LossKind::needs_teacher() const noexcept {
    return tag == LossTag::kd_ce || tag == LossTag::kd_mse || tag == LossTag::mixture;
}

bool LossKind::needs_hard_targets() const noexcept {
    return tag == LossTag::ce || tag == LossTag::mse || tag == LossTag::mixture;
}

void LossKind::validate() const {
    if (!(tau > 0.0)) throw InvalidSpec("loss tau must be > 0");
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw InvalidSpec("mixture alpha must lie in [0, 1]");
}

namespace {

using Matrix = Eigen::MatrixXd;
using RowVector = Eigen::RowVectorXd;

RowVector log_softmax(const RowVector& z) {
    const double m = z.maxCoeff();
    const double lse = m + std::log((z.array() - m).exp().sum());
    return z.array() - lse;
}

void check_inputs(const LossKind& kind, const Matrix& logits, const LossTargets& t) {
    kind.validate();
    if (logits.rows() < 1) throw DimensionMismatch("loss: empty batch");
    if (kind.needs_teacher()) {
        if (t.teacher_logits.size() == 0) throw MissingTargets("loss kind requires teacher logits");
        detail::require_dims(t.teacher_logits.rows() == logits.rows() && t.teacher_logits.cols() == logits.cols(),
                             "teacher logits shape does not match student logits");
    }
    if (kind.needs_hard_targets()) {
        if (t.hard_targets.size() == 0) throw MissingTargets("loss kind requires hard targets");
        detail::require_dims(t.hard_targets.rows() == logits.rows() && t.hard_targets.cols() == logits.cols(),
                             "hard targets shape does not match student logits");
    }
    const bool uses_softmax = kind.tag == LossTag::ce || kind.tag == LossTag::kd_ce || kind.tag == LossTag::mixture;
    if (uses_softmax && logits.cols() < 2)
        throw DimensionMismatch("cross-entropy losses need at least two outputs");
}

// −(1/n) Σ yᵢᵀ log softmax(fᵢ)
double ce_value(const Matrix& f, const Matrix& y) {
    double total = 0.0;
    for (Eigen::Index i = 0; i < f.rows(); ++i) total -= y.row(i).dot(log_softmax(f.row(i)));
    return total / static_cast<double>(f.rows());
}

Matrix ce_grad(const Matrix& f, const Matrix& y) {
    Matrix g(f.rows(), f.cols());
    for (Eigen::Index i = 0; i < f.rows(); ++i) {
        const RowVector p = log_softmax(f.row(i)).array().exp();
        g.row(i) = p * y.row(i).sum() - y.row(i);
    }
    return g / static_cast<double>(f.rows());
}

// −(τ²/n) Σ softmax(gᵢ/τ)ᵀ log softmax(fᵢ/τ)
double kd_ce_value(const Matrix& f, const Matrix& teacher, double tau) {
    const Matrix p = data::soft_multiclass_targets(teacher, tau).values;
    double total = 0.0;
    for (Eigen::Index i = 0; i < f.rows(); ++i) total -= p.row(i).dot(log_softmax(f.row(i) / tau));
    return tau * tau * total / static_cast<double>(f.rows());
}

Matrix kd_ce_grad(const Matrix& f, const Matrix& teacher, double tau) {
    const Matrix p = data::soft_multiclass_targets(teacher, tau).values;
    Matrix g(f.rows(), f.cols());
    for (Eigen::Index i = 0; i < f.rows(); ++i) {
        const RowVector q = log_softmax(f.row(i) / tau).array().exp();
        g.row(i) = tau * (q * p.row(i).sum() - p.row(i));
    }
    return g / static_cast<double>(f.rows());
}

}  // namespace

Matrix kd_mse_target(const Matrix& teacher_logits, double tau) {
    return data::soft_targets(teacher_logits, tau).values;
}

double compute_loss(const LossKind& kind, const Matrix& f, const LossTargets& t) {
    check_inputs(kind, f, t);
    const double n = static_cast<double>(f.rows());
    switch (kind.tag) {
        case LossTag::ce: return ce_value(f, t.hard_targets);
        case LossTag::kd_ce: return kd_ce_value(f, t.teacher_logits, kind.tau);
        case LossTag::mse: return (t.hard_targets - f).squaredNorm() / (2.0 * n);
        case LossTag::kd_mse:
            return kind.tau * (kd_mse_target(t.teacher_logits, kind.tau) - f).squaredNorm() / (2.0 * n);
        case LossTag::mixture:
            return (1.0 - kind.alpha) * ce_value(f, t.hard_targets) +
                   kind.alpha * kd_ce_value(f, t.teacher_logits, kind.tau);
    }
    throw InvalidSpec("unhandled loss kind");
}

Matrix loss_logit_gradient(const LossKind& kind, const Matrix& f, const LossTargets& t) {
    check_inputs(kind, f, t);
    const double n = static_cast<double>(f.rows());
    switch (kind.tag) {
        case LossTag::ce: return ce_grad(f, t.hard_targets);
        case LossTag::kd_ce: return kd_ce_grad(f, t.teacher_logits, kind.tau);
        case LossTag::mse: return (f - t.hard_targets) / n;
        case LossTag::kd_mse: return kind.tau * (f - kd_mse_target(t.teacher_logits, kind.tau)) / n;
        case LossTag::mixture:
            return (1.0 - kind.alpha) * ce_grad(f, t.hard_targets) +
                   kind.alpha * kd_ce_grad(f, t.teacher_logits, kind.tau);
    }
    throw InvalidSpec("unhandled loss kind");
}

}  // namespace kdlab
