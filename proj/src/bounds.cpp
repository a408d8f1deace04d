#include "kdlab/bounds.hpp"

#include "kdlab/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace kdlab::bounds {

void MarginParams::validate() const {
    if (!(gamma > 0.0)) throw InvalidSpec("margin gamma must be > 0");
    if (!(delta > 0.0 && delta < 1.0)) throw InvalidSpec("confidence delta must lie in (0, 1)");
}

double margin_loss(double alpha, double gamma) {
    if (!(gamma > 0.0)) throw InvalidSpec("margin_loss: gamma must be > 0");
    if (alpha <= 0.0) return 1.0;
    if (alpha <= gamma) return 1.0 - alpha / gamma;
    return 0.0;
}

double prediction_margin(const Vector& logits, int label) {
    if (logits.size() < 2) throw DimensionMismatch("prediction_margin needs at least two logits");
    if (label < 0 || label >= logits.size())
        throw InvalidLabel("label " + std::to_string(label) + " outside [0, " + std::to_string(logits.size()) + ")");
    double best_other = -std::numeric_limits<double>::infinity();
    for (Eigen::Index y = 0; y < logits.size(); ++y)
        if (y != label) best_other = std::max(best_other, logits(y));
    return logits(label) - best_other;
}

namespace {

void check_common(double complexity, double trace_k, double kappa, int n, const MarginParams& params) {
    params.validate();
    if (n < 1) throw InvalidSpec("bound: n must be >= 1");
    if (!(kappa > 0.0)) throw InvalidSpec("bound: kappa must be > 0");
    if (!(trace_k >= 0.0)) throw InvalidSpec("bound: trace must be >= 0");
    if (!(complexity >= 0.0)) throw InvalidSpec("bound: complexity must be >= 0");
}

// ⌈ratio⌉ clamped to ≥ 1, plus 3√(ln(2M₀/δ)/(2n)).
void fill_confidence(BoundReport& r, double ratio, int n, double delta) {
    const double m0 = std::ceil(ratio);
    r.m0_clamped = !(ratio >= 1.0);
    r.m0 = r.m0_clamped ? 1 : static_cast<long long>(m0);
    r.confidence_term = 3.0 * std::sqrt(std::log(2.0 * static_cast<double>(r.m0) / delta) / (2.0 * n));
}

}  // namespace

BoundReport binary_bound(const Vector& predictions, const Vector& targets, double complexity, double trace_k,
                         double kappa, int n, const MarginParams& params) {
    check_common(complexity, trace_k, kappa, n, params);
    detail::require_dims(predictions.size() == n && targets.size() == n,
                         "binary_bound: predictions and targets must have n entries");
    BoundReport r;
    r.kappa = kappa;
    r.gamma = params.gamma;

    double margin_sum = 0.0;
    for (int i = 0; i < n; ++i) {
        const double sign = targets(i) > 0.0 ? 1.0 : (targets(i) < 0.0 ? -1.0 : 0.0);
        margin_sum += margin_loss(sign * predictions(i), params.gamma);
    }
    r.empirical_margin_term = margin_sum / n;
    r.complexity_term = (2.0 * std::sqrt(complexity) + 2.0) * std::sqrt(trace_k) / (params.gamma * n);
    fill_confidence(r, params.gamma * std::sqrt(static_cast<double>(n)) / (2.0 * std::sqrt(kappa)), n, params.delta);
    r.total = r.empirical_margin_term + r.complexity_term + r.confidence_term;
    return r;
}

BoundReport multiclass_bound(const Vector& margins, double complexity, double trace_k, double kappa, int n, int d,
                             const MarginParams& params) {
    check_common(complexity, trace_k, kappa, n, params);
    if (d < 2) throw InvalidSpec("multiclass_bound: d must be >= 2");
    detail::require_dims(margins.size() == n, "multiclass_bound: margins must have n entries");
    BoundReport r;
    r.kappa = kappa;
    r.gamma = params.gamma;

    int below = 0;
    for (int i = 0; i < n; ++i)
        if (margins(i) <= params.gamma) ++below;
    r.empirical_margin_term = static_cast<double>(below) / n;
    r.complexity_term = 4.0 * d * (complexity + 1.0) * std::sqrt(trace_k) / (params.gamma * n);
    fill_confidence(r, params.gamma * std::sqrt(static_cast<double>(n)) / (4.0 * d * std::sqrt(kappa)), n,
                    params.delta);
    r.total = r.empirical_margin_term + r.complexity_term + r.confidence_term;
    return r;
}

BoundReport distillation_bound(double teacher_risk_estimate, const Vector& student_predictions,
                               const Vector& soft_teacher_targets, double complexity_of_teacher_targets,
                               double trace_k, double kappa, int n, const MarginParams& params) {
    if (!(teacher_risk_estimate >= 0.0 && teacher_risk_estimate <= 1.0))
        throw InvalidSpec("distillation_bound: teacher risk must lie in [0, 1]");
    BoundReport r = binary_bound(student_predictions, soft_teacher_targets, complexity_of_teacher_targets, trace_k,
                                 kappa, n, params);
    r.teacher_risk_term = teacher_risk_estimate;
    r.total = teacher_risk_estimate + r.empirical_margin_term + r.complexity_term + r.confidence_term;
    return r;
}

double estimate_kappa(const model::Checkpoint& c, const Eigen::MatrixXd& xs) {
    if (xs.rows() < 1) throw InvalidSpec("estimate_kappa: empty sample");
    double kappa = 0.0;
    for (Eigen::Index i = 0; i < xs.rows(); ++i) {
        const Eigen::MatrixXd jac = model::jacobian(c, xs.row(i).transpose());
        for (Eigen::Index y = 0; y < jac.rows(); ++y) kappa = std::max(kappa, jac.row(y).dot(jac.row(y)));
    }
    return kappa;
}

}  // namespace kdlab::bounds
