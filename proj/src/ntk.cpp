#include "kdlab/ntk.hpp"

#include "kdlab/error.hpp"
#include "kdlab/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

namespace kdlab::ntk {

namespace {

void check_inputs(const model::Checkpoint& c, const Matrix& xs) {
    detail::require_dims(xs.rows() >= 1, "empty batch");
    detail::require_dims(xs.cols() == c.spec.input_dim(),
                         "input width " + std::to_string(xs.cols()) + " does not match model input " +
                             std::to_string(c.spec.input_dim()));
}

// Stacked Jacobians, row i·d + y holds ∂f_y(xᵢ)/∂θ.
Matrix stacked_jacobian(const model::Checkpoint& c, const Matrix& xs) {
    const int d = c.spec.output_dim();
    Matrix g(xs.rows() * d, c.spec.num_params());
    parallel_for(0, static_cast<std::size_t>(xs.rows()), [&](std::size_t i) {
        const auto row = static_cast<Eigen::Index>(i);
        g.middleRows(row * d, d) = model::jacobian(c, xs.row(row).transpose());
    });
    return g;
}

}  // namespace

Matrix pair_kernel(const model::Checkpoint& c, const Vector& x, const Vector& x_prime) {
    return model::jacobian(c, x) * model::jacobian(c, x_prime).transpose();
}

NtkMatrix batch_kernel(const model::Checkpoint& c, const Matrix& xs) {
    check_inputs(c, xs);
    const int d = c.spec.output_dim();
    const Eigen::Index order = xs.rows() * d;
    if (order > kMaxDenseOrder)
        throw InvalidSpec("dense NTK order " + std::to_string(order) + " exceeds " + std::to_string(kMaxDenseOrder));

    const Matrix g = stacked_jacobian(c, xs);
    Matrix k(order, order);
    parallel_for(0, static_cast<std::size_t>(order), [&](std::size_t r) {
        const auto i = static_cast<Eigen::Index>(r);
        for (Eigen::Index j = i; j < order; ++j) k(i, j) = g.row(i).dot(g.row(j));
    });
    for (Eigen::Index i = 0; i < order; ++i)
        for (Eigen::Index j = 0; j < i; ++j) k(i, j) = k(j, i);
    return NtkMatrix{linalg::SymMatrix(k), static_cast<int>(xs.rows()), d, c.step_index};
}

Matrix cross_kernel(const model::Checkpoint& c, const Matrix& a, const Matrix& b) {
    check_inputs(c, a);
    check_inputs(c, b);
    const Matrix ga = stacked_jacobian(c, a);
    const Matrix gb = stacked_jacobian(c, b);
    Matrix k(ga.rows(), gb.rows());
    parallel_for(0, static_cast<std::size_t>(ga.rows()), [&](std::size_t r) {
        const auto i = static_cast<Eigen::Index>(r);
        for (Eigen::Index j = 0; j < gb.rows(); ++j) k(i, j) = ga.row(i).dot(gb.row(j));
    });
    return k;
}

Vector kernel_vec_product(const model::Checkpoint& c, const Matrix& xs, const Vector& v) {
    check_inputs(c, xs);
    const int d = c.spec.output_dim();
    detail::require_dims(v.size() == xs.rows() * d, "kernel_vec_product: vector length " + std::to_string(v.size()) +
                                                        " does not match batch order " +
                                                        std::to_string(xs.rows() * d));
    // u = Σᵢ J(xᵢ)ᵀ vᵢ, summed in example order.
    model::ParamVector u = model::ParamVector::Zero(c.spec.num_params());
    for (Eigen::Index i = 0; i < xs.rows(); ++i) u += model::vjp(c, xs.row(i).transpose(), v.segment(i * d, d));

    Vector out(v.size());
    parallel_for(0, static_cast<std::size_t>(xs.rows()), [&](std::size_t r) {
        const auto j = static_cast<Eigen::Index>(r);
        out.segment(j * d, d) = model::jvp(c, xs.row(j).transpose(), u);
    });
    return out;
}

KernelOperator matrix_free_operator(const model::Checkpoint& c, const Matrix& xs) {
    return [c, xs](const Vector& v) { return kernel_vec_product(c, xs, v); };
}

NtkSimEstimate ntk_similarity(const KernelOperator& student, const KernelOperator& teacher, Eigen::Index dim,
                              int num_probes, std::uint64_t probe_seed) {
    if (num_probes < 2) throw InvalidSpec("ntk_similarity needs at least 2 probes");
    std::mt19937_64 rng(probe_seed);
    std::normal_distribution<double> normal;

    std::vector<double> cosines;
    cosines.reserve(static_cast<std::size_t>(num_probes));
    int degenerate = 0;
    Vector v(dim);
    while (static_cast<int>(cosines.size()) < num_probes) {
        for (Eigen::Index k = 0; k < dim; ++k) v(k) = normal(rng);
        const Vector a = student(v);
        const Vector b = teacher(v);
        const double aa = a.dot(a);
        const double bb = b.dot(b);
        if (std::sqrt(aa) < 1e-12 || std::sqrt(bb) < 1e-12) {
            ++degenerate;
            if (degenerate > num_probes)
                throw DegenerateKernel("more than half of the NTK probes had a vanishing kernel image");
            continue;
        }
        // sqrt(aa·aa) == aa exactly, so identical kernels give cosine 1.
        const double cosine = a.dot(b) / std::sqrt(aa * bb);
        cosines.push_back(std::clamp(cosine, -1.0, 1.0));
    }

    double sum = 0.0;
    for (double x : cosines) sum += x;
    const double mean = sum / num_probes;
    double ss = 0.0;
    for (double x : cosines) ss += (x - mean) * (x - mean);
    const double sample_std = std::sqrt(ss / (num_probes - 1));
    return NtkSimEstimate{mean, sample_std / std::sqrt(static_cast<double>(num_probes)), num_probes, probe_seed};
}

NtkSimEstimate ntk_similarity(const model::Checkpoint& student, const model::Checkpoint& teacher, const Matrix& xs,
                              int num_probes, std::uint64_t probe_seed) {
    detail::require_dims(student.spec.output_dim() == teacher.spec.output_dim(),
                         "student and teacher output widths differ");
    check_inputs(student, xs);
    check_inputs(teacher, xs);
    return ntk_similarity(matrix_free_operator(student, xs), matrix_free_operator(teacher, xs),
                          xs.rows() * student.spec.output_dim(), num_probes, probe_seed);
}

double ntk_condition_number(const model::Checkpoint& c, const Matrix& xs) {
    return linalg::condition_number(batch_kernel(c, xs).base);
}

}  // namespace kdlab::ntk
