#pragma once

#include "kdlab/linalg.hpp"
#include "kdlab/model.hpp"

#include <cstdint>
#include <functional>

namespace kdlab::ntk {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Dense empirical NTK over a batch. Row/column index is i·d + y
/// (example-major, output-minor); block (i, j) is J(xᵢ)·J(xⱼ)ᵀ.
struct NtkMatrix {
    linalg::SymMatrix base;
    int batch_size = 0;
    int output_dim = 0;
    std::int64_t source_step = 0;
};

struct NtkSimEstimate {
    double mean = 0.0;
    double std_error = 0.0;
    int num_probes = 0;
    std::uint64_t probe_seed = 0;
};

/// Largest batch order for which a dense kernel is assembled.
inline constexpr Eigen::Index kMaxDenseOrder = 4096;

/// J(x)·J(x')ᵀ, a d×d block.
Matrix pair_kernel(const model::Checkpoint& c, const Vector& x, const Vector& x_prime);

/// Kernel over the rows of xs. Each upper-triangle entry is an independent
/// dot product, so the result does not depend on the worker count.
NtkMatrix batch_kernel(const model::Checkpoint& c, const Matrix& xs);

/// Rectangular cross kernel K(a, b) of order (|a|·d)×(|b|·d), same indexing.
Matrix cross_kernel(const model::Checkpoint& c, const Matrix& a, const Matrix& b);

/// batch_kernel(c, xs)·v without forming the matrix: one vector-Jacobian
/// product accumulated over the batch, then one Jacobian-vector product per
/// example.
Vector kernel_vec_product(const model::Checkpoint& c, const Matrix& xs, const Vector& v);

/// A kernel seen only through its action on vectors.
using KernelOperator = std::function<Vector(const Vector&)>;

KernelOperator matrix_free_operator(const model::Checkpoint& c, const Matrix& xs);

/// Monte-Carlo estimate of E_v[⟨K_f v, K_g v⟩ / (‖K_f v‖‖K_g v‖)] over
/// standard Gaussian probes. A probe whose image has norm < 1e-12 under
/// either kernel is redrawn; DegenerateKernel is thrown once the redraws
/// exceed num_probes (more than half of all draws degenerate).
NtkSimEstimate ntk_similarity(const KernelOperator& student, const KernelOperator& teacher, Eigen::Index dim,
                              int num_probes, std::uint64_t probe_seed);

NtkSimEstimate ntk_similarity(const model::Checkpoint& student, const model::Checkpoint& teacher, const Matrix& xs,
                              int num_probes, std::uint64_t probe_seed);

double ntk_condition_number(const model::Checkpoint& c, const Matrix& xs);

}  // namespace kdlab::ntk
