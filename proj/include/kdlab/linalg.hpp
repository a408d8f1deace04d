#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>

namespace kdlab::linalg {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Dense symmetric matrix. The input is symmetrized as (A + Aᵀ)/2 on
/// construction, so entry (i, j) and (j, i) are bitwise equal.
class SymMatrix {
public:
    explicit SymMatrix(const Matrix& m);

    static SymMatrix identity(Eigen::Index order);
    static SymMatrix diagonal(const Vector& diag);

    Eigen::Index order() const noexcept { return m_.rows(); }
    double operator()(Eigen::Index i, Eigen::Index j) const { return m_(i, j); }
    const Matrix& matrix() const noexcept { return m_; }

    /// Matrix-vector product.
    Vector apply(const Vector& v) const;

private:
    Matrix m_;
};

/// Cholesky factor of source + jitter_used·I.
struct PsdFactorization {
    SymMatrix source;
    Matrix factor;  // lower triangular
    double jitter_used = 0.0;

    Eigen::Index order() const noexcept { return source.order(); }
};

/// Factors m, retrying with jitter 1e-12, 1e-11, ... up to max_jitter when the
/// plain factorization fails. Throws NotPositiveDefinite when exhausted.
PsdFactorization factor_psd(const SymMatrix& m, double max_jitter);

/// Solves (source + jitter·I) x = rhs.
Vector solve_psd(const PsdFactorization& f, const Vector& rhs);

double trace(const SymMatrix& m);

/// Ascending eigenvalues of a symmetric matrix.
Vector eigenvalues(const SymMatrix& m);

/// λ_max / λ_min; +infinity once λ_min ≤ 1e-14·λ_max.
double condition_number(const SymMatrix& m);

/// Largest eigenvalue of a PSD operator given only its action, by power
/// iteration from a seeded Gaussian start vector.
double power_iteration_max_eigenvalue(const std::function<Vector(const Vector&)>& apply, Eigen::Index dim,
                                      int iterations, std::uint64_t seed);

}  // namespace kdlab::linalg
