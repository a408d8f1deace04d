#include "kdlab/linalg.hpp"

#include "kdlab/error.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <string>

namespace kdlab::linalg {

SymMatrix::SymMatrix(const Matrix& m) {
    detail::require_dims(m.rows() == m.cols() && m.rows() >= 1, "SymMatrix requires a non-empty square matrix");
    m_ = (m + m.transpose()) * 0.5;
}

SymMatrix SymMatrix::identity(Eigen::Index order) { return SymMatrix(Matrix::Identity(order, order)); }

SymMatrix SymMatrix::diagonal(const Vector& diag) { return SymMatrix(Matrix(diag.asDiagonal())); }

Vector SymMatrix::apply(const Vector& v) const {
    detail::require_dims(v.size() == order(), "SymMatrix::apply: vector length does not match order");
    return m_ * v;
}

namespace {

bool try_cholesky(const Matrix& a, Matrix& out) {
    Eigen::LLT<Matrix> llt(a);
    if (llt.info() != Eigen::Success) return false;
    out = llt.matrixL();
    // LLT accepts tiny positive pivots that still leave a useless factor.
    return out.diagonal().allFinite() && (out.diagonal().array() > 0.0).all();
}

}  // namespace

PsdFactorization factor_psd(const SymMatrix& m, double max_jitter) {
    if (!(max_jitter >= 0.0)) throw InvalidSpec("factor_psd: max_jitter must be non-negative");
    Matrix factor;
    if (try_cholesky(m.matrix(), factor)) return PsdFactorization{m, std::move(factor), 0.0};

    const auto n = m.order();
    for (double jitter = 1e-12; jitter <= max_jitter * (1.0 + 1e-12); jitter *= 10.0) {
        Matrix shifted = m.matrix();
        shifted.diagonal().array() += jitter;
        if (try_cholesky(shifted, factor)) return PsdFactorization{m, std::move(factor), jitter};
    }
    throw NotPositiveDefinite("matrix of order " + std::to_string(n) +
                              " is not positive definite with jitter up to " + std::to_string(max_jitter));
}

Vector solve_psd(const PsdFactorization& f, const Vector& rhs) {
    detail::require_dims(rhs.size() == f.order(), "solve_psd: rhs length " + std::to_string(rhs.size()) +
                                                      " does not match order " + std::to_string(f.order()));
    Vector y = f.factor.triangularView<Eigen::Lower>().solve(rhs);
    return f.factor.transpose().triangularView<Eigen::Upper>().solve(y);
}

double trace(const SymMatrix& m) { return m.matrix().trace(); }

Vector eigenvalues(const SymMatrix& m) {
    Eigen::SelfAdjointEigenSolver<Matrix> solver(m.matrix(), Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success) throw Error("eigenvalue solver did not converge");
    return solver.eigenvalues();
}

double condition_number(const SymMatrix& m) {
    const Vector ev = eigenvalues(m);
    const double lo = ev(0);
    const double hi = ev(ev.size() - 1);
    if (hi <= 0.0 || lo <= 1e-14 * hi) return std::numeric_limits<double>::infinity();
    return hi / lo;
}

double power_iteration_max_eigenvalue(const std::function<Vector(const Vector&)>& apply, Eigen::Index dim,
                                      int iterations, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    Vector v(dim);
    for (Eigen::Index i = 0; i < dim; ++i) v(i) = normal(rng);
    v.normalize();
    double estimate = 0.0;
    for (int it = 0; it < iterations; ++it) {
        Vector w = apply(v);
        const double norm = w.norm();
        if (norm == 0.0) return 0.0;
        estimate = v.dot(w);
        v = w / norm;
    }
    // Rayleigh quotient of the final iterate.
    return std::max(estimate, v.dot(apply(v)));
}

}  // namespace kdlab::linalg
