#pragma once
// Independent reference computations used only by tests. They avoid the
// library's decompositions and use plain loops on std::vector storage.

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <vector>

namespace oracle {

using Grid = std::vector<std::vector<double>>;

inline Grid to_grid(const Eigen::MatrixXd& m) {
    Grid g(m.rows(), std::vector<double>(m.cols()));
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) g[i][j] = m(i, j);
    return g;
}

// Gauss-Jordan elimination with partial pivoting; returns A⁻¹.
inline Grid gauss_jordan_inverse(Grid a) {
    const std::size_t n = a.size();
    Grid inv(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) inv[i][i] = 1.0;
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::fabs(a[r][col]) > std::fabs(a[pivot][col])) pivot = r;
        if (a[pivot][col] == 0.0) throw std::runtime_error("singular");
        std::swap(a[pivot], a[col]);
        std::swap(inv[pivot], inv[col]);
        const double p = a[col][col];
        for (std::size_t j = 0; j < n; ++j) {
            a[col][j] /= p;
            inv[col][j] /= p;
        }
        for (std::size_t r = 0; r < n; ++r) {
            if (r == col) continue;
            const double f = a[r][col];
            if (f == 0.0) continue;
            for (std::size_t j = 0; j < n; ++j) {
                a[r][j] -= f * a[col][j];
                inv[r][j] -= f * inv[col][j];
            }
        }
    }
    return inv;
}

inline std::vector<double> mat_vec(const Grid& a, const std::vector<double>& x) {
    std::vector<double> y(a.size(), 0.0);
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < x.size(); ++j) y[i] += a[i][j] * x[j];
    return y;
}

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

// yᵀA⁻¹y through Gauss-Jordan.
inline double quad_inverse(const Eigen::MatrixXd& a, const Eigen::VectorXd& y) {
    const Grid inv = gauss_jordan_inverse(to_grid(a));
    std::vector<double> v(y.data(), y.data() + y.size());
    return dot(v, mat_vec(inv, v));
}

// Largest eigenvalue by plain power iteration.
inline double power_max(const Grid& a, int iters = 5000) {
    std::vector<double> v(a.size(), 1.0);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] += 0.01 * static_cast<double>(i);
    double lambda = 0.0;
    for (int k = 0; k < iters; ++k) {
        std::vector<double> w = mat_vec(a, v);
        const double norm = std::sqrt(dot(w, w));
        for (auto& x : w) x /= norm;
        lambda = dot(w, mat_vec(a, w));
        v = w;
    }
    return lambda;
}

// Smallest eigenvalue of an SPD matrix: power iteration on the inverse.
inline double inverse_min(const Grid& a, int iters = 5000) { return 1.0 / power_max(gauss_jordan_inverse(a), iters); }

inline Eigen::MatrixXd random_gram(int order, int rank, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    Eigen::MatrixXd a(rank, order);
    for (int i = 0; i < rank; ++i)
        for (int j = 0; j < order; ++j) a(i, j) = normal(rng);
    return a.transpose() * a;
}

inline Eigen::VectorXd random_vector(int n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v(i) = normal(rng);
    return v;
}

// Central difference of a scalar function of a vector.
inline Eigen::VectorXd central_gradient(const std::function<double(const Eigen::VectorXd&)>& f, Eigen::VectorXd x,
                                        double h = 1e-5) {
    Eigen::VectorXd g(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        const double orig = x(i);
        x(i) = orig + h;
        const double up = f(x);
        x(i) = orig - h;
        const double down = f(x);
        x(i) = orig;
        g(i) = (up - down) / (2.0 * h);
    }
    return g;
}

// Straight-line MLP evaluation from the flat layout: per layer, a row-major
// out×in weight block followed by out biases.
inline std::vector<double> mlp_forward(const std::vector<int>& widths, bool use_tanh, const std::vector<double>& params,
                                       std::vector<double> x) {
    std::size_t off = 0;
    for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
        const int in = widths[l], out = widths[l + 1];
        std::vector<double> z(out, 0.0);
        for (int o = 0; o < out; ++o) {
            double s = 0.0;
            for (int i = 0; i < in; ++i) s += params[off + o * in + i] * x[i];
            z[o] = s;
        }
        off += static_cast<std::size_t>(in) * out;
        for (int o = 0; o < out; ++o) z[o] += params[off + o];
        off += out;
        if (l + 2 < widths.size())
            for (auto& v : z) v = use_tanh ? std::tanh(v) : (v > 0.0 ? v : 0.0);
        x = z;
    }
    return x;
}

// Minimizes (1/n)‖Kα − y‖² + (λ/2)αᵀKα by gradient descent with a fixed
// step derived from a power-iteration curvature estimate.
inline Eigen::VectorXd ridge_by_gradient_descent(const Eigen::MatrixXd& k, const Eigen::VectorXd& y, double lambda,
                                                 int iters) {
    const double n = static_cast<double>(y.size());
    // Objective Hessian: (2/n)K² + λK.
    const Eigen::MatrixXd h = (2.0 / n) * k * k + lambda * k;
    const double lmax = power_max(to_grid(h), 500);
    const double step = 1.0 / lmax;
    Eigen::VectorXd alpha = Eigen::VectorXd::Zero(y.size());
    for (int t = 0; t < iters; ++t) {
        const Eigen::VectorXd grad = (2.0 / n) * (k * (k * alpha - y)) + lambda * (k * alpha);
        alpha -= step * grad;
    }
    return alpha;
}

inline double ridge_objective(const Eigen::MatrixXd& k, const Eigen::VectorXd& alpha, const Eigen::VectorXd& y,
                              double lambda) {
    const Eigen::VectorXd f = k * alpha;
    return (f - y).squaredNorm() / static_cast<double>(y.size()) + 0.5 * lambda * alpha.dot(k * alpha);
}

}  // namespace oracle
