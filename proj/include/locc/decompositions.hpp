#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <vector>

#include "locc/complex_matrix.hpp"
#include "locc/errors.hpp"

namespace locc {

/// Singular value decomposition in the convention O = X * diag(sigma) * Y
/// (note: Y itself, not its adjoint). X is rows x rows, Y is cols x cols,
/// sigma holds min(rows, cols) nonnegative values sorted nonincreasing.
struct SvdFactors {
    ComplexMatrix x;
    std::vector<double> sigma;
    ComplexMatrix y;

    ComplexMatrix reconstruct() const {
        return x * ComplexMatrix::diagonal(sigma, x.cols(), y.rows()) * y;
    }
};

namespace detail {

inline Complex column_dot(const ComplexMatrix& m, std::size_t ci, std::size_t cj) {
    Complex s{0.0, 0.0};
    for (std::size_t r = 0; r < m.rows(); ++r) s += std::conj(m(r, ci)) * m(r, cj);
    return s;
}

inline double column_norm_sq(const ComplexMatrix& m, std::size_t c) {
    double s = 0.0;
    for (std::size_t r = 0; r < m.rows(); ++r) s += std::norm(m(r, c));
    return s;
}

/// One-sided Jacobi on a tall-or-square matrix: orthogonalizes the columns
/// of w in place, accumulating the same rotations into v. Deterministic
/// sweep order; converges when every column pair is orthogonal relative to
/// the product of the column norms.
inline void jacobi_orthogonalize(ComplexMatrix& w, ComplexMatrix& v, std::size_t sweepCap) {
    const std::size_t n = w.cols();
    constexpr double kConv = 1e-13;
    // Columns below this norm are rounding debris (the total Frobenius norm is
    // invariant under the rotations); rotating against them never settles.
    const double floorSq = std::pow(frobenius_norm(w) * 1e-14, 2);
    for (std::size_t sweep = 0; sweep < sweepCap; ++sweep) {
        bool rotated = false;
        for (std::size_t i = 0; i + 1 < n; ++i) {
            for (std::size_t j = i + 1; j < n; ++j) {
                const double a = column_norm_sq(w, i);
                const double b = column_norm_sq(w, j);
                if (a <= floorSq || b <= floorSq) continue;
                const Complex c = column_dot(w, i, j);
                const double off = std::abs(c);
                if (off <= kConv * std::sqrt(a * b) || off == 0.0) continue;
                rotated = true;

                const Complex phase = c / off; // e^{i arg(c)}
                const double tau = (b - a) / (2.0 * off);
                const double t = (tau >= 0.0 ? 1.0 : -1.0) / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
                const double cs = 1.0 / std::sqrt(1.0 + t * t);
                const double sn = cs * t;

                for (std::size_t r = 0; r < w.rows(); ++r) {
                    const Complex wi = w(r, i), wj = w(r, j);
                    w(r, i) = cs * wi - sn * std::conj(phase) * wj;
                    w(r, j) = sn * phase * wi + cs * wj;
                }
                for (std::size_t r = 0; r < v.rows(); ++r) {
                    const Complex vi = v(r, i), vj = v(r, j);
                    v(r, i) = cs * vi - sn * std::conj(phase) * vj;
                    v(r, j) = sn * phase * vi + cs * vj;
                }
            }
        }
        if (!rotated) return;
    }
    throw ConvergenceError("svd: Jacobi sweeps did not converge within the cap");
}

/// Fill the columns of x listed in slots with vectors orthonormal to all
/// currently valid columns, drawing candidates from the canonical basis.
inline void orthonormal_complete(ComplexMatrix& x, const std::vector<std::size_t>& slots,
                                 std::vector<std::size_t> filled) {
    const std::size_t m = x.rows();
    std::size_t candidate = 0;
    for (std::size_t slot : slots) {
        for (; candidate <= m; ++candidate) {
            if (candidate == m)
                throw ConvergenceError("svd: failed to complete an orthonormal basis");
            std::vector<Complex> vec(m, Complex{0.0, 0.0});
            vec[candidate] = 1.0;
            for (int pass = 0; pass < 2; ++pass) {
                for (std::size_t f : filled) {
                    Complex proj{0.0, 0.0};
                    for (std::size_t r = 0; r < m; ++r) proj += std::conj(x(r, f)) * vec[r];
                    for (std::size_t r = 0; r < m; ++r) vec[r] -= proj * x(r, f);
                }
            }
            double nrm = 0.0;
            for (const Complex& z : vec) nrm += std::norm(z);
            nrm = std::sqrt(nrm);
            if (nrm > 0.3) {
                for (std::size_t r = 0; r < m; ++r) x(r, slot) = vec[r] / nrm;
                filled.push_back(slot);
                ++candidate;
                break;
            }
        }
    }
}

inline SvdFactors svd_tall(const ComplexMatrix& m) {
    const std::size_t rows = m.rows(), cols = m.cols();
    ComplexMatrix w = m;
    ComplexMatrix v = ComplexMatrix::identity(cols);
    jacobi_orthogonalize(w, v, 100 * std::max(rows, cols));

    std::vector<double> norms(cols);
    for (std::size_t j = 0; j < cols; ++j) norms[j] = std::sqrt(column_norm_sq(w, j));

    std::vector<std::size_t> order(cols);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return norms[a] > norms[b]; });

    const double sigmaMax = norms.empty() ? 0.0 : norms[order[0]];
    const double normalizable =
        std::max(sigmaMax * 1e-15 * static_cast<double>(std::max(rows, cols)),
                 frobenius_norm(m) * 2e-14);

    ComplexMatrix x(rows, rows);
    std::vector<double> sigma(cols);
    ComplexMatrix y(cols, cols); // Y = V^dag with rows in sorted order
    std::vector<std::size_t> goodCols, completionSlots;
    for (std::size_t k = 0; k < cols; ++k) {
        const std::size_t src = order[k];
        sigma[k] = norms[src];
        for (std::size_t r = 0; r < cols; ++r) y(k, r) = std::conj(v(r, src));
        if (norms[src] > normalizable && norms[src] > 0.0) {
            for (std::size_t r = 0; r < rows; ++r) x(r, k) = w(r, src) / norms[src];
            goodCols.push_back(k);
        } else {
            completionSlots.push_back(k);
        }
    }
    for (std::size_t k = cols; k < rows; ++k) completionSlots.push_back(k);
    orthonormal_complete(x, completionSlots, goodCols);
    return SvdFactors{std::move(x), std::move(sigma), std::move(y)};
}

} // namespace detail

/// SVD with nonincreasing singular values; deterministic for fixed input.
inline SvdFactors svd(const ComplexMatrix& m) {
    if (!m.is_finite())
        throw PreconditionError("svd: input must be finite");
    if (m.rows() >= m.cols()) return detail::svd_tall(m);
    // Wide case via the adjoint: m^dag = X' S Y'  =>  m = Y'^dag S X'^dag.
    SvdFactors f = detail::svd_tall(m.adjoint());
    return SvdFactors{f.y.adjoint(), std::move(f.sigma), f.x.adjoint()};
}

/// Largest singular value.
inline double operator_norm(const ComplexMatrix& m) {
    const SvdFactors f = svd(m);
    return f.sigma.empty() ? 0.0 : f.sigma.front();
}

/// Operator norm at most 1 (within tol): a valid measurement element.
inline bool is_contraction(const ComplexMatrix& m, double tol = kDefaultTol) {
    return operator_norm(m) <= 1.0 + tol;
}

/// ||m^dag m - I|| <= tol. Tall isometries pass; wide matrices cannot.
inline bool is_unitary(const ComplexMatrix& m, double tol = kDefaultTol) {
    if (m.rows() < m.cols()) return false;
    const ComplexMatrix g = m.adjoint() * m;
    return frobenius_norm(g - ComplexMatrix::identity(m.cols())) <= tol;
}

/// Moore-Penrose pseudoinverse: Y^dag Sigma^pinv X^dag, with singular values
/// at or below 1e-12 * sigma_max treated as exactly zero.
inline ComplexMatrix pinv(const ComplexMatrix& m) {
    const SvdFactors f = svd(m);
    const double sigmaMax = f.sigma.empty() ? 0.0 : f.sigma.front();
    const double cut = sigmaMax * 1e-12;
    std::vector<double> inv(f.sigma.size(), 0.0);
    for (std::size_t i = 0; i < f.sigma.size(); ++i)
        if (f.sigma[i] > cut && f.sigma[i] > 0.0) inv[i] = 1.0 / f.sigma[i];
    return f.y.adjoint() * ComplexMatrix::diagonal(inv, m.cols(), m.rows()) * f.x.adjoint();
}

/// Unitary K with K m K^* = m^T, built as K = Y^T X^dag from the SVD of m.
inline ComplexMatrix transposition_unitary(const ComplexMatrix& m) {
    if (!m.square())
        throw DimensionError("transposition_unitary: matrix must be square");
    const SvdFactors f = svd(m);
    return f.y.transpose() * f.x.adjoint();
}

/// Left polar decomposition m = positive * unitary with positive = sqrt(m m^dag).
struct PolarFactors {
    ComplexMatrix unitary;
    ComplexMatrix positive;
};

inline PolarFactors polar(const ComplexMatrix& m) {
    if (!m.square())
        throw DimensionError("polar: matrix must be square");
    const SvdFactors f = svd(m);
    const ComplexMatrix sig = ComplexMatrix::diagonal(f.sigma, m.rows(), m.rows());
    return PolarFactors{f.x * f.y, f.x * sig * f.x.adjoint()};
}

} // namespace locc
