#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <utility>
#include <vector>

#include "locc/complex_matrix.hpp"
#include "locc/decompositions.hpp"
#include "locc/errors.hpp"
#include "locc/majorization.hpp"

namespace locc {

/// Bipartite pure state identified with its coefficient matrix: the amplitude
/// of |i>|j> sits at entry (i, j). Stored normalized to unit Frobenius norm.
class BipartiteState {
  public:
    explicit BipartiteState(ComplexMatrix coefficients, double tol = kDefaultTol)
        : a_(std::move(coefficients)) {
        if (std::abs(frobenius_norm(a_) - 1.0) > tol)
            throw PreconditionError("BipartiteState: coefficient matrix is not normalized");
    }

    const ComplexMatrix& matrix() const { return a_; }
    std::size_t dimA() const { return a_.rows(); }
    std::size_t dimB() const { return a_.cols(); }

    /// Same state on an enlarged pair of spaces (zero amplitudes added).
    BipartiteState padded(std::size_t n, std::size_t m) const {
        return BipartiteState(a_.padded(n, m));
    }

  private:
    ComplexMatrix a_;
};

/// Result of reshaping raw amplitudes: the normalized state plus the norm
/// that was divided out.
struct AmplitudeImport {
    BipartiteState state;
    double scale;
};

/// Reshape a row-major amplitude vector into an n x m coefficient matrix and
/// normalize it.
inline AmplitudeImport from_amplitudes(const std::vector<Complex>& v, std::size_t n, std::size_t m) {
    if (v.size() != n * m)
        throw DimensionError("from_amplitudes: amplitude count does not equal n*m");
    ComplexMatrix a(n, m, v);
    const double norm = frobenius_norm(a);
    if (norm <= 1e-15)
        throw PreconditionError("from_amplitudes: zero vector");
    return AmplitudeImport{BipartiteState(a * Complex{1.0 / norm, 0.0}), norm};
}

/// Schmidt decomposition of a state: squared coefficients (the entanglement
/// spectrum), the local basis rotations, and the Schmidt rank.
struct SchmidtForm {
    SpectrumVector coefficients;
    ComplexMatrix localA;
    ComplexMatrix localB;
    std::size_t rank;
};

inline SchmidtForm schmidt(const BipartiteState& s) {
    SvdFactors f = svd(s.matrix());
    std::vector<double> sq(f.sigma.size());
    for (std::size_t i = 0; i < sq.size(); ++i) sq[i] = f.sigma[i] * f.sigma[i];
    SpectrumVector coeff(std::move(sq));
    const std::size_t rank = coeff.rank();
    return SchmidtForm{std::move(coeff), std::move(f.x), std::move(f.y), rank};
}

/// Apply local operators to both sides: (mA (x) mB)|s> has coefficient matrix
/// mA * a * mB^T. Returns the unnormalized branch matrix and its squared norm
/// (the branch probability when mA is a measurement element and mB unitary).
struct LocalBranch {
    ComplexMatrix state;
    double weight;
};

inline LocalBranch apply_local(const ComplexMatrix& mA, const ComplexMatrix& mB,
                               const BipartiteState& s) {
    if (mA.cols() != s.dimA() || mB.cols() != s.dimB())
        throw DimensionError("apply_local: operator shapes do not match the state");
    ComplexMatrix out = mA * s.matrix() * mB.transpose();
    const double w = frobenius_norm(out);
    return LocalBranch{std::move(out), w * w};
}

/// Whether s1 = c * s2 for a single complex c, and that c. The reference
/// entry is the largest-magnitude entry of s2; the match is judged relative
/// to ||s1||.
struct Proportionality {
    bool proportional;
    Complex factor;
};

inline Proportionality proportional(const ComplexMatrix& s1, const ComplexMatrix& s2,
                                    double tol = kDefaultTol) {
    if (s1.rows() != s2.rows() || s1.cols() != s2.cols())
        throw DimensionError("proportional: shapes differ");
    std::size_t bi = 0, bj = 0;
    double best = 0.0;
    for (std::size_t i = 0; i < s2.rows(); ++i) {
        for (std::size_t j = 0; j < s2.cols(); ++j) {
            const double mag = std::abs(s2(i, j));
            if (mag > best) {
                best = mag;
                bi = i;
                bj = j;
            }
        }
    }
    const double n1 = frobenius_norm(s1);
    if (best == 0.0) return Proportionality{n1 <= tol, Complex{0.0, 0.0}};
    const Complex c = s1(bi, bj) / s2(bi, bj);
    const double err = frobenius_norm(s1 - s2 * c);
    return Proportionality{err <= tol * std::max(1.0, n1), c};
}

} // namespace locc
