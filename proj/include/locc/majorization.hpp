#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "locc/complex_matrix.hpp"
#include "locc/errors.hpp"

namespace locc {

/// Entries at or below this (after clamping) count as zero when ranking a
/// spectrum.
inline constexpr double kSpectrumZero = 1e-12;

/// Nonnegative spectrum (squared Schmidt coefficients, eigenvalues of AA^dag),
/// stored sorted nonincreasing. Subnormalized spectra are allowed; the total
/// may not exceed 1.
class SpectrumVector {
  public:
    explicit SpectrumVector(std::vector<double> values) : values_(std::move(values)) {
        if (values_.empty())
            throw DimensionError("SpectrumVector: empty");
        for (double& v : values_) {
            if (!(v >= -kSpectrumZero))
                throw PreconditionError("SpectrumVector: entry below -1e-12 (or NaN)");
            if (v < 0.0) v = 0.0;
        }
        std::stable_sort(values_.begin(), values_.end(), std::greater<double>());
        if (sum() > 1.0 + kDefaultTol)
            throw PreconditionError("SpectrumVector: total exceeds 1");
    }

    const std::vector<double>& values() const { return values_; }
    std::size_t size() const { return values_.size(); }
    double operator[](std::size_t i) const { return values_[i]; }

    double sum() const { return std::accumulate(values_.begin(), values_.end(), 0.0); }

    std::size_t rank() const {
        std::size_t r = 0;
        for (double v : values_)
            if (v > kSpectrumZero) ++r;
        return r;
    }

    /// Same spectrum zero-padded to at least n entries.
    SpectrumVector padded(std::size_t n) const {
        std::vector<double> v = values_;
        if (v.size() < n) v.resize(n, 0.0);
        return SpectrumVector(std::move(v));
    }

    /// Entrywise scale by p in [0, 1].
    SpectrumVector scaled(double p) const {
        if (!(p >= 0.0 && p <= 1.0 + kDefaultTol))
            throw PreconditionError("SpectrumVector::scaled: factor outside [0,1]");
        std::vector<double> v = values_;
        for (double& e : v) e *= p;
        return SpectrumVector(std::move(v));
    }

  private:
    std::vector<double> values_;
};

namespace detail {

inline void pad_pair(std::vector<double>& a, std::vector<double>& b) {
    const std::size_t n = std::max(a.size(), b.size());
    a.resize(n, 0.0);
    b.resize(n, 0.0);
}

} // namespace detail

/// x majorized by y: every head partial sum of x is dominated by y's and the
/// totals agree, all within tol.
inline bool prec(const SpectrumVector& x, const SpectrumVector& y, double tol = kDefaultTol) {
    std::vector<double> a = x.values(), b = y.values();
    detail::pad_pair(a, b);
    double ha = 0.0, hb = 0.0;
    for (std::size_t l = 0; l < a.size(); ++l) {
        ha += a[l];
        hb += b[l];
        if (ha > hb + tol) return false;
    }
    return std::abs(ha - hb) <= tol;
}

/// Supermajorization x relative to y: every tail sum of x dominates y's.
inline bool prec_super(const SpectrumVector& x, const SpectrumVector& y, double tol = kDefaultTol) {
    std::vector<double> a = x.values(), b = y.values();
    detail::pad_pair(a, b);
    double ta = 0.0, tb = 0.0;
    for (std::size_t l = a.size(); l-- > 0;) {
        ta += a[l];
        tb += b[l];
        if (ta < tb - tol) return false;
    }
    return true;
}

/// Submajorization: every head partial sum of x is dominated by y's (no
/// total-sum requirement).
inline bool prec_sub(const SpectrumVector& x, const SpectrumVector& y, double tol = kDefaultTol) {
    std::vector<double> a = x.values(), b = y.values();
    detail::pad_pair(a, b);
    double ha = 0.0, hb = 0.0;
    for (std::size_t l = 0; l < a.size(); ++l) {
        ha += a[l];
        hb += b[l];
        if (ha > hb + tol) return false;
    }
    return true;
}

/// Given x supermajorizing y, the vector v = (q - p + y_1, y_2, ..., y_N)
/// with q = sum(x), p = sum(y). It dominates y componentwise and majorizes x;
/// its total equals sum(x).
inline SpectrumVector lemma1_intermediate(const SpectrumVector& x, const SpectrumVector& y,
                                          double tol = kDefaultTol) {
    if (!prec_super(x, y, tol))
        throw PreconditionError("lemma1_intermediate: x does not supermajorize y");
    std::vector<double> a = x.values(), b = y.values();
    detail::pad_pair(a, b);
    const double q = std::accumulate(a.begin(), a.end(), 0.0);
    const double p = std::accumulate(b.begin(), b.end(), 0.0);
    std::vector<double> v = b;
    v[0] = q - p + b[0];
    return SpectrumVector(std::move(v));
}

/// One doubly stochastic pinch acting on positions (i, j), i < j:
/// (w_i, w_j) -> (t w_i + (1-t) w_j, (1-t) w_i + t w_j).
struct TTransform {
    std::size_t i;
    std::size_t j;
    double t;

    void apply(std::vector<double>& w) const {
        const double wi = w[i], wj = w[j];
        w[i] = t * wi + (1.0 - t) * wj;
        w[j] = (1.0 - t) * wi + t * wj;
    }

    ComplexMatrix matrix(std::size_t n) const {
        ComplexMatrix m = ComplexMatrix::identity(n);
        m(i, i) = t;
        m(i, j) = 1.0 - t;
        m(j, i) = 1.0 - t;
        m(j, j) = t;
        return m;
    }
};

/// Chain of at most N-1 pinches turning y into x (requires x majorized by y).
/// Greedy: repeatedly move mass from the first position where the current
/// vector still exceeds the target to the first position where it falls short;
/// each step settles at least one position exactly.
inline std::vector<TTransform> t_transform_chain(const SpectrumVector& x, const SpectrumVector& y,
                                                 double tol = kDefaultTol) {
    if (!prec(x, y, tol))
        throw PreconditionError("t_transform_chain: x is not majorized by y");
    std::vector<double> target = x.values(), w = y.values();
    detail::pad_pair(target, w);
    const std::size_t n = w.size();
    constexpr double kSettled = 1e-13;

    std::vector<TTransform> chain;
    for (std::size_t step = 0; step < n; ++step) {
        std::size_t a = n, b = n;
        for (std::size_t k = 0; k < n && (a == n || b == n); ++k) {
            if (a == n && w[k] - target[k] > kSettled) a = k;
            if (b == n && target[k] - w[k] > kSettled) b = k;
        }
        if (a == n || b == n) break; // residuals below the settle threshold
        if (a > b)
            throw ConvergenceError("t_transform_chain: majorization lost during construction");
        const double delta = std::min(w[a] - target[a], target[b] - w[b]);
        const double t = 1.0 - delta / (w[a] - w[b]);
        chain.push_back(TTransform{a, b, t});
        w[a] -= delta;
        w[b] += delta;
    }
    return chain;
}

/// Product of the chain's pinch matrices, in application order. The result D
/// is doubly stochastic and satisfies x = D y for the chain built from (x, y).
inline ComplexMatrix compose_bistochastic(const std::vector<TTransform>& chain, std::size_t n) {
    ComplexMatrix d = ComplexMatrix::identity(n);
    for (const TTransform& tr : chain) d = tr.matrix(n) * d;
    return d;
}

/// Convex combination of permutations. perm[i] is the column holding the 1 in
/// row i, so the term's matrix P satisfies (P x)_i = x_{perm[i]}.
struct BirkhoffDecomposition {
    struct Term {
        double weight;
        std::vector<std::size_t> perm;
    };
    std::vector<Term> terms;

    static ComplexMatrix permutation_matrix(const std::vector<std::size_t>& perm) {
        ComplexMatrix p(perm.size(), perm.size());
        for (std::size_t i = 0; i < perm.size(); ++i) p(i, perm[i]) = 1.0;
        return p;
    }

    ComplexMatrix reconstruct(std::size_t n) const {
        ComplexMatrix d(n, n);
        for (const Term& t : terms)
            for (std::size_t i = 0; i < n; ++i) d(i, t.perm[i]) += t.weight;
        return d;
    }
};

namespace detail {

/// Kuhn augmenting-path step: try to match row r to some column through the
/// support graph.
inline bool kuhn_augment(const std::vector<std::vector<double>>& g, double threshold, std::size_t r,
                         std::vector<char>& visited, std::vector<std::size_t>& colToRow) {
    const std::size_t n = g.size();
    for (std::size_t c = 0; c < n; ++c) {
        if (g[r][c] <= threshold || visited[c]) continue;
        visited[c] = 1;
        if (colToRow[c] == n || kuhn_augment(g, threshold, colToRow[c], visited, colToRow)) {
            colToRow[c] = r;
            return true;
        }
    }
    return false;
}

} // namespace detail

/// Greedy Birkhoff-von Neumann decomposition: repeatedly extract a permutation
/// lying inside the positive support (bipartite matching), subtract the
/// minimum entry along it, and continue. Each step zeroes at least one entry,
/// which keeps the term count within (N-1)^2 + 1.
inline BirkhoffDecomposition birkhoff_decompose(const ComplexMatrix& d, double tol = kDefaultTol) {
    if (!d.square())
        throw PreconditionError("birkhoff_decompose: matrix must be square");
    const std::size_t n = d.rows();
    double defect = 0.0;
    std::vector<std::vector<double>> r(n, std::vector<double>(n, 0.0));
    std::vector<double> colSum(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double rowSum = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            const Complex z = d(i, j);
            defect = std::max(defect, std::abs(z.imag()));
            defect = std::max(defect, std::max(0.0, -z.real()));
            defect = std::max(defect, std::max(0.0, z.real() - 1.0));
            r[i][j] = z.real() > 1e-14 ? z.real() : 0.0; // drop dust from the support
            rowSum += z.real();
            colSum[j] += z.real();
        }
        defect = std::max(defect, std::abs(rowSum - 1.0));
    }
    for (std::size_t j = 0; j < n; ++j) defect = std::max(defect, std::abs(colSum[j] - 1.0));
    if (defect > tol)
        throw PreconditionError("birkhoff_decompose: matrix is not doubly stochastic within tolerance");

    const double stopTol = std::max(1e-12, 10.0 * defect);
    std::map<std::vector<std::size_t>, double> byPerm;
    double remaining = 1.0;
    const std::size_t cap = (n - 1) * (n - 1) + 1 + n;
    for (std::size_t step = 0; step < cap && remaining > stopTol; ++step) {
        std::vector<std::size_t> colToRow(n, n);
        bool matched = true;
        for (std::size_t row = 0; row < n && matched; ++row) {
            std::vector<char> visited(n, 0);
            matched = detail::kuhn_augment(r, 0.0, row, visited, colToRow);
        }
        if (!matched)
            throw ConvergenceError(
                "birkhoff_decompose: no perfect matching on the positive support "
                "(double stochasticity violated numerically)");
        std::vector<std::size_t> perm(n);
        for (std::size_t c = 0; c < n; ++c) perm[colToRow[c]] = c;
        double q = remaining;
        for (std::size_t i = 0; i < n; ++i) q = std::min(q, r[i][perm[i]]);
        for (std::size_t i = 0; i < n; ++i) {
            double& e = r[i][perm[i]];
            e -= q;
            if (e <= 1e-15) e = 0.0;
        }
        byPerm[perm] += q;
        remaining -= q;
    }
    if (remaining > stopTol)
        throw ConvergenceError("birkhoff_decompose: residual mass after the extraction cap");

    BirkhoffDecomposition out;
    out.terms.reserve(byPerm.size());
    for (auto& [perm, weight] : byPerm) out.terms.push_back({weight, perm});
    std::stable_sort(out.terms.begin(), out.terms.end(),
                     [](const auto& a, const auto& b) { return a.weight > b.weight; });
    return out;
}

/// Largest p such that xa supermajorizes p * xb: the minimum over l of the
/// tail-sum ratios, clamped to [0, 1]. Exactly 1 when xa is majorized by xb;
/// exactly 0 when xa has strictly smaller rank than xb.
inline double max_conversion_probability(const SpectrumVector& xa, const SpectrumVector& xb,
                                         double tol = kDefaultTol) {
    if (std::abs(xa.sum() - 1.0) > tol || std::abs(xb.sum() - 1.0) > tol)
        throw PreconditionError("max_conversion_probability: spectra must be normalized");
    if (xa.rank() < xb.rank()) return 0.0;
    if (prec(xa, xb, tol)) return 1.0;
    std::vector<double> a = xa.values(), b = xb.values();
    detail::pad_pair(a, b);
    double p = 1.0, ta = 0.0, tb = 0.0;
    for (std::size_t l = a.size(); l-- > 0;) {
        ta += a[l];
        tb += b[l];
        if (tb > 1e-15) p = std::min(p, ta / tb); // 0/0 tails impose nothing
    }
    return std::clamp(p, 0.0, 1.0);
}

} // namespace locc
