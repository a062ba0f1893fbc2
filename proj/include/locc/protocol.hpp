#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <utility>
#include <vector>

#include "locc/complex_matrix.hpp"
#include "locc/decompositions.hpp"
#include "locc/errors.hpp"
#include "locc/majorization.hpp"
#include "locc/states.hpp"

namespace locc {

/// One branch of Alice's measurement together with Bob's feedback unitary and
/// the branch probability.
struct InstrumentElement {
    ComplexMatrix m;
    ComplexMatrix u;
    double q;
};

/// Success contraction for the probabilistic stage: n maps the intermediate
/// state to the target with probability p, v is Bob's unitary, and nFail is
/// the principal square root of I - n^dag n, so the pair is a complete
/// two-outcome instrument.
struct ProbabilisticTail {
    ComplexMatrix n;
    ComplexMatrix v;
    double p;
    ComplexMatrix nFail;
};

/// Full protocol: a deterministic instrument taking the source to the
/// intermediate state, an optional probabilistic tail taking the intermediate
/// to the target, and the declared overall success probability.
struct Protocol {
    std::vector<InstrumentElement> stage1;
    ComplexMatrix m0;
    std::optional<ProbabilisticTail> stage2;
    BipartiteState intermediate;
    double declaredProbability;
};

/// Single-branch transform: one Alice contraction and one Bob unitary
/// achieving the conversion with probability p.
struct PureTransform {
    ComplexMatrix m;
    ComplexMatrix u;
    double p;
};

struct FeasibilityResult {
    bool deterministic;
    double pMax;
    bool rankOk;
};

namespace detail {

/// Common ambient shape for two states (zero-padding preserves the states).
inline std::pair<BipartiteState, BipartiteState> pad_common(const BipartiteState& a,
                                                            const BipartiteState& b) {
    const std::size_t n = std::max(a.dimA(), b.dimA());
    const std::size_t m = std::max(a.dimB(), b.dimB());
    return {a.padded(n, m), b.padded(n, m)};
}

/// Transpose of the permutation matrix for perm, embedded into size x size
/// (identity on indices past the permutation's length).
inline ComplexMatrix embedded_perm_transpose(const std::vector<std::size_t>& perm, std::size_t size) {
    ComplexMatrix p(size, size);
    for (std::size_t j = 0; j < perm.size(); ++j) p(perm[j], j) = 1.0;
    for (std::size_t j = perm.size(); j < size; ++j) p(j, j) = 1.0;
    return p;
}

inline std::vector<double> squared(const std::vector<double>& sigma) {
    std::vector<double> sq(sigma.size());
    for (std::size_t i = 0; i < sq.size(); ++i) sq[i] = sigma[i] * sigma[i];
    return sq;
}

} // namespace detail

/// Decide convertibility: deterministic iff the source spectrum is majorized
/// by the target's; pMax is the best achievable success probability; rankOk
/// iff the Schmidt rank does not need to grow.
inline FeasibilityResult feasibility(const BipartiteState& a, const BipartiteState& b,
                                     double tol = kDefaultTol) {
    const SchmidtForm sa = schmidt(a);
    const SchmidtForm sb = schmidt(b);
    const bool det = prec(sa.coefficients, sb.coefficients, tol);
    const double pMax = max_conversion_probability(sa.coefficients, sb.coefficients, tol);
    return FeasibilityResult{det, pMax, sa.rank >= sb.rank};
}

/// Necessary condition for a single-branch conversion with probability p:
/// p times the target spectrum must be submajorized by the source spectrum.
inline bool check_pure_necessary(const BipartiteState& a, const BipartiteState& b, double p,
                                 double tol = kDefaultTol) {
    const SchmidtForm sa = schmidt(a);
    const SchmidtForm sb = schmidt(b);
    return prec_sub(sb.coefficients.scaled(p), sa.coefficients, tol);
}

/// Construct the single-branch transform M = sqrt(p) B U^* A^pinv + N (I - A A^pinv).
/// Defaults: N = 0 and U = Y_B^T Y_A^*, which always yields a contraction when
/// p * sigma_B^2 <= sigma_A^2 componentwise. Throws NotAContraction when the
/// chosen U, N give an operator norm above 1.
inline PureTransform synth_pure(const BipartiteState& aIn, const BipartiteState& bIn, double p,
                                const std::optional<ComplexMatrix>& freeN = {},
                                const std::optional<ComplexMatrix>& bobUnitary = {},
                                double tol = kDefaultTol) {
    if (!(p > 0.0 && p <= 1.0 + 1e-12))
        throw PreconditionError("synth_pure: probability must lie in (0, 1]");
    auto [a, b] = detail::pad_common(aIn, bIn);
    const SvdFactors fa = svd(a.matrix());
    const SvdFactors fb = svd(b.matrix());
    const SpectrumVector specA{detail::squared(fa.sigma)};
    const SpectrumVector specB{detail::squared(fb.sigma)};
    if (specA.rank() < specB.rank())
        throw PreconditionError("synth_pure: rank(A) < rank(B), the Schmidt rank cannot grow");

    const ComplexMatrix u = bobUnitary ? *bobUnitary : fb.y.transpose() * fa.y.conjugate();
    if (u.rows() != a.dimB() || u.cols() != a.dimB())
        throw DimensionError("synth_pure: Bob unitary has the wrong shape");
    const ComplexMatrix aPinv = pinv(a.matrix());
    ComplexMatrix m = std::sqrt(p) * b.matrix() * u.conjugate() * aPinv;
    if (freeN) {
        if (freeN->rows() != a.dimA() || freeN->cols() != a.dimA())
            throw DimensionError("synth_pure: free operator has the wrong shape");
        m = m + *freeN * (ComplexMatrix::identity(a.dimA()) - a.matrix() * aPinv);
    }

    const ComplexMatrix out = m * a.matrix() * u.transpose();
    if (frobenius_norm(out - b.matrix() * Complex{std::sqrt(p), 0.0}) > tol)
        throw PreconditionError("synth_pure: M A U^T does not reproduce sqrt(p) B");
    if (!is_contraction(m, tol))
        throw NotAContraction("synth_pure: the constructed M has operator norm above 1");
    return PureTransform{std::move(m), u, p};
}

/// Intermediate state reachable deterministically from a and convertible to b
/// with probability p: diagonal in the computational basis, with spectrum
/// given by the intermediate-vector construction on (sigma_A^2, p sigma_B^2).
inline BipartiteState build_intermediate(const BipartiteState& aIn, const BipartiteState& bIn,
                                         double p, double tol = kDefaultTol) {
    auto [a, b] = detail::pad_common(aIn, bIn);
    const SchmidtForm sa = schmidt(a);
    const SchmidtForm sb = schmidt(b);
    if (!prec_super(sa.coefficients, sb.coefficients.scaled(p), tol))
        throw PreconditionError("build_intermediate: p exceeds the maximal conversion probability");
    const SpectrumVector v =
        lemma1_intermediate(sa.coefficients, sb.coefficients.scaled(p), tol);
    std::vector<double> roots(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) roots[i] = std::sqrt(v[i]);
    return BipartiteState(ComplexMatrix::diagonal(roots, a.dimA(), a.dimB()));
}

/// Deterministic instrument taking a to qState on every branch, plus the
/// mixing unitaries that certify it: sum_l q_l W_l^dag QQ^dag W_l = AA^dag.
struct DeterministicInstrument {
    std::vector<InstrumentElement> elements;
    ComplexMatrix m0;
    std::vector<ComplexMatrix> mixingUnitaries;
};

/// Synthesize the deterministic stage. A doubly stochastic matrix relating the
/// two spectra is built from a pinch chain and split into permutations; each
/// permutation yields one branch via
///   W = X_Q Pi X_A^dag,  U^* = Y_Q^dag Pi Y_A,  M = sqrt(q) Q U^* A^pinv,
/// where Pi is the transpose of the extracted permutation (the orientation
/// that makes the mixing identity hold). Completion element: m0 = I - A A^pinv.
inline DeterministicInstrument synth_deterministic(const BipartiteState& aIn,
                                                   const BipartiteState& qIn,
                                                   double tol = kDefaultTol) {
    auto [a, q] = detail::pad_common(aIn, qIn);
    const SvdFactors fa = svd(a.matrix());
    const SvdFactors fq = svd(q.matrix());
    const SpectrumVector specA{detail::squared(fa.sigma)};
    const SpectrumVector specQ{detail::squared(fq.sigma)};
    if (!prec(specA, specQ, tol))
        throw PreconditionError("synth_deterministic: source spectrum is not majorized by the target's");
    if (specA.rank() < specQ.rank())
        throw PreconditionError("synth_deterministic: rank(A) < rank(Q)");

    const std::size_t n = a.dimA(), m = a.dimB();
    const std::size_t spectrumLen = specA.size();
    const auto chain = t_transform_chain(specA, specQ, tol);
    const ComplexMatrix d = compose_bistochastic(chain, spectrumLen);
    BirkhoffDecomposition bd = birkhoff_decompose(d, tol);

    double kept = 0.0;
    for (const auto& term : bd.terms)
        if (term.weight >= 1e-12) kept += term.weight;

    const ComplexMatrix aPinv = pinv(a.matrix());
    DeterministicInstrument inst{{}, ComplexMatrix::identity(n) - a.matrix() * aPinv, {}};
    for (const auto& term : bd.terms) {
        if (term.weight < 1e-12) continue; // degenerate split, drop and renormalize
        const double qw = term.weight / kept;
        const ComplexMatrix piA = detail::embedded_perm_transpose(term.perm, n);
        const ComplexMatrix piB = detail::embedded_perm_transpose(term.perm, m);
        ComplexMatrix w = fq.x * piA * fa.x.adjoint();
        ComplexMatrix uStar = fq.y.adjoint() * piB * fa.y;
        ComplexMatrix mOp = std::sqrt(qw) * q.matrix() * uStar * aPinv;
        inst.elements.push_back(InstrumentElement{std::move(mOp), uStar.conjugate(), qw});
        inst.mixingUnitaries.push_back(std::move(w));
    }
    return inst;
}

/// Success contraction for the probabilistic stage:
///   N = sqrt(p) X_B Sigma_B Sigma_Q^pinv X_Q^dag,  V^T = Y_Q^dag Y_B,
/// valid whenever sigma_Q^2 >= p sigma_B^2 componentwise. nFail completes the
/// instrument: n^dag n + nFail^dag nFail = I.
inline ProbabilisticTail synth_probabilistic_tail(const BipartiteState& qIn,
                                                  const BipartiteState& bIn, double p,
                                                  double tol = kDefaultTol) {
    auto [q, b] = detail::pad_common(qIn, bIn);
    const SvdFactors fq = svd(q.matrix());
    const SvdFactors fb = svd(b.matrix());
    const std::size_t n = q.dimA();
    const std::size_t len = fq.sigma.size();
    const double cut = (fq.sigma.empty() ? 0.0 : fq.sigma.front()) * 1e-12;

    std::vector<double> ratio(n, 0.0), fail(n, 1.0);
    for (std::size_t i = 0; i < len; ++i) {
        const double sq = fq.sigma[i] * fq.sigma[i];
        const double sb = fb.sigma[i] * fb.sigma[i];
        if (sq < p * sb - tol)
            throw PreconditionError(
                "synth_probabilistic_tail: intermediate spectrum does not dominate p * target");
        if (fq.sigma[i] > cut) {
            ratio[i] = std::sqrt(p) * fb.sigma[i] / fq.sigma[i];
            fail[i] = std::sqrt(std::max(0.0, 1.0 - ratio[i] * ratio[i]));
        }
    }
    ComplexMatrix nOp = fb.x * ComplexMatrix::diagonal(ratio, n, n) * fq.x.adjoint();
    ComplexMatrix v = (fq.y.adjoint() * fb.y).transpose();
    ComplexMatrix nFail = fq.x * ComplexMatrix::diagonal(fail, n, n) * fq.x.adjoint();
    return ProbabilisticTail{std::move(nOp), std::move(v), p, std::move(nFail)};
}

/// Full synthesis: the deterministic stage reaches the intermediate state and,
/// for pTarget < 1, the probabilistic tail finishes the conversion. For
/// deterministic targets the intermediate coincides with the target itself and
/// the tail is omitted.
inline Protocol full_pipeline(const BipartiteState& aIn, const BipartiteState& bIn,
                              std::optional<double> pTarget = {}, double tol = kDefaultTol) {
    auto [a, b] = detail::pad_common(aIn, bIn);
    const FeasibilityResult feas = feasibility(a, b, tol);
    if (!feas.rankOk)
        throw PreconditionError("full_pipeline: rank(A) < rank(B), conversion impossible");
    const double p = pTarget.value_or(feas.pMax);
    if (!(p > 0.0))
        throw InfeasibleTarget("full_pipeline: target probability must be positive");
    if (p > feas.pMax + 1e-12)
        throw InfeasibleTarget("full_pipeline: target probability exceeds pMax");

    if (p >= 1.0 - 1e-12) {
        DeterministicInstrument inst = synth_deterministic(a, b, tol);
        return Protocol{std::move(inst.elements), std::move(inst.m0), std::nullopt, b, 1.0};
    }
    BipartiteState q = build_intermediate(a, b, p, tol);
    DeterministicInstrument inst = synth_deterministic(a, q, tol);
    ProbabilisticTail tail = synth_probabilistic_tail(q, b, p, tol);
    return Protocol{std::move(inst.elements), std::move(inst.m0), std::move(tail), std::move(q), p};
}

/// Move a contraction from Bob's side to Alice's: with K_O the transposition
/// unitary of O, N = K_{M Psi^T} M K_Psi and U = K_{M Psi^T}^dag K_Psi^dag
/// satisfy (I (x) M)|Psi> = (N (x) U)|Psi>. Non-square states are zero-padded
/// to a square ambient space first.
struct LoPopescuResult {
    ComplexMatrix nAlice;
    ComplexMatrix uBob;
};

inline LoPopescuResult lo_popescu(const ComplexMatrix& mBob, const BipartiteState& psi,
                                  double tol = kDefaultTol) {
    if (!mBob.square() || mBob.rows() != psi.dimB())
        throw DimensionError("lo_popescu: contraction must be square on Bob's space");
    if (!is_contraction(mBob, tol))
        throw NotAContraction("lo_popescu: operator norm above 1");

    const std::size_t s = std::max(psi.dimA(), psi.dimB());
    const ComplexMatrix psiPad = psi.matrix().padded(s, s);
    const ComplexMatrix mPad = mBob.padded(s, s);
    const ComplexMatrix kLeft = transposition_unitary(mPad * psiPad.transpose());
    const ComplexMatrix kPsi = transposition_unitary(psiPad);
    ComplexMatrix n = kLeft * mPad * kPsi;
    ComplexMatrix u = kLeft.adjoint() * kPsi.adjoint();

    const ComplexMatrix lhs = psiPad * mPad.transpose();
    const ComplexMatrix rhs = n * psiPad * u.transpose();
    if (frobenius_norm(lhs - rhs) > tol)
        throw ConvergenceError("lo_popescu: defining identity violated beyond tolerance");
    return LoPopescuResult{std::move(n), std::move(u)};
}

} // namespace locc
