#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <numeric>
#include <thread>
#include <utility>
#include <vector>

#include "locc/complex_matrix.hpp"
#include "locc/decompositions.hpp"
#include "locc/errors.hpp"
#include "locc/protocol.hpp"
#include "locc/rng.hpp"
#include "locc/states.hpp"

namespace locc {

struct BranchError {
    std::size_t index;
    double proportionalityError;
    double weightError;
};

/// Outcome of re-deriving every protocol invariant from the raw matrices.
struct VerificationReport {
    double completenessError = 0.0;
    std::vector<BranchError> branchErrors;
    double measuredSuccessProbability = 0.0;
    bool pass = false;
    double weightSumError = 0.0;
    double maxUnitarityError = 0.0;
    double contractionExcess = 0.0;
    double stage2CompletenessError = 0.0;
    double stage2ProportionalityError = 0.0;
    double probabilityError = 0.0;
};

namespace detail {

/// Best single-factor match of x against the reference r (largest-magnitude
/// entry of r fixes the factor). Returns the residual norm and the factor.
inline std::pair<double, Complex> factor_against(const ComplexMatrix& x, const ComplexMatrix& r) {
    std::size_t bi = 0, bj = 0;
    double best = 0.0;
    for (std::size_t i = 0; i < r.rows(); ++i)
        for (std::size_t j = 0; j < r.cols(); ++j)
            if (std::abs(r(i, j)) > best) {
                best = std::abs(r(i, j));
                bi = i;
                bj = j;
            }
    if (best == 0.0) return {frobenius_norm(x), Complex{0.0, 0.0}};
    const Complex c = x(bi, bj) / r(bi, bj);
    return {frobenius_norm(x - r * c), c};
}

inline double unitarity_error(const ComplexMatrix& u) {
    return frobenius_norm(u.adjoint() * u - ComplexMatrix::identity(u.cols()));
}

} // namespace detail

/// Recompute every protocol invariant from scratch, independently of how the
/// protocol was synthesized: instrument completeness, per-branch
/// proportionality against the intermediate state, branch weights, operator
/// classes, the probabilistic tail, and the overall success probability.
inline VerificationReport verify(const Protocol& proto, const BipartiteState& aIn,
                                 const BipartiteState& bIn, double tol = kDefaultTol) {
    if (proto.stage1.empty())
        throw DimensionError("verify: protocol has no measurement branches");
    const std::size_t n = proto.stage1.front().m.cols();
    const std::size_t m = proto.stage1.front().u.cols();
    if (aIn.dimA() > n || aIn.dimB() > m)
        throw DimensionError("verify: state is larger than the protocol's ambient space");
    const BipartiteState a = aIn.padded(n, m);

    VerificationReport rep;
    ComplexMatrix gram = proto.m0.adjoint() * proto.m0;
    double weightSum = 0.0;
    const ComplexMatrix& qRef = proto.intermediate.matrix();

    std::vector<ComplexMatrix> outputs;
    outputs.reserve(proto.stage1.size());
    for (std::size_t k = 0; k < proto.stage1.size(); ++k) {
        const InstrumentElement& el = proto.stage1[k];
        if (el.m.cols() != n || el.u.cols() != m)
            throw DimensionError("verify: inconsistent element shapes");
        gram = gram + el.m.adjoint() * el.m;
        weightSum += el.q;

        ComplexMatrix out = el.m * a.matrix() * el.u.transpose();
        const double w = frobenius_norm(out);
        auto [residual, c] = detail::factor_against(out, qRef);
        const double weightErr = std::max(std::abs(std::norm(c) - el.q), std::abs(w * w - el.q));
        rep.branchErrors.push_back(BranchError{k, residual, weightErr});
        rep.maxUnitarityError = std::max(rep.maxUnitarityError, detail::unitarity_error(el.u));
        rep.contractionExcess = std::max(rep.contractionExcess, operator_norm(el.m) - 1.0);
        outputs.push_back(std::move(out));
    }
    rep.completenessError = frobenius_norm(gram - ComplexMatrix::identity(n));
    rep.weightSumError = std::abs(weightSum - 1.0);

    if (proto.stage2) {
        const ProbabilisticTail& tail = *proto.stage2;
        rep.stage2CompletenessError = frobenius_norm(
            tail.n.adjoint() * tail.n + tail.nFail.adjoint() * tail.nFail -
            ComplexMatrix::identity(tail.n.cols()));
        rep.maxUnitarityError = std::max(rep.maxUnitarityError, detail::unitarity_error(tail.v));
        rep.contractionExcess = std::max(rep.contractionExcess, operator_norm(tail.n) - 1.0);

        const ComplexMatrix bRef = bIn.padded(tail.n.rows(), tail.v.rows()).matrix();
        const ComplexMatrix success = tail.n * qRef * tail.v.transpose();
        auto [residual, c] = detail::factor_against(success, bRef);
        rep.stage2ProportionalityError =
            std::max(residual, std::abs(std::norm(c) - tail.p));

        double measured = 0.0;
        for (const ComplexMatrix& out : outputs) {
            const double w = frobenius_norm(tail.n * out * tail.v.transpose());
            measured += w * w;
        }
        rep.measuredSuccessProbability = measured;
    } else {
        // Without a tail every branch is a success; outputs must match b.
        const ComplexMatrix bRef = bIn.padded(n, m).matrix();
        double measured = 0.0;
        for (std::size_t k = 0; k < outputs.size(); ++k) {
            auto [residual, c] = detail::factor_against(outputs[k], bRef);
            rep.branchErrors[k].proportionalityError =
                std::max(rep.branchErrors[k].proportionalityError, residual);
            const double w = frobenius_norm(outputs[k]);
            measured += w * w;
        }
        rep.measuredSuccessProbability = measured;
    }
    rep.probabilityError = std::abs(rep.measuredSuccessProbability - proto.declaredProbability);

    double worstBranch = 0.0;
    for (const BranchError& be : rep.branchErrors)
        worstBranch = std::max({worstBranch, be.proportionalityError, be.weightError});
    rep.pass = rep.completenessError <= tol && rep.weightSumError <= tol && worstBranch <= tol &&
               rep.maxUnitarityError <= tol && rep.contractionExcess <= tol &&
               rep.stage2CompletenessError <= tol && rep.stage2ProportionalityError <= tol &&
               rep.probabilityError <= tol;
    return rep;
}

/// Monte-Carlo run of a protocol. Outcome index stage1.size() is the
/// completion element m0 (never hit for states inside the instrument's
/// support); success means the stage-2 contraction fired, or any branch when
/// there is no stage 2.
struct SimulationResult {
    std::size_t trials = 0;
    std::uint64_t seed = 0;
    std::map<std::size_t, std::uint64_t> outcomeCounts;
    std::uint64_t successCount = 0;
    double empiricalP = 0.0;
};

/// Sample outcomes trial by trial. Each trial draws from its own stream
/// derived from (seed, trialIndex), so the result is identical for any worker
/// count and any scheduling.
inline SimulationResult simulate(const Protocol& proto, const BipartiteState& aIn,
                                 std::size_t trials, std::uint64_t seed, unsigned workers = 1) {
    if (proto.stage1.empty())
        throw DimensionError("simulate: protocol has no measurement branches");
    const std::size_t n = proto.stage1.front().m.cols();
    const std::size_t m = proto.stage1.front().u.cols();
    const BipartiteState a = aIn.padded(n, m);

    const std::size_t branches = proto.stage1.size();
    std::vector<double> weight(branches + 1, 0.0);
    std::vector<double> condSuccess(branches + 1, 0.0);
    for (std::size_t k = 0; k < branches; ++k) {
        const InstrumentElement& el = proto.stage1[k];
        ComplexMatrix out = el.m * a.matrix() * el.u.transpose();
        const double w = frobenius_norm(out);
        weight[k] = w * w;
        if (proto.stage2 && weight[k] > 0.0) {
            const double ws = frobenius_norm(proto.stage2->n * out * proto.stage2->v.transpose());
            condSuccess[k] = ws * ws / weight[k];
        } else {
            condSuccess[k] = proto.stage2 ? 0.0 : 1.0;
        }
    }
    {
        const double w0 = frobenius_norm(proto.m0 * a.matrix());
        weight[branches] = w0 * w0; // completion branch, never a success
    }
    const double total = std::accumulate(weight.begin(), weight.end(), 0.0);

    auto runRange = [&](std::size_t lo, std::size_t hi, std::vector<std::uint64_t>& counts,
                        std::uint64_t& successes) {
        for (std::size_t trial = lo; trial < hi; ++trial) {
            SplitMix64 rng = trial_stream(seed, trial);
            const double u1 = rng.uniform() * total;
            std::size_t pick = branches;
            double acc = 0.0;
            for (std::size_t k = 0; k <= branches; ++k) {
                acc += weight[k];
                if (u1 < acc) {
                    pick = k;
                    break;
                }
            }
            ++counts[pick];
            if (pick < branches) {
                if (!proto.stage2 || rng.uniform() < condSuccess[pick]) ++successes;
            }
        }
    };

    SimulationResult result;
    result.trials = trials;
    result.seed = seed;
    if (workers <= 1) {
        std::vector<std::uint64_t> counts(branches + 1, 0);
        runRange(0, trials, counts, result.successCount);
        for (std::size_t k = 0; k <= branches; ++k)
            if (counts[k] > 0) result.outcomeCounts[k] = counts[k];
    } else {
        std::vector<std::vector<std::uint64_t>> counts(workers,
                                                       std::vector<std::uint64_t>(branches + 1, 0));
        std::vector<std::uint64_t> successes(workers, 0);
        std::vector<std::thread> pool;
        const std::size_t chunk = (trials + workers - 1) / workers;
        for (unsigned w = 0; w < workers; ++w) {
            const std::size_t lo = std::min<std::size_t>(trials, w * chunk);
            const std::size_t hi = std::min<std::size_t>(trials, lo + chunk);
            pool.emplace_back([&, w, lo, hi] { runRange(lo, hi, counts[w], successes[w]); });
        }
        for (auto& t : pool) t.join();
        for (unsigned w = 0; w < workers; ++w) {
            result.successCount += successes[w];
            for (std::size_t k = 0; k <= branches; ++k)
                if (counts[w][k] > 0) result.outcomeCounts[k] += counts[w][k];
        }
    }
    result.empiricalP =
        trials == 0 ? 0.0 : static_cast<double>(result.successCount) / static_cast<double>(trials);
    return result;
}

/// Definitional majorization relations, recomputed by direct summation on
/// sorted copies. Test oracle; shares no code with the majorization module.
struct MajorizationFlags {
    bool prec = false;
    bool prec_super = false;
    bool prec_sub = false;
};

inline MajorizationFlags oracle_majorization(std::vector<double> x, std::vector<double> y,
                                             double tol = kDefaultTol) {
    const std::size_t n = std::max(x.size(), y.size());
    x.resize(n, 0.0);
    y.resize(n, 0.0);
    std::sort(x.begin(), x.end(), std::greater<double>());
    std::sort(y.begin(), y.end(), std::greater<double>());

    MajorizationFlags f;
    f.prec = true;
    f.prec_super = true;
    f.prec_sub = true;
    for (std::size_t l = 1; l <= n; ++l) {
        double hx = 0.0, hy = 0.0, tx = 0.0, ty = 0.0;
        for (std::size_t i = 0; i < l; ++i) {
            hx += x[i];
            hy += y[i];
        }
        for (std::size_t i = l - 1; i < n; ++i) {
            tx += x[i];
            ty += y[i];
        }
        if (hx > hy + tol) {
            f.prec = false;
            f.prec_sub = false;
        }
        if (tx < ty - tol) f.prec_super = false;
    }
    double sx = 0.0, sy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sx += x[i];
        sy += y[i];
    }
    if (std::abs(sx - sy) > tol) f.prec = false;
    return f;
}

/// Apply every stage-1 element (and the completion element, last) to the
/// state by explicit index loops, bypassing the matrix product operator.
struct BranchOutput {
    ComplexMatrix state;
    double weight;
};

inline std::vector<BranchOutput> oracle_protocol_apply(const Protocol& proto,
                                                       const BipartiteState& aIn) {
    const std::size_t n = proto.stage1.front().m.cols();
    const std::size_t m = proto.stage1.front().u.cols();
    const ComplexMatrix a = aIn.padded(n, m).matrix();

    auto applyBranch = [&](const ComplexMatrix& mOp, const ComplexMatrix* uOp) {
        const std::size_t outRows = mOp.rows();
        const std::size_t outCols = uOp ? uOp->rows() : m;
        ComplexMatrix out(outRows, outCols);
        double w = 0.0;
        for (std::size_t i = 0; i < outRows; ++i) {
            for (std::size_t j = 0; j < outCols; ++j) {
                Complex s{0.0, 0.0};
                for (std::size_t k = 0; k < n; ++k) {
                    Complex row{0.0, 0.0};
                    for (std::size_t l = 0; l < m; ++l)
                        row += a(k, l) * (uOp ? (*uOp)(j, l) : Complex{l == j ? 1.0 : 0.0, 0.0});
                    s += mOp(i, k) * row;
                }
                out(i, j) = s;
                w += std::norm(s);
            }
        }
        return BranchOutput{std::move(out), w};
    };

    std::vector<BranchOutput> result;
    result.reserve(proto.stage1.size() + 1);
    for (const InstrumentElement& el : proto.stage1) result.push_back(applyBranch(el.m, &el.u));
    result.push_back(applyBranch(proto.m0, nullptr));
    return result;
}

} // namespace locc
