#pragma once

#include <cstdint>
#include <cstdio>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "locc/io.hpp"
#include "locc/protocol.hpp"
#include "locc/states.hpp"
#include "locc/verify.hpp"

namespace locc::cli {

enum class Format { human, structured };

// Exit codes, stable across commands:
//   0 success, 1 usage or I/O error, 2 infeasible request, 3 verification failure.

namespace detail {

inline std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

inline std::string spectrum_text(const SpectrumVector& s) {
    std::string out = "[";
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (i) out += ", ";
        out += fmt(s[i]);
    }
    return out + "]";
}

inline io::json spectrum_json(const SpectrumVector& s) {
    io::json arr = io::json::array();
    for (std::size_t i = 0; i < s.size(); ++i) arr.push_back(s[i]);
    return arr;
}

template <typename Fn>
int guarded(std::ostream& err, Fn&& fn) {
    try {
        return fn();
    } catch (const ParseError& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    } catch (const DimensionError& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    } catch (const InfeasibleTarget& e) {
        err << "infeasible: " << e.what() << "\n";
        return 2;
    } catch (const NotAContraction& e) {
        err << "infeasible: " << e.what() << "\n";
        return 2;
    } catch (const PreconditionError& e) {
        err << "infeasible: " << e.what() << "\n";
        return 2;
    } catch (const ConvergenceError& e) {
        err << "numerical failure: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
}

inline void warn_norm(const io::LoadedState& ls, const std::string& label, std::ostream& err) {
    if (std::abs(ls.scale - 1.0) > 1e-6)
        err << "warning: " << label << " was normalized on load (norm was " << fmt(ls.scale)
            << ")\n";
}

} // namespace detail

/// Feasibility report for a pair of state files.
inline int cmd_check(const std::string& pathA, const std::string& pathB, double tol, Format format,
                     std::ostream& out, std::ostream& err) {
    return detail::guarded(err, [&]() -> int {
        const io::LoadedState a = io::load_state(pathA);
        const io::LoadedState b = io::load_state(pathB);
        detail::warn_norm(a, "state A", err);
        detail::warn_norm(b, "state B", err);

        const SchmidtForm sa = schmidt(a.state);
        const SchmidtForm sb = schmidt(b.state);
        const FeasibilityResult feas = feasibility(a.state, b.state, tol);

        if (format == Format::structured) {
            io::json j{{"spectrumA", detail::spectrum_json(sa.coefficients)},
                       {"spectrumB", detail::spectrum_json(sb.coefficients)},
                       {"rankA", sa.rank},
                       {"rankB", sb.rank},
                       {"rankOk", feas.rankOk},
                       {"deterministic", feas.deterministic},
                       {"pMax", feas.pMax}};
            out << j.dump(1) << "\n";
        } else {
            out << "state A: " << a.state.dimA() << "x" << a.state.dimB() << ", schmidt spectrum "
                << detail::spectrum_text(sa.coefficients) << ", rank " << sa.rank << "\n";
            out << "state B: " << b.state.dimA() << "x" << b.state.dimB() << ", schmidt spectrum "
                << detail::spectrum_text(sb.coefficients) << ", rank " << sb.rank << "\n";
            if (feas.rankOk)
                out << "rank condition (rank A >= rank B): ok\n";
            else
                out << "rank condition: FAILED, rank(A) < rank(B)\n";
            out << "deterministic: " << (feas.deterministic ? "yes" : "no") << "\n";
            out << "pMax = " << detail::fmt(feas.pMax) << "\n";
        }
        return feas.pMax > 0.0 ? 0 : 2;
    });
}

/// Synthesize a protocol file for A -> B at the requested (or maximal)
/// success probability; the protocol is verified before it is written.
inline int cmd_synth(const std::string& pathA, const std::string& pathB,
                     std::optional<double> prob, const std::string& outPath, double tol,
                     Format format, std::ostream& out, std::ostream& err) {
    return detail::guarded(err, [&]() -> int {
        const io::LoadedState a = io::load_state(pathA);
        const io::LoadedState b = io::load_state(pathB);
        detail::warn_norm(a, "state A", err);
        detail::warn_norm(b, "state B", err);

        const FeasibilityResult feas = feasibility(a.state, b.state, tol);
        if (!feas.rankOk) {
            err << "infeasible: rank(A) < rank(B)\n";
            return 2;
        }
        const double p = prob.value_or(feas.pMax);
        if (p > feas.pMax + 1e-12) {
            err << "infeasible: requested p = " << detail::fmt(p) << " exceeds pMax = "
                << detail::fmt(feas.pMax) << "\n";
            return 2;
        }

        const Protocol proto = full_pipeline(a.state, b.state, p, tol);
        const VerificationReport rep = verify(proto, a.state, b.state, tol);
        if (!rep.pass) {
            err << "verification of the synthesized protocol failed\n";
            return 3;
        }
        io::save_protocol(outPath, proto, a.digest, b.digest);

        const std::size_t specLen = std::min(proto.intermediate.dimA(), proto.intermediate.dimB());
        const std::size_t bound = (specLen - 1) * (specLen - 1) + 1;
        if (format == Format::structured) {
            io::json j{{"p", proto.declaredProbability},
                       {"pMax", feas.pMax},
                       {"branches", proto.stage1.size()},
                       {"caratheodoryBound", bound},
                       {"stage2", proto.stage2.has_value()},
                       {"output", outPath}};
            out << j.dump(1) << "\n";
        } else {
            out << "pMax = " << detail::fmt(feas.pMax) << "\n";
            out << "declared p = " << detail::fmt(proto.declaredProbability) << "\n";
            out << "stage1 branches: " << proto.stage1.size() << " (caratheodory bound: " << bound
                << ")\n";
            out << "stage2: " << (proto.stage2 ? "present" : "none") << "\n";
            out << "wrote " << outPath << "\n";
        }
        return 0;
    });
}

/// Re-verify a protocol file against the two state files.
inline int cmd_verify(const std::string& pathP, const std::string& pathA, const std::string& pathB,
                      double tol, Format format, std::ostream& out, std::ostream& err) {
    return detail::guarded(err, [&]() -> int {
        const io::ProtocolFileData pf = io::load_protocol(pathP);
        const io::LoadedState a = io::load_state(pathA);
        const io::LoadedState b = io::load_state(pathB);
        const bool digestsMatch = pf.sourceDigest == a.digest && pf.targetDigest == b.digest;

        const Protocol proto = io::to_protocol(pf, a.state);
        const VerificationReport rep = verify(proto, a.state, b.state, tol);

        if (format == Format::structured) {
            io::json branches = io::json::array();
            for (const BranchError& be : rep.branchErrors)
                branches.push_back(io::json{{"index", be.index},
                                            {"proportionalityError", be.proportionalityError},
                                            {"weightError", be.weightError}});
            io::json j{{"digestsMatch", digestsMatch},
                       {"completenessError", rep.completenessError},
                       {"weightSumError", rep.weightSumError},
                       {"maxUnitarityError", rep.maxUnitarityError},
                       {"contractionExcess", rep.contractionExcess},
                       {"stage2CompletenessError", rep.stage2CompletenessError},
                       {"stage2ProportionalityError", rep.stage2ProportionalityError},
                       {"measuredSuccessProbability", rep.measuredSuccessProbability},
                       {"probabilityError", rep.probabilityError},
                       {"branches", std::move(branches)},
                       {"pass", rep.pass}};
            out << j.dump(1) << "\n";
        } else {
            if (!digestsMatch)
                err << "warning: state digests do not match the protocol file\n";
            out << "completeness error: " << detail::fmt(rep.completenessError) << "\n";
            for (const BranchError& be : rep.branchErrors)
                out << "branch " << be.index << ": proportionality "
                    << detail::fmt(be.proportionalityError) << ", weight "
                    << detail::fmt(be.weightError) << "\n";
            if (proto.stage2) {
                out << "stage2 completeness error: " << detail::fmt(rep.stage2CompletenessError)
                    << "\n";
                out << "stage2 proportionality error: "
                    << detail::fmt(rep.stage2ProportionalityError) << "\n";
            }
            out << "measured success probability: " << detail::fmt(rep.measuredSuccessProbability)
                << "\n";
            out << "declared probability: " << detail::fmt(proto.declaredProbability) << "\n";
            out << "result: " << (rep.pass ? "PASS" : "FAIL") << "\n";
        }
        return rep.pass ? 0 : 3;
    });
}

/// Monte-Carlo outcome frequencies for a protocol file on a source state.
inline int cmd_simulate(const std::string& pathP, const std::string& pathA, std::size_t trials,
                        std::uint64_t seed, unsigned workers, double tol, Format format,
                        std::ostream& out, std::ostream& err) {
    (void)tol;
    return detail::guarded(err, [&]() -> int {
        const io::ProtocolFileData pf = io::load_protocol(pathP);
        const io::LoadedState a = io::load_state(pathA);
        const Protocol proto = io::to_protocol(pf, a.state);
        const SimulationResult res = simulate(proto, a.state, trials, seed, workers);

        if (format == Format::structured) {
            io::json counts = io::json::object();
            for (const auto& [outcome, count] : res.outcomeCounts)
                counts[std::to_string(outcome)] = count;
            io::json j{{"trials", res.trials},
                       {"seed", res.seed},
                       {"outcomeCounts", std::move(counts)},
                       {"successCount", res.successCount},
                       {"empiricalP", res.empiricalP}};
            out << j.dump(1) << "\n";
        } else {
            out << "trials: " << res.trials << "  seed: " << res.seed << "\n";
            char buf[64];
            for (const auto& [outcome, count] : res.outcomeCounts) {
                const double freq =
                    static_cast<double>(count) / static_cast<double>(res.trials);
                std::snprintf(buf, sizeof buf, "%.6f", freq);
                out << "outcome " << outcome << ": " << count << "  (" << buf << ")\n";
            }
            std::snprintf(buf, sizeof buf, "%.6f", res.empiricalP);
            out << "successes: " << res.successCount << "\n";
            out << "empirical p = " << buf << "\n";
        }
        return 0;
    });
}

/// Convert a Bob-side contraction into an Alice contraction plus a Bob
/// unitary for the given state, and write the pair.
inline int cmd_lopopescu(const std::string& pathM, const std::string& pathPsi,
                         const std::string& outPath, double tol, Format format, std::ostream& out,
                         std::ostream& err) {
    return detail::guarded(err, [&]() -> int {
        const ComplexMatrix m = io::load_matrix(pathM);
        const io::LoadedState psi = io::load_state(pathPsi);
        detail::warn_norm(psi, "state", err);

        const LoPopescuResult lp = lo_popescu(m, psi.state, tol);
        const std::size_t s = lp.nAlice.rows();
        const ComplexMatrix psiPad = psi.state.matrix().padded(s, s);
        const double residual = frobenius_norm(psiPad * m.padded(s, s).transpose() -
                                               lp.nAlice * psiPad * lp.uBob.transpose());

        io::json j{{"version", 1},
                   {"n", io::matrix_to_json(lp.nAlice)},
                   {"u", io::matrix_to_json(lp.uBob)}};
        io::save_json_file(outPath, j);

        if (format == Format::structured) {
            io::json r{{"residual", residual}, {"ambientDim", s}, {"output", outPath}};
            out << r.dump(1) << "\n";
        } else {
            out << "identity residual: " << detail::fmt(residual) << "\n";
            out << "wrote " << outPath << "\n";
        }
        return 0;
    });
}

} // namespace locc::cli
