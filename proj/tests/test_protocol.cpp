#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "locc/protocol.hpp"
#include "locc/states.hpp"
#include "test_support.hpp"

using namespace locc;
using testsupport::random_contraction;
using testsupport::random_majorizing_pair;
using testsupport::random_spectrum;
using testsupport::random_state;
using testsupport::random_unitary;
using testsupport::rotated_state;

namespace {

BipartiteState bell2() { return from_amplitudes({1.0, 0.0, 0.0, 1.0}, 2, 2).state; }

BipartiteState diag_state(std::vector<double> spectrum) {
    std::vector<double> roots(spectrum.size());
    for (std::size_t i = 0; i < roots.size(); ++i) roots[i] = std::sqrt(spectrum[i]);
    return BipartiteState(ComplexMatrix::diagonal(roots));
}

/// Spectrum pair (x, y) with x majorized by y, wrapped in random local bases.
std::pair<BipartiteState, BipartiteState> random_deterministic_pair(std::mt19937_64& rng,
                                                                    std::size_t n) {
    auto [x, y] = random_majorizing_pair(rng, n);
    return {rotated_state(rng, x), rotated_state(rng, y)};
}

} // namespace

TEST_CASE("feasibility on the worked instances") {
    const BipartiteState bell = bell2();
    const BipartiteState skew = diag_state({0.8, 0.2});

    const FeasibilityResult same = feasibility(bell, bell);
    CHECK(same.deterministic);
    CHECK(same.pMax == 1.0);
    CHECK(same.rankOk);

    const FeasibilityResult concentrate = feasibility(bell, skew);
    CHECK(concentrate.deterministic);
    CHECK(concentrate.pMax == 1.0);

    const FeasibilityResult dilute = feasibility(skew, bell);
    CHECK_FALSE(dilute.deterministic);
    CHECK(dilute.pMax == Catch::Approx(0.4).margin(1e-12));
    CHECK(dilute.rankOk);

    const FeasibilityResult impossible = feasibility(diag_state({1.0, 0.0}), bell);
    CHECK_FALSE(impossible.rankOk);
    CHECK(impossible.pMax == 0.0);
}

TEST_CASE("deterministic feasibility in both directions means equal spectra") {
    std::mt19937_64 rng(61);
    for (int iter = 0; iter < 30; ++iter) {
        const auto x = random_spectrum(rng, 4);
        const BipartiteState s1 = rotated_state(rng, x);
        const BipartiteState s2 = rotated_state(rng, x);
        CHECK(feasibility(s1, s2).deterministic);
        CHECK(feasibility(s2, s1).deterministic);

        auto [lo, hi] = random_majorizing_pair(rng, 4);
        const BipartiteState a = rotated_state(rng, lo);
        const BipartiteState b = rotated_state(rng, hi);
        const bool forward = feasibility(a, b).deterministic;
        const bool backward = feasibility(b, a).deterministic;
        const bool equalSpectra = prec(SpectrumVector(lo), SpectrumVector(hi)) &&
                                  prec(SpectrumVector(hi), SpectrumVector(lo));
        CHECK((forward && backward) == equalSpectra);
    }
}

TEST_CASE("synth_pure defaults") {
    SECTION("identity conversion is a local unitary relabeling") {
        std::mt19937_64 rng(67);
        const BipartiteState a = random_state(rng, 3, 3);
        const PureTransform pt = synth_pure(a, a, 1.0);
        CHECK(is_unitary(pt.m, 1e-9));
        CHECK(is_unitary(pt.u, 1e-9));
    }
    SECTION("worked probabilistic instance") {
        const PureTransform pt = synth_pure(diag_state({0.8, 0.2}), bell2(), 0.4);
        const SvdFactors f = svd(pt.m);
        CHECK(f.sigma[0] == Catch::Approx(1.0).margin(1e-12));
        CHECK(f.sigma[1] == Catch::Approx(0.5).margin(1e-12));
        const LocalBranch out = apply_local(pt.m, pt.u, diag_state({0.8, 0.2}));
        CHECK(out.weight == Catch::Approx(0.4).margin(1e-12));
        const Proportionality prop = proportional(out.state, bell2().matrix(), 1e-9);
        CHECK(prop.proportional);
    }
    SECTION("infeasible pure target") {
        CHECK_THROWS_AS(synth_pure(bell2(), diag_state({1.0, 0.0}), 1.0), NotAContraction);
        CHECK_FALSE(check_pure_necessary(bell2(), diag_state({1.0, 0.0}), 1.0));
    }
    SECTION("rank violation") {
        CHECK_THROWS_AS(synth_pure(diag_state({1.0, 0.0}), bell2(), 0.3), PreconditionError);
    }
    SECTION("probability domain") {
        CHECK_THROWS_AS(synth_pure(bell2(), bell2(), 0.0), PreconditionError);
        CHECK_THROWS_AS(synth_pure(bell2(), bell2(), 1.5), PreconditionError);
    }
}

TEST_CASE("synth_pure accepts explicit free operator and unitary") {
    std::mt19937_64 rng(71);
    const BipartiteState a = diag_state({0.7, 0.3});
    const BipartiteState b = diag_state({0.6, 0.4});
    // defaults first, then the same with N supplied: output identity must survive
    const PureTransform base = synth_pure(a, b, 0.5);
    const ComplexMatrix n = random_contraction(rng, 2) * Complex{0.05, 0.0};
    const PureTransform withN = synth_pure(a, b, 0.5, n, base.u);
    const LocalBranch out = apply_local(withN.m, withN.u, a);
    const Proportionality prop = proportional(out.state, b.matrix(), 1e-9);
    CHECK(prop.proportional);
    CHECK(std::norm(prop.factor) == Catch::Approx(0.5).margin(1e-10));
}

TEST_CASE("check_pure_necessary") {
    CHECK(check_pure_necessary(diag_state({0.8, 0.2}), bell2(), 0.4));
    CHECK(check_pure_necessary(bell2(), diag_state({0.8, 0.2}), 0.01));
    CHECK_FALSE(check_pure_necessary(bell2(), diag_state({1.0, 0.0}), 1.0));
}

TEST_CASE("build_intermediate") {
    SECTION("deterministic case reproduces the target spectrum") {
        const BipartiteState q = build_intermediate(bell2(), diag_state({0.8, 0.2}), 1.0);
        const SchmidtForm sf = schmidt(q);
        CHECK(sf.coefficients[0] == Catch::Approx(0.8).margin(1e-12));
        CHECK(sf.coefficients[1] == Catch::Approx(0.2).margin(1e-12));
    }
    SECTION("worked probabilistic instances") {
        const BipartiteState q = build_intermediate(diag_state({0.8, 0.2}), bell2(), 0.4);
        const SchmidtForm sf = schmidt(q);
        CHECK(sf.coefficients[0] == Catch::Approx(0.8).margin(1e-12));
        CHECK(sf.coefficients[1] == Catch::Approx(0.2).margin(1e-12));

        const BipartiteState q3 =
            build_intermediate(diag_state({0.5, 0.3, 0.2}), diag_state({1.0 / 3, 1.0 / 3, 1.0 / 3}), 0.6);
        const SchmidtForm sf3 = schmidt(q3);
        CHECK(sf3.coefficients[0] == Catch::Approx(0.6).margin(1e-12));
        CHECK(sf3.coefficients[1] == Catch::Approx(0.2).margin(1e-12));
        CHECK(sf3.coefficients[2] == Catch::Approx(0.2).margin(1e-12));
    }
    SECTION("rejects p above pMax") {
        CHECK_THROWS_AS(build_intermediate(diag_state({0.8, 0.2}), bell2(), 0.5),
                        PreconditionError);
    }
}

TEST_CASE("synth_deterministic on the worked instrument") {
    const BipartiteState bell = bell2();
    const BipartiteState q = diag_state({0.8, 0.2});
    const DeterministicInstrument inst = synth_deterministic(bell, q);
    REQUIRE(inst.elements.size() == 2);
    CHECK(inst.elements[0].q == Catch::Approx(0.5).margin(1e-12));
    CHECK(inst.elements[1].q == Catch::Approx(0.5).margin(1e-12));

    // gauge is exact here: the source and target matrices are diagonal
    const double r8 = std::sqrt(0.8), r2 = std::sqrt(0.2);
    const ComplexMatrix m1 = ComplexMatrix::diagonal({r8, r2});
    const ComplexMatrix m2{{0.0, r8}, {r2, 0.0}};
    const bool firstIsDiag = std::abs(inst.elements[0].m(0, 0)) > 0.5;
    const ComplexMatrix& ma = firstIsDiag ? inst.elements[0].m : inst.elements[1].m;
    const ComplexMatrix& mb = firstIsDiag ? inst.elements[1].m : inst.elements[0].m;
    CHECK(frobenius_norm(ma - m1) < 1e-10);
    CHECK(frobenius_norm(mb - m2) < 1e-10);

    ComplexMatrix gram = inst.m0.adjoint() * inst.m0;
    for (const auto& el : inst.elements) gram = gram + el.m.adjoint() * el.m;
    CHECK(frobenius_norm(gram - ComplexMatrix::identity(2)) < 1e-10);

    for (const auto& el : inst.elements) {
        const LocalBranch out = apply_local(el.m, el.u, bell);
        const Proportionality prop = proportional(out.state, q.matrix(), 1e-9);
        CHECK(prop.proportional);
        CHECK(out.weight == Catch::Approx(el.q).margin(1e-10));
    }
}

TEST_CASE("synth_deterministic identity instrument") {
    std::mt19937_64 rng(73);
    const BipartiteState a = random_state(rng, 3, 3);
    const DeterministicInstrument inst = synth_deterministic(a, a);
    REQUIRE(inst.elements.size() == 1);
    CHECK(inst.elements[0].q == Catch::Approx(1.0).margin(1e-12));
    const LocalBranch out = apply_local(inst.elements[0].m, inst.elements[0].u, a);
    const Proportionality prop = proportional(out.state, a.matrix(), 1e-9);
    CHECK(prop.proportional);
    CHECK(out.weight == Catch::Approx(1.0).margin(1e-10));
}

TEST_CASE("synth_deterministic postconditions on random instances") {
    std::mt19937_64 rng(79);
    for (int iter = 0; iter < 60; ++iter) {
        std::uniform_int_distribution<std::size_t> dims(2, 6);
        const std::size_t n = dims(rng);
        auto [a, q] = random_deterministic_pair(rng, n);

        const DeterministicInstrument inst = synth_deterministic(a, q);
        CHECK(inst.elements.size() <= (n - 1) * (n - 1) + 1);

        ComplexMatrix gram = inst.m0.adjoint() * inst.m0;
        double qSum = 0.0;
        for (const auto& el : inst.elements) {
            gram = gram + el.m.adjoint() * el.m;
            qSum += el.q;
            CHECK(is_contraction(el.m, 1e-9));
            CHECK(is_unitary(el.u, 1e-9));
            const LocalBranch out = apply_local(el.m, el.u, a);
            const Proportionality prop = proportional(out.state, q.matrix(), 1e-9);
            CHECK(prop.proportional);
            CHECK(out.weight == Catch::Approx(el.q).margin(1e-9));
        }
        CHECK(qSum == Catch::Approx(1.0).margin(1e-9));
        CHECK(frobenius_norm(gram - ComplexMatrix::identity(n)) < 1e-9);

        // mixing identity: sum_l q_l W_l^dag QQ^dag W_l = AA^dag
        const ComplexMatrix qq = q.matrix() * q.matrix().adjoint();
        ComplexMatrix mix(n, n);
        for (std::size_t k = 0; k < inst.elements.size(); ++k) {
            const ComplexMatrix& w = inst.mixingUnitaries[k];
            CHECK(is_unitary(w, 1e-9));
            mix = mix + Complex{inst.elements[k].q, 0.0} * (w.adjoint() * qq * w);
        }
        const ComplexMatrix aa = a.matrix() * a.matrix().adjoint();
        CHECK(frobenius_norm(mix - aa) < 1e-9);
    }
}

TEST_CASE("synth_deterministic rejects non-majorized targets") {
    CHECK_THROWS_AS(synth_deterministic(diag_state({0.8, 0.2}), bell2()), PreconditionError);
}

TEST_CASE("probabilistic tail") {
    SECTION("worked instance, exact gauge") {
        const ProbabilisticTail tail = synth_probabilistic_tail(diag_state({0.8, 0.2}), bell2(), 0.4);
        CHECK(std::abs(tail.n(0, 0) - Complex{0.5, 0.0}) < 1e-12);
        CHECK(std::abs(tail.n(1, 1) - Complex{1.0, 0.0}) < 1e-12);
        CHECK(std::abs(tail.n(0, 1)) < 1e-12);
        CHECK(std::abs(tail.nFail(0, 0) - Complex{std::sqrt(3.0) / 2.0, 0.0}) < 1e-12);
        CHECK(std::abs(tail.nFail(1, 1)) < 1e-12);
        CHECK(is_unitary(tail.v, 1e-10));
    }
    SECTION("deterministic limit keeps the target") {
        std::mt19937_64 rng(83);
        const auto y = random_spectrum(rng, 3);
        const BipartiteState q = rotated_state(rng, y);
        const BipartiteState b = rotated_state(rng, y);
        const ProbabilisticTail tail = synth_probabilistic_tail(q, b, 1.0);
        const ComplexMatrix out = tail.n * q.matrix() * tail.v.transpose();
        CHECK(frobenius_norm(out - b.matrix()) < 1e-9);
    }
    SECTION("random instances satisfy the contracts") {
        std::mt19937_64 rng(89);
        for (int iter = 0; iter < 60; ++iter) {
            std::uniform_int_distribution<std::size_t> dims(2, 6);
            const std::size_t n = dims(rng);
            std::uniform_real_distribution<double> pd(0.1, 1.0);
            const double p = pd(rng);
            auto bSpec = random_spectrum(rng, n);
            auto extra = random_spectrum(rng, n);
            std::sort(bSpec.begin(), bSpec.end(), std::greater<double>());
            std::sort(extra.begin(), extra.end(), std::greater<double>());
            std::vector<double> qSpec(n);
            for (std::size_t i = 0; i < n; ++i) qSpec[i] = p * bSpec[i] + (1.0 - p) * extra[i];

            const BipartiteState q = rotated_state(rng, qSpec);
            const BipartiteState b = rotated_state(rng, bSpec);
            const ProbabilisticTail tail = synth_probabilistic_tail(q, b, p);
            CHECK(is_contraction(tail.n, 1e-9));
            CHECK(is_unitary(tail.v, 1e-9));
            const ComplexMatrix out = tail.n * q.matrix() * tail.v.transpose();
            CHECK(frobenius_norm(out - b.matrix() * Complex{std::sqrt(p), 0.0}) < 1e-9);
            const ComplexMatrix comp =
                tail.n.adjoint() * tail.n + tail.nFail.adjoint() * tail.nFail;
            CHECK(frobenius_norm(comp - ComplexMatrix::identity(n)) < 1e-9);
        }
    }
    SECTION("rejects a dominated intermediate") {
        CHECK_THROWS_AS(synth_probabilistic_tail(diag_state({0.8, 0.2}), bell2(), 0.9),
                        PreconditionError);
    }
}

TEST_CASE("full pipeline composes the stages") {
    SECTION("deterministic concentration") {
        const Protocol proto = full_pipeline(bell2(), diag_state({0.8, 0.2}));
        CHECK(proto.declaredProbability == 1.0);
        CHECK_FALSE(proto.stage2.has_value());
        CHECK(proto.stage1.size() == 2);
    }
    SECTION("probabilistic dilution at pMax") {
        const Protocol proto = full_pipeline(diag_state({0.8, 0.2}), bell2());
        CHECK(proto.declaredProbability == Catch::Approx(0.4).margin(1e-12));
        REQUIRE(proto.stage2.has_value());
        CHECK(proto.stage1.size() == 1);
        const SvdFactors f = svd(proto.stage2->n);
        CHECK(f.sigma[0] == Catch::Approx(1.0).margin(1e-9));
        CHECK(f.sigma[1] == Catch::Approx(0.5).margin(1e-9));
    }
    SECTION("three level instance at the default pMax") {
        const Protocol proto =
            full_pipeline(diag_state({0.5, 0.3, 0.2}), diag_state({1.0 / 3, 1.0 / 3, 1.0 / 3}));
        CHECK(proto.declaredProbability == Catch::Approx(0.6).margin(1e-12));
        const SchmidtForm sf = schmidt(proto.intermediate);
        CHECK(sf.coefficients[0] == Catch::Approx(0.6).margin(1e-12));
        CHECK(sf.coefficients[1] == Catch::Approx(0.2).margin(1e-12));
        CHECK(sf.coefficients[2] == Catch::Approx(0.2).margin(1e-12));
    }
    SECTION("a target below pMax is honored exactly") {
        const Protocol proto = full_pipeline(diag_state({0.8, 0.2}), bell2(), 0.2);
        CHECK(proto.declaredProbability == Catch::Approx(0.2).margin(1e-15));
        const SchmidtForm sf = schmidt(proto.intermediate);
        CHECK(sf.coefficients[0] == Catch::Approx(0.9).margin(1e-12));
        CHECK(sf.coefficients[1] == Catch::Approx(0.1).margin(1e-12));
    }
    SECTION("rejects impossible targets") {
        CHECK_THROWS_AS(full_pipeline(diag_state({0.8, 0.2}), bell2(), 0.7), InfeasibleTarget);
        CHECK_THROWS_AS(full_pipeline(diag_state({1.0, 0.0}), bell2()), PreconditionError);
    }
    SECTION("states of different local dimensions are padded to a common space") {
        const BipartiteState wide(
            ComplexMatrix::diagonal({std::sqrt(0.9), std::sqrt(0.1)}, 2, 3));
        const Protocol proto = full_pipeline(bell2(), wide);
        CHECK(proto.declaredProbability == 1.0);
        for (const auto& el : proto.stage1) {
            const LocalBranch out = apply_local(el.m, el.u, bell2().padded(2, 3));
            const Proportionality prop = proportional(out.state, wide.matrix(), 1e-9);
            CHECK(prop.proportional);
            CHECK(out.weight == Catch::Approx(el.q).margin(1e-9));
        }
    }
}

TEST_CASE("lo_popescu moves a Bob contraction to Alice") {
    const BipartiteState bell = bell2();
    SECTION("unitary contraction on the maximally entangled state") {
        std::mt19937_64 rng(97);
        const ComplexMatrix u = random_unitary(rng, 2);
        const LoPopescuResult lp = lo_popescu(u, bell);
        CHECK(is_unitary(lp.uBob, 1e-9));
        CHECK(is_contraction(lp.nAlice, 1e-9));
        const ComplexMatrix lhs = bell.matrix() * u.transpose();
        const ComplexMatrix rhs = lp.nAlice * bell.matrix() * lp.uBob.transpose();
        CHECK(frobenius_norm(lhs - rhs) < 1e-9);
    }
    SECTION("projector on the maximally entangled state") {
        const ComplexMatrix m = ComplexMatrix::diagonal({1.0, 0.0});
        const LoPopescuResult lp = lo_popescu(m, bell);
        const ComplexMatrix lhs = bell.matrix() * m.transpose();
        const ComplexMatrix rhs = lp.nAlice * bell.matrix() * lp.uBob.transpose();
        CHECK(frobenius_norm(lhs - rhs) < 1e-9);
    }
    SECTION("random contractions and states") {
        std::mt19937_64 rng(101);
        for (int iter = 0; iter < 100; ++iter) {
            const ComplexMatrix m = random_contraction(rng, 3);
            const BipartiteState psi = random_state(rng, 3, 3);
            const LoPopescuResult lp = lo_popescu(m, psi);
            CHECK(is_contraction(lp.nAlice, 1e-9));
            CHECK(is_unitary(lp.uBob, 1e-9));
            const ComplexMatrix lhs = psi.matrix() * m.transpose();
            const ComplexMatrix rhs = lp.nAlice * psi.matrix() * lp.uBob.transpose();
            CHECK(frobenius_norm(lhs - rhs) < 1e-9);
        }
    }
    SECTION("non-square states are padded to a square ambient space") {
        std::mt19937_64 rng(103);
        const BipartiteState psi = random_state(rng, 2, 3);
        const ComplexMatrix m = random_contraction(rng, 3);
        const LoPopescuResult lp = lo_popescu(m, psi);
        const ComplexMatrix lhs = psi.matrix().padded(3, 3) * m.padded(3, 3).transpose();
        const ComplexMatrix rhs = lp.nAlice * psi.matrix().padded(3, 3) * lp.uBob.transpose();
        CHECK(frobenius_norm(lhs - rhs) < 1e-9);
    }
    SECTION("rejects an expanding operator") {
        CHECK_THROWS_AS(lo_popescu(ComplexMatrix::diagonal({2.0, 1.0}), bell), NotAContraction);
    }
}
