#include <cmath>
#include <random>

#include "doctest.h"

#include "cleanmorse/errors.hpp"
#include "fixtures.hpp"

using namespace cleanmorse;

namespace {

ModeCoeff mode(int label, double lambda, double c) {
    ModeCoeff m;
    m.label = label;
    m.lambda = lambda;
    m.coefficient = c;
    return m;
}

SectionTerm term(double lambda, double coefficient) {
    SectionTerm t;
    t.lambda = lambda;
    t.coefficient = coefficient;
    t.rate = -4.0 * std::abs(lambda);
    return t;
}

ObstructionSectionModel one_component(std::vector<SectionTerm> terms, double R) {
    ObstructionSectionModel m;
    m.pair_id = "synthetic";
    m.R = R;
    SectionComponent c;
    c.piece = "x";
    c.component = "X";
    c.terms = std::move(terms);
    m.components.push_back(c);
    return m;
}

}  // namespace

TEST_CASE("single-term section") {
    BrokenPair bp;
    bp.lower.fiber_rank = 1;
    bp.lower.coker_source.resize(1);
    bp.upper.at_target.modes.push_back(mode(1, 1.0, 2.0));
    bp.lower.coker_source[0].modes.push_back(mode(1, 1.0, 3.0));
    const SectionValue v = linearized_obstruction_section(bp, 1.0);
    REQUIRE(v.plus.size() == 1);
    CHECK(v.minus.empty());
    CHECK(v.plus[0] == doctest::Approx(6.0 * std::exp(-4.0)).epsilon(1e-15));
}

TEST_CASE("two-mode sums against direct summation") {
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> U(-2, 2), L(0.2, 1.5);
    BrokenPair bp;
    bp.upper.fiber_rank = bp.lower.fiber_rank = 1;
    bp.lower.coker_source.resize(1);
    bp.upper.coker_target.resize(1);
    double lp[2], lm[2], cm[2], dp[2], cp[2], dm[2];
    for (int i = 0; i < 2; ++i) {
        lp[i] = L(rng), lm[i] = -L(rng);
        cm[i] = U(rng), dp[i] = U(rng), cp[i] = U(rng), dm[i] = U(rng);
        bp.upper.at_target.modes.push_back(mode(i + 1, lp[i], cm[i]));
        bp.lower.coker_source[0].modes.push_back(mode(i + 1, lp[i], dp[i]));
        bp.lower.at_source.modes.push_back(mode(-(i + 1), lm[i], cp[i]));
        bp.upper.coker_target[0].modes.push_back(mode(-(i + 1), lm[i], dm[i]));
    }
    for (int k = 0; k < 20; ++k) {
        const double T = 0.5 + 0.4 * k;
        const SectionValue v = linearized_obstruction_section(bp, T);
        double plus = 0, minus = 0;
        for (int i = 0; i < 2; ++i) {
            plus += cm[i] * dp[i] * std::exp(-4 * lp[i] * T);
            minus -= cp[i] * dm[i] * std::exp(4 * lm[i] * T);
        }
        CHECK(std::abs(v.plus[0] - plus) < 1e-12);
        CHECK(std::abs(v.minus[0] - minus) < 1e-12);
    }
}

TEST_CASE("perturbation sections") {
    const std::map<std::string, int> obstructed{{"v", 1}, {"v'", 1}};
    const RampConfig rc{1.0, 5.0, 1.0};
    const PerturbationSection ps = build_perturbation_section(obstructed, {{"v", {0.1}}, {"v'", {0.1}}}, rc);
    CHECK(ps.at_infinity("v", 0) == 0.1);

    try {
        build_perturbation_section(obstructed, {{"v", {0.0}}, {"v'", {0.1}}}, rc);
        FAIL("no error");
    } catch (const MorseError& e) {
        CHECK(e.code() == ErrorCode::NotTransverse);
    }

    // slope of chi * sigma by central differences, independent of ramp_slope
    double worst = 0;
    for (int i = 1; i < 100000; ++i) {
        const double T = 6.0 * i / 100000, h = 1e-6;
        worst = std::max(worst, 0.1 * std::abs(ramp(rc, 0.0, T + h) - ramp(rc, 0.0, T - h)) / (2 * h));
    }
    CHECK(worst <= rc.c1_bound);
    CHECK(ps.sup_slope == doctest::Approx(worst).epsilon(1e-3));
    CHECK(ramp(rc, 0.0, 0.9) == 0.0);
    CHECK(ramp(rc, 0.0, 5.1) == 1.0);
}

TEST_CASE("no perturbation: a decaying exponential has no zeros") {
    const ObstructionSectionModel m = one_component({term(0.5, 0.3)}, 1.0);
    PerturbationSection none;
    none.sigma["X"] = {0.0};
    const auto gc = count_perturbed_gluings(m, none);
    REQUIRE(gc.size() == 1);
    CHECK(gc[0].zeros == 0);
}

TEST_CASE("engineered single crossing against a dense oracle") {
    // s0 = -e^{-0.4 T} + 0.5 e^{-1.2 T}, sigma = 0.1: one crossing just past the ramp
    const ObstructionSectionModel m = one_component({term(0.1, -1.0), term(0.3, 0.5)}, 0.0);
    const RampConfig rc{1.0, 5.0, 1.0};
    const PerturbationSection ps = build_perturbation_section({{"X", 1}}, {{"X", {0.1}}}, rc);
    const auto gc = count_perturbed_gluings(m, ps);
    REQUIRE(gc.size() == 1);
    CHECK(gc[0].zeros == 1);
    CHECK(gc[0].dichotomy);
    REQUIRE(gc[0].crossings.size() == 1);

    auto g = [&](double T) {
        return -std::exp(-0.4 * T) + 0.5 * std::exp(-1.2 * T) + 0.1 * ramp(rc, 0.0, T);
    };
    const double a = 0.0, b = gc[0].T_max;
    const int n = 100000;
    std::vector<double> roots;
    for (int i = 0; i < n; ++i) {
        double lo = a + (b - a) * i / n, hi = a + (b - a) * (i + 1) / n;
        if ((g(lo) > 0) == (g(hi) > 0))
            continue;
        while (hi - lo > 1e-14) {
            const double mid = 0.5 * (lo + hi);
            ((g(mid) > 0) == (g(lo) > 0) ? lo : hi) = mid;
        }
        roots.push_back(0.5 * (lo + hi));
    }
    REQUIRE(roots.size() == 1);
    CHECK(std::abs(gc[0].crossings[0] - roots[0]) < 1e-8);
    // g increases through the zero
    CHECK(gc[0].signs[0] == -1);
}

TEST_CASE("torus: the two broken pairs through q have opposite sections") {
    const auto& T = fixtures::torus();
    const auto& pq = T.M(T.p, T.q).components;
    const auto& qr = T.M(T.q, T.r).components;
    const PieceData u = analyze_piece(*T.ctx, pq[0].members[0], pq[0].id);
    const PieceData u2 = analyze_piece(*T.ctx, pq[1].members[0], pq[1].id);
    const PieceData v = analyze_piece(*T.ctx, qr[0].members[0], qr[0].id);
    const BrokenPair a = make_broken_pair(u, v), b = make_broken_pair(u2, v);
    const double R = std::max(gluing_floor(*T.ctx, a), gluing_floor(*T.ctx, b));
    for (int k = 0; k < 20; ++k) {
        const double t = R + 0.25 * k;
        const double x = linearized_obstruction_section(a, t).plus.at(0);
        const double y = linearized_obstruction_section(b, t).plus.at(0);
        CHECK(x != 0.0);
        CHECK(std::abs(x + y) <= 1e-6 * std::abs(x));
    }

    // sigma(v) > 0: exactly one of the two pairs glues
    const PerturbationSection ps =
        build_perturbation_section({{qr[0].id, 1}}, {{qr[0].id, {0.1}}}, RampConfig{});
    int total = 0;
    for (const BrokenPair* bp : {&a, &b})
        for (const auto& gc : count_perturbed_gluings(section_model(*T.ctx, *bp), ps))
            total += gc.zeros;
    CHECK(total == 1);
}

TEST_CASE("sphere family is a closed loop") {
    const MorseSetup S = make_builtin_setup("round_sphere");
    const FlowContext ctx(S, FlowOptions{});
    const int top = S.crit_index("max"), bottom = S.crit_index("min");
    std::map<std::pair<int, int>, ModuliSpace> moduli;
    moduli.emplace(std::make_pair(top, bottom), find_moduli(ctx, top, bottom, SearchConfig{}));
    const ModuliSpace& M = moduli.at({top, bottom});
    REQUIRE(M.family_count() == 1);
    const EndMatchReport rep = match_family_ends(ctx, M, moduli, {});
    CHECK(rep.closed);
    CHECK(rep.ends.empty());
    CHECK(rep.orphans.empty());
}
