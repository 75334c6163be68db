#include <cmath>

#include "doctest.h"

#include "cleanmorse/errors.hpp"
#include "fixtures.hpp"

using namespace cleanmorse;

namespace {

// Samples from s0 towards the critical point, spaced by h, of a sum of modes
// y_i = c_i exp(rate_sign * lambda_i * s).
TailSeries synthetic(const Vec& lambdas, const Vec& c, int rate_sign, double s0, double s1, double h) {
    TailSeries t;
    const int n = static_cast<int>(lambdas.size());
    const double dir = s1 > s0 ? 1.0 : -1.0;
    for (double s = s0; dir * (s1 - s) >= 0; s += dir * h) {
        Vec y(n);
        for (int i = 0; i < n; ++i)
            y[i] = c[i] * std::exp(rate_sign * lambdas[i] * s);
        t.s.push_back(s);
        t.y.push_back(y);
        t.r.push_back(y.norm());
    }
    return t;
}

}  // namespace

TEST_CASE("single exponential mode") {
    // target end of a trajectory: u = 0.7 e^{-lambda s} v_1, lambda = 0.8 > 0, s -> +inf
    Vec lam(2), c(2);
    lam << -1.3, 0.8;
    c << 0.0, 0.7;
    const TailSeries t = synthetic(lam, c, -1, 0.0, 40.0, 0.05);
    const AsymptoticCoeffs a = fit_modes(t.s, t.y, t.r, lam, 1, -1);
    REQUIRE(a.modes.size() == 1);
    CHECK(std::abs(a.modes[0].coefficient - 0.7) < 1e-8);
    CHECK(a.modes[0].leading);
    CHECK(a.modes[0].trusted);
    CHECK(a.growing < 1e-8);
    CHECK(extrapolation_defect(a, t.s, t.y, t.r) < 1e-8);
}

TEST_CASE("two-mode tail") {
    // source end of an index-2 point: both modes decay as s -> -inf
    Vec lam(2), c(2);
    lam << -1.3, -0.6;
    c << 0.3, -1.2;
    const TailSeries t = synthetic(lam, c, -1, 0.0, -40.0, 0.02);
    const AsymptoticCoeffs a = fit_modes(t.s, t.y, t.r, lam, -1, -1);
    REQUIRE(a.modes.size() == 2);
    CHECK(std::abs(a.modes[0].coefficient - 0.3) < 1e-6);
    CHECK(std::abs(a.modes[1].coefficient + 1.2) < 1e-6);
    // the slower mode leads
    CHECK(a.leading().index == 1);
}

TEST_CASE("adjoint solution near the source") {
    // eta = d_1 e^{lambda s} v_1 with lambda > 0 decays as s -> -inf
    Vec lam(2), d(2);
    lam << -1.0, 0.9;
    d << 0.0, 1.0;
    const TailSeries t = synthetic(lam, d, 1, 0.0, -40.0, 0.05);
    const AsymptoticCoeffs a = fit_modes(t.s, t.y, t.r, lam, 1, 1);
    REQUIRE(a.modes.size() == 1);
    CHECK(std::abs(a.modes[0].coefficient - 1.0) < 1e-6);
}

TEST_CASE("degenerate eigenvalues are fitted jointly") {
    Vec lam(2), c(2);
    lam << 1.0, 1.0;
    c << 0.6, -0.8;
    const TailSeries t = synthetic(lam, c, -1, 0.0, 40.0, 0.05);
    const AsymptoticCoeffs a = fit_modes(t.s, t.y, t.r, lam, 1, -1);
    REQUIRE(a.modes.size() == 2);
    CHECK(a.modes[0].joint);
    CHECK(std::abs(a.modes[0].coefficient - 0.6) < 1e-6);
    CHECK(std::abs(a.modes[1].coefficient + 0.8) < 1e-6);
}

TEST_CASE("short windows are rejected") {
    Vec lam(1), c(1);
    lam << 1.0;
    c << 1.0;
    const TailSeries t = synthetic(lam, c, -1, 0.0, 0.2, 0.05);
    CHECK_THROWS_AS(fit_modes(t.s, t.y, t.r, lam, 1, -1), MorseError);
}

TEST_CASE("torus coefficients") {
    const auto& T = fixtures::torus();
    const auto& pq = T.M(T.p, T.q).components;
    REQUIRE(pq.size() == 2);
    // u and u' approach q from opposite sides
    const double c0 = extract_trajectory_coeffs(*T.ctx, pq[0].members[0], End::Target).leading().coefficient;
    const double c1 = extract_trajectory_coeffs(*T.ctx, pq[1].members[0], End::Target).leading().coefficient;
    CHECK(c0 * c1 < 0);

    // the cokernel element of v has a nonzero leading coefficient at q
    const Trajectory& v = T.M(T.q, T.r).components[0].members[0];
    const PieceData pv = analyze_piece(*T.ctx, v, "v");
    REQUIRE(pv.fiber_rank == 1);
    const ModeCoeff& d = pv.coker_source[0].leading();
    CHECK(d.coefficient > 0);  // sign normalization
    CHECK(d.trusted);

    // gauge covariance: a shifted copy renormalizes to the same coefficients
    const double eps = v.epsilon;
    const Trajectory w = normalize_representative(*T.ctx, time_shifted(v, -2.3), eps);
    const double a = extract_trajectory_coeffs(*T.ctx, v, End::Source).leading().coefficient;
    const double b = extract_trajectory_coeffs(*T.ctx, w, End::Source).leading().coefficient;
    CHECK(std::abs(a - b) < 1e-9 * std::abs(a));
}
