#include <cmath>

#include "doctest.h"

#include "cleanmorse/errors.hpp"
#include "fixtures.hpp"

using namespace cleanmorse;

TEST_CASE("shooting from the sphere maximum lands at the minimum") {
    const MorseSetup S = make_builtin_setup("round_sphere");
    const FlowContext ctx(S, FlowOptions{});
    const int top = S.crit_index("max"), bottom = S.crit_index("min");
    for (double a : {0.0, 1.0, 2.5, 5.0}) {
        const FlowCurve c = shoot(ctx, top, sweep_direction(2, a), 200.0);
        CHECK(c.captured_by == bottom);
    }
    const ModuliSpace M = find_moduli(ctx, top, bottom, SearchConfig{});
    REQUIRE(M.components.size() == 1);
    CHECK(M.components[0].family);
    CHECK(M.components[0].closed_loop);
}

TEST_CASE("torus saddle: both unstable directions reach r") {
    const auto& T = fixtures::torus();
    for (double a : {0.0, M_PI}) {
        const FlowCurve c = shoot(*T.ctx, T.q, sweep_direction(1, a), 200.0);
        CHECK(c.captured_by == T.r);
    }
    // generic direction from p ends at s
    const FlowCurve c = shoot(*T.ctx, T.p, sweep_direction(2, 0.3), 200.0);
    CHECK(c.captured_by == T.s);
}

TEST_CASE("torus moduli inventory") {
    const auto& T = fixtures::torus();
    CHECK(T.M(T.p, T.q).isolated_count() == 2);
    CHECK(T.M(T.q, T.r).isolated_count() == 2);
    const SearchConfig sc;
    CHECK(find_moduli(*T.ctx, T.p, T.r, sc).components.empty());
    CHECK(find_moduli(*T.ctx, T.q, T.s, sc).components.empty());
}

TEST_CASE("representative gauge") {
    const auto& T = fixtures::torus();
    const Trajectory& v = T.M(T.q, T.r).components[0].members[0];
    const double fq = T.setup.critical_points[T.q].f_value, fr = T.setup.critical_points[T.r].f_value;
    const double eps = 0.01 * (fq - fr);

    const Trajectory n = normalize_representative(*T.ctx, v, eps);
    // f(u(-l)) = f(q) - eps: flow exactly to s = -l from the sample before it
    auto f_at = [&](const Trajectory& t, double s) {
        std::size_t k = 0;
        while (k + 1 < t.samples.size() && t.samples[k + 1].s <= s)
            ++k;
        const FlowState st{t.samples[k].s, t.samples[k].pt, Mat()};
        return T.setup.f(advance(*T.ctx, st, s - st.s).pt);
    };
    CHECK(std::isfinite(n.l_minus));
    CHECK(std::isfinite(n.l_plus));
    CHECK(std::abs(f_at(n, -n.l_minus) - (fq - eps)) < 1e-9);
    CHECK(std::abs(f_at(n, n.l_plus) - (fr + eps)) < 1e-9);

    // idempotence and the R-action
    const Trajectory n2 = normalize_representative(*T.ctx, n, eps);
    const Trajectory sh = normalize_representative(*T.ctx, time_shifted(n, 3.7), eps);
    REQUIRE(n2.samples.size() == n.samples.size());
    REQUIRE(sh.samples.size() == n.samples.size());
    double d2 = 0, dsh = 0;
    for (std::size_t k = 0; k < n.samples.size(); ++k) {
        d2 = std::max(d2, std::abs(n2.samples[k].s - n.samples[k].s));
        dsh = std::max(dsh, std::abs(sh.samples[k].s - n.samples[k].s));
    }
    CHECK(d2 < 1e-9);
    CHECK(dsh < 1e-9);

    CHECK(energy_defect(v) < 1e-6);
    CHECK_THROWS_AS(normalize_representative(*T.ctx, v, 2 * (fq - fr)), MorseError);
}

TEST_CASE("front and back trajectories are mirror images") {
    const auto& T = fixtures::torus();
    const auto& comps = T.M(T.p, T.q).components;
    REQUIRE(comps.size() == 2);
    // reflection in the plane through the axis-normal circle of p and q swaps the two sides of the tube.
    // The grids agree sample by sample; one of them may carry an extra tail interval.
    const Trajectory &a = comps[0].members[0], &b = comps[1].members[0];
    const std::size_t n = std::min(a.samples.size(), b.samples.size());
    CHECK(n + 4 >= std::max(a.samples.size(), b.samples.size()));
    double worst = 0;
    for (std::size_t k = 0; k < n; ++k) {
        Vec x = a.samples[k].ambient;
        x[1] = -x[1];
        worst = std::max({worst, (x - b.samples[k].ambient).norm(), std::abs(a.samples[k].s - b.samples[k].s)});
    }
    CHECK(worst < SearchConfig{}.merge_tol);
}
