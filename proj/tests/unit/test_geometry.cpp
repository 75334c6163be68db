#include <algorithm>
#include <cmath>

#include "doctest.h"

#include "cleanmorse/errors.hpp"
#include "cleanmorse/geometry.hpp"

using namespace cleanmorse;

namespace {

double metric_norm(const MorseSetup& S, const ChartPoint& pt, const Vec& v) {
    return std::sqrt(v.dot(S.metric(pt) * v));
}

}  // namespace

TEST_CASE("builtin setups catalog their critical points") {
    const MorseSetup sphere = make_builtin_setup("round_sphere");
    REQUIRE(sphere.critical_points.size() == 2);
    std::vector<int> idx;
    for (const auto& c : sphere.critical_points)
        idx.push_back(c.morse_index);
    std::sort(idx.begin(), idx.end());
    CHECK(idx == std::vector<int>{0, 2});

    const MorseSetup torus = make_builtin_setup("upright_torus");
    REQUIRE(torus.critical_points.size() == 4);
    const char* ids[4] = {"p", "q", "r", "s"};
    const int want[4] = {2, 1, 1, 0};
    for (int i = 0; i < 4; ++i) {
        const CriticalPoint& c = torus.crit(ids[i]);
        CHECK(c.morse_index == want[i]);
        CHECK(eval_gradient(torus, c.location).norm() < 1e-10);
        if (i > 0)
            CHECK(torus.crit(ids[i - 1]).f_value > c.f_value);
    }

    try {
        make_builtin_setup("klein_bottle");
        FAIL("no error");
    } catch (const MorseError& e) {
        CHECK(e.code() == ErrorCode::UnknownSetup);
    }
}

TEST_CASE("gradient on the sphere equator matches the closed form") {
    // f = <h, X>: the ambient gradient is the tangential part of h, all of h on the equator
    const MorseSetup S = make_builtin_setup("round_sphere");
    for (double a : {0.0, 0.7, 2.0, 4.1}) {
        Vec amb(3);
        amb << std::cos(a), std::sin(a), 0.0;
        const ChartPoint pt = S.locate(amb * S.params.radius);
        const Vec g = eval_gradient(S, pt);
        CHECK(metric_norm(S, pt, g) == doctest::Approx(S.height.norm()).epsilon(1e-10));
        const Mat dX = S.atlas[pt.patch]->jet(pt.x, false).dX;
        CHECK((dX * g - S.height).norm() < 1e-10);
    }
}

TEST_CASE("gradient on the inner circle of the torus") {
    const MorseSetup S = make_builtin_setup("upright_torus");
    const double R = S.params.major_radius, r = S.params.minor_radius;
    Vec amb(3);
    amb << R - r, 0.0, 0.0;  // inner circle, f = 0, between q and r
    const ChartPoint pt = S.locate(amb);
    const Vec g = eval_gradient(S, pt);

    // finite-difference oracle on f: g(grad, e_i) = df(e_i)
    const Mat G = S.metric(pt);
    for (int i = 0; i < 2; ++i) {
        ChartPoint a = pt, b = pt;
        a.x[i] += 1e-6;
        b.x[i] -= 1e-6;
        const double dfi = (S.f(a) - S.f(b)) / 2e-6;
        CHECK((G * g)[i] == doctest::Approx(dfi).epsilon(1e-7));
    }
    // symmetry: the ambient gradient lies in the vertical plane of the q-r circle
    const Vec v = S.atlas[pt.patch]->jet(pt.x, false).dX * g;
    CHECK(std::abs(v[1]) < 1e-12);
    CHECK(std::abs(v[0]) < 1e-12);
    // descent
    ChartPoint down = pt;
    down.x -= 1e-4 * g;
    CHECK(S.f(down) < S.f(pt));

    ChartPoint outside = pt;
    outside.x[0] += 10.0;
    CHECK_THROWS_AS(eval_gradient(S, outside), MorseError);
}

TEST_CASE("normal charts") {
    const MorseSetup sphere = make_builtin_setup("round_sphere");
    const CriticalPoint& top = sphere.crit("max");
    for (double rad : {0.01, 0.02}) {
        // f = sqrt(1 - |x|^2) on the graph chart: the quartic Taylor term rad^4 / 8 is the remainder
        const NormalChart ch = build_normal_chart(sphere, top, rad);
        CHECK(ch.residual <= 1e-4 * rad * rad);
        CHECK(ch.residual == doctest::Approx(std::pow(rad, 4) / 8).epsilon(0.05));
        CHECK(ch.model(Vec::Zero(2)) == top.f_value);
        CHECK(sphere.f(ChartPoint{ch.patch, ch.point(Vec::Zero(2))}) == doctest::Approx(top.f_value).epsilon(1e-14));
    }
    CHECK_THROWS_AS(build_normal_chart(sphere, top, 5.0), MorseError);

    const MorseSetup torus = make_builtin_setup("upright_torus");
    const NormalChart q = build_normal_chart(torus, torus.crit("q"), 0.1);
    CHECK(q.eigenvalues[0] < 0);
    CHECK(q.eigenvalues[1] > 0);
    // eigenvectors orthonormal in the metric and Hess v = lambda v
    const CriticalPoint& c = torus.crit("q");
    const LocalGeometry L = torus.local(c.location);
    const Mat V = c.eigenvectors;
    CHECK((V.transpose() * L.metric * V - Mat::Identity(2, 2)).norm() < 1e-10);
    CHECK((L.hessian * V - L.metric * V * c.eigenvalues.asDiagonal()).norm() < 1e-8);
}

TEST_CASE("critical values and feature lengths") {
    const MorseSetup g2 = make_builtin_setup("upright_genus2");
    CHECK(g2.critical_points.size() == 6);
    CHECK(g2.euler_characteristic == -2);
    int alt = 0;
    for (const auto& c : g2.critical_points) {
        alt += c.morse_index % 2 ? -1 : 1;
        CHECK(eval_gradient(g2, c.location).norm() < 1e-10);
    }
    CHECK(alt == g2.euler_characteristic);
    CHECK(g2.min_critical_gap() > 0);
    CHECK(make_builtin_setup("upright_torus").feature_length() == 1.0);
}
