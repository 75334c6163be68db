#include "doctest.h"

#include "cleanmorse/errors.hpp"
#include "cleanmorse/kuranishi.hpp"

using namespace cleanmorse;

namespace {

const ModuliCatalog& torus_catalog() {
    static const ModuliCatalog cat = build_catalog(make_builtin_setup("upright_torus"));
    return cat;
}

ErrorCode code_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const MorseError& e) {
        return e.code();
    }
    FAIL("no error");
    return ErrorCode::NumericalFailure;
}

}  // namespace

TEST_CASE("torus catalog order") {
    const ModuliCatalog& cat = torus_catalog();
    REQUIRE(cat.size() == 6);
    const char* want[6] = {"M(r,s)", "M(q,r)", "M(p,q)", "M(q,s)", "M(p,r)", "M(p,s)"};
    for (int i = 1; i <= 6; ++i)
        CHECK(cat.label(i) == want[i - 1]);
    for (int i = 2; i <= 6; ++i)
        CHECK(cat.at(i).energy >= cat.at(i - 1).energy - 1e-9);
}

TEST_CASE("contraction") {
    const ModuliCatalog& cat = torus_catalog();
    CHECK(contract_full(cat, {2, 1}) == 4);
    CHECK(contract_full(cat, {3, 2, 1}) == 6);
    CHECK(contract_full(cat, {5}) == 5);

    CHECK(contract_along(cat, {3, 2, 1}, {{1, 3}}) == IndexTuple{3, 4});
    CHECK(contract_along(cat, {3, 2, 1}, {{0, 2}}) == IndexTuple{5, 1});
    CHECK(contract_along(cat, {3, 2, 1}, {}) == IndexTuple{3, 2, 1});
    CHECK(contract_along(cat, {3, 2, 1}, {{1, 1}}) == IndexTuple{3, 2, 1});

    CHECK(code_of([&] { contract_along(cat, {3, 2, 1}, {{0, 2}, {1, 3}}); }) == ErrorCode::InvalidCollection);
    CHECK(!tuple_valid(cat, {1, 2}));
    CHECK(tuple_name({3, 2, 1}) == "(3,2,1)");
    CHECK(gluing_order_name({3, 4}) == "43");
    CHECK(gluing_order_name({5, 1}) == "15");
}

TEST_CASE("partial order") {
    const ModuliCatalog& cat = torus_catalog();
    CHECK(tuple_leq(cat, {3, 4}, {3, 2, 1}));
    CHECK(!tuple_leq(cat, {3, 2, 1}, {3, 4}));
    CHECK(tuple_leq(cat, {6}, {3, 2, 1}));
    CHECK(!tuple_leq(cat, {3, 4}, {5, 1}));
    CHECK(code_of([&] { tuple_leq(cat, {4}, {3, 2, 1}); }) == ErrorCode::IncomparableContractions);
}

TEST_CASE("strata") {
    const ModuliCatalog& cat = torus_catalog();
    CHECK(enumerate_strata(cat, 1) == std::vector<IndexTuple>{{1}});
    CHECK(enumerate_strata(cat, 4) == std::vector<IndexTuple>{{4}, {2, 1}});
    CHECK(enumerate_strata(cat, 6) == std::vector<IndexTuple>{{6}, {3, 4}, {5, 1}, {3, 2, 1}});
}

TEST_CASE("iterated contraction equals simultaneous contraction") {
    const IdentityReport t = check_iterated_equals_simultaneous(torus_catalog(), 3);
    CHECK(t.ok());
    CHECK(t.substitutions > 0);
    const IdentityReport g = check_iterated_equals_simultaneous(build_catalog(make_builtin_setup("upright_genus2")), 4);
    CHECK(g.ok());
    CHECK(g.nested > 0);
    // the single instance: K = (3,2,1), I = (2,1) in slot 2 of J = (3,4)
    CHECK(contract_along(torus_catalog(), {3, 2, 1}, {{1, 3}}) == IndexTuple{3, 4});
}

TEST_CASE("chart cover") {
    const ModuliCatalog& cat = torus_catalog();
    const Box dom = m6_small_domain();
    const CoverReport good = validate_chart_cover(cat, m6_small_layout(cat), &dom);
    CHECK(good.ok());
    for (const auto& p : good.pairs)
        CHECK(p.overlap == p.comparable);

    const CoverReport bad = validate_chart_cover(cat, m6_small_layout(cat, true), &dom);
    CHECK(!bad.ok());
    REQUIRE(!bad.violations.empty());

    ChartRegion one;
    one.tuple = {1};
    one.name = "1";
    one.boxes.push_back(Box{{0.0}, {1.0}});
    CHECK(validate_chart_cover(cat, {one}).ok());

    CHECK(boxes_overlap(Box{{0, 0}, {1, 1}}, Box{{0.5, 0.5}, {2, 2}}));
    CHECK(!boxes_overlap(Box{{0, 0}, {1, 1}}, Box{{1, 0}, {2, 1}}));  // open boxes sharing an edge
}
