#include <filesystem>

#include "doctest.h"

#include "cleanmorse/errors.hpp"
#include "cleanmorse/pipeline.hpp"

using namespace cleanmorse;
using json = nlohmann::json;

namespace {

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

TEST_CASE("config round trip") {
    RunConfig c;
    c.setup = "tilted_torus";
    c.flow.tol = 3e-11;
    c.search.rep.epsilon = 0.07;
    c.rank.gap_ratio = 0.05;
    c.ramp.delta2 = 6.0;
    c.sigma["(q,r)#1"] = {-0.2};
    c.ring = Ring::Z2;
    c.seed = 9;
    const json j = config_to_json(c);
    const RunConfig d = config_from_json(j);
    CHECK(config_to_json(d) == j);
    CHECK(d.search.rep.epsilon == 0.07);
    CHECK(d.sigma.at("(q,r)#1") == std::vector<double>{-0.2});

    // partial configs keep the defaults
    const RunConfig e = config_from_json(json{{"gluing", {{"sigma_default", 0.05}}}});
    CHECK(e.sigma_default == 0.05);
    CHECK(e.flow.tol == RunConfig{}.flow.tol);
}

TEST_CASE("config rejection") {
    CHECK(code_of([] { config_from_json(json{{"flw", json::object()}}); }) == ErrorCode::InvalidConfig);
    CHECK(code_of([] { config_from_json(json{{"flow", {{"tolerance", 1e-9}}}}); }) == ErrorCode::InvalidConfig);
    RunConfig c;
    c.ramp.delta1 = 5.0;
    c.ramp.delta2 = 1.0;
    CHECK(code_of([&] { validate_config(c); }) == ErrorCode::InvalidConfig);
}

TEST_CASE("failed runs carry the error") {
    RunConfig c;
    c.setup = "moebius";
    const RunResult r = run_example(c, false);
    CHECK(!r.passed);
    CHECK(r.report_path.empty());
    CHECK(r.report["status"] == "failed");
    CHECK(r.report["error"]["code"] == "UnknownSetup");
    CHECK(r.report["schema_version"] == kSchemaVersion);
}

TEST_CASE("plot data needs its series") {
    const auto dir = std::filesystem::temp_directory_path() / "cleanmorse_unit_plot";
    CHECK(code_of([&] { emit_plot_data(json::object(), "section_curves", dir.string()); }) ==
          ErrorCode::MissingSeries);
}

TEST_CASE("strata report lists both spellings") {
    const json j = strata_report(make_builtin_setup("upright_torus"), 6);
    REQUIRE(j.contains("strata"));
    CHECK(j["strata"].size() == 4);
    CHECK(j.dump().find("\"43\"") != std::string::npos);
    CHECK(j.dump().find("\"15\"") != std::string::npos);
}
