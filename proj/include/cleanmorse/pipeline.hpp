#pragma once
// End-to-end run over a builtin setup: moduli, linearization, asymptotics,
// gluing, chart combinatorics and homology, collected into a JSON report.
#include <map>
#include <string>
#include <vector>

#include "json.hpp"

#include "cleanmorse/homology.hpp"
#include "cleanmorse/kuranishi.hpp"

namespace cleanmorse {

constexpr int kSchemaVersion = 1;

struct RunConfig {
    std::string setup = "upright_torus";
    FlowOptions flow;
    SearchConfig search;        // search.rep carries epsilon and the grid tolerance
    RankThresholds rank;
    FitOptions fit;
    double R = 0.0;             // <= 0: per-pair floor
    CountOptions count;
    RampConfig ramp;
    double sigma_default = 0.1;
    std::map<std::string, std::vector<double>> sigma;  // obstructed component -> value per fiber element
    Ring ring = Ring::Z;
    std::string out_dir = "cleanmorse_out";
    unsigned seed = 1;
    int adjoint_pairs = 50;
    int identity_max_len = 4;
    int curve_samples = 200;    // per section curve in the report
};

nlohmann::json config_to_json(const RunConfig& c);
// Unknown keys raise InvalidConfig; missing keys keep the values of base.
RunConfig config_from_json(const nlohmann::json& j, RunConfig base = {});
// Tolerances > 0, delta1 < delta2. Zero sigma values are left to the gluing layer.
void validate_config(const RunConfig& c);

struct RunResult {
    nlohmann::json report;
    bool passed = false;
    std::string report_path;  // empty when nothing was written
};

// Never throws for pipeline failures: the report carries status "failed" and
// the module-tagged error. write = false keeps everything in memory.
RunResult run_example(const RunConfig& config, bool write = true);

// Writes one CSV per curve into dir and returns the paths. what:
// "section_curves" | "trajectories". MissingSeries when the report lacks them.
std::vector<std::string> emit_plot_data(const nlohmann::json& report, const std::string& what,
                                        const std::string& dir);

// Strata of catalog entry `level` with both spellings.
nlohmann::json strata_report(const MorseSetup& setup, int level);

}  // namespace cleanmorse
