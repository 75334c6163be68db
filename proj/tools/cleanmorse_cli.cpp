// Command-line driver. Exit codes: 0 passed, 1 run failed, 2 usage or config error.
#include <cstdlib>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"

#include "cleanmorse/errors.hpp"
#include "cleanmorse/pipeline.hpp"
#include "cleanmorse/selftest.hpp"

using namespace cleanmorse;
using json = nlohmann::json;

namespace {

void print_summary(const json& rep, std::ostream& os) {
    os << "setup " << rep["config"]["setup"].get<std::string>() << ": " << rep["status"].get<std::string>() << "\n";
    if (rep.contains("error"))
        os << "  error " << rep["error"]["code"].get<std::string>() << " in " << rep["error"]["module"].get<std::string>()
           << "\n  " << rep["error"]["message"].get<std::string>() << "\n";
    if (rep.contains("moduli"))
        for (const auto& m : rep["moduli"])
            if (!m["components"].empty()) {
                os << "  M(" << m["source"].get<std::string>() << "," << m["target"].get<std::string>()
                   << "): " << m["isolated"] << " isolated, " << m["families"] << " families";
                for (const auto& c : m["components"])
                    os << " [" << c["cut"].get<std::string>() << " ker " << c["dim_ker"] << " coker " << c["dim_coker"] << "]";
                os << "\n";
            }
    if (rep.contains("gluing"))
        for (const auto& g : rep["gluing"]["counts"])
            os << "  glue " << g["pair_id"].get<std::string>() << " sigma " << g["sigma_inf"] << ": " << g["zeros"]
               << " zero(s), sign " << g["glued_sign"] << "\n";
    if (rep.contains("homology") && rep["homology"].contains("groups")) {
        const auto& h = rep["homology"];
        os << "  homology over " << h["ring"].get<std::string>() << ":";
        for (const auto& g : h["groups"]) {
            os << " H" << g["grade"] << "=" << g["rank"];
            for (const auto& t : g["torsion"])
                os << "+Z/" << t;
        }
        os << (h["d_squared"].get<bool>() ? "  (d^2 = 0)" : "  (d^2 != 0)") << "\n";
    }
    if (rep.contains("invariants"))
        for (const auto& [k, v] : rep["invariants"].items())
            if (!v.get<bool>())
                os << "  invariant violated: " << k << "\n";
    if (rep.contains("timings"))
        os << "  total " << rep["timings"]["total"].get<double>() << " s\n";
}

json read_json(const std::string& path) {
    std::ifstream is(path);
    if (!is)
        throw MorseError(ErrorCode::InvalidConfig, "cli: cannot open " + path);
    try {
        return json::parse(is);
    } catch (const json::exception& e) {
        throw MorseError(ErrorCode::InvalidConfig, "cli: " + path + " is not valid JSON: " + e.what());
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Morse homology of clean moduli spaces on builtin surfaces"};
    app.require_subcommand(1);

    std::string setup, config_file, ring, out_dir;
    unsigned seed = 0;
    auto* run = app.add_subcommand("run", "run the full pipeline and write a JSON report");
    run->add_option("setup", setup, "builtin setup name")->required();
    run->add_option("--config", config_file, "JSON config file");
    run->add_option("--ring", ring, "coefficient ring")->check(CLI::IsMember({"z", "z2"}));
    run->add_option("--out", out_dir, "output directory (else $CLEANMORSE_OUT, else the config)");
    auto* seed_opt = run->add_option("--seed", seed, "seed for randomized checks");

    std::string report_path, what, plot_dir;
    auto* plot = app.add_subcommand("plot", "write CSV plot data from a report");
    plot->add_option("report", report_path, "report JSON")->required();
    plot->add_option("--what", what, "section_curves | trajectories")
        ->required()
        ->check(CLI::IsMember({"section_curves", "trajectories"}));
    plot->add_option("--out", plot_dir, "directory for the CSV files (default: next to the report)");

    int level = 0;
    auto* strata = app.add_subcommand("strata", "list the strata of a catalog entry");
    strata->add_option("setup", setup, "builtin setup name")->required();
    strata->add_option("--level", level, "1-based catalog index")->required();

    auto* self = app.add_subcommand("selftest", "run the property suites");
    unsigned self_seed = 1;
    self->add_option("--seed", self_seed, "seed for randomized checks");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    try {
        if (*run) {
            RunConfig cfg;
            if (!config_file.empty())
                cfg = config_from_json(read_json(config_file));
            cfg.setup = setup;
            if (!ring.empty())
                cfg.ring = parse_ring(ring);
            if (*seed_opt)
                cfg.seed = seed;
            if (!out_dir.empty())
                cfg.out_dir = out_dir;
            else if (const char* env = std::getenv("CLEANMORSE_OUT"); env && *env)
                cfg.out_dir = env;
            validate_config(cfg);
            const RunResult r = run_example(cfg);
            print_summary(r.report, std::cout);
            if (!r.report_path.empty())
                std::cout << "report: " << r.report_path << "\n";
            return r.passed ? 0 : 1;
        }
        if (*plot) {
            const json rep = read_json(report_path);
            if (plot_dir.empty())
                plot_dir = (std::filesystem::path(report_path).parent_path() / what).string();
            const auto files = emit_plot_data(rep, what, plot_dir);
            std::cout << files.size() << " CSV files in " << plot_dir << "\n";
            return 0;
        }
        if (*strata) {
            const MorseSetup S = make_builtin_setup(setup);
            std::cout << strata_report(S, level).dump(2) << "\n";
            return 0;
        }
        if (*self) {
            const auto results = run_selftest(self_seed);
            bool ok = true;
            for (const auto& r : results) {
                std::cout << (r.ok ? "ok   " : "FAIL ") << r.name << (r.detail.empty() ? "" : ": " + r.detail) << "\n";
                ok = ok && r.ok;
            }
            return ok ? 0 : 1;
        }
    } catch (const MorseError& e) {
        std::cerr << e.what() << "\n";
        return e.code() == ErrorCode::InvalidConfig || e.code() == ErrorCode::UnknownSetup ? 2 : 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
