#include "cleanmorse/pipeline.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>

#include "cleanmorse/errors.hpp"

namespace cleanmorse {

using json = nlohmann::json;

namespace {

// Visits every scalar option as (section, key, reference).
template <class F>
void visit_scalars(RunConfig& c, F&& f) {
    f("", "setup", c.setup);
    f("", "out_dir", c.out_dir);
    f("", "seed", c.seed);
    f("", "adjoint_pairs", c.adjoint_pairs);
    f("", "identity_max_len", c.identity_max_len);
    f("", "curve_samples", c.curve_samples);
    f("flow", "tol", c.flow.tol);
    f("flow", "chart_radius", c.flow.chart_radius);
    f("flow", "offset_factor", c.flow.offset_factor);
    f("flow", "capture_tol", c.flow.capture_tol);
    f("flow", "departure_ratio", c.flow.departure_ratio);
    f("flow", "near_break", c.flow.near_break);
    f("flow", "switch_margin", c.flow.switch_margin);
    f("flow", "hmax", c.flow.hmax);
    f("flow", "horizon", c.flow.horizon);
    f("search", "directions", c.search.directions);
    f("search", "bisect_tol", c.search.bisect_tol);
    f("search", "end_tol", c.search.end_tol);
    f("search", "family_samples", c.search.family_samples);
    f("search", "member_clearance", c.search.member_clearance);
    f("search", "merge_tol", c.search.merge_tol);
    f("representative", "epsilon", c.search.rep.epsilon);
    f("representative", "step", c.search.rep.step);
    f("representative", "grid_tol", c.search.rep.grid_tol);
    f("representative", "tail_efolds", c.search.rep.tail_efolds);
    f("representative", "window_scale", c.search.rep.window_scale);
    f("rank", "zero_relative", c.rank.zero_relative);
    f("rank", "gap_ratio", c.rank.gap_ratio);
    f("fit", "noise_floor", c.fit.noise_floor);
    f("fit", "trust_threshold", c.fit.trust_threshold);
    f("fit", "min_samples", c.fit.min_samples);
    f("fit", "degeneracy_tol", c.fit.degeneracy_tol);
    f("gluing", "R", c.R);
    f("gluing", "T_max", c.count.T_max);
    f("gluing", "grid", c.count.grid);
    f("gluing", "bisect_tol", c.count.bisect_tol);
    f("gluing", "margin_factor", c.count.margin_factor);
    f("gluing", "delta1", c.ramp.delta1);
    f("gluing", "delta2", c.ramp.delta2);
    f("gluing", "c1_bound", c.ramp.c1_bound);
    f("gluing", "sigma_default", c.sigma_default);
}

json& slot(json& j, const std::string& section) { return section.empty() ? j : j[section]; }

json vec_json(const Vec& v) {
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i)
        a.push_back(v(i));
    return a;
}

json matrix_json(const IntMat& m) {
    json a = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j)
            row.push_back(m(i, j));
        a.push_back(row);
    }
    return a;
}

json coeffs_json(const AsymptoticCoeffs& c) {
    json modes = json::array();
    for (const auto& m : c.modes)
        modes.push_back({{"label", m.label},
                         {"lambda", m.lambda},
                         {"coefficient", m.coefficient},
                         {"fit_residual", m.fit_residual},
                         {"leading", m.leading},
                         {"trusted", m.trusted}});
    return {{"crit", c.crit},
            {"end", end_name(c.end)},
            {"cokernel", c.cokernel},
            {"window", {c.s_a, c.s_b}},
            {"window_samples", c.window_samples},
            {"modes", modes}};
}

json piece_json(const PieceData& p) {
    json j = {{"id", p.id},
              {"component", p.component},
              {"source", p.source},
              {"target", p.target},
              {"orientation", p.orientation},
              {"fiber_rank", p.fiber_rank},
              {"boundary_source", p.boundary_source},
              {"boundary_target", p.boundary_target},
              {"at_source", coeffs_json(p.at_source)},
              {"at_target", coeffs_json(p.at_target)}};
    j["coker_source"] = json::array();
    j["coker_target"] = json::array();
    for (const auto& c : p.coker_source)
        j["coker_source"].push_back(coeffs_json(c));
    for (const auto& c : p.coker_target)
        j["coker_target"].push_back(coeffs_json(c));
    return j;
}

json complex_json(const ChainComplex& cc) {
    json j;
    j["ring"] = ring_name(cc.ring);
    j["generators"] = json::array();
    for (const auto& g : cc.grades) {
        json ids = json::array();
        for (int i : g)
            ids.push_back(cc.names[i]);
        j["generators"].push_back(ids);
    }
    j["boundary"] = json::object();
    for (int k = 1; k <= cc.top; ++k)
        j["boundary"][std::to_string(k)] = matrix_json(cc.boundary[k]);
    j["provenance"] = json::array();
    for (const auto& [st, terms] : cc.provenance) {
        json t = json::array();
        for (const auto& c : terms)
            t.push_back({{"kind", c.kind}, {"ref", c.ref}, {"T", c.T}, {"sign", c.sign}});
        j["provenance"].push_back({{"source", cc.names[st.first]}, {"target", cc.names[st.second]}, {"terms", t}});
    }
    j["d_squared"] = verify_d_squared(cc);
    return j;
}

json groups_json(const std::vector<HomologyGroup>& h) {
    json a = json::array();
    for (const auto& g : h)
        a.push_back({{"grade", g.grade}, {"rank", g.rank}, {"torsion", g.torsion}});
    return a;
}

// Error message layout is "<Code>: <module>: <text>".
json error_json(const std::string& stage, const std::string& code, const std::string& what) {
    std::string rest = what;
    const auto c1 = rest.find(": ");
    if (c1 != std::string::npos && rest.compare(0, c1, code) == 0)
        rest = rest.substr(c1 + 2);
    std::string module = stage;
    const auto c2 = rest.find(": ");
    if (c2 != std::string::npos && rest.find(' ') > c2)
        module = rest.substr(0, c2);
    return {{"code", code}, {"module", module}, {"stage", stage}, {"message", what}};
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

json config_to_json(const RunConfig& c0) {
    RunConfig c = c0;
    json j;
    visit_scalars(c, [&](const char* sec, const char* key, auto& v) { slot(j, sec)[key] = v; });
    j["ring"] = ring_name(c.ring);
    j["gluing"]["sigma"] = json::object();
    for (const auto& [k, v] : c.sigma)
        j["gluing"]["sigma"][k] = v;
    return j;
}

RunConfig config_from_json(const json& in, RunConfig base) {
    if (!in.is_object())
        throw MorseError(ErrorCode::InvalidConfig, "cli: config must be a JSON object");
    const json known = config_to_json(base);
    for (const auto& [k, v] : in.items()) {
        if (!known.contains(k))
            throw MorseError(ErrorCode::InvalidConfig, "cli: unknown config key '" + k + "'");
        if (known[k].is_object()) {
            if (!v.is_object())
                throw MorseError(ErrorCode::InvalidConfig, "cli: config section '" + k + "' must be an object");
            for (const auto& [k2, v2] : v.items())
                if (!known[k].contains(k2))
                    throw MorseError(ErrorCode::InvalidConfig, "cli: unknown config key '" + k + "." + k2 + "'");
        }
    }
    try {
        visit_scalars(base, [&](const char* sec, const char* key, auto& v) {
            const json& s = std::string(sec).empty() ? in : (in.contains(sec) ? in[sec] : json::object());
            if (s.contains(key))
                s[key].get_to(v);
        });
        if (in.contains("ring"))
            base.ring = parse_ring(in["ring"].get<std::string>());
        if (in.contains("gluing") && in["gluing"].contains("sigma")) {
            base.sigma.clear();
            for (const auto& [k, v] : in["gluing"]["sigma"].items())
                base.sigma[k] = v.is_array() ? v.get<std::vector<double>>() : std::vector<double>{v.get<double>()};
        }
    } catch (const json::exception& e) {
        throw MorseError(ErrorCode::InvalidConfig, std::string("cli: bad config value: ") + e.what());
    }
    return base;
}

void validate_config(const RunConfig& c) {
    auto need = [](bool ok, const std::string& what) {
        if (!ok)
            throw MorseError(ErrorCode::InvalidConfig, "cli: " + what);
    };
    need(c.flow.tol > 0 && c.flow.capture_tol > 0 && c.flow.hmax > 0 && c.flow.horizon > 0,
         "integrator tolerances must be positive");
    need(c.flow.offset_factor > 0 && c.flow.departure_ratio > 0 && c.flow.near_break > 0,
         "flow thresholds must be positive");
    need(c.search.directions > 0 && c.search.family_samples > 0, "sample counts must be positive");
    need(c.search.bisect_tol > 0 && c.search.end_tol > 0 && c.search.merge_tol > 0, "search tolerances must be positive");
    need(c.search.rep.epsilon > 0 && c.search.rep.step > 0 && c.search.rep.grid_tol > 0 && c.search.rep.tail_efolds > 0,
         "representative options must be positive");
    need(c.rank.zero_relative > 0 && c.rank.zero_relative < 1 && c.rank.gap_ratio > 0 && c.rank.gap_ratio < 1,
         "rank thresholds must lie in (0, 1)");
    need(c.fit.noise_floor > 0 && c.fit.trust_threshold > 0 && c.fit.min_samples > 0 && c.fit.degeneracy_tol > 0,
         "fit options must be positive");
    need(c.count.grid > 0 && c.count.bisect_tol > 0 && c.count.margin_factor > 0, "count options must be positive");
    need(c.ramp.delta1 > 0 && c.ramp.delta1 < c.ramp.delta2, "ramp needs 0 < delta1 < delta2");
    need(c.ramp.c1_bound > 0, "C1 bound must be positive");
    need(c.adjoint_pairs > 0 && c.curve_samples > 1, "sample counts must be positive");
    need(c.identity_max_len >= 3, "identity_max_len must be at least 3");
}

RunResult run_example(const RunConfig& c, bool write) {
    const auto t_start = std::chrono::steady_clock::now();
    RunResult res;
    json& rep = res.report;
    rep["schema_version"] = kSchemaVersion;
    rep["status"] = "running";
    rep["config"] = config_to_json(c);
    json timings = json::object();
    json inv = json::object();
    std::string stage = "cli";
    auto lap = std::chrono::steady_clock::now();
    auto mark = [&](const std::string& name) {
        timings[name] = seconds_since(lap);
        lap = std::chrono::steady_clock::now();
    };

    try {
        validate_config(c);
        rank_thresholds() = c.rank;

        stage = "geometry";
        const MorseSetup setup = make_builtin_setup(c.setup);
        const auto& crit = setup.critical_points;
        const int n = static_cast<int>(crit.size());
        json cps = json::array();
        for (const auto& cp : crit)
            cps.push_back({{"id", cp.id},
                           {"index", cp.morse_index},
                           {"f", cp.f_value},
                           {"ambient", vec_json(cp.ambient)},
                           {"eigenvalues", vec_json(cp.eigenvalues)}});
        rep["setup"] = {{"name", setup.name},
                        {"dim", setup.dim},
                        {"euler_characteristic", setup.euler_characteristic},
                        {"critical_points", cps}};
        FlowContext ctx(setup, c.flow);
        mark("geometry");

        stage = "trajectories";
        std::map<std::pair<int, int>, ModuliSpace> moduli;
        json fredholm = json::array();
        for (int p = 0; p < n; ++p) {
            if (crit[p].morse_index == 0)
                continue;
            const Sweep sw = sweep_unstable_sphere(ctx, p, c.search);
            for (int q = 0; q < n; ++q) {
                if (crit[q].f_value >= crit[p].f_value)
                    continue;
                ModuliSpace M = moduli_from_sweep(ctx, sw, q, c.search);
                stage = "linearized";
                const CleanReport cr = check_clean(ctx, M);
                stage = "trajectories";
                const int index = crit[p].morse_index - crit[q].morse_index;
                for (const auto& cc : cr.components)
                    for (std::size_t m = 0; m < cc.dim_ker.size(); ++m)
                        if (cc.dim_ker[m] - cc.dim_coker[m] != index)
                            fredholm.push_back(cc.id + " member " + std::to_string(m));
                moduli.emplace(std::make_pair(p, q), std::move(M));
            }
        }
        json mj = json::array();
        for (const auto& [st, M] : moduli) {
            json comps = json::array();
            for (const auto& cmp : M.components) {
                json ids = json::array();
                for (const auto& t : cmp.members)
                    ids.push_back(t.id);
                comps.push_back({{"id", cmp.id},
                                 {"family", cmp.family},
                                 {"closed_loop", cmp.closed_loop},
                                 {"near_breaking", cmp.near_breaking},
                                 {"cut", cut_status_name(cmp.cut)},
                                 {"dim_ker", cmp.dim_ker},
                                 {"dim_coker", cmp.dim_coker},
                                 {"continuity", cmp.continuity},
                                 {"ends", cmp.ends.size()},
                                 {"trajectories", ids}});
            }
            mj.push_back({{"source", crit[st.first].id},
                          {"target", crit[st.second].id},
                          {"expected_dim", M.expected_dim},
                          {"isolated", M.isolated_count()},
                          {"families", M.family_count()},
                          {"components", comps},
                          {"notes", M.notes}});
        }
        rep["moduli"] = mj;
        mark("moduli");

        // stored-trajectory checks
        double energy = 0.0, idem = 0.0, shift = 0.0;
        json traj = json::array();
        for (const auto& [st, M] : moduli)
            for (const auto& cmp : M.components)
                for (const auto& t : cmp.members) {
                    energy = std::max(energy, energy_defect(t));
                    const Trajectory again = normalize_representative(ctx, t, t.epsilon);
                    const Trajectory moved = normalize_representative(ctx, time_shifted(t, 1.7), t.epsilon);
                    for (std::size_t i = 0; i < t.samples.size(); ++i) {
                        idem = std::max(idem, std::abs(again.samples[i].s - t.samples[i].s));
                        shift = std::max(shift, std::abs(moved.samples[i].s - t.samples[i].s));
                    }
                    json pts = json::array();
                    const std::size_t stride = std::max<std::size_t>(1, t.samples.size() / 150);
                    for (std::size_t i = 0; i < t.samples.size(); i += stride)
                        pts.push_back(vec_json(t.samples[i].ambient));
                    pts.push_back(vec_json(t.samples.back().ambient));
                    traj.push_back({{"id", t.id}, {"component", cmp.id}, {"points", pts}});
                }
        rep["trajectories"] = traj;

        stage = "linearized";
        std::mt19937 rng(c.seed);
        std::vector<PieceData> pieces;
        double adjoint = 0.0;
        stage = "asymptotics";
        for (const auto& [st, M] : moduli) {
            const int index = crit[st.first].morse_index - crit[st.second].morse_index;
            if (index > 1)
                continue;
            for (const auto& cmp : M.components) {
                if (cmp.family)
                    continue;
                pieces.push_back(analyze_piece(ctx, cmp.members[0], cmp.id, c.fit));
                const LinearOperator op = linearize_along(ctx, cmp.members[0]);
                adjoint = std::max(adjoint, adjoint_pairing_defect(op, c.adjoint_pairs, rng));
            }
        }
        rep["checks"] = {{"fredholm_violations", fredholm},
                         {"energy_defect_max", energy},
                         {"gauge_idempotence_max", idem},
                         {"gauge_shift_max", shift},
                         {"adjoint_pairing_max", adjoint}};
        inv["fredholm"] = fredholm.empty();
        inv["energy"] = energy <= 1e-6;
        inv["adjoint_pairing"] = adjoint <= 1e-8;
        rep["pieces"] = json::array();
        for (const auto& p : pieces)
            rep["pieces"].push_back(piece_json(p));
        mark("pieces");

        stage = "gluing";
        std::map<std::string, int> obstructed;
        std::map<std::string, std::vector<double>> choices;
        for (const auto& p : pieces)
            if (p.fiber_rank > 0) {
                obstructed[p.component] = p.fiber_rank;
                auto it = c.sigma.find(p.component);
                choices[p.component] =
                    it != c.sigma.end() ? it->second : std::vector<double>(p.fiber_rank, c.sigma_default);
            }
        for (const auto& [k, v] : c.sigma)
            if (!obstructed.count(k))
                throw MorseError(ErrorCode::InvalidConfig, "cli: sigma given for unobstructed component " + k);
        json gl;
        gl["sigma"] = choices;
        gl["counts"] = json::array();
        std::vector<GluingCount> counts;
        bool dichotomy = true, margin = true;
        if (!obstructed.empty()) {
            const PerturbationSection pert = build_perturbation_section(obstructed, choices, c.ramp);
            gl["sup_value"] = pert.sup_value;
            gl["sup_slope"] = pert.sup_slope;
            for (const auto& u : pieces)
                for (const auto& l : pieces) {
                    if (u.target != l.source || (u.fiber_rank > 0) == (l.fiber_rank > 0))
                        continue;
                    const int index = crit[u.source].morse_index - crit[l.target].morse_index;
                    if (index != 1)
                        continue;
                    ObstructionSectionModel model = section_model(ctx, make_broken_pair(u, l));
                    if (c.R > 0) {
                        if (c.R < model.R)
                            throw MorseError(ErrorCode::InvalidConfig,
                                             "gluing: R below the validity floor of " + model.pair_id);
                        model.R = c.R;
                    }
                    const auto got = count_perturbed_gluings(model, pert, c.count);
                    for (std::size_t i = 0; i < got.size(); ++i) {
                        const GluingCount& g = got[i];
                        const SectionComponent& sc = model.components[i];
                        json T = json::array(), s0 = json::array(), sg = json::array();
                        for (int k = 0; k < c.curve_samples; ++k) {
                            const double t = g.R + (g.T_max - g.R) * k / (c.curve_samples - 1);
                            T.push_back(t);
                            s0.push_back(sc.value(t));
                            sg.push_back(pert.value(sc, g.R, t));
                        }
                        gl["counts"].push_back({{"pair_id", g.pair_id},
                                                {"upper", u.id},
                                                {"lower", l.id},
                                                {"side", g.side},
                                                {"piece", g.piece},
                                                {"component", g.component},
                                                {"element", g.element},
                                                {"R", g.R},
                                                {"T_max", g.T_max},
                                                {"leading_coefficient", g.leading_coefficient},
                                                {"leading_rate", g.leading_rate},
                                                {"sigma_inf", g.sigma_inf},
                                                {"zeros", g.zeros},
                                                {"signed_count", g.signed_count},
                                                {"glued_sign", g.signed_count * u.orientation * l.orientation},
                                                {"crossings", g.crossings},
                                                {"signs", g.signs},
                                                {"dichotomy", g.dichotomy},
                                                {"margin_ok", g.margin_ok},
                                                {"monotone_tail", g.monotone_tail},
                                                {"curve", {{"T", T}, {"s0", s0}, {"sigma", sg}}}});
                        dichotomy = dichotomy && g.dichotomy;
                        margin = margin && g.margin_ok;
                        counts.push_back(g);
                    }
                }
        }
        inv["dichotomy"] = dichotomy;
        inv["margin"] = margin;

        json ends = json::array();
        bool ends_ok = true;
        for (const auto& [st, M] : moduli) {
            if (!M.family_count())
                continue;
            const EndMatchReport er = match_family_ends(ctx, M, moduli, counts);
            for (const auto& e : er.ends) {
                ends.push_back({{"family", e.family},
                                {"end", e.end},
                                {"pieces", e.pieces},
                                {"distances", e.distances},
                                {"partners", e.partners},
                                {"matched", e.matched}});
                ends_ok = ends_ok && e.matched;
            }
            for (const auto& o : er.orphans) {
                ends.push_back({{"family", M.components.front().id}, {"orphan", o}});
                ends_ok = false;
            }
        }
        gl["end_matching"] = ends;
        inv["family_ends"] = ends_ok;
        rep["gluing"] = gl;
        mark("gluing");

        stage = "kuranishi";
        const ModuliCatalog cat = build_catalog(setup);
        json kj;
        kj["catalog"] = json::array();
        for (const auto& e : cat.entries)
            kj["catalog"].push_back({{"index", e.index}, {"label", cat.label(e.index)}, {"energy", e.energy}});
        kj["strata"] = json::object();
        for (int ell = 1; ell <= cat.size(); ++ell) {
            json s = json::array();
            for (const auto& t : enumerate_strata(cat, ell))
                s.push_back({{"tuple", t}, {"name", tuple_name(t)}, {"gluing_order", gluing_order_name(t)}});
            kj["strata"][std::to_string(ell)] = s;
        }
        if (cat.size() >= 3) {
            const IdentityReport ir = check_iterated_equals_simultaneous(cat, c.identity_max_len);
            kj["identity"] = {{"max_len", ir.max_len},
                              {"substitutions", ir.substitutions},
                              {"nested", ir.nested},
                              {"order_checks", ir.order_checks},
                              {"violations", ir.violations}};
            inv["kuranishi_identity"] = ir.ok();
        }
        if (cat.size() == 6) {
            const Box dom = m6_small_domain();
            const CoverReport cr = validate_chart_cover(cat, m6_small_layout(cat), &dom);
            const CoverReport mr = validate_chart_cover(cat, m6_small_layout(cat, true), &dom);
            kj["cover"] = {{"valid", cr.ok()}, {"violations", cr.violations}, {"mutant_rejected", !mr.ok()}};
            inv["chart_cover"] = cr.ok() && !mr.ok();
        }
        rep["kuranishi"] = kj;
        mark("kuranishi");

        stage = "homology";
        const Ring other = c.ring == Ring::Z ? Ring::Z2 : Ring::Z;
        const ChainComplex cc = build_chain_complex(setup, moduli, pieces, counts, c.ring);
        const ChainComplex oc = build_chain_complex(setup, moduli, pieces, counts, other);
        json hj = complex_json(cc);
        const bool d2 = verify_d_squared(cc) && verify_d_squared(oc);
        inv["d_squared"] = d2;
        std::set<std::string> refs;
        for (const auto& [st, M] : moduli)
            for (const auto& cmp : M.components)
                for (const auto& t : cmp.members)
                    refs.insert(t.id);
        for (const auto& g : counts)
            refs.insert(g.pair_id);
        bool links = true;
        for (const auto& [st, terms] : cc.provenance)
            for (const auto& t : terms)
                links = links && refs.count(t.ref);
        inv["provenance_resolves"] = links;
        if (d2) {
            const auto h = homology_ranks(cc);
            const auto ho = homology_ranks(oc);
            hj["groups"] = groups_json(h);
            hj["euler_ok"] = euler_consistent(cc, h);
            hj["betti"] = json::array();
            for (const auto& g : h)
                hj["betti"].push_back(g.rank);
            // Z/2 Betti numbers dominate the integral ones
            const auto& hz = c.ring == Ring::Z ? h : ho;
            const auto& h2 = c.ring == Ring::Z ? ho : h;
            bool consistent = true;
            for (std::size_t k = 0; k < h.size(); ++k) {
                bool even = false;
                for (long long t : hz[k].torsion)
                    even = even || t % 2 == 0;
                for (long long t : (k ? hz[k - 1].torsion : std::vector<long long>{}))
                    even = even || t % 2 == 0;
                consistent = consistent && h2[k].rank >= hz[k].rank && (even || h2[k].rank == hz[k].rank);
            }
            hj["other_ring"] = {{"ring", ring_name(other)}, {"groups", groups_json(ho)}};
            hj["ring_consistent"] = consistent;
            inv["euler"] = euler_consistent(cc, h) && euler_consistent(oc, ho);
            inv["ring_consistency"] = consistent;
        }
        rep["homology"] = hj;
        mark("homology");

        bool ok = true;
        for (const auto& [k, v] : inv.items())
            ok = ok && v.get<bool>();
        rep["status"] = ok ? "passed" : "failed";
        res.passed = ok;
    } catch (const MorseError& e) {
        rep["status"] = "failed";
        rep["error"] = error_json(stage, error_name(e.code()), e.what());
    } catch (const std::exception& e) {
        rep["status"] = "failed";
        rep["error"] = error_json(stage, "Internal", e.what());
    }
    rep["invariants"] = inv;
    timings["total"] = seconds_since(t_start);
    rep["timings"] = timings;

    if (write) {
        try {
            std::filesystem::create_directories(c.out_dir);
            res.report_path = (std::filesystem::path(c.out_dir) / (c.setup + "_report.json")).string();
            std::ofstream os(res.report_path);
            os << rep.dump(2) << "\n";
            if (!os)
                throw std::runtime_error("write failed");
        } catch (const std::exception& e) {
            res.passed = false;
            rep["status"] = "failed";
            rep["error"] = error_json("cli", "IoError", std::string("cli: cannot write report: ") + e.what());
            res.report_path.clear();
        }
    }
    return res;
}

std::vector<std::string> emit_plot_data(const json& report, const std::string& what, const std::string& dir) {
    std::vector<std::string> out;
    auto open = [&](const std::string& name) {
        std::filesystem::create_directories(dir);
        std::string safe;
        for (char ch : name)
            safe += (std::isalnum(static_cast<unsigned char>(ch)) || ch == '_' || ch == '-') ? ch : '_';
        out.push_back((std::filesystem::path(dir) / (safe + ".csv")).string());
        std::ofstream os(out.back());
        os.precision(17);
        return os;
    };
    if (what == "section_curves") {
        if (!report.contains("gluing") || report["gluing"]["counts"].empty())
            throw MorseError(ErrorCode::MissingSeries, "cli: report has no section curves");
        for (const auto& g : report["gluing"]["counts"]) {
            const json& cv = g["curve"];
            auto os = open("section_" + g["pair_id"].get<std::string>() + "_" + g["piece"].get<std::string>() + "_e" +
                           std::to_string(g["element"].get<int>()));
            os << "# T: gluing length, s0: linearized obstruction, sigma: perturbation, sum: s0 + sigma\n";
            os << "T,s0,sigma,sum\n";
            for (std::size_t k = 0; k < cv["T"].size(); ++k) {
                const double a = cv["s0"][k], b = cv["sigma"][k];
                os << cv["T"][k].get<double>() << "," << a << "," << b << "," << a + b << "\n";
            }
        }
    } else if (what == "trajectories") {
        if (!report.contains("trajectories") || report["trajectories"].empty())
            throw MorseError(ErrorCode::MissingSeries, "cli: report has no trajectories");
        for (const auto& t : report["trajectories"]) {
            auto os = open("trajectory_" + t["id"].get<std::string>());
            os << "# ambient coordinates along the trajectory, source to target\n";
            os << "x,y,z\n";
            for (const auto& p : t["points"]) {
                for (std::size_t i = 0; i < p.size(); ++i)
                    os << (i ? "," : "") << p[i].get<double>();
                os << "\n";
            }
        }
    } else {
        throw MorseError(ErrorCode::InvalidConfig, "cli: unknown plot kind '" + what + "'");
    }
    return out;
}

json strata_report(const MorseSetup& setup, int level) {
    const ModuliCatalog cat = build_catalog(setup);
    json j;
    j["setup"] = setup.name;
    j["level"] = level;
    j["label"] = cat.label(level);
    j["strata"] = json::array();
    for (const auto& t : enumerate_strata(cat, level)) {
        json labels = json::array();
        for (int i : t)
            labels.push_back(cat.label(i));
        j["strata"].push_back(
            {{"tuple", t}, {"name", tuple_name(t)}, {"gluing_order", gluing_order_name(t)}, {"labels", labels}});
    }
    return j;
}

}  // namespace cleanmorse
