// Acceptance run: one PASS/FAIL line per criterion, exit status 0 iff all pass.
#include <chrono>
#include <cmath>
#include <iostream>
#include <map>
#include <memory>
#include <random>
#include <sstream>

#include "cleanmorse/errors.hpp"
#include "cleanmorse/pipeline.hpp"

using namespace cleanmorse;

namespace {

double since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

struct SetupRun {
    std::unique_ptr<MorseSetup> setup;
    std::unique_ptr<FlowContext> ctx;
    std::map<std::pair<int, int>, ModuliSpace> moduli;
    double seconds = 0.0;
};

SetupRun compute(const std::string& name) {
    const auto t0 = std::chrono::steady_clock::now();
    SetupRun r;
    r.setup = std::make_unique<MorseSetup>(make_builtin_setup(name));
    r.ctx = std::make_unique<FlowContext>(*r.setup, FlowOptions{});
    const SearchConfig cfg;
    const auto& crit = r.setup->critical_points;
    for (int p = 0; p < static_cast<int>(crit.size()); ++p) {
        if (!crit[p].morse_index)
            continue;
        const Sweep sw = sweep_unstable_sphere(*r.ctx, p, cfg);
        for (int q = 0; q < static_cast<int>(crit.size()); ++q)
            if (crit[q].f_value < crit[p].f_value) {
                ModuliSpace M = moduli_from_sweep(*r.ctx, sw, q, cfg);
                check_clean(*r.ctx, M);
                r.moduli.emplace(std::make_pair(p, q), std::move(M));
            }
    }
    r.seconds = since(t0);
    return r;
}

struct Verdict {
    bool ok = true;
    std::ostringstream detail;
    void fail(const std::string& why) {
        ok = false;
        detail << "    " << why << "\n";
    }
};

int failures = 0;

void report(int n, const std::string& title, Verdict& v) {
    std::cout << (v.ok ? "PASS" : "FAIL") << " criterion " << n << ": " << title << "\n" << v.detail.str();
    std::cout.flush();
    failures += !v.ok;
}

template <class F>
void guarded(Verdict& v, F&& body) {
    try {
        body();
    } catch (const std::exception& e) {
        v.fail(std::string("exception: ") + e.what());
    }
}

const ModuliSpace& space(const SetupRun& r, const std::string& a, const std::string& b) {
    return r.moduli.at({r.setup->crit_index(a), r.setup->crit_index(b)});
}

}  // namespace

int main() {
    std::map<std::string, SetupRun> runs;
    for (const auto& name : builtin_setup_names())
        runs.emplace(name, compute(name));
    const SetupRun& torus = runs.at("upright_torus");

    {  // 1
        Verdict v;
        guarded(v, [&] {
            const ModuliSpace& pq = space(torus, "p", "q");
            const ModuliSpace& qr = space(torus, "q", "r");
            const ModuliSpace& pr = space(torus, "p", "r");
            const ModuliSpace& qs = space(torus, "q", "s");
            if (pq.isolated_count() != 2 || pq.family_count() != 0)
                v.fail("#M(p,q) = " + std::to_string(pq.isolated_count()));
            if (qr.isolated_count() != 2 || qr.family_count() != 0)
                v.fail("#M(q,r) = " + std::to_string(qr.isolated_count()));
            for (const auto& c : qr.components)
                if (c.cut != CutStatus::Clean || c.dim_coker != 1)
                    v.fail(c.id + " is " + cut_status_name(c.cut) + " with coker " + std::to_string(c.dim_coker));
            if (!pr.components.empty())
                v.fail("M(p,r) not empty");
            if (!qs.components.empty())
                v.fail("M(q,s) not empty");
            if (torus.seconds >= 120)
                v.fail("runtime " + std::to_string(torus.seconds) + " s");
            v.detail << "    torus inventory in " << torus.seconds << " s\n";
        });
        report(1, "torus moduli inventory", v);
    }

    std::map<std::string, std::vector<PieceData>> torus_pieces;
    {  // 2
        Verdict v;
        int checked = 0, refined = 0;
        guarded(v, [&] {
            for (const auto& [name, r] : runs) {
                SearchConfig fine;
                fine.rep.step *= 0.5;
                for (const auto& [st, M] : r.moduli) {
                    const int index =
                        r.setup->critical_points[st.first].morse_index - r.setup->critical_points[st.second].morse_index;
                    for (const auto& c : M.components)
                        for (const auto& t : c.members) {
                            const KernelCokernel kc = kernel_cokernel_dims(linearize_along(*r.ctx, t));
                            ++checked;
                            if (kc.dim_ker - kc.dim_coker != index)
                                v.fail(name + " " + t.id + ": ker " + std::to_string(kc.dim_ker) + " coker " +
                                       std::to_string(kc.dim_coker) + " index " + std::to_string(index));
                            const FlowCurve curve = shoot(*r.ctx, t.source, t.direction, r.ctx->opt.horizon,
                                                          ShootMode::Representative, t.target);
                            const Trajectory tf = make_representative(*r.ctx, curve, t.target, fine.rep);
                            const KernelCokernel kf = kernel_cokernel_dims(linearize_along(*r.ctx, tf));
                            ++refined;
                            if (kf.dim_ker != kc.dim_ker || kf.dim_coker != kc.dim_coker)
                                v.fail(name + " " + t.id + ": ranks change under refinement");
                        }
                }
            }
        });
        v.detail << "    " << checked << " trajectories, " << refined << " refined\n";
        report(2, "Fredholm index and rank stability", v);
    }

    {  // 3
        Verdict v;
        guarded(v, [&] {
            const FlowContext& ctx = *torus.ctx;
            std::vector<PieceData> U, V;
            for (const auto& c : space(torus, "p", "q").components)
                U.push_back(analyze_piece(ctx, c.members[0], c.id));
            for (const auto& c : space(torus, "q", "r").components)
                V.push_back(analyze_piece(ctx, c.members[0], c.id));
            torus_pieces["U"] = U;
            torus_pieces["V"] = V;
            for (const auto& vv : V) {
                const BrokenPair a = make_broken_pair(U[0], vv), b = make_broken_pair(U[1], vv);
                const double R = std::max(gluing_floor(ctx, a), gluing_floor(ctx, b));
                const double lam = std::abs(section_model(ctx, a).components[0].leading().lambda);
                double worst = 0.0, peak = 0.0;
                for (int k = 0; k < 20; ++k) {
                    const double T = R + (5.0 / lam) * k / 19.0;
                    const double sa = linearized_obstruction_section(a, T).plus.at(0);
                    const double sb = linearized_obstruction_section(b, T).plus.at(0);
                    worst = std::max(worst, std::abs(sa + sb));
                    peak = std::max({peak, std::abs(sa), std::abs(sb)});
                }
                v.detail << "    " << vv.id << ": max |s0(u) + s0(u')| = " << worst << ", max |s0| = " << peak << "\n";
                if (!(worst <= 1e-3 * peak) || peak == 0.0)
                    v.fail("antisymmetry violated for " + vv.id);
            }
            // synthetic coefficients against a separately coded double sum
            std::mt19937 rng(7);
            std::uniform_real_distribution<double> co(-3, 3), la(0.2, 3);
            double dev = 0.0;
            for (int trial = 0; trial < 100; ++trial) {
                BrokenPair bp;
                bp.lower.fiber_rank = 1;
                bp.upper.fiber_rank = 1;
                bp.lower.coker_source.resize(1);
                bp.upper.coker_target.resize(1);
                const int m = 1 + trial % 3;
                std::vector<std::array<double, 3>> plus, minus;  // lambda, c, d
                for (int i = 0; i < m; ++i) {
                    ModeCoeff a, b, c, d;
                    a.label = b.label = i + 1;
                    a.lambda = b.lambda = la(rng);
                    a.coefficient = co(rng);
                    b.coefficient = co(rng);
                    bp.upper.at_target.modes.push_back(a);
                    bp.lower.coker_source[0].modes.push_back(b);
                    plus.push_back({a.lambda, a.coefficient, b.coefficient});
                    c.label = d.label = -(i + 1);
                    c.lambda = d.lambda = -la(rng);
                    c.coefficient = co(rng);
                    d.coefficient = co(rng);
                    bp.lower.at_source.modes.push_back(c);
                    bp.upper.coker_target[0].modes.push_back(d);
                    minus.push_back({c.lambda, c.coefficient, d.coefficient});
                }
                for (double T : {0.5, 1.0, 2.0, 3.5}) {
                    double sp = 0.0, sm = 0.0;
                    for (const auto& [l, c, d] : plus)
                        sp += c * d * std::exp(-4.0 * l * T);
                    for (const auto& [l, c, d] : minus)
                        sm -= c * d * std::exp(4.0 * l * T);
                    const SectionValue s = linearized_obstruction_section(bp, T);
                    dev = std::max({dev, std::abs(s.plus[0] - sp), std::abs(s.minus[0] - sm)});
                }
            }
            v.detail << "    direct-sum oracle deviation " << dev << "\n";
            if (!(dev <= 1e-12))
                v.fail("s0 formulas disagree with the oracle");
        });
        report(3, "obstruction-section antisymmetry and s0 oracle", v);
    }

    {  // 4
        Verdict v;
        guarded(v, [&] {
            const FlowContext& ctx = *torus.ctx;
            const auto& U = torus_pieces.at("U");
            const auto& V = torus_pieces.at("V");
            for (double s1 : {0.1, -0.1})
                for (double s2 : {0.1, -0.1}) {
                    const PerturbationSection ps = build_perturbation_section(
                        {{V[0].component, 1}, {V[1].component, 1}},
                        {{V[0].component, {s1}}, {V[1].component, {s2}}}, RampConfig{});
                    int total = 0;
                    for (const auto& vv : V) {
                        int glued = 0;
                        for (const auto& u : U)
                            for (const auto& g : count_perturbed_gluings(section_model(ctx, make_broken_pair(u, vv)), ps)) {
                                glued += g.zeros > 0;
                                total += g.zeros;
                                if (!g.dichotomy || !g.margin_ok)
                                    v.fail(g.pair_id + " dichotomy/margin check failed");
                            }
                        if (glued != 1)
                            v.fail("sigma (" + std::to_string(s1) + "," + std::to_string(s2) + "): " + vv.id +
                                   " glues with " + std::to_string(glued) + " pieces");
                    }
                    v.detail << "    sigma (" << s1 << ", " << s2 << "): perturbed p->r count via q = " << total << "\n";
                    if (total != 2)
                        v.fail("total count " + std::to_string(total));
                }
        });
        report(4, "perturbed gluing dichotomy", v);
    }

    {  // 5
        Verdict v;
        guarded(v, [&] {
            auto betti = [](const nlohmann::json& rep) {
                std::vector<int> b;
                for (const auto& g : rep["homology"]["groups"])
                    b.push_back(g["rank"].get<int>());
                return b;
            };
            auto check = [&](const std::string& label, const RunConfig& cfg, const std::vector<int>& want) {
                const RunResult r = run_example(cfg, false);
                const auto& rep = r.report;
                if (rep["status"] != "passed" || !rep.contains("homology") || !rep["homology"].contains("groups")) {
                    v.fail(label + ": run " + rep["status"].get<std::string>() +
                           (rep.contains("error") ? " " + rep["error"]["message"].get<std::string>() : ""));
                    return;
                }
                const auto b = betti(rep);
                std::vector<int> b2;
                for (const auto& g : rep["homology"]["other_ring"]["groups"])
                    b2.push_back(g["rank"].get<int>());
                v.detail << "    " << label << ": Z Betti";
                for (int x : b)
                    v.detail << " " << x;
                v.detail << ", Z/2 Betti";
                for (int x : b2)
                    v.detail << " " << x;
                v.detail << "\n";
                if (b != want)
                    v.fail(label + ": wrong Betti numbers");
                if (!rep["homology"]["d_squared"].get<bool>() || !rep["invariants"]["d_squared"].get<bool>())
                    v.fail(label + ": d^2 != 0");
                if (!rep["homology"]["ring_consistent"].get<bool>())
                    v.fail(label + ": Z and Z/2 inconsistent");
            };
            RunConfig sphere;
            sphere.setup = "round_sphere";
            check("round_sphere", sphere, {1, 0, 1});
            const auto& V = torus_pieces.at("V");
            for (double s1 : {0.1, -0.1})
                for (double s2 : {0.1, -0.1}) {
                    RunConfig t;
                    t.setup = "upright_torus";
                    t.sigma = {{V[0].component, {s1}}, {V[1].component, {s2}}};
                    check("upright_torus sigma (" + std::to_string(s1) + "," + std::to_string(s2) + ")", t,
                          {1, 2, 1});
                }
        });
        report(5, "homology and d^2", v);
    }

    {  // 6
        Verdict v;
        guarded(v, [&] {
            const auto t0 = std::chrono::steady_clock::now();
            for (const std::string name : {"upright_torus", "upright_genus2"}) {
                const ModuliCatalog cat = build_catalog(*runs.at(name).setup);
                const IdentityReport ir = check_iterated_equals_simultaneous(cat, 4);
                v.detail << "    " << name << ": " << cat.size() << " entries, " << ir.substitutions
                         << " substitutions, " << ir.nested << " nested, " << ir.order_checks << " order checks\n";
                for (const auto& x : ir.violations)
                    v.fail(name + ": " + x);
            }
            const ModuliCatalog cat = build_catalog(*torus.setup);
            // strata of M(p,s) by walking decreasing critical values
            const std::vector<IndexTuple> want{{6}, {3, 4}, {5, 1}, {3, 2, 1}};
            if (enumerate_strata(cat, 6) != want)
                v.fail("strata of M6");
            const Box dom = m6_small_domain();
            const CoverReport good = validate_chart_cover(cat, m6_small_layout(cat), &dom);
            const CoverReport bad = validate_chart_cover(cat, m6_small_layout(cat, true), &dom);
            if (!good.ok())
                v.fail("M6 layout rejected");
            if (bad.ok())
                v.fail("mutant layout accepted");
            for (const auto& x : bad.violations)
                v.detail << "    mutant: " << x << "\n";
            const double secs = since(t0);
            v.detail << "    " << secs << " s\n";
            if (secs >= 10)
                v.fail("runtime");
        });
        report(6, "combinatorial chart identities", v);
    }

    {  // 7
        Verdict v;
        guarded(v, [&] {
            std::mt19937 rng(11);
            std::normal_distribution<double> g;
            double adj = 0.0;
            int count = 0;
            double worst_order = 0.0;
            for (const auto& [name, r] : runs)
                for (const auto& [st, M] : r.moduli)
                    for (const auto& c : M.components)
                        for (const auto& t : c.members) {
                            const LinearOperator op = linearize_along(*r.ctx, t);
                            adj = std::max(adj, adjoint_pairing_defect(op, 50, rng));
                            Vec amp(r.setup->dim);
                            for (int i = 0; i < amp.size(); ++i)
                                amp(i) = g(rng);
                            // a small variation: a tenth of the smallest feature of the surface
                            amp *= 0.1 * r.setup->feature_length() / amp.norm();
                            const double mid = 0.5 * (t.s_begin() + t.s_end());
                            double e[3];
                            const double hs[3] = {1e-2, 1e-3, 1e-4};
                            for (int i = 0; i < 3; ++i)
                                e[i] = linearization_fd_error(*r.ctx, t, op, amp, mid, 1.0, hs[i]);
                            ++count;
                            for (int i = 0; i < 2; ++i) {
                                const double order = std::log10(e[i] / e[i + 1]);
                                worst_order = std::max(worst_order, std::abs(order - 1.0));
                                if (!(std::abs(order - 1.0) < 0.25))
                                    v.fail(name + " " + t.id + ": observed order " + std::to_string(order));
                            }
                        }
            v.detail << "    " << count << " trajectories, adjoint defect " << adj
                     << ", max |order - 1| = " << worst_order << "\n";
            if (!(adj <= 1e-8))
                v.fail("adjoint pairing defect " + std::to_string(adj));
        });
        report(7, "numerical linearization", v);
    }

    {  // 8
        Verdict v;
        guarded(v, [&] {
            double energy = 0.0, idem = 0.0;
            int count = 0;
            for (const auto& [name, r] : runs)
                for (const auto& [st, M] : r.moduli)
                    for (const auto& c : M.components)
                        for (const auto& t : c.members) {
                            ++count;
                            energy = std::max(energy, energy_defect(t));
                            const Trajectory again = normalize_representative(*r.ctx, t, t.epsilon);
                            for (std::size_t i = 0; i < t.samples.size(); ++i)
                                idem = std::max(idem, std::abs(again.samples[i].s - t.samples[i].s));
                        }
            const double tol = FlowOptions{}.tol;
            v.detail << "    " << count << " trajectories, energy defect " << energy << ", gauge idempotence " << idem
                     << " (integrator tol " << tol << ")\n";
            if (!(energy <= 1e-6))
                v.fail("energy identity");
            if (!(idem <= tol))
                v.fail("gauge idempotence");
        });
        report(8, "energy identity and gauge idempotence", v);
    }

    std::cout << (failures ? "ACCEPTANCE FAILED" : "ACCEPTANCE PASSED") << " (" << 8 - failures << "/8)\n";
    return failures ? 1 : 0;
}
