#include "cleanmorse/gluing.hpp"

#include <algorithm>
#include <cmath>

#include "cleanmorse/errors.hpp"

namespace cleanmorse {

PieceData analyze_piece(const FlowContext& ctx, const Trajectory& traj, const std::string& component,
                        const FitOptions& fo) {
    const MorseSetup& S = *ctx.setup;
    PieceData pd;
    pd.id = traj.id;
    pd.component = component;
    pd.source = traj.source;
    pd.target = traj.target;
    pd.boundary_source = traj.tail_source.s_boundary;
    pd.boundary_target = traj.tail_target.s_boundary;
    const LinearOperator op = linearize_along(ctx, traj);
    const KernelCokernel kc = kernel_cokernel_dims(op);
    pd.fiber_rank = kc.dim_coker;
    pd.at_source = extract_trajectory_coeffs(ctx, traj, End::Source, fo);
    pd.at_target = extract_trajectory_coeffs(ctx, traj, End::Target, fo);
    const int diff = S.critical_points[traj.source].morse_index - S.critical_points[traj.target].morse_index;
    if (kc.dim_coker > 0) {
        ObstructionFiber fib = obstruction_fiber(op, kc);
        normalize_fiber_signs(ctx, traj, fib, fo);
        for (int e = 0; e < fib.rank; ++e) {
            pd.coker_source.push_back(extract_cokernel_coeffs(ctx, traj, fib, e, End::Source, fo));
            pd.coker_target.push_back(extract_cokernel_coeffs(ctx, traj, fib, e, End::Target, fo));
        }
        if (fib.rank == 1 && diff == 0)
            pd.orientation = trajectory_orientation(ctx, traj, op, &fib, 0);
    } else if (diff == 1) {
        pd.orientation = trajectory_orientation(ctx, traj, op);
    }
    return pd;
}

BrokenPair make_broken_pair(const PieceData& upper, const PieceData& lower) {
    if (upper.target != lower.source)
        throw MorseError(ErrorCode::InvalidConfig,
                         "gluing: " + upper.id + " does not end where " + lower.id + " starts");
    BrokenPair bp;
    bp.upper = upper;
    bp.lower = lower;
    bp.middle = upper.target;
    return bp;
}

double SectionComponent::value(double T) const {
    double v = 0.0;
    for (const auto& t : terms)
        v += t.coefficient * std::exp(t.rate * T);
    return v;
}

double SectionComponent::derivative(double T) const {
    double v = 0.0;
    for (const auto& t : terms)
        v += t.coefficient * t.rate * std::exp(t.rate * T);
    return v;
}

const SectionTerm& SectionComponent::leading() const {
    if (terms.empty())
        throw MorseError(ErrorCode::NothingToObstruct, "gluing: empty section component");
    const SectionTerm* best = &terms.front();
    for (const auto& t : terms)
        if (t.rate > best->rate)
            best = &t;
    return *best;
}

double SectionComponent::slowest_rate() const { return -leading().rate; }

double SectionComponent::abs_sum() const {
    double a = 0.0;
    for (const auto& t : terms)
        a += std::abs(t.coefficient);
    return a;
}

namespace {

double min_abs_eigenvalue(const CriticalPoint& c) { return c.eigenvalues.cwiseAbs().minCoeff(); }

// Pairs trajectory modes with cokernel modes of the same label.
std::vector<SectionTerm> pair_terms(const AsymptoticCoeffs& traj, const AsymptoticCoeffs& coker, double sign,
                                    double rate_factor) {
    std::vector<SectionTerm> out;
    for (const auto& m : traj.modes) {
        const ModeCoeff* d = coker.mode(m.label);
        if (!d || m.coefficient == 0.0 || d->coefficient == 0.0)
            continue;
        SectionTerm t;
        t.label = m.label;
        t.lambda = m.lambda;
        t.coefficient = sign * m.coefficient * d->coefficient;
        t.rate = rate_factor * m.lambda;
        out.push_back(t);
    }
    return out;
}

std::vector<SectionComponent> plus_components(const BrokenPair& bp) {
    std::vector<SectionComponent> out;
    for (int e = 0; e < bp.lower.fiber_rank; ++e) {
        SectionComponent c;
        c.side = 1;
        c.piece = bp.lower.id;
        c.component = bp.lower.component;
        c.element = e;
        // modes with lambda > 0 at q: c- of the upper piece, d+ of the lower fiber
        c.terms = pair_terms(bp.upper.at_target, bp.lower.coker_source[e], 1.0, -4.0);
        out.push_back(c);
    }
    return out;
}

std::vector<SectionComponent> minus_components(const BrokenPair& bp) {
    std::vector<SectionComponent> out;
    for (int e = 0; e < bp.upper.fiber_rank; ++e) {
        SectionComponent c;
        c.side = -1;
        c.piece = bp.upper.id;
        c.component = bp.upper.component;
        c.element = e;
        // modes with lambda < 0 at q: c+ of the lower piece, d- of the upper fiber
        c.terms = pair_terms(bp.lower.at_source, bp.upper.coker_target[e], -1.0, 4.0);
        out.push_back(c);
    }
    return out;
}

}  // namespace

double gluing_floor(const FlowContext& ctx, const BrokenPair& bp) {
    const double lam = min_abs_eigenvalue(ctx.setup->critical_points.at(bp.middle));
    const double reach = std::max(bp.upper.boundary_target, -bp.lower.boundary_source) + 3.0 / lam;
    return 0.5 * reach;
}

ObstructionSectionModel section_model(const FlowContext& ctx, const BrokenPair& bp) {
    if (bp.upper.fiber_rank == 0 && bp.lower.fiber_rank == 0)
        throw MorseError(ErrorCode::NothingToObstruct, "gluing: " + bp.id() + " has no obstruction fiber");
    ObstructionSectionModel m;
    m.pair_id = bp.id();
    m.middle = bp.middle;
    m.R = gluing_floor(ctx, bp);
    m.components = plus_components(bp);
    for (auto& c : minus_components(bp))
        m.components.push_back(c);
    for (const auto& c : m.components)
        if (c.terms.empty())
            throw MorseError(ErrorCode::WindowTooShort,
                             "gluing: no common modes for " + c.piece + " in " + m.pair_id);
    return m;
}

SectionValue linearized_obstruction_section(const BrokenPair& bp, double T) {
    SectionValue v;
    for (const auto& c : plus_components(bp))
        v.plus.push_back(c.value(T));
    for (const auto& c : minus_components(bp))
        v.minus.push_back(c.value(T));
    return v;
}

namespace {

double bump(double x) { return x > 0 ? std::exp(-1.0 / x) : 0.0; }
double bump_slope(double x) { return x > 0 ? std::exp(-1.0 / x) / (x * x) : 0.0; }

void check_ramp(const RampConfig& rc) {
    if (!(rc.delta1 >= 0) || !(rc.delta2 > rc.delta1) || !(rc.c1_bound > 0))
        throw MorseError(ErrorCode::InvalidConfig, "gluing: ramp needs 0 <= delta1 < delta2 and a positive bound");
}

}  // namespace

double ramp(const RampConfig& rc, double R, double T) {
    const double t = (T - R - rc.delta1) / (rc.delta2 - rc.delta1);
    if (t <= 0)
        return 0.0;
    if (t >= 1)
        return 1.0;
    const double a = bump(t), b = bump(1.0 - t);
    return a / (a + b);
}

double ramp_slope(const RampConfig& rc, double R, double T) {
    const double w = rc.delta2 - rc.delta1;
    const double t = (T - R - rc.delta1) / w;
    if (t <= 0 || t >= 1)
        return 0.0;
    const double a = bump(t), b = bump(1.0 - t);
    const double da = bump_slope(t), db = -bump_slope(1.0 - t);
    return (da * b - a * db) / ((a + b) * (a + b)) / w;
}

double PerturbationSection::at_infinity(const std::string& component, int element) const {
    const auto it = sigma.find(component);
    if (it == sigma.end() || element >= static_cast<int>(it->second.size()))
        throw MorseError(ErrorCode::NotTransverse, "gluing: no perturbation value for " + component);
    return it->second[element];
}

double PerturbationSection::value(const SectionComponent& c, double R, double T) const {
    return cleanmorse::ramp(this->ramp, R, T) * at_infinity(c.component, c.element);
}

double PerturbationSection::slope(const SectionComponent& c, double R, double T) const {
    return ramp_slope(this->ramp, R, T) * at_infinity(c.component, c.element);
}

PerturbationSection build_perturbation_section(const std::map<std::string, int>& obstructed,
                                               const std::map<std::string, std::vector<double>>& choices,
                                               const RampConfig& rc) {
    check_ramp(rc);
    PerturbationSection ps;
    ps.ramp = rc;
    for (const auto& [comp, rank] : obstructed) {
        const auto it = choices.find(comp);
        if (it == choices.end() || static_cast<int>(it->second.size()) != rank)
            throw MorseError(ErrorCode::NotTransverse, "gluing: component " + comp + " needs " +
                                                           std::to_string(rank) + " perturbation values");
        for (double s : it->second) {
            if (s == 0.0 || !std::isfinite(s))
                throw MorseError(ErrorCode::NotTransverse, "gluing: zero perturbation value on " + comp);
            ps.sup_value = std::max(ps.sup_value, std::abs(s));
        }
        ps.sigma[comp] = it->second;
    }
    double chi_slope = 0.0;
    const int n = 20000;
    for (int i = 0; i <= n; ++i) {
        const double T = rc.delta1 + (rc.delta2 - rc.delta1) * i / n;
        chi_slope = std::max(chi_slope, std::abs(ramp_slope(rc, 0.0, T)));
    }
    ps.sup_slope = chi_slope * ps.sup_value;
    if (ps.sup_value > rc.c1_bound || ps.sup_slope > rc.c1_bound)
        throw MorseError(ErrorCode::InvalidConfig, "gluing: perturbation exceeds the C1 bound");
    return ps;
}

namespace {

struct GridCount {
    int zeros = 0;
    std::vector<std::pair<double, double>> brackets;
};

template <class F>
GridCount sign_changes(const F& g, double a, double b, int n) {
    GridCount gc;
    double prev = g(a), tprev = a;
    for (int j = 1; j <= n; ++j) {
        const double T = a + (b - a) * j / n;
        const double v = g(T);
        if ((prev < 0 && v >= 0) || (prev > 0 && v <= 0)) {
            if (v == 0.0 && j < n) {
                // exact zero on the grid: decide by the next sample
                const double Tn = a + (b - a) * (j + 1) / n;
                const double vn = g(Tn);
                if ((prev < 0) == (vn < 0)) {
                    tprev = T;
                    continue;
                }
            }
            ++gc.zeros;
            gc.brackets.emplace_back(tprev, T);
        }
        if (v != 0.0) {
            prev = v;
            tprev = T;
        }
    }
    return gc;
}

template <class F>
double bisect(const F& g, double lo, double hi, double tol) {
    double glo = g(lo);
    for (int it = 0; it < 200 && hi - lo > tol; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double gm = g(mid);
        if (gm == 0.0)
            return mid;
        if ((gm < 0) == (glo < 0)) {
            lo = mid;
            glo = gm;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

}  // namespace

std::vector<GluingCount> count_perturbed_gluings(const ObstructionSectionModel& model,
                                                 const PerturbationSection& pert, const CountOptions& co) {
    std::vector<GluingCount> out;
    for (const auto& comp : model.components) {
        GluingCount gc;
        gc.pair_id = model.pair_id;
        gc.side = comp.side;
        gc.piece = comp.piece;
        gc.component = comp.component;
        gc.element = comp.element;
        gc.R = model.R;
        const SectionTerm& lead = comp.leading();
        gc.leading_coefficient = lead.coefficient;
        gc.leading_rate = lead.rate;
        gc.sigma_inf = pert.at_infinity(comp.component, comp.element);
        const double lam = std::abs(lead.lambda);
        gc.T_max = co.T_max > 0 ? co.T_max : model.R + pert.ramp.delta2 + 5.0 / lam;
        if (gc.T_max < model.R + pert.ramp.delta2 + 5.0 / lam)
            throw MorseError(ErrorCode::InvalidConfig, "gluing: T_max does not reach the asymptotic regime");

        auto g = [&](double T) { return comp.value(T) + pert.value(comp, model.R, T); };
        const GridCount coarse = sign_changes(g, model.R, gc.T_max, co.grid);
        const GridCount fine = sign_changes(g, model.R, gc.T_max, 2 * co.grid);
        gc.coarse_zeros = coarse.zeros;
        gc.zeros = fine.zeros;

        // |s0| must decay monotonically past R + 2/lambda
        const double t0 = model.R + 2.0 / lam;
        double prev = comp.value(t0);
        for (int j = 1; j <= 2 * co.grid; ++j) {
            const double T = t0 + (gc.T_max - t0) * j / (2 * co.grid);
            const double v = comp.value(T);
            if ((v > 0) != (prev > 0) || std::abs(v) >= std::abs(prev))
                gc.monotone_tail = false;
            prev = v;
        }
        if (coarse.zeros != fine.zeros || !gc.monotone_tail)
            throw MorseError(ErrorCode::UnstableCount,
                             "gluing: " + model.pair_id + " zero count " + std::to_string(coarse.zeros) + " vs " +
                                 std::to_string(fine.zeros) + " on the refined grid" +
                                 (gc.monotone_tail ? "" : ", s0 tail not monotone"));
        for (const auto& [lo, hi] : fine.brackets) {
            const double Ts = bisect(g, lo, hi, co.bisect_tol);
            const double d = comp.derivative(Ts) + pert.slope(comp, model.R, Ts);
            const int sg = d > 0 ? -1 : 1;
            gc.crossings.push_back(Ts);
            gc.signs.push_back(sg);
            gc.signed_count += sg;
            // higher-order terms of the full section are smaller by exp(-2 lambda T)
            const double corr = comp.abs_sum() * std::exp(-2.0 * lam * Ts) * std::abs(comp.value(Ts));
            if (std::abs(comp.value(Ts)) < co.margin_factor * corr)
                gc.margin_ok = false;
        }
        const int expected = (lead.coefficient > 0) != (gc.sigma_inf > 0) ? 1 : 0;
        gc.dichotomy = gc.zeros == expected;
        out.push_back(gc);
    }
    return out;
}

ChainSectionModel chain_section_model(const FlowContext& ctx, const PieceData& a, const PieceData& b,
                                      const PieceData& c) {
    ChainSectionModel ch;
    const BrokenPair ab = make_broken_pair(a, b), bc = make_broken_pair(b, c);
    ch.first = section_model(ctx, ab);
    ch.second = section_model(ctx, bc);
    ch.middle_piece = b.id;
    for (const auto& comp : ch.first.components)
        ch.labels.push_back(comp.piece + "/" + std::to_string(comp.element));
    for (const auto& comp : ch.second.components)
        if (comp.piece != b.id)
            ch.labels.push_back(comp.piece + "/" + std::to_string(comp.element));
    return ch;
}

std::vector<double> ChainSectionModel::value(double T1, double T2) const {
    std::vector<double> v;
    for (const auto& c : first.components) {
        double x = c.value(T1);
        if (c.piece == middle_piece)
            for (const auto& d : second.components)
                if (d.piece == middle_piece && d.element == c.element)
                    x += d.value(T2);
        v.push_back(x);
    }
    for (const auto& d : second.components)
        if (d.piece != middle_piece)
            v.push_back(d.value(T2));
    return v;
}

double chain_limit_defect(const ChainSectionModel& chain, double T2) {
    double worst = 0.0;
    const std::size_t k = chain.first.components.size();
    for (const auto& c : chain.first.components) {
        const double span = 5.0 / c.slowest_rate();
        for (int j = 0; j <= 100; ++j) {
            const double T1 = chain.first.R + span * j / 100;
            const std::vector<double> v = chain.value(T1, T2);
            for (std::size_t i = 0; i < k; ++i)
                worst = std::max(worst, std::abs(v[i] - chain.first.components[i].value(T1)));
        }
    }
    return worst;
}

std::vector<std::pair<double, double>> chain_zero_locus(const ChainSectionModel& chain, int samples) {
    std::vector<std::pair<double, double>> out;
    int idx = -1;
    for (std::size_t i = 0; i < chain.first.components.size(); ++i)
        if (chain.first.components[i].piece == chain.middle_piece)
            idx = static_cast<int>(i);
    if (idx < 0)
        return out;
    const double lam = chain.first.components[idx].slowest_rate();
    const double R1 = chain.first.R, R2 = chain.second.R;
    const double T1max = R1 + 10.0 / lam, T2max = R2 + 10.0 / lam + (R1 > R2 ? R1 - R2 : 0.0) + 10.0;
    for (int j = 0; j <= samples; ++j) {
        const double T1 = R1 + (T1max - R1) * j / samples;
        auto g = [&](double T2) { return chain.value(T1, T2)[idx]; };
        const GridCount gc = sign_changes(g, R2, T2max, 2000);
        for (const auto& [lo, hi] : gc.brackets)
            out.emplace_back(T1, bisect(g, lo, hi, 1e-12));
    }
    return out;
}

namespace {

// Max over the points of seg of the distance to the nearest point of pts.
double one_sided(const std::vector<Vec>& seg, const std::vector<Vec>& pts) {
    double worst = 0.0;
    for (const auto& a : seg) {
        double best = 1e300;
        for (const auto& b : pts)
            best = std::min(best, (a - b).squaredNorm());
        worst = std::max(worst, std::sqrt(best));
    }
    return worst;
}

}  // namespace

EndMatchReport match_family_ends(const FlowContext& ctx, const ModuliSpace& family,
                                 const std::map<std::pair<int, int>, ModuliSpace>& moduli,
                                 const std::vector<GluingCount>& inventory) {
    const MorseSetup& S = *ctx.setup;
    EndMatchReport rep;
    bool any_ends = false;
    for (const auto& comp : family.components) {
        if (!comp.family)
            continue;
        for (std::size_t e = 0; e < comp.ends.size(); ++e) {
            const FamilyEnd& fe = comp.ends[e];
            any_ends = true;
            EndMatch em;
            em.family = comp.id;
            em.end = static_cast<int>(e);
            em.itinerary = fe.itinerary;
            std::vector<int> nodes{family.source};
            nodes.insert(nodes.end(), fe.itinerary.begin(), fe.itinerary.end());
            nodes.push_back(family.target);
            std::vector<double> cuts{-1e300};
            cuts.insert(cuts.end(), fe.graze_times.begin(), fe.graze_times.end());
            cuts.push_back(1e300);
            bool complete = true;
            std::vector<const Trajectory*> chosen;
            for (std::size_t k = 0; k + 1 < nodes.size(); ++k) {
                std::vector<Vec> seg;
                for (std::size_t i = 0; i < fe.ambient.size(); ++i) {
                    if (fe.times[i] <= cuts[k] || fe.times[i] >= cuts[k + 1])
                        continue;
                    // skip the parts deep inside the charts of the ends of the segment
                    const Vec& x = fe.ambient[i];
                    if ((x - S.critical_points[nodes[k]].ambient).norm() < ctx.opt.chart_radius ||
                        (x - S.critical_points[nodes[k + 1]].ambient).norm() < ctx.opt.chart_radius)
                        continue;
                    seg.push_back(x);
                }
                const auto it = moduli.find({nodes[k], nodes[k + 1]});
                const Trajectory* best = nullptr;
                double bd = 1e300;
                if (it != moduli.end())
                    for (const auto& c : it->second.components)
                        for (const auto& m : c.members) {
                            const double d = seg.empty() ? 0.0 : one_sided(seg, ambient_points(m));
                            if (d < bd) {
                                bd = d;
                                best = &m;
                            }
                        }
                if (!best) {
                    complete = false;
                    em.pieces.push_back("?");
                    em.distances.push_back(-1.0);
                    continue;
                }
                chosen.push_back(best);
                em.pieces.push_back(best->id);
                em.distances.push_back(bd);
            }
            if (complete) {
                // consecutive pieces: transverse pairs glue, obstructed ones need an inventory zero
                for (std::size_t k = 0; k + 1 < chosen.size(); ++k) {
                    const std::string pid = "(" + chosen[k + 1]->id + "," + chosen[k]->id + ")";
                    bool obstructed = false, glued = false;
                    for (const auto& g : inventory)
                        if (g.pair_id == pid) {
                            obstructed = true;
                            glued = glued || g.zeros > 0;
                        }
                    if (!obstructed || glued)
                        em.partners.push_back(pid);
                }
                em.matched = !em.partners.empty();
            }
            if (!em.matched)
                rep.orphans.push_back(comp.id + "/end" + std::to_string(e));
            rep.ends.push_back(em);
        }
    }
    rep.closed = !any_ends;
    return rep;
}

}  // namespace cleanmorse
