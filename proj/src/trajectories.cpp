#include "cleanmorse/trajectories.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cleanmorse/errors.hpp"
#include "cleanmorse/ode.hpp"

namespace cleanmorse {

namespace {

Vec pack(const FlowState& st) {
    const int n = static_cast<int>(st.pt.x.size());
    Vec y(n + st.frame.size());
    y.head(n) = st.pt.x;
    if (st.frame.size())
        y.tail(st.frame.size()) = Eigen::Map<const Vec>(st.frame.data(), st.frame.size());
    return y;
}

FlowState unpack(double s, int patch, int n, bool frames, const Vec& y) {
    FlowState st;
    st.s = s;
    st.pt = {patch, y.head(n)};
    if (frames)
        st.frame = Eigen::Map<const Mat>(y.data() + n, n, n);
    return st;
}

Rhs flow_rhs(const MorseSetup& S, int patch, int n, bool frames) {
    return [&S, patch, n, frames](double, const Vec& y, Vec& dy) {
        dy.resize(y.size());
        try {
            const ChartPoint pt{patch, y.head(n)};
            if (!frames) {
                dy = -S.gradient(pt);
                return;
            }
            const LocalGeometry L = S.local(pt, true);
            const Vec v = -L.gradient;
            dy.head(n) = v;
            Eigen::Map<const Mat> F(y.data() + n, n, n);
            Eigen::Map<Mat> dF(dy.data() + n, n, n);
            for (int k = 0; k < n; ++k)
                dF.row(k) = -(v.transpose() * L.christoffel[k] * F);
        } catch (const std::exception&) {
            dy.setConstant(std::numeric_limits<double>::quiet_NaN());
        }
    };
}

// Slowest rate at which a trajectory leaves (sign -1) or enters (sign +1) c.
// Slowest rate at c over all modes: cokernel elements decay along the modes the
// trajectory does not use, so the tails must cover those too.
double slowest_rate(const CriticalPoint& c) {
    double r = 1e300;
    for (int i = 0; i < c.eigenvalues.size(); ++i)
        r = std::min(r, std::abs(c.eigenvalues[i]));
    return r;
}

// Moves a state to its best patch when it sits close to the edge of the current one.
FlowState settle(const FlowContext& ctx, const FlowState& st) {
    const MorseSetup& S = *ctx.setup;
    if (S.margin(st.pt) >= ctx.opt.switch_margin)
        return st;
    FlowState out = st;
    out.pt = S.rechart(st.pt);
    if (st.frame.size())
        out.frame = S.transition_jacobian(st.pt, out.pt) * st.frame;
    return out;
}

}  // namespace

FlowContext::FlowContext(const MorseSetup& s, const FlowOptions& o) : setup(&s), opt(o) {
    if (opt.chart_radius <= 0) {
        // largest radius up to 0.2 whose charts still fit with 25% to spare
        double r = 0.2;
        for (;; r *= 0.8) {
            if (r < 1e-3)
                throw MorseError(ErrorCode::ChartRadiusTooLarge, "trajectories: no admissible chart radius");
            try {
                for (const auto& c : s.critical_points)
                    build_normal_chart(s, c, 1.25 * r);
                break;
            } catch (const MorseError&) {
            }
        }
        opt.chart_radius = r;
    }
    for (const auto& c : s.critical_points)
        charts.push_back(build_normal_chart(s, c, opt.chart_radius));
}

int Passage::exit_sign() const {
    if (!exited || exit_coords.size() == 0)
        return 0;
    return exit_coords[0] >= 0 ? 1 : -1;
}

const Passage* FlowCurve::passage(int crit) const {
    for (const auto& p : passages)
        if (p.crit == crit)
            return &p;
    return nullptr;
}

void run_flow(const FlowContext& ctx, FlowState& st, double s_end, bool frames,
              const std::function<bool(const FlowState&)>& hook) {
    const MorseSetup& S = *ctx.setup;
    const int n = ctx.n();
    OdeOptions o;
    o.rtol = o.atol = ctx.opt.tol;
    o.hmax = ctx.opt.hmax;
    o.h0 = 1e-3;
    o.error_dims = n;
    double trigger = ctx.opt.switch_margin;
    const double dir = s_end >= st.s ? 1.0 : -1.0;
    while (dir * (s_end - st.s) > 1e-13) {
        const int patch = st.pt.patch;
        bool stop = false, need_switch = false;
        FlowState last;
        auto observer = [&](double s, const Vec& y) {
            last = unpack(s, patch, n, frames, y);
            if (!hook(last)) {
                stop = true;
                return StepAction::Stop;
            }
            if (S.margin(last.pt) < trigger) {
                need_switch = true;
                return StepAction::Stop;
            }
            return StepAction::Continue;
        };
        const OdeResult res = integrate(flow_rhs(S, patch, n, frames), st.s, pack(st), s_end, o, observer);
        o.h0 = std::max(res.h_next, 1e-6);
        if (stop) {
            st = last;
            return;
        }
        if (!need_switch) {
            st = unpack(res.s, patch, n, frames, res.y);
            return;
        }
        st = last;
        const double m_old = S.margin(st.pt);
        const ChartPoint np = S.rechart(st.pt);
        if (np.patch == st.pt.patch || S.margin(np) <= m_old) {
            if (m_old <= 0)
                throw MorseError(ErrorCode::OutOfAtlas, "trajectories: flow left the atlas");
            trigger = 0.5 * m_old;
            continue;
        }
        if (frames)
            st.frame = S.transition_jacobian(st.pt, np) * st.frame;
        st.pt = np;
        trigger = ctx.opt.switch_margin;
    }
}

FlowState advance(const FlowContext& ctx, const FlowState& st, double ds) {
    if (ds == 0.0)
        return st;
    const int n = ctx.n();
    const bool frames = st.frame.size() > 0;
    const Vec y = dp_step(flow_rhs(*ctx.setup, st.pt.patch, n, frames), st.s, pack(st), ds);
    return unpack(st.s + ds, st.pt.patch, n, frames, y);
}

FlowCurve shoot(const FlowContext& ctx, int p, const Vec& direction, double horizon, ShootMode mode,
                int stop_target) {
    const MorseSetup& S = *ctx.setup;
    const CriticalPoint& cp = S.critical_points.at(p);
    const int k = cp.morse_index;
    if (direction.size() != k || k == 0 || !(horizon > 0))
        throw MorseError(ErrorCode::InvalidConfig, "trajectories: direction must lie in the unstable eigenspace");
    const bool frames = mode == ShootMode::Representative;
    const double rho = ctx.opt.chart_radius;
    const double delta = ctx.opt.offset_factor * rho;
    FlowCurve curve;
    curve.source = p;
    curve.direction = direction.normalized();
    FlowState st;
    st.s = 0.0;
    st.pt = {cp.location.patch, cp.location.x + delta * cp.eigenvectors.leftCols(k) * curve.direction};
    if (frames)
        st.frame = inverse_sqrt_spd(S.metric(st.pt));
    curve.samples.push_back(st);

    std::vector<int> cands;
    for (int c = 0; c < static_cast<int>(S.critical_points.size()); ++c)
        if (c != p && S.critical_points[c].f_value < cp.f_value)
            cands.push_back(c);
    std::vector<int> open(S.critical_points.size(), -1);

    auto hook = [&](const FlowState& cur) {
        curve.samples.push_back(cur);
        const Vec amb = S.ambient(cur.pt);
        for (int c : cands) {
            const CriticalPoint& cc = S.critical_points[c];
            const NormalChart& ch = ctx.charts[c];
            std::optional<Vec> y;
            if ((amb - cc.ambient).norm() < 2.0 * rho)
                y = normal_coords(S, ch, cur.pt);
            const double d = y ? y->norm() : 1e300;
            if (d < rho) {
                if (open[c] < 0) {
                    Passage ps;
                    ps.crit = c;
                    ps.s_entry = cur.s;
                    curve.passages.push_back(ps);
                    open[c] = static_cast<int>(curve.passages.size()) - 1;
                }
                Passage& ps = curve.passages[open[c]];
                if (d < ps.min_dist) {
                    ps.min_dist = d;
                    ps.s_closest = cur.s;
                }
                const Vec g = ch.eigenvalues.cwiseProduct(*y);
                if (g.norm() < ctx.opt.capture_tol) {
                    curve.captured_by = c;
                    return false;
                }
                if (c == stop_target && cc.morse_index > 0) {
                    const int ku = cc.morse_index;
                    const double yu = y->head(ku).norm(), ys = y->tail(y->size() - ku).norm();
                    if (yu > ctx.opt.departure_ratio * ys && ps.min_dist < 0.5 * rho) {
                        curve.departed = true;
                        return false;
                    }
                }
            } else if (open[c] >= 0) {
                Passage& ps = curve.passages[open[c]];
                ps.exited = true;
                ps.s_exit = cur.s;
                ps.exit_coords = y ? *y : Vec();
                if (!y) {
                    // left the home patch before the chart boundary was seen
                    ps.exit_coords = Vec::Zero(S.dim);
                }
                open[c] = -1;
            }
        }
        return true;
    };
    run_flow(ctx, st, horizon, frames, hook);
    if (curve.captured_by < 0 && !curve.departed) {
        curve.escaped = true;
        throw MorseError(ErrorCode::NoCapture,
                         "trajectories: horizon exceeded from " + cp.id + ", last point f=" +
                             std::to_string(S.f(st.pt)));
    }
    return curve;
}

namespace {

// Time in [s_i, s_i + ds_max] where f crosses `level`, by bisection on short steps.
double refine_level(const FlowContext& ctx, const FlowState& from, double ds_max, double level) {
    double lo = 0.0, hi = ds_max;
    FlowState base = from;
    base.frame.resize(0, 0);
    for (int it = 0; it < 80 && hi - lo > 1e-15; ++it) {
        const double mid = 0.5 * (lo + hi);
        const FlowState m = advance(ctx, base, mid);
        if (ctx.setup->f(m.pt) > level)
            lo = mid;
        else
            hi = mid;
    }
    return from.s + 0.5 * (lo + hi);
}

template <class States>
double level_time(const FlowContext& ctx, const States& states, double level) {
    const MorseSetup& S = *ctx.setup;
    for (std::size_t i = 0; i + 1 < states.size(); ++i) {
        const double fa = S.f(states[i].pt), fb = S.f(states[i + 1].pt);
        if (fa >= level && fb < level)
            return refine_level(ctx, settle(ctx, states[i]), states[i + 1].s - states[i].s, level);
    }
    throw MorseError(ErrorCode::EpsilonTooLarge,
                     "trajectories: gauge level not crossed inside the stored window");
}

void check_epsilon(const MorseSetup& S, double eps) {
    if (!(eps > 0) || eps >= S.min_critical_gap())
        throw MorseError(ErrorCode::EpsilonTooLarge,
                         "trajectories: epsilon must be positive and below the smallest critical-value gap");
}

}  // namespace

Trajectory make_representative(const FlowContext& ctx, const FlowCurve& curve, int target,
                               const RepresentativeOptions& ro) {
    const MorseSetup& S = *ctx.setup;
    check_epsilon(S, ro.epsilon);
    if (curve.samples.empty() || curve.samples.front().frame.size() == 0)
        throw MorseError(ErrorCode::InvalidConfig, "trajectories: representative needs a framed curve");
    const CriticalPoint& P = S.critical_points.at(curve.source);
    const CriticalPoint& Q = S.critical_points.at(target);
    const double rho = ctx.opt.chart_radius;
    std::vector<FlowState> states = curve.samples;

    const double s_top = level_time(ctx, states, P.f_value - ro.epsilon);
    const double s_bot = level_time(ctx, states, Q.f_value + ro.epsilon);
    const double shift = -0.5 * (s_top + s_bot);

    // Source tail: first exit from the source chart.
    double s_exit_p = states.front().s;
    ChartPoint exit_pt = states.front().pt;
    for (const auto& st : states) {
        const auto y = normal_coords(S, ctx.charts[curve.source], st.pt);
        if (!y || y->norm() >= rho) {
            s_exit_p = st.s;
            exit_pt = st.pt;
            break;
        }
    }
    const Passage* pq = curve.passage(target);
    if (!pq)
        throw MorseError(ErrorCode::TailsTooShort, "trajectories: curve never enters the target chart");
    const double need_p = ro.tail_efolds * ro.window_scale / slowest_rate(P);
    const double need_q = ro.tail_efolds * ro.window_scale / slowest_rate(Q);
    const double s_a = s_exit_p - need_p;
    const double s_b = pq->s_entry + need_q;
    if (s_b > states.back().s) {
        // captured before the tail was long enough; keep flowing into the target
        FlowState st = states.back();
        run_flow(ctx, st, s_b + 0.5, true, [&](const FlowState& cur) {
            states.push_back(cur);
            return true;
        });
    }

    if (s_a < states.front().s) {
        std::vector<FlowState> back;
        FlowState st = states.front();
        run_flow(ctx, st, s_a - 0.5, true, [&](const FlowState& cur) {
            back.push_back(cur);
            return true;
        });
        std::reverse(back.begin(), back.end());
        states.insert(states.begin(), back.begin(), back.end());
    }

    Trajectory t;
    t.source = curve.source;
    t.target = target;
    t.step = ro.step;
    t.epsilon = ro.epsilon;
    t.direction = curve.direction;
    t.l_minus = t.l_plus = 0.5 * (s_bot - s_top);
    const int N0 = static_cast<int>(std::floor((s_b - s_a) / ro.step + 1e-9));
    if (N0 < 4)
        throw MorseError(ErrorCode::TailsTooShort, "trajectories: window shorter than the grid step");
    auto sample_at = [&](double tau) {
        std::size_t i = std::upper_bound(states.begin(), states.end(), tau,
                                         [](double v, const FlowState& st) { return v < st.s; }) -
                        states.begin();
        i = i == 0 ? 0 : i - 1;
        const FlowState base = settle(ctx, states[i]);
        const FlowState st = advance(ctx, base, tau - base.s);
        TrajectorySample smp;
        smp.s = tau;
        smp.pt = st.pt;
        smp.frame = st.frame;
        const LocalGeometry L = S.local(st.pt, false);
        smp.velocity = -L.gradient;
        smp.f = L.f;
        const PatchJet J = S.atlas[st.pt.patch]->jet(st.pt.x, false);
        smp.ambient = J.X;
        smp.ambient_velocity = J.dX * smp.velocity;
        return smp;
    };
    // Simpson residual of the flow equation on one interval, in ambient space.
    auto interval_residual = [](const TrajectorySample& a, const TrajectorySample& m, const TrajectorySample& b) {
        const double h = b.s - a.s;
        const Vec r = (b.ambient - a.ambient) -
                      h / 6.0 * (a.ambient_velocity + 4.0 * m.ambient_velocity + b.ambient_velocity);
        return r.norm() / h;
    };
    std::vector<double> grid;
    for (int k = 0; k <= N0; ++k)
        grid.push_back(s_a + ro.step * k);
    std::vector<TrajectorySample> smp;
    for (int pass = 0;; ++pass) {
        smp.clear();
        for (std::size_t k = 0; k + 1 < grid.size(); ++k) {
            smp.push_back(sample_at(grid[k]));
            smp.push_back(sample_at(0.5 * (grid[k] + grid[k + 1])));
        }
        smp.push_back(sample_at(grid.back()));
        if (pass == 3)
            break;
        std::vector<double> finer{grid.front()};
        bool refined = false;
        for (std::size_t k = 0; k + 1 < grid.size(); ++k) {
            const double r = interval_residual(smp[2 * k], smp[2 * k + 1], smp[2 * k + 2]);
            int m = 1;
            if (r > ro.grid_tol) {
                m = std::min(16, static_cast<int>(std::ceil(1.2 * std::pow(r / ro.grid_tol, 0.25))));
                refined = true;
            }
            for (int j = 1; j <= m; ++j)
                finer.push_back(grid[k] + (grid[k + 1] - grid[k]) * j / m);
        }
        if (!refined)
            break;
        grid.swap(finer);
    }
    for (auto& x : smp)
        x.s += shift;
    t.samples = std::move(smp);
    const int N = t.nodes() - 1;
    for (int k = 0; k < N; ++k)
        t.integration_residual = std::max(
            t.integration_residual, interval_residual(t.samples[2 * k], t.samples[2 * k + 1], t.samples[2 * k + 2]));
    t.tail_source.s_boundary = s_exit_p + shift;
    t.tail_source.boundary_point = exit_pt;
    t.tail_source.time_in_chart = s_exit_p - s_a;
    t.tail_source.needed = need_p;
    t.tail_target.s_boundary = pq->s_entry + shift;
    for (const auto& st : states)
        if (st.s >= pq->s_entry) {
            t.tail_target.boundary_point = st.pt;
            break;
        }
    t.tail_target.time_in_chart = grid.back() - pq->s_entry;
    t.tail_target.needed = need_q;
    // the target end may be cut where the curve departs; three e-folds is the floor
    if (t.tail_target.time_in_chart < 0.6 * need_q)
        throw MorseError(ErrorCode::TailsTooShort, "trajectories: target tail covers " +
                                                       std::to_string(t.tail_target.time_in_chart) + " of " +
                                                       std::to_string(need_q));

    return t;
}

Trajectory time_shifted(const Trajectory& traj, double T) {
    Trajectory t = traj;
    for (auto& s : t.samples)
        s.s += T;
    t.tail_source.s_boundary += T;
    t.tail_target.s_boundary += T;
    return t;
}

Trajectory normalize_representative(const FlowContext& ctx, const Trajectory& traj, double eps) {
    const MorseSetup& S = *ctx.setup;
    check_epsilon(S, eps);
    std::vector<FlowState> states;
    states.reserve(traj.samples.size());
    for (const auto& smp : traj.samples)
        states.push_back(FlowState{smp.s, smp.pt, Mat()});
    const double s_top = level_time(ctx, states, S.critical_points[traj.source].f_value - eps);
    const double s_bot = level_time(ctx, states, S.critical_points[traj.target].f_value + eps);
    Trajectory t = time_shifted(traj, -0.5 * (s_top + s_bot));
    t.epsilon = eps;
    t.l_minus = t.l_plus = 0.5 * (s_bot - s_top);
    return t;
}

double energy_defect(const Trajectory& t) {
    const int N = t.nodes() - 1;
    double integral = 0.0;
    auto e = [](const TrajectorySample& s) {
        return s.velocity.dot(s.frame.transpose().inverse() * s.frame.inverse() * s.velocity);
    };
    for (int k = 0; k < N; ++k)
        integral += t.spacing(k) / 6.0 * (e(t.samples[2 * k]) + 4.0 * e(t.samples[2 * k + 1]) + e(t.samples[2 * k + 2]));
    return std::abs(t.samples.front().f - t.samples.back().f - integral);
}

std::vector<Vec> ambient_points(const Trajectory& t) {
    std::vector<Vec> out;
    for (const auto& s : t.samples)
        out.push_back(s.ambient);
    return out;
}

double hausdorff(const std::vector<Vec>& a, const std::vector<Vec>& b) {
    auto directed = [](const std::vector<Vec>& A, const std::vector<Vec>& B) {
        double worst = 0.0;
        for (const auto& x : A) {
            double best = 1e300;
            for (const auto& y : B)
                best = std::min(best, (x - y).squaredNorm());
            worst = std::max(worst, best);
        }
        return std::sqrt(worst);
    };
    return std::max(directed(a, b), directed(b, a));
}

const char* cut_status_name(CutStatus c) {
    switch (c) {
    case CutStatus::Unknown: return "unknown";
    case CutStatus::Transverse: return "transverse";
    case CutStatus::Clean: return "clean";
    case CutStatus::Unresolved: return "unresolved";
    }
    return "unknown";
}

int ModuliSpace::isolated_count() const {
    int n = 0;
    for (const auto& c : components)
        if (!c.family && !c.near_breaking)
            ++n;
    return n;
}

int ModuliSpace::family_count() const {
    int n = 0;
    for (const auto& c : components)
        if (c.family)
            ++n;
    return n;
}

Vec sweep_direction(int unstable_dim, double angle) {
    if (unstable_dim == 1)
        return Vec::Constant(1, std::cos(angle) >= 0 ? 1.0 : -1.0);
    if (unstable_dim == 2) {
        Vec d(2);
        d << std::cos(angle), std::sin(angle);
        return d;
    }
    throw MorseError(ErrorCode::InvalidConfig, "trajectories: sweeps support unstable dimension 1 or 2");
}

namespace {

ShotRecord classify(const FlowContext& ctx, int p, int k, double angle) {
    ShotRecord r;
    r.angle = angle;
    r.direction = sweep_direction(k, angle);
    try {
        const FlowCurve c = shoot(ctx, p, r.direction, ctx.opt.horizon);
        r.captured_by = c.captured_by;
        r.passages = c.passages;
        for (const auto& st : c.samples)
            r.ambient.push_back(ctx.setup->ambient(st.pt));
    } catch (const MorseError& e) {
        if (e.code() != ErrorCode::NoCapture)
            throw;
        r.escaped = true;
    }
    return r;
}

const Passage* passage_of(const ShotRecord& r, int c) {
    for (const auto& ps : r.passages)
        if (ps.crit == c)
            return &ps;
    return nullptr;
}

Crossing resolve_crossing(const FlowContext& ctx, int p, const ShotRecord& a, double hi_angle, int c,
                          double tol) {
    Crossing x;
    x.crit = c;
    x.lo = a.angle;
    x.hi = hi_angle;
    const int sign_lo = passage_of(a, c)->exit_sign();
    while (x.hi - x.lo > tol) {
        const double mid = 0.5 * (x.lo + x.hi);
        const ShotRecord m = classify(ctx, p, 2, mid);
        if (m.captured_by == c) {
            x.lo = x.hi = mid;
            x.exact = true;
            break;
        }
        const Passage* pm = passage_of(m, c);
        if (!pm || !pm->exited)
            return x;
        if (pm->exit_sign() == sign_lo)
            x.lo = mid;
        else
            x.hi = mid;
    }
    x.genuine = true;
    return x;
}

bool grazes_other(const FlowContext& ctx, const FlowCurve& c, int target) {
    for (const auto& ps : c.passages)
        if (ps.crit != target && ps.min_dist < ctx.opt.near_break * ctx.opt.chart_radius)
            return true;
    return false;
}

ModuliComponent isolated_component(const FlowContext& ctx, int p, int q, const Vec& dir,
                                   const SearchConfig& cfg) {
    const FlowCurve c = shoot(ctx, p, dir, ctx.opt.horizon, ShootMode::Representative, q);
    ModuliComponent comp;
    comp.members.push_back(make_representative(ctx, c, q, cfg.rep));
    comp.near_breaking = grazes_other(ctx, c, q);
    comp.members.back().near_breaking = comp.near_breaking;
    return comp;
}

}  // namespace

Sweep sweep_unstable_sphere(const FlowContext& ctx, int p, const SearchConfig& cfg) {
    const int k = ctx.setup->critical_points.at(p).morse_index;
    Sweep sw;
    sw.source = p;
    sw.unstable_dim = k;
    if (k == 1) {
        sw.shots.push_back(classify(ctx, p, 1, 0.0));
        sw.shots.push_back(classify(ctx, p, 1, M_PI));
    } else if (k == 2) {
        const int N = cfg.directions;
        for (int j = 0; j < N; ++j)
            sw.shots.push_back(classify(ctx, p, 2, 2 * M_PI * (j + 0.5) / N));
        for (int j = 0; j < N; ++j) {
            const ShotRecord& a = sw.shots[j];
            const ShotRecord& b = sw.shots[(j + 1) % N];
            for (const auto& pa : a.passages) {
                const Passage* pb = passage_of(b, pa.crit);
                if (!pb || !pa.exited || !pb->exited || pa.exit_sign() == pb->exit_sign() ||
                    ctx.setup->critical_points[pa.crit].morse_index != 1)
                    continue;
                Crossing x = resolve_crossing(ctx, p, a, a.angle + 2 * M_PI / N, pa.crit, cfg.bisect_tol);
                x.pair = j;
                sw.crossings.push_back(x);
            }
        }
    } else if (k > 2) {
        throw MorseError(ErrorCode::InvalidConfig, "trajectories: unstable dimension above 2 is not swept");
    }
    return sw;
}

ModuliSpace moduli_from_sweep(const FlowContext& ctx, const Sweep& sw, int q, const SearchConfig& cfg) {
    const MorseSetup& S = *ctx.setup;
    const int p = sw.source;
    const CriticalPoint& P = S.critical_points.at(p);
    const CriticalPoint& Q = S.critical_points.at(q);
    if (!(P.f_value > Q.f_value))
        throw MorseError(ErrorCode::InvalidConfig, "trajectories: need f(p) > f(q)");
    ModuliSpace M;
    M.source = p;
    M.target = q;
    M.expected_dim = P.morse_index - Q.morse_index - 1;
    const int k = sw.unstable_dim;
    std::vector<ModuliComponent> found;

    if (k == 1) {
        for (const auto& shot : sw.shots)
            if (shot.captured_by == q)
                found.push_back(isolated_component(ctx, p, q, shot.direction, cfg));
    } else if (k == 2) {
        const int N = static_cast<int>(sw.shots.size());
        if (Q.morse_index > 0) {
            for (const auto& shot : sw.shots)
                if (shot.captured_by == q)
                    found.push_back(isolated_component(ctx, p, q, shot.direction, cfg));
            for (const auto& x : sw.crossings)
                if (x.genuine && x.crit == q)
                    found.push_back(isolated_component(ctx, p, q, sweep_direction(2, x.angle()), cfg));
        }
        if (Q.morse_index == 0) {
            // brk[j]: shots j and j+1 are separated by a genuine breaking
            std::vector<const Crossing*> brk(N, nullptr);
            std::vector<bool> cut(N, false);
            bool any_cut = false;
            for (int j = 0; j < N; ++j) {
                const ShotRecord& a = sw.shots[j];
                const ShotRecord& b = sw.shots[(j + 1) % N];
                cut[j] = a.captured_by != q || b.captured_by != q;
                for (const auto& x : sw.crossings)
                    if (x.pair == j && x.genuine) {
                        brk[j] = &x;
                        cut[j] = true;
                    }
                any_cut = any_cut || cut[j];
            }
            auto member_at = [&](double angle) {
                const FlowCurve c = shoot(ctx, p, sweep_direction(2, angle), ctx.opt.horizon,
                                          ShootMode::Representative, q);
                return make_representative(ctx, c, q, cfg.rep);
            };
            auto continuity = [&](int j0, int len) {
                double worst = 0.0;
                for (int i = 0; i + 1 < len; ++i)
                    worst = std::max(worst, hausdorff(sw.shots[(j0 + i) % N].ambient,
                                                      sw.shots[(j0 + i + 1) % N].ambient));
                return worst;
            };
            // End of a run at the cut between shots j and j+1; `inside_low` when the
            // run lies on the side of shot j.
            auto make_end = [&](int j, bool inside_low) {
                FamilyEnd e;
                if (brk[j]) {
                    e.angle = inside_low ? brk[j]->lo : brk[j]->hi;
                } else {
                    double in = sw.shots[inside_low ? j : (j + 1) % N].angle;
                    double out = sw.shots[inside_low ? (j + 1) % N : j].angle;
                    if (inside_low && out < in) out += 2 * M_PI;
                    if (!inside_low && out > in) out -= 2 * M_PI;
                    while (std::abs(out - in) > cfg.end_tol) {
                        const double mid = 0.5 * (in + out);
                        if (classify(ctx, p, 2, mid).captured_by == q)
                            in = mid;
                        else
                            out = mid;
                    }
                    e.angle = in;
                }
                // the limit itself is captured by the saddle; read the itinerary off a
                // nearby member that still reaches q
                const double inward = inside_low ? -1.0 : 1.0;
                double back = 1e-8;
                FlowCurve c = shoot(ctx, p, sweep_direction(2, e.angle + inward * back), ctx.opt.horizon);
                while (c.captured_by != q && back < 1e-3) {
                    back *= 4;
                    c = shoot(ctx, p, sweep_direction(2, e.angle + inward * back), ctx.opt.horizon);
                }
                for (const auto& ps : c.passages)
                    if (ps.crit != q && ps.min_dist < ctx.opt.near_break * ctx.opt.chart_radius) {
                        e.itinerary.push_back(ps.crit);
                        e.graze_times.push_back(ps.s_closest);
                    }
                for (const auto& st : c.samples) {
                    e.ambient.push_back(S.ambient(st.pt));
                    e.times.push_back(st.s);
                }
                return e;
            };
            if (!any_cut) {
                ModuliComponent comp;
                comp.family = true;
                comp.closed_loop = true;
                for (int i = 0; i < cfg.family_samples; ++i) {
                    const double ang = 2 * M_PI * (i + 0.5) / cfg.family_samples;
                    comp.angles.push_back(ang);
                    comp.members.push_back(member_at(ang));
                }
                comp.continuity = continuity(0, N + 1);
                found.push_back(std::move(comp));
            } else {
                int start = 0;
                while (!cut[(start + N - 1) % N])
                    ++start;
                for (int j = start; j < start + N;) {
                    if (sw.shots[j % N].captured_by != q) {
                        ++j;
                        continue;
                    }
                    int len = 1;
                    while (len < N && !cut[(j + len - 1) % N])
                        ++len;
                    ModuliComponent comp;
                    comp.family = true;
                    comp.ends.push_back(make_end((j + N - 1) % N, false));
                    comp.ends.push_back(make_end((j + len - 1) % N, true));
                    double lo = comp.ends[0].angle, hi = comp.ends[1].angle;
                    while (hi < lo)
                        hi += 2 * M_PI;
                    // Members near the broken ends carry exponentially small
                    // singular values; sample the stretch of shots that keep
                    // clear of every saddle.
                    const double clear = cfg.member_clearance * ctx.opt.chart_radius;
                    int first = -1, last = -1;
                    for (int i = 0; i < len; ++i) {
                        const ShotRecord& sh = sw.shots[(j + i) % N];
                        bool ok = true;
                        for (const auto& ps : sh.passages)
                            if (ps.crit != q && S.critical_points[ps.crit].morse_index > 0 && ps.min_dist < clear)
                                ok = false;
                        if (ok) {
                            if (first < 0)
                                first = i;
                            last = i;
                        }
                    }
                    if (first >= 0 && last > first) {
                        double a = sw.shots[(j + first) % N].angle, b = sw.shots[(j + last) % N].angle;
                        while (a < lo)
                            a += 2 * M_PI;
                        while (b < a)
                            b += 2 * M_PI;
                        lo = a;
                        hi = b;
                        for (int i = 0; i < cfg.family_samples; ++i) {
                            const double ang = lo + (hi - lo) * i / (cfg.family_samples - 1);
                            comp.angles.push_back(ang);
                            comp.members.push_back(member_at(ang));
                        }
                    } else
                    for (int i = 0; i < cfg.family_samples; ++i) {
                        const double ang = lo + (hi - lo) * (i + 0.5) / cfg.family_samples;
                        comp.angles.push_back(ang);
                        comp.members.push_back(member_at(ang));
                    }
                    comp.continuity = continuity(j % N, len);
                    found.push_back(std::move(comp));
                    j += len;
                }
            }
        }
    }

    // Deduplicate isolated components by their normalized representatives.
    for (auto& comp : found) {
        bool dup = false;
        if (!comp.family)
            for (const auto& kept : M.components)
                if (!kept.family && hausdorff(ambient_points(kept.members[0]), ambient_points(comp.members[0])) <
                                        cfg.merge_tol) {
                    dup = true;
                    break;
                }
        if (!dup)
            M.components.push_back(std::move(comp));
    }
    for (std::size_t i = 0; i < M.components.size(); ++i) {
        auto& comp = M.components[i];
        comp.id = P.id + "->" + Q.id + "#" + std::to_string(i);
        for (std::size_t m = 0; m < comp.members.size(); ++m)
            comp.members[m].id = comp.id + (comp.family ? "/" + std::to_string(m) : "");
    }
    return M;
}

ModuliSpace find_moduli(const FlowContext& ctx, int p, int q, const SearchConfig& cfg) {
    return moduli_from_sweep(ctx, sweep_unstable_sphere(ctx, p, cfg), q, cfg);
}

}  // namespace cleanmorse
