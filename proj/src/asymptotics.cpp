#include "cleanmorse/asymptotics.hpp"

#include <Eigen/QR>
#include <algorithm>
#include <cmath>

#include "cleanmorse/errors.hpp"

namespace cleanmorse {

const char* end_name(End e) { return e == End::Source ? "source" : "target"; }

int mode_label(const CriticalPoint& c, int i) {
    const int ind = c.morse_index;
    return i < ind ? i - ind : i - ind + 1;
}

int eigen_index(const CriticalPoint& c, int label) {
    const int ind = c.morse_index;
    return label < 0 ? label + ind : label + ind - 1;
}

const ModeCoeff& AsymptoticCoeffs::leading() const {
    for (const auto& m : modes)
        if (m.leading)
            return m;
    throw MorseError(ErrorCode::WindowTooShort, "asymptotics: no leading mode");
}

const ModeCoeff* AsymptoticCoeffs::mode(int label) const {
    for (const auto& m : modes)
        if (m.label == label)
            return &m;
    return nullptr;
}

namespace {

struct LineFit {
    double a = 0.0, b = 0.0, b2 = 0.0, worst = 0.0;
    double eval(double r) const { return a + (b + b2 * r) * r; }
};

// Weighted least squares z ~ a + b r + b2 r^2 (corrections dropped when r barely varies).
LineFit fit_line(const std::vector<double>& z, const std::vector<double>& r, const std::vector<double>& w) {
    const int m = static_cast<int>(z.size());
    double rmin = 1e300, rmax = -1e300;
    for (double x : r) {
        rmin = std::min(rmin, x);
        rmax = std::max(rmax, x);
    }
    const int cols = rmax - rmin > 1e-3 ? 3 : (rmax - rmin > 1e-12 ? 2 : 1);
    Mat A(m, cols);
    Vec rhs(m);
    for (int k = 0; k < m; ++k) {
        const double sw = std::sqrt(w[k]);
        for (int j = 0; j < cols; ++j)
            A(k, j) = sw * std::pow(r[k], j);
        rhs[k] = sw * z[k];
    }
    const Vec c = A.colPivHouseholderQr().solve(rhs);
    LineFit f;
    f.a = c[0];
    f.b = cols > 1 ? c[1] : 0.0;
    f.b2 = cols > 2 ? c[2] : 0.0;
    for (int k = 0; k < m; ++k)
        f.worst = std::max(f.worst, std::sqrt(w[k]) * std::abs(z[k] - f.eval(r[k])));
    return f;
}

}  // namespace

AsymptoticCoeffs fit_modes(const std::vector<double>& s, const std::vector<Vec>& y, const std::vector<double>& r,
                           const Vec& lambdas, int mode_sign, int rate_sign, const FitOptions& fo) {
    AsymptoticCoeffs out;
    out.rate_sign = rate_sign;
    const int n = static_cast<int>(lambdas.size());
    std::vector<int> kept;
    for (int i = 0; i < n; ++i)
        if (mode_sign * lambdas[i] > 0)
            kept.push_back(i);
    if (kept.empty())
        return out;
    double slowest = 1e300;
    for (int i : kept)
        slowest = std::min(slowest, std::abs(lambdas[i]));

    // available tail: up to the noise floor
    int avail = 0;
    while (avail < static_cast<int>(s.size()) && y[avail].norm() >= fo.noise_floor)
        ++avail;
    // leave the deepest e-folding length for the extrapolation check
    const double s_last = s[std::max(avail - 1, 0)];
    int win = 0;
    while (win < avail && std::abs(s[win] - s_last) > 1.0 / slowest)
        ++win;
    if (win < fo.min_samples)
        throw MorseError(ErrorCode::WindowTooShort,
                         "asymptotics: " + std::to_string(win) + " samples in the fit window");
    out.window_samples = win;
    out.s_a = s.front();
    out.s_b = s[win - 1];
    out.s_extended = s_last;

    for (int k = 0; k < win; ++k) {
        double excl = 0.0;
        for (int i = 0; i < n; ++i)
            if (mode_sign * lambdas[i] <= 0)
                excl = std::max(excl, std::abs(y[k][i]));
        out.growing = std::max(out.growing, excl / y[k].norm());
    }

    // group degenerate eigenvalues
    std::vector<std::vector<int>> blocks;
    for (int i : kept) {
        if (!blocks.empty() && std::abs(lambdas[i] - lambdas[blocks.back().back()]) < fo.degeneracy_tol)
            blocks.back().push_back(i);
        else
            blocks.push_back({i});
    }
    const double noise = fo.noise_floor;
    for (const auto& blk : blocks) {
        const double lam = lambdas[blk.front()];
        std::vector<double> z, rr, w;
        Vec dir = Vec::Zero(n);
        int sign_flips = 0, prev_sign = 0;
        for (int k = 0; k < win; ++k) {
            double amp = 0.0;
            for (int i : blk)
                amp += y[k][i] * y[k][i];
            amp = std::sqrt(amp);
            if (blk.size() == 1) {
                const int sg = y[k][blk[0]] >= 0 ? 1 : -1;
                if (prev_sign != 0 && sg != prev_sign && amp > 100 * noise)
                    ++sign_flips;
                if (amp > 100 * noise)
                    prev_sign = sg;
            }
            if (amp <= noise)
                continue;
            z.push_back(std::log(amp) - rate_sign * lam * s[k]);
            rr.push_back(r[k]);
            w.push_back(amp * amp / (amp * amp + 1e4 * noise * noise));
            for (int i : blk)
                dir[i] += y[k][i] * std::exp(-rate_sign * lam * s[k]) * w.back();
        }
        if (static_cast<int>(z.size()) < fo.min_samples) {
            // mode absent from the data
            for (int i : blk) {
                ModeCoeff mc;
                mc.label = i;
                mc.index = i;
                mc.lambda = lambdas[i];
                mc.joint = blk.size() > 1;
                out.modes.push_back(mc);
            }
            continue;
        }
        const LineFit lf = fit_line(z, rr, w);
        const double mag = std::exp(lf.a);
        dir.normalize();
        for (int i : blk) {
            ModeCoeff mc;
            mc.label = i;  // relabelled by the callers
            mc.index = i;
            mc.lambda = lambdas[i];
            mc.coefficient = blk.size() == 1 ? (prev_sign >= 0 ? mag : -mag) : mag * dir[i];
            mc.fit_residual = lf.worst;
            mc.correction = lf.b;
            mc.correction2 = lf.b2;
            mc.joint = blk.size() > 1;
            mc.trusted = lf.worst <= fo.trust_threshold && sign_flips == 0;
            out.modes.push_back(mc);
        }
    }
    // leading: slowest block present in the data
    double lead = 1e300;
    for (const auto& m : out.modes)
        if (m.coefficient != 0.0)
            lead = std::min(lead, std::abs(m.lambda));
    for (auto& m : out.modes)
        if (std::abs(std::abs(m.lambda) - lead) < fo.degeneracy_tol)
            m.leading = true;
    return out;
}

double extrapolation_defect(const AsymptoticCoeffs& c, const std::vector<double>& s, const std::vector<Vec>& y,
                            const std::vector<double>& r, const FitOptions& fo) {
    double worst = 0.0;
    for (const auto& m : c.modes) {
        if (!m.leading || m.coefficient == 0.0)
            continue;
        const int i = m.index;
        for (std::size_t k = 0; k < s.size(); ++k) {
            // only the held-out stretch between the window end and s_extended
            if (s[k] < std::min(c.s_b, c.s_extended) || s[k] > std::max(c.s_b, c.s_extended))
                continue;
            const double model =
                std::log(std::abs(m.coefficient)) + c.rate_sign * m.lambda * s[k] +
                                 (m.correction + m.correction2 * r[k]) * r[k];
            const double amp = std::abs(y[k][i]);
            if (amp <= fo.noise_floor)
                continue;
            const double w = amp * amp / (amp * amp + 1e4 * fo.noise_floor * fo.noise_floor);
            worst = std::max(worst, std::sqrt(w) * std::abs(std::log(amp) - model));
        }
    }
    return worst;
}

namespace {

const CriticalPoint& end_crit(const MorseSetup& S, const Trajectory& t, End end) {
    return S.critical_points.at(end == End::Source ? t.source : t.target);
}

// Sample indices of the tail at one end, boundary first.
std::vector<int> tail_indices(const MorseSetup& S, const NormalChart& ch, const Trajectory& t, End end,
                              std::vector<Vec>& coords) {
    const int m = static_cast<int>(t.samples.size());
    std::vector<int> idx;
    // walk from the critical point outwards, stop at the first sample outside
    for (int j = 0; j < m; ++j) {
        const int k = end == End::Source ? j : m - 1 - j;
        const auto y = normal_coords(S, ch, t.samples[k].pt);
        if (!y || y->norm() >= ch.radius)
            break;
        idx.push_back(k);
        coords.push_back(*y);
    }
    std::reverse(idx.begin(), idx.end());
    std::reverse(coords.begin(), coords.end());
    return idx;
}

void relabel(AsymptoticCoeffs& c, const CriticalPoint& cp) {
    for (auto& m : c.modes)
        m.label = mode_label(cp, m.label);
}

}  // namespace

TailSeries trajectory_tail(const FlowContext& ctx, const Trajectory& traj, End end) {
    const MorseSetup& S = *ctx.setup;
    const int c = end == End::Source ? traj.source : traj.target;
    const NormalChart& ch = ctx.charts.at(c);
    TailSeries ts;
    const auto idx = tail_indices(S, ch, traj, end, ts.y);
    for (std::size_t j = 0; j < idx.size(); ++j) {
        ts.s.push_back(traj.samples[idx[j]].s);
        ts.r.push_back(ts.y[j].norm());
    }
    return ts;
}

TailSeries cokernel_tail(const FlowContext& ctx, const Trajectory& traj, const ObstructionFiber& fib, int element,
                         End end) {
    const MorseSetup& S = *ctx.setup;
    const int c = end == End::Source ? traj.source : traj.target;
    const NormalChart& ch = ctx.charts.at(c);
    const Mat& eta = fib.basis.at(element);
    const int N = static_cast<int>(eta.cols());
    TailSeries ts;
    for (int j = 0; j < N; ++j) {
        const int k = end == End::Source ? j : N - 1 - j;
        const TrajectorySample& smp = traj.samples[2 * k + 1];
        const auto y = normal_coords(S, ch, smp.pt);
        if (!y || y->norm() >= ch.radius)
            break;
        const ChartPoint home{ch.patch, *S.to_patch(smp.pt, ch.patch)};
        const Vec w = S.transition_jacobian(smp.pt, home) * (smp.frame * eta.col(k));
        ts.s.push_back(fib.s_mid[k]);
        ts.y.push_back(ch.frame_dual * w);
        ts.r.push_back(y->norm());
    }
    std::reverse(ts.s.begin(), ts.s.end());
    std::reverse(ts.y.begin(), ts.y.end());
    std::reverse(ts.r.begin(), ts.r.end());
    return ts;
}

AsymptoticCoeffs extract_trajectory_coeffs(const FlowContext& ctx, const Trajectory& traj, End end,
                                           const FitOptions& fo) {
    const CriticalPoint& cp = end_crit(*ctx.setup, traj, end);
    const TailSeries ts = trajectory_tail(ctx, traj, end);
    if (static_cast<int>(ts.s.size()) < fo.min_samples)
        throw MorseError(ErrorCode::WindowTooShort, "asymptotics: tail of " + traj.id + " has " +
                                                        std::to_string(ts.s.size()) + " samples in the chart");
    // u ~ sum c_i e^{-lambda_i s} v_i over the modes that decay towards the end
    const int mode_sign = end == End::Source ? -1 : 1;
    AsymptoticCoeffs c = fit_modes(ts.s, ts.y, ts.r, cp.eigenvalues, mode_sign, -1, fo);
    c.subject = traj.id;
    c.crit = end == End::Source ? traj.source : traj.target;
    c.end = end;
    relabel(c, cp);
    return c;
}

AsymptoticCoeffs extract_cokernel_coeffs(const FlowContext& ctx, const Trajectory& traj, const ObstructionFiber& fib,
                                         int element, End end, const FitOptions& fo) {
    const CriticalPoint& cp = end_crit(*ctx.setup, traj, end);
    const TailSeries ts = cokernel_tail(ctx, traj, fib, element, end);
    if (static_cast<int>(ts.s.size()) < fo.min_samples)
        throw MorseError(ErrorCode::WindowTooShort, "asymptotics: cokernel tail of " + traj.id + " too short");
    // eta ~ sum d_i e^{lambda_i s} v_i: positive modes near the source, negative near the target
    const int mode_sign = end == End::Source ? 1 : -1;
    AsymptoticCoeffs c = fit_modes(ts.s, ts.y, ts.r, cp.eigenvalues, mode_sign, 1, fo);
    c.subject = traj.id + "/eta" + std::to_string(element);
    c.crit = end == End::Source ? traj.source : traj.target;
    c.end = end;
    c.cokernel = true;
    relabel(c, cp);
    return c;
}

void normalize_fiber_signs(const FlowContext& ctx, const Trajectory& traj, ObstructionFiber& fib,
                           const FitOptions& fo) {
    for (int e = 0; e < fib.rank; ++e) {
        const AsymptoticCoeffs c = extract_cokernel_coeffs(ctx, traj, fib, e, End::Source, fo);
        if (c.leading().coefficient < 0)
            fib.basis[e] = -fib.basis[e];
    }
}

}  // namespace cleanmorse
