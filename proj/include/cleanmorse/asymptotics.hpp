#pragma once
// Exponential-mode coefficients of trajectories and cokernel elements in the
// normal charts at their ends.
#include <string>
#include <vector>

#include "cleanmorse/linearized.hpp"

namespace cleanmorse {

enum class End { Source, Target };
const char* end_name(End e);

// Mode labels follow the critical point's eigenvalue order: negative labels
// -ind..-1 for lambda < 0 (most negative first), positive labels 1..n-ind.
int mode_label(const CriticalPoint& c, int eigen_index);
int eigen_index(const CriticalPoint& c, int label);

struct ModeCoeff {
    int label = 0;
    int index = 0;  // position in the ascending eigenvalue list
    double lambda = 0.0;
    double coefficient = 0.0;
    double fit_residual = 0.0;  // max weighted misfit in log coordinates
    double correction = 0.0;    // slope of the first-order term in |y|
    double correction2 = 0.0;   // second-order term
    bool leading = false;       // slowest mode of the set; the others are advisory
    bool joint = false;         // part of a degenerate eigenvalue block
    bool trusted = false;
};

struct AsymptoticCoeffs {
    std::string subject;
    int crit = -1;
    End end = End::Source;
    bool cokernel = false;
    int rate_sign = -1;  // data ~ coefficient * exp(rate_sign * lambda * s)
    std::vector<ModeCoeff> modes;
    double s_a = 0.0, s_b = 0.0;  // fit window
    double s_extended = 0.0;      // far end of the extrapolation check
    int window_samples = 0;
    double growing = 0.0;  // max share of the excluded modes over the window

    const ModeCoeff& leading() const;
    const ModeCoeff* mode(int label) const;
};

struct FitOptions {
    double noise_floor = 1e-9;     // 10x integrator tolerance
    double trust_threshold = 1e-3;
    int min_samples = 10;
    double degeneracy_tol = 1e-6;
};

// Core fit. y[k] holds eigen-coordinates at s[k] (columns of the chart's
// eigenframe, in ascending-eigenvalue order); r[k] is the regressor for the
// first-order correction. Only modes whose eigenvalue sign equals `mode_sign`
// are fitted; rate_sign selects exp(-lambda s) (trajectories) or exp(lambda s)
// (cokernel elements). Samples are ordered from the chart boundary inwards.
AsymptoticCoeffs fit_modes(const std::vector<double>& s, const std::vector<Vec>& y, const std::vector<double>& r,
                           const Vec& lambdas, int mode_sign, int rate_sign, const FitOptions& fo = {});

// Max log-misfit of the fitted leading mode on the deepest e-folding length,
// which the fit leaves out. Weighted like the fit, so values near the noise
// floor count less.
double extrapolation_defect(const AsymptoticCoeffs& c, const std::vector<double>& s, const std::vector<Vec>& y,
                            const std::vector<double>& r, const FitOptions& fo = {});

struct TailSeries {
    std::vector<double> s;
    std::vector<Vec> y;
    std::vector<double> r;
};

// Normal-chart eigen-coordinates of the trajectory tail at one end, ordered from
// the chart boundary towards the critical point.
TailSeries trajectory_tail(const FlowContext& ctx, const Trajectory& traj, End end);
// Same for a cokernel element (vector components in the chart's eigenframe).
TailSeries cokernel_tail(const FlowContext& ctx, const Trajectory& traj, const ObstructionFiber& fib, int element,
                         End end);

AsymptoticCoeffs extract_trajectory_coeffs(const FlowContext& ctx, const Trajectory& traj, End end,
                                           const FitOptions& fo = {});
AsymptoticCoeffs extract_cokernel_coeffs(const FlowContext& ctx, const Trajectory& traj, const ObstructionFiber& fib,
                                         int element, End end, const FitOptions& fo = {});

// Flips each fiber element so that its leading coefficient at the source end is
// positive. This fixes the trivialization the perturbation values refer to.
void normalize_fiber_signs(const FlowContext& ctx, const Trajectory& traj, ObstructionFiber& fib,
                           const FitOptions& fo = {});

}  // namespace cleanmorse
