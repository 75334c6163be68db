#pragma once
// Gradient-flow shooting from unstable spheres, moduli enumeration and the
// epsilon-level-set representative gauge.
#include <functional>
#include <string>
#include <vector>

#include "cleanmorse/geometry.hpp"

namespace cleanmorse {

struct FlowOptions {
    double tol = 1e-10;
    double chart_radius = 0.0;     // <= 0 picks the largest fitting radius up to 0.2
    double offset_factor = 1e-4;   // shooting offset as a fraction of the chart radius
    double capture_tol = 1e-8;     // |grad f| at which a sink-like approach counts as captured
    double departure_ratio = 1e-2; // |y_u| / |y_s| at which a target approach is cut
    double near_break = 1e-3;      // fraction of chart radius for "grazing a saddle"
    double switch_margin = 0.12;
    double hmax = 0.1;
    double horizon = 300.0;
};

// Setup plus normal charts at every critical point.
struct FlowContext {
    const MorseSetup* setup = nullptr;
    std::vector<NormalChart> charts;
    FlowOptions opt;

    FlowContext(const MorseSetup& s, const FlowOptions& o);
    int n() const { return setup->dim; }
};

struct FlowState {
    double s = 0.0;
    ChartPoint pt;
    Mat frame;  // empty when frames are not transported
};

// Visit of a normal chart along a curve.
struct Passage {
    int crit = -1;
    double s_entry = 0.0;
    double s_exit = 0.0;
    double s_closest = 0.0;
    double min_dist = 1e300;
    bool exited = false;
    Vec exit_coords;  // normal coordinates where the curve leaves the chart
    int exit_sign() const;  // sign of the unstable coordinate at exit (index-1 charts)
};

struct FlowCurve {
    int source = -1;
    Vec direction;  // unit coefficients on the unstable eigenvectors of the source
    std::vector<FlowState> samples;
    int captured_by = -1;
    bool departed = false;  // stopped when leaving the stable manifold of the target
    bool escaped = false;
    std::vector<Passage> passages;

    const Passage* passage(int crit) const;
};

enum class ShootMode { Classify, Representative };

// Integrates from location(p) + delta * (V_u direction). Classify mode stores no
// frames. With stop_target >= 0 the run is cut once it departs from that
// critical point. NoCapture when the horizon is exceeded.
FlowCurve shoot(const FlowContext& ctx, int p, const Vec& direction, double horizon,
                ShootMode mode = ShootMode::Classify, int stop_target = -1);

// Integrates the flow (and optionally the parallel frame) with chart switching.
// The hook sees every accepted state and returns false to stop.
void run_flow(const FlowContext& ctx, FlowState& st, double s_end, bool frames,
              const std::function<bool(const FlowState&)>& hook);

// Advances a state by a short time within its patch (single controlled run, no
// chart switching).
FlowState advance(const FlowContext& ctx, const FlowState& st, double ds);

struct TrajectorySample {
    double s = 0.0;
    ChartPoint pt;
    Vec ambient;
    Vec velocity;  // chart components, equal to -grad f
    Vec ambient_velocity;
    Mat frame;     // columns orthonormal in the metric
    double f = 0.0;
};

struct TailData {
    double s_boundary = 0.0;  // where the curve crosses the normal chart boundary
    ChartPoint boundary_point;
    double time_in_chart = 0.0;  // covered by the samples beyond the boundary
    double needed = 0.0;         // efolds / slowest rate into or out of the chart
};

// Normalized representative on an adaptive grid; samples alternate between
// nodes (even) and interval midpoints (odd).
struct Trajectory {
    std::string id;
    int source = -1;
    int target = -1;
    double step = 0.05;  // largest node spacing
    std::vector<TrajectorySample> samples;  // even indices nodes, odd indices interval midpoints
    double epsilon = 0.0;
    double l_minus = 0.0;
    double l_plus = 0.0;
    TailData tail_source, tail_target;
    double integration_residual = 0.0;
    Vec direction;
    bool near_breaking = false;

    int nodes() const { return static_cast<int>(samples.size() + 1) / 2; }
    double node_s(int k) const { return samples[2 * k].s; }
    double spacing(int k) const { return samples[2 * k + 2].s - samples[2 * k].s; }
    double s_begin() const { return samples.front().s; }
    double s_end() const { return samples.back().s; }
};

struct RepresentativeOptions {
    double epsilon = 0.1;
    double step = 0.05;
    double grid_tol = 2e-8;  // per-interval Simpson residual that triggers subdivision
    double tail_efolds = 5.0;
    double window_scale = 1.0;  // enlarges both tails
};

// Adaptive-grid normalized representative from a curve shot in Representative mode.
Trajectory make_representative(const FlowContext& ctx, const FlowCurve& curve, int target,
                               const RepresentativeOptions& ro);

// Shifts s so that f(u(-l)) = f(p) - eps and f(u(l)) = f(q) + eps.
Trajectory normalize_representative(const FlowContext& ctx, const Trajectory& traj, double eps);

Trajectory time_shifted(const Trajectory& traj, double T);

// |f(u(a)) - f(u(b)) - int |grad f|^2| over the stored window.
double energy_defect(const Trajectory& traj);

// Hausdorff distance between ambient sample sets.
double hausdorff(const std::vector<Vec>& a, const std::vector<Vec>& b);
std::vector<Vec> ambient_points(const Trajectory& t);

enum class CutStatus { Unknown, Transverse, Clean, Unresolved };
const char* cut_status_name(CutStatus c);

struct FamilyEnd {
    double angle = 0.0;
    std::vector<int> itinerary;  // critical points grazed, in order
    std::vector<double> graze_times;
    std::vector<Vec> ambient;    // the near-breaking curve
    std::vector<double> times;
};

struct ModuliComponent {
    std::string id;
    bool family = false;
    bool closed_loop = false;
    bool near_breaking = false;
    std::vector<Trajectory> members;
    std::vector<double> angles;
    std::vector<FamilyEnd> ends;
    double continuity = 0.0;  // max Hausdorff gap between consecutive sweep curves
    CutStatus cut = CutStatus::Unknown;
    int dim_ker = -1;
    int dim_coker = -1;
};

struct ModuliSpace {
    int source = -1;
    int target = -1;
    int expected_dim = 0;
    std::vector<ModuliComponent> components;
    std::vector<std::string> notes;

    int isolated_count() const;
    int family_count() const;
};

struct SearchConfig {
    int directions = 360;
    double bisect_tol = 1e-10;
    double end_tol = 1e-9;
    int family_samples = 36;
    double member_clearance = 0.1;  // family members keep this fraction of the chart radius from saddles
    double merge_tol = 1e-5;
    RepresentativeOptions rep;
};

struct ShotRecord {
    double angle = 0.0;
    Vec direction;
    int captured_by = -1;
    bool escaped = false;
    std::vector<Passage> passages;
    std::vector<Vec> ambient;
};

// Exit-sign flip at an index-1 saddle between adjacent shots, resolved by
// bisection. Soft flips lose contact with the saddle chart before the bracket
// closes; genuine ones converge onto the stable manifold of the saddle.
struct Crossing {
    int pair = -1;  // shots[pair] and shots[pair + 1] (cyclic)
    int crit = -1;
    bool genuine = false;
    bool exact = false;  // a bisection midpoint was captured by the saddle
    double lo = 0.0, hi = 0.0;  // final bracket, lo on the side of shots[pair]
    double angle() const { return 0.5 * (lo + hi); }
};

// All shots from the unstable sphere of p (index 1 or 2).
struct Sweep {
    int source = -1;
    int unstable_dim = 0;
    std::vector<ShotRecord> shots;
    std::vector<Crossing> crossings;
};

Sweep sweep_unstable_sphere(const FlowContext& ctx, int p, const SearchConfig& cfg);
ModuliSpace moduli_from_sweep(const FlowContext& ctx, const Sweep& sweep, int q,
                              const SearchConfig& cfg);
ModuliSpace find_moduli(const FlowContext& ctx, int p, int q, const SearchConfig& cfg);

Vec sweep_direction(int unstable_dim, double angle);

}  // namespace cleanmorse
