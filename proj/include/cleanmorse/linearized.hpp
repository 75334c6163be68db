#pragma once
// Discretized linearized operator D = d/ds + H(s) along a trajectory, written in
// a parallel orthonormal frame, and its adjoint -d/ds + H(s).
#include <Eigen/SparseCore>
#include <random>
#include <vector>

#include "cleanmorse/trajectories.hpp"

namespace cleanmorse {

// Hermite-Simpson collocation on the nodes s_0 < ... < s_N. Unknowns are the
// nodal values; the end values are restricted to the decaying subspaces
// (unstable at the source, stable at the target), so no boundary rows appear and
// the discrete index is ind(p) - ind(q) exactly.
struct LinearOperator {
    int n = 0;
    std::vector<double> s;     // nodes
    std::vector<double> s_mid; // interval midpoints
    std::vector<Mat> H;        // frame Hessian at nodes
    std::vector<Mat> H_mid;    // ... and at midpoints
    Mat E_begin;               // n x ind(p), orthonormal
    Mat E_end;                 // n x (n - ind(q))
    Vec limit_source, limit_target;  // Hessian eigenvalues at the two critical points

    Eigen::SparseMatrix<double> D;  // rows n*N, reduced domain columns
    Vec w_domain;                   // L2 weight of each reduced column
    Vec w_range;                    // L2 weight of each row

    int intervals() const { return static_cast<int>(s.size()) - 1; }
    int domain_dim() const { return static_cast<int>(D.cols()); }
    int range_dim() const { return static_cast<int>(D.rows()); }
    double h(int k) const { return s[k + 1] - s[k]; }

    // Nodal field (n x (N+1)) <-> reduced domain vector.
    Vec reduce(const Mat& nodal) const;  // least-squares onto the end subspaces
    Mat expand(const Vec& reduced) const;
    // Full stencil on arbitrary nodal values, one column per interval.
    Mat apply_full(const Mat& nodal) const;
    // Discrete adjoint W_d^{-1} D^T W_r.
    Vec apply_adjoint(const Vec& range) const;
    double inner_domain(const Vec& a, const Vec& b) const;
    double inner_range(const Vec& a, const Vec& b) const;
};

LinearOperator assemble_operator(const std::vector<double>& s, const std::vector<Mat>& H,
                                 const std::vector<Mat>& H_mid, const Mat& E_begin, const Mat& E_end);

// Decaying subspace of a symmetric matrix: eigenvectors with negative
// (sign = -1) or positive (sign = +1) eigenvalues, sorted by |lambda|.
Mat decaying_subspace(const Mat& H, int sign);

LinearOperator linearize_along(const FlowContext& ctx, const Trajectory& traj);

// Frame components F^{-1} u' of the velocity, one column per node.
Mat velocity_field(const Trajectory& traj);

// Max over intervals of |D applied to the velocity field|.
double velocity_residual(const LinearOperator& op, const Trajectory& traj);

struct SpectrumEnd {
    std::vector<double> sigma;  // ascending
    Mat vectors;                // matching singular vectors as columns (reduced domain or range)
};

// Smallest singular values of the weighted operator (adjoint = false) or its
// transpose (adjoint = true), with their singular vectors.
SpectrumEnd smallest_singular(const LinearOperator& op, int count, bool adjoint);
double largest_singular(const LinearOperator& op);

struct RankDecision {
    int rank = 0;
    std::vector<double> sigma;
    double sigma_max = 0.0;
};

struct RankThresholds {
    double zero_relative = 1e-6;  // of sigma_max
    double gap_ratio = 0.1;       // largest zero candidate / next sigma
};
// Process-wide; the pipeline sets them from the run config.
RankThresholds& rank_thresholds();

// sigma counts as zero when below zero_relative * sigma_max and below gap_ratio
// times the next sigma; anything in between raises SpectralGapAmbiguous.
RankDecision decide_rank(const std::vector<double>& sigma, double sigma_max, int structural);

struct KernelCokernel {
    int dim_ker = 0;
    int dim_coker = 0;
    RankDecision ker, coker;
    std::vector<Mat> kernel;    // nodal fields, L2-orthonormal
    std::vector<Mat> cokernel;  // midpoint fields, L2-orthonormal
};

KernelCokernel kernel_cokernel_dims(const LinearOperator& op);

struct ObstructionFiber {
    int rank = 0;
    std::vector<double> s_mid;
    std::vector<Mat> basis;  // n x N, values at interval midpoints
    std::vector<double> residuals;  // discrete |D* eta|
    std::vector<double> ode_residuals;  // |-eta' + H eta| by centered differences
};

ObstructionFiber obstruction_fiber(const LinearOperator& op);
ObstructionFiber obstruction_fiber(const LinearOperator& op, const KernelCokernel& kc);

// Max |<D xi, eta> - <xi, D* eta>| over random compactly supported pairs,
// relative to |xi| |eta|.
double adjoint_pairing_defect(const LinearOperator& op, int pairs, std::mt19937& rng);

// Finite-difference check of the linearization: max over the grid of
// |(L(exp_u(t xi)) - L(u)) / t - D xi| with L(u) = u' + grad f(u) and xi = F zeta
// a smooth bump along the trajectory. exp is taken to second order, which
// fixes the O(t) term of the defect.
double linearization_fd_error(const FlowContext& ctx, const Trajectory& traj, const LinearOperator& op,
                              const Vec& amplitude, double center, double width, double t);

// Orientation sign of a trajectory relative to the reference unstable
// eigenbases of the critical points (columns of CriticalPoint::eigenvectors).
// The tangent space of W^u(source) along the curve is split as (-u', W); W is
// carried to the target by the linearized flow and compared with E^u(target).
// For a rank-1 obstructed trajectory W is completed by the cokernel element at
// the target end.
int trajectory_orientation(const FlowContext& ctx, const Trajectory& traj, const LinearOperator& op,
                           const ObstructionFiber* fiber = nullptr, int element = 0);

// Reference unstable eigenbasis of crit c written in the frame of a sample.
Mat unstable_reference(const MorseSetup& S, int c, const TrajectorySample& smp);

struct CleanComponent {
    std::string id;
    std::vector<int> dim_ker, dim_coker;  // per sampled member
    CutStatus status = CutStatus::Unknown;
    double velocity_residual = 0.0;
};

struct CleanReport {
    std::vector<CleanComponent> components;
    bool index_ok = true;
    std::vector<std::string> notes;
};

// Linearizes every member of every component, fills dim_ker / dim_coker / cut.
// `stride` subsamples family members.
CleanReport check_clean(const FlowContext& ctx, ModuliSpace& moduli, int stride = 1);

}  // namespace cleanmorse
