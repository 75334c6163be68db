#pragma once
// Linearized obstruction section over broken pairs, compatible perturbation
// sections and the perturbed gluing counts.
#include <map>
#include <string>
#include <vector>

#include "cleanmorse/asymptotics.hpp"

namespace cleanmorse {

// Everything gluing needs from one unbroken piece.
struct PieceData {
    std::string id;
    std::string component;  // moduli component the piece belongs to
    int source = -1, target = -1;
    int orientation = 0;  // 0 when undefined (index difference other than 1 - rank)
    int fiber_rank = 0;
    double boundary_source = 0.0, boundary_target = 0.0;  // s where the tails cross the chart boundaries
    AsymptoticCoeffs at_source, at_target;
    std::vector<AsymptoticCoeffs> coker_source, coker_target;  // one per fiber element
};

// Linearizes, extracts the fiber (signs normalized) and all coefficients.
PieceData analyze_piece(const FlowContext& ctx, const Trajectory& traj, const std::string& component,
                        const FitOptions& fo = {});

struct BrokenPair {
    PieceData upper;  // in M(p, q)
    PieceData lower;  // in M(q, r)
    int middle = -1;
    std::string id() const { return "(" + lower.id + "," + upper.id + ")"; }
};

BrokenPair make_broken_pair(const PieceData& upper, const PieceData& lower);

// value(T) = coefficient * exp(rate * T)
struct SectionTerm {
    int label = 0;
    double lambda = 0.0;
    double coefficient = 0.0;
    double rate = 0.0;
};

// One scalar component <s0, eta> for a fiber element of one of the two pieces.
struct SectionComponent {
    int side = 1;  // +1: lower piece obstructed (s0+), -1: upper piece obstructed (s0-)
    std::string piece;
    std::string component;
    int element = 0;
    std::vector<SectionTerm> terms;

    double value(double T) const;
    double derivative(double T) const;
    const SectionTerm& leading() const;  // slowest decay
    double slowest_rate() const;
    double abs_sum() const;  // sum |coefficient|
};

struct ObstructionSectionModel {
    std::string pair_id;
    int middle = -1;
    double R = 0.0;  // validity floor
    std::vector<SectionComponent> components;
};

// Both tails reach 3 e-folding lengths past the chart boundary at the middle point.
double gluing_floor(const FlowContext& ctx, const BrokenPair& pair);

ObstructionSectionModel section_model(const FlowContext& ctx, const BrokenPair& pair);

struct SectionValue {
    std::vector<double> plus;   // per fiber element of the lower piece
    std::vector<double> minus;  // per fiber element of the upper piece
};

// Direct evaluation of both sums at T.
SectionValue linearized_obstruction_section(const BrokenPair& pair, double T);

struct RampConfig {
    double delta1 = 1.0;
    double delta2 = 5.0;
    double c1_bound = 1.0;
};

// Smooth monotone step: 0 on [R, R + delta1], 1 on [R + delta2, inf).
double ramp(const RampConfig& rc, double R, double T);
double ramp_slope(const RampConfig& rc, double R, double T);

struct PerturbationSection {
    RampConfig ramp;
    std::map<std::string, std::vector<double>> sigma;  // component -> value per fiber element
    double sup_value = 0.0;
    double sup_slope = 0.0;

    double at_infinity(const std::string& component, int element) const;
    // chi(T) * sigma for a section component with floor R
    double value(const SectionComponent& c, double R, double T) const;
    double slope(const SectionComponent& c, double R, double T) const;
};

// obstructed: component -> fiber rank.
PerturbationSection build_perturbation_section(const std::map<std::string, int>& obstructed,
                                               const std::map<std::string, std::vector<double>>& choices,
                                               const RampConfig& rc);

struct CountOptions {
    double T_max = 0.0;  // <= 0: R + delta2 + 5 / min rate
    int grid = 4000;
    double bisect_tol = 1e-13;
    double margin_factor = 10.0;
};

struct GluingCount {
    std::string pair_id;
    int side = 1;
    std::string piece, component;
    int element = 0;
    double R = 0.0, T_max = 0.0;
    double leading_coefficient = 0.0;
    double leading_rate = 0.0;
    double sigma_inf = 0.0;
    int zeros = 0;
    int signed_count = 0;  // sum of -sign(d/dT (s0 + sigma)) over the zeros
    std::vector<double> crossings;
    std::vector<int> signs;
    int coarse_zeros = 0;
    bool dichotomy = true;  // zeros == (sign(leading) != sign(sigma_inf))
    bool margin_ok = true;  // |s0| dominates the estimated higher-order terms at every zero
    bool monotone_tail = true;
};

// Zeros of s0 + sigma for every scalar component. UnstableCount when the
// refined grid disagrees or the tail of s0 is not monotone.
std::vector<GluingCount> count_perturbed_gluings(const ObstructionSectionModel& model,
                                                 const PerturbationSection& pert, const CountOptions& co = {});

// Two-parameter model for a chain of three pieces a|b|c. A fiber element of the
// middle piece sees both breaks: its component is s0+(a,b,T1) + s0-(b,c,T2).
struct ChainSectionModel {
    ObstructionSectionModel first, second;  // breaks a|b and b|c
    std::string middle_piece;
    std::vector<std::string> labels;  // piece/element of each component of value()
    std::vector<double> value(double T1, double T2) const;
};

ChainSectionModel chain_section_model(const FlowContext& ctx, const PieceData& a, const PieceData& b,
                                      const PieceData& c);

// Max over T1 in [R, R + 5/rate] of |chain(T1, T2) restricted to the first
// break - pair model(T1)|, as T2 grows; converges to 0.
double chain_limit_defect(const ChainSectionModel& chain, double T2);

// For each T1 on a grid, the T2 (if any, in [R2, T2_max]) where the middle
// components vanish. Report only.
std::vector<std::pair<double, double>> chain_zero_locus(const ChainSectionModel& chain, int samples = 50);

struct EndMatch {
    std::string family;
    int end = 0;
    std::vector<int> itinerary;
    std::vector<std::string> pieces;        // nearest trajectory per broken segment
    std::vector<double> distances;          // one-sided distance segment -> trajectory
    std::vector<std::string> partners;      // glued pairs (inventory ids) consistent with the end
    bool matched = false;
};

struct EndMatchReport {
    std::vector<EndMatch> ends;
    std::vector<std::string> orphans;
    bool closed = false;  // only closed loops, nothing to match
};

// moduli: every computed space keyed by (source, target). transverse pairs
// of pieces glue unconditionally; obstructed ones must appear with zeros > 0.
EndMatchReport match_family_ends(const FlowContext& ctx, const ModuliSpace& family,
                                 const std::map<std::pair<int, int>, ModuliSpace>& moduli,
                                 const std::vector<GluingCount>& inventory);

}  // namespace cleanmorse
