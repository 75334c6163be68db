#pragma once
// Morse chain complex from perturbed trajectory counts, the d^2 check and
// homology over Z and Z/2 by Smith normal form.
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "cleanmorse/gluing.hpp"

namespace cleanmorse {

enum class Ring { Z, Z2 };
const char* ring_name(Ring r);
Ring parse_ring(const std::string& s);  // "z" | "z2"

using IntMat = Eigen::Matrix<long long, Eigen::Dynamic, Eigen::Dynamic>;

// One perturbed trajectory counted in a boundary entry.
struct Contribution {
    std::string kind;  // "transverse" | "glued"
    std::string ref;   // trajectory id, or glued pair id
    double T = 0.0;    // crossing time of a glued zero
    int sign = 1;
};

struct ChainComplex {
    Ring ring = Ring::Z;
    int top = 0;
    std::vector<std::string> names;          // critical point ids
    std::vector<std::vector<int>> grades;    // critical points of each index
    std::vector<IntMat> boundary;            // boundary[k]: C_k -> C_{k-1}; boundary[0] empty
    std::map<std::pair<int, int>, std::vector<Contribution>> provenance;  // (source, target)

    int rank_of(int k) const { return static_cast<int>(grades[k].size()); }
    long long entry(int source, int target) const;
};

// Entry (q, p) of d sums o(u) over the perturbed moduli space Z(p, q), made of
// transverse components of M(p, q) and glued zeros of broken pairs p -> c -> q
// through one obstructed piece. pieces: one per component of every moduli
// space, matched by component id. IncompleteData lists every gap.
ChainComplex build_chain_complex(const MorseSetup& setup, const std::map<std::pair<int, int>, ModuliSpace>& moduli,
                                 const std::vector<PieceData>& pieces, const std::vector<GluingCount>& counts,
                                 Ring ring);

// Complex straight from matrices (tests and synthetic checks).
ChainComplex make_complex(const std::vector<int>& ranks, const std::vector<IntMat>& boundary, Ring ring);

bool verify_d_squared(const ChainComplex& cc);

struct HomologyGroup {
    int grade = 0;
    int rank = 0;
    std::vector<long long> torsion;
};

// Invariant factors of an integer matrix (nonzero diagonal of the Smith form).
std::vector<long long> invariant_factors(const IntMat& m);
int rank_mod2(const IntMat& m);

// NotAComplex unless d^2 = 0.
std::vector<HomologyGroup> homology_ranks(const ChainComplex& cc);

// sum (-1)^k rank C_k == sum (-1)^k betti_k
bool euler_consistent(const ChainComplex& cc, const std::vector<HomologyGroup>& h);

}  // namespace cleanmorse
