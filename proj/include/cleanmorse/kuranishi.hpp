#pragma once
// Combinatorial layer of the chart system: moduli catalog, index tuples,
// contraction, the partial order on tuples and chart-cover validation.
#include <string>
#include <utility>
#include <vector>

#include "cleanmorse/geometry.hpp"

namespace cleanmorse {

struct CatalogEntry {
    int index = 0;  // 1-based
    int source = -1, target = -1;
    std::string source_id, target_id;
    double energy = 0.0;
};

// All pairs with f(source) > f(target), ordered by energy, ties by f(source).
struct ModuliCatalog {
    std::vector<CatalogEntry> entries;

    int size() const { return static_cast<int>(entries.size()); }
    const CatalogEntry& at(int index) const;
    int find(int source, int target) const;  // 0 when absent
    std::string label(int index) const;      // "M(p,q)"
};

ModuliCatalog build_catalog(const MorseSetup& setup);
// Catalog from explicit (source, target, energy) data; ids are the point numbers.
ModuliCatalog build_catalog(const std::vector<std::string>& ids, const std::vector<double>& f);

using IndexTuple = std::vector<int>;

bool tuple_valid(const ModuliCatalog& cat, const IndexTuple& t);
std::string tuple_name(const IndexTuple& t);        // "(3,2,1)"
std::string gluing_order_name(const IndexTuple& t); // "123": reversed, concatenated

int contract_full(const ModuliCatalog& cat, const IndexTuple& t);

// Half-open position ranges [first, second) into the tuple; an empty range is ignored.
using SubCollection = std::vector<std::pair<int, int>>;

IndexTuple contract_along(const ModuliCatalog& cat, const IndexTuple& t, const SubCollection& sc);

// J <= I iff J = contract_along(I, S) for some sub-index collection S.
bool tuple_leq(const ModuliCatalog& cat, const IndexTuple& J, const IndexTuple& I);

// All tuples with full contraction ell, by length then lexicographically.
std::vector<IndexTuple> enumerate_strata(const ModuliCatalog& cat, int ell);

struct IdentityReport {
    int max_len = 0;
    long substitutions = 0;
    long nested = 0;
    long order_checks = 0;
    std::vector<std::string> violations;
    bool ok() const { return violations.empty(); }
};

// Substitution coherence, nested-collection associativity and the partial
// order axioms over every tuple of length <= max_len.
IdentityReport check_iterated_equals_simultaneous(const ModuliCatalog& cat, int max_len);

// Open box in the travel-time plane (or any R^k).
struct Box {
    std::vector<double> lo, hi;
};

struct ChartRegion {
    IndexTuple tuple;
    std::string name;
    std::vector<Box> boxes;  // union of open boxes
};

struct CoverPair {
    std::string a, b;
    bool overlap = false;
    bool comparable = false;
};

struct CoverReport {
    std::vector<CoverPair> pairs;
    std::vector<std::string> violations;
    bool covered = true;  // the union contains the sampled domain
    bool ok() const { return violations.empty() && covered; }
};

bool boxes_overlap(const Box& a, const Box& b);

// Overlap must hold exactly for comparable tuples. When domain is given,
// coverage of the domain by the union is checked on a grid of cell centers.
CoverReport validate_chart_cover(const ModuliCatalog& cat, const std::vector<ChartRegion>& charts,
                                 const Box* domain = nullptr, int grid = 200);

// Travel-time layout for the top entry M(p,s) of a four-point catalog
// (f(p) > f(q) > f(r) > f(s)): plane coordinates (x, y), x decreasing in the
// travel time near r, y increasing in the travel time near q. Charts are built
// for (p,s), (p,q)(q,s), (p,r)(r,s) and (p,q)(q,r)(r,s). The mutant widens the
// chart broken at q until it meets the one broken at r.
std::vector<ChartRegion> m6_small_layout(const ModuliCatalog& cat, bool mutant = false);
Box m6_small_domain();

}  // namespace cleanmorse
