#include "cleanmorse/kuranishi.hpp"

#include <algorithm>
#include <functional>
#include <map>

#include "cleanmorse/errors.hpp"

namespace cleanmorse {

const CatalogEntry& ModuliCatalog::at(int index) const {
    if (index < 1 || index > size())
        throw MorseError(ErrorCode::MissingModuli, "kuranishi: no catalog entry " + std::to_string(index));
    return entries[index - 1];
}

int ModuliCatalog::find(int source, int target) const {
    for (const auto& e : entries)
        if (e.source == source && e.target == target)
            return e.index;
    return 0;
}

std::string ModuliCatalog::label(int index) const {
    const CatalogEntry& e = at(index);
    return "M(" + e.source_id + "," + e.target_id + ")";
}

ModuliCatalog build_catalog(const std::vector<std::string>& ids, const std::vector<double>& f) {
    ModuliCatalog cat;
    const int n = static_cast<int>(ids.size());
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b)
            if (f[a] > f[b]) {
                CatalogEntry e;
                e.source = a;
                e.target = b;
                e.source_id = ids[a];
                e.target_id = ids[b];
                e.energy = f[a] - f[b];
                cat.entries.push_back(e);
            }
    // ties in energy are common on symmetric surfaces; 1e-9 keeps them together
    std::sort(cat.entries.begin(), cat.entries.end(), [&](const CatalogEntry& x, const CatalogEntry& y) {
        if (std::abs(x.energy - y.energy) > 1e-9)
            return x.energy < y.energy;
        if (f[x.source] != f[y.source])
            return f[x.source] < f[y.source];
        return f[x.target] < f[y.target];
    });
    for (int i = 0; i < cat.size(); ++i)
        cat.entries[i].index = i + 1;
    return cat;
}

ModuliCatalog build_catalog(const MorseSetup& setup) {
    std::vector<std::string> ids;
    std::vector<double> f;
    for (const auto& c : setup.critical_points) {
        ids.push_back(c.id);
        f.push_back(c.f_value);
    }
    return build_catalog(ids, f);
}

bool tuple_valid(const ModuliCatalog& cat, const IndexTuple& t) {
    if (t.empty())
        return false;
    for (int i : t)
        if (i < 1 || i > cat.size())
            return false;
    for (std::size_t m = 0; m + 1 < t.size(); ++m)
        if (cat.at(t[m]).target != cat.at(t[m + 1]).source)
            return false;
    return true;
}

std::string tuple_name(const IndexTuple& t) {
    std::string s = "(";
    for (std::size_t i = 0; i < t.size(); ++i)
        s += (i ? "," : "") + std::to_string(t[i]);
    return s + ")";
}

std::string gluing_order_name(const IndexTuple& t) {
    std::string s;
    for (auto it = t.rbegin(); it != t.rend(); ++it)
        s += std::to_string(*it);
    return s;
}

namespace {

void require_valid(const ModuliCatalog& cat, const IndexTuple& t) {
    if (!tuple_valid(cat, t))
        throw MorseError(ErrorCode::InvalidCollection, "kuranishi: " + tuple_name(t) + " is not a chained tuple");
}

// Every sub-index collection of a tuple of length n, as block decompositions.
void for_each_composition(int n, const std::function<void(const SubCollection&)>& fn) {
    for (int mask = 0; mask < (1 << (n - 1)); ++mask) {
        SubCollection sc;
        int start = 0;
        for (int i = 1; i <= n; ++i)
            if (i == n || (mask >> (i - 1) & 1)) {
                sc.emplace_back(start, i);
                start = i;
            }
        fn(sc);
    }
}

}  // namespace

int contract_full(const ModuliCatalog& cat, const IndexTuple& t) {
    require_valid(cat, t);
    const int l = cat.find(cat.at(t.front()).source, cat.at(t.back()).target);
    if (!l)
        throw MorseError(ErrorCode::MissingModuli, "kuranishi: no moduli space for the contraction of " + tuple_name(t));
    return l;
}

IndexTuple contract_along(const ModuliCatalog& cat, const IndexTuple& t, const SubCollection& sc) {
    require_valid(cat, t);
    SubCollection blocks;
    for (const auto& b : sc)
        if (b.second > b.first)
            blocks.push_back(b);
    std::sort(blocks.begin(), blocks.end());
    const int n = static_cast<int>(t.size());
    for (std::size_t i = 0; i < blocks.size(); ++i) {
        if (blocks[i].first < 0 || blocks[i].second > n)
            throw MorseError(ErrorCode::InvalidCollection, "kuranishi: sub-tuple outside " + tuple_name(t));
        if (i && blocks[i].first < blocks[i - 1].second)
            throw MorseError(ErrorCode::InvalidCollection, "kuranishi: overlapping sub-tuples of " + tuple_name(t));
    }
    for (const auto& b : sc)
        if (b.second < b.first)
            throw MorseError(ErrorCode::InvalidCollection, "kuranishi: reversed range in a collection");
    IndexTuple out;
    int pos = 0;
    for (const auto& [a, b] : blocks) {
        for (; pos < a; ++pos)
            out.push_back(t[pos]);
        out.push_back(contract_full(cat, IndexTuple(t.begin() + a, t.begin() + b)));
        pos = b;
    }
    for (; pos < n; ++pos)
        out.push_back(t[pos]);
    return out;
}

bool tuple_leq(const ModuliCatalog& cat, const IndexTuple& J, const IndexTuple& I) {
    if (contract_full(cat, J) != contract_full(cat, I))
        throw MorseError(ErrorCode::IncomparableContractions,
                         "kuranishi: " + tuple_name(J) + " and " + tuple_name(I) + " contract differently");
    if (J.size() > I.size())
        return false;
    bool found = false;
    for_each_composition(static_cast<int>(I.size()), [&](const SubCollection& sc) {
        if (!found && contract_along(cat, I, sc) == J)
            found = true;
    });
    return found;
}

std::vector<IndexTuple> enumerate_strata(const ModuliCatalog& cat, int ell) {
    const CatalogEntry& top = cat.at(ell);
    std::vector<IndexTuple> out;
    IndexTuple cur;
    std::function<void(int)> grow = [&](int from) {
        for (const auto& e : cat.entries) {
            if (e.source != from)
                continue;
            // the remaining energy only shrinks, so this terminates
            cur.push_back(e.index);
            if (e.target == top.target)
                out.push_back(cur);
            else
                grow(e.target);
            cur.pop_back();
        }
    };
    grow(top.source);
    std::sort(out.begin(), out.end(), [](const IndexTuple& a, const IndexTuple& b) {
        return a.size() != b.size() ? a.size() < b.size() : a < b;
    });
    return out;
}

IdentityReport check_iterated_equals_simultaneous(const ModuliCatalog& cat, int max_len) {
    if (max_len < 3)
        throw MorseError(ErrorCode::InvalidConfig, "kuranishi: identity check needs max_len >= 3");
    IdentityReport rep;
    rep.max_len = max_len;
    auto fail = [&](const std::string& s) { rep.violations.push_back(s); };

    std::map<int, std::vector<IndexTuple>> by_ell;
    for (int ell = 1; ell <= cat.size(); ++ell)
        for (const auto& t : enumerate_strata(cat, ell))
            if (static_cast<int>(t.size()) <= max_len)
                by_ell[ell].push_back(t);

    for (const auto& [ell, tuples] : by_ell) {
        for (const auto& K : tuples) {
            const int n = static_cast<int>(K.size());
            if (contract_full(cat, K) != ell)
                fail("stratum " + std::to_string(ell) + " holds " + tuple_name(K));
            // substitute I = K[a, b) into J at slot a
            for (int a = 0; a < n; ++a)
                for (int b = a + 1; b <= n; ++b) {
                    ++rep.substitutions;
                    const IndexTuple I(K.begin() + a, K.begin() + b);
                    const IndexTuple J = contract_along(cat, K, {{a, b}});
                    if (!tuple_valid(cat, J))
                        fail("chaining lost: " + tuple_name(K) + " along " + tuple_name(I));
                    if (J[a] != contract_full(cat, I))
                        fail("slot mismatch: " + tuple_name(K) + " along " + tuple_name(I));
                    if (contract_full(cat, J) != contract_full(cat, K))
                        fail("contraction changed: " + tuple_name(K) + " along " + tuple_name(I));
                    IndexTuple rebuilt(J.begin(), J.begin() + a);
                    rebuilt.insert(rebuilt.end(), I.begin(), I.end());
                    rebuilt.insert(rebuilt.end(), J.begin() + a + 1, J.end());
                    if (rebuilt != K)
                        fail("substitution does not invert contraction: " + tuple_name(K));
                    // nested: inner [c, d) inside [a, b), contracted first
                    for (int c = a; c < b; ++c)
                        for (int d = c + 1; d <= b; ++d) {
                            ++rep.nested;
                            const IndexTuple step = contract_along(cat, K, {{c, d}});
                            const int shrink = (d - c) - 1;
                            const IndexTuple two = contract_along(cat, step, {{a, b - shrink}});
                            if (two != J)
                                fail("nested contraction differs: " + tuple_name(K));
                        }
                    // disjoint pairs commute
                    for (int c = b; c < n; ++c)
                        for (int d = c + 1; d <= n; ++d) {
                            ++rep.nested;
                            const IndexTuple both = contract_along(cat, K, {{a, b}, {c, d}});
                            const int shrink = (b - a) - 1;
                            const IndexTuple seq1 = contract_along(cat, J, {{c - shrink, d - shrink}});
                            const IndexTuple seq2 =
                                contract_along(cat, contract_along(cat, K, {{c, d}}), {{a, b}});
                            if (both != seq1 || both != seq2)
                                fail("disjoint contractions do not commute: " + tuple_name(K));
                        }
                }
        }
        // partial order axioms inside the stratum
        for (const auto& A : tuples) {
            ++rep.order_checks;
            if (!tuple_leq(cat, A, A))
                fail("not reflexive at " + tuple_name(A));
            for (const auto& B : tuples) {
                const bool ab = tuple_leq(cat, A, B), ba = tuple_leq(cat, B, A);
                ++rep.order_checks;
                if (ab && ba && A != B)
                    fail("not antisymmetric: " + tuple_name(A) + " " + tuple_name(B));
                if (!ab)
                    continue;
                for (const auto& C : tuples) {
                    ++rep.order_checks;
                    if (tuple_leq(cat, B, C) && !tuple_leq(cat, A, C))
                        fail("not transitive: " + tuple_name(A) + " " + tuple_name(B) + " " + tuple_name(C));
                }
            }
        }
    }
    return rep;
}

bool boxes_overlap(const Box& a, const Box& b) {
    for (std::size_t i = 0; i < a.lo.size(); ++i)
        if (std::min(a.hi[i], b.hi[i]) <= std::max(a.lo[i], b.lo[i]))
            return false;
    return true;
}

CoverReport validate_chart_cover(const ModuliCatalog& cat, const std::vector<ChartRegion>& charts, const Box* domain,
                                 int grid) {
    CoverReport rep;
    for (std::size_t i = 0; i < charts.size(); ++i)
        for (std::size_t j = i + 1; j < charts.size(); ++j) {
            CoverPair cp;
            cp.a = charts[i].name;
            cp.b = charts[j].name;
            for (const auto& x : charts[i].boxes)
                for (const auto& y : charts[j].boxes)
                    cp.overlap = cp.overlap || boxes_overlap(x, y);
            cp.comparable = tuple_leq(cat, charts[i].tuple, charts[j].tuple) ||
                            tuple_leq(cat, charts[j].tuple, charts[i].tuple);
            if (cp.overlap != cp.comparable)
                rep.violations.push_back(cp.a + " and " + cp.b +
                                         (cp.overlap ? " overlap but are incomparable" : " are comparable but disjoint"));
            rep.pairs.push_back(cp);
        }
    if (domain && domain->lo.size() == 2) {
        for (int a = 0; a < grid && rep.covered; ++a)
            for (int b = 0; b < grid; ++b) {
                const double x = domain->lo[0] + (domain->hi[0] - domain->lo[0]) * (a + 0.5) / grid;
                const double y = domain->lo[1] + (domain->hi[1] - domain->lo[1]) * (b + 0.5) / grid;
                bool in = false;
                for (const auto& c : charts)
                    for (const auto& bx : c.boxes)
                        in = in || (x > bx.lo[0] && x < bx.hi[0] && y > bx.lo[1] && y < bx.hi[1]);
                if (!in) {
                    rep.covered = false;
                    rep.violations.push_back("point (" + std::to_string(x) + "," + std::to_string(y) + ") uncovered");
                    break;
                }
            }
    }
    return rep;
}

namespace {

Box box(double x0, double y0, double x1, double y1) { return Box{{x0, y0}, {x1, y1}}; }

}  // namespace

Box m6_small_domain() { return box(0, 0, 4, 4); }

std::vector<ChartRegion> m6_small_layout(const ModuliCatalog& cat, bool mutant) {
    if (cat.size() != 6)
        throw MorseError(ErrorCode::InvalidConfig, "kuranishi: the layout belongs to a four-point catalog");
    // points by decreasing f: the top entry runs from the first to the last
    const CatalogEntry& top = cat.entries.back();
    int mid_hi = -1, mid_lo = -1;
    for (const auto& e : cat.entries)
        if (e.source == top.source && e.target != top.target) {
            if (mid_hi < 0 || cat.find(e.target, mid_hi))
                mid_hi = e.target;
        }
    for (const auto& e : cat.entries)
        if (e.target == top.target && e.source != top.source && e.source != mid_hi)
            mid_lo = e.source;
    auto idx = [&](int a, int b) {
        const int i = cat.find(a, b);
        if (!i)
            throw MorseError(ErrorCode::InvalidConfig, "kuranishi: catalog does not match the layout");
        return i;
    };
    const int p = top.source, q = mid_hi, r = mid_lo, s = top.target;
    const IndexTuple whole{idx(p, s)}, via_q{idx(p, q), idx(q, s)}, via_r{idx(p, r), idx(r, s)},
        both{idx(p, q), idx(q, r), idx(r, s)};
    const double e = 0.2;
    std::vector<ChartRegion> out;
    out.push_back({whole, gluing_order_name(whole), {box(1 - e, 0, 4, 2 + e), box(2 - e, 2 + e, 4, 3 + e)}});
    out.push_back({via_q, gluing_order_name(via_q), {mutant ? box(0, 0, 2 - e, 3.4) : box(0, 0, 1, 2 + 2 * e)}});
    out.push_back({via_r, gluing_order_name(via_r), {box(2 - 2 * e, 3, 4, 4)}});
    out.push_back({both, gluing_order_name(both), {box(0, 2, 2, 4)}});
    return out;
}

}  // namespace cleanmorse
