#include "cleanmorse/homology.hpp"

#include <algorithm>
#include <cstdlib>

#include "cleanmorse/errors.hpp"

namespace cleanmorse {

const char* ring_name(Ring r) { return r == Ring::Z ? "z" : "z2"; }

Ring parse_ring(const std::string& s) {
    if (s == "z" || s == "Z")
        return Ring::Z;
    if (s == "z2" || s == "Z2")
        return Ring::Z2;
    throw MorseError(ErrorCode::InvalidConfig, "homology: unknown ring '" + s + "'");
}

long long ChainComplex::entry(int source, int target) const {
    for (int g = 1; g <= top; ++g) {
        auto c = std::find(grades[g].begin(), grades[g].end(), source);
        if (c == grades[g].end())
            continue;
        auto r = std::find(grades[g - 1].begin(), grades[g - 1].end(), target);
        if (r == grades[g - 1].end())
            return 0;
        return boundary[g](r - grades[g - 1].begin(), c - grades[g].begin());
    }
    return 0;
}

namespace {

long long reduce(long long v, Ring ring) {
    if (ring == Ring::Z2)
        return ((v % 2) + 2) % 2;
    return v;
}

const PieceData* piece_for(const std::vector<PieceData>& pieces, const std::string& component) {
    for (const auto& p : pieces)
        if (p.component == component)
            return &p;
    return nullptr;
}

}  // namespace

ChainComplex build_chain_complex(const MorseSetup& setup, const std::map<std::pair<int, int>, ModuliSpace>& moduli,
                                 const std::vector<PieceData>& pieces, const std::vector<GluingCount>& counts,
                                 Ring ring) {
    ChainComplex cc;
    cc.ring = ring;
    cc.top = setup.dim;
    cc.grades.assign(setup.dim + 1, {});
    const auto& crit = setup.critical_points;
    for (int i = 0; i < static_cast<int>(crit.size()); ++i) {
        cc.names.push_back(crit[i].id);
        cc.grades[crit[i].morse_index].push_back(i);
    }
    cc.boundary.assign(setup.dim + 1, IntMat());
    for (int k = 1; k <= setup.dim; ++k)
        cc.boundary[k] = IntMat::Zero(cc.rank_of(k - 1), cc.rank_of(k));

    std::vector<std::string> gaps;
    auto pair_name = [&](int a, int b) { return crit[a].id + "->" + crit[b].id; };
    auto pieces_of = [&](int a, int b, std::vector<const PieceData*>& out) {
        auto it = moduli.find({a, b});
        if (it == moduli.end()) {
            gaps.push_back("moduli " + pair_name(a, b) + " not computed");
            return;
        }
        for (const auto& c : it->second.components) {
            const PieceData* p = piece_for(pieces, c.id);
            if (!p)
                gaps.push_back("no piece data for component " + c.id);
            else
                out.push_back(p);
        }
    };

    for (int k = 1; k <= setup.dim; ++k)
        for (int col = 0; col < cc.rank_of(k); ++col)
            for (int row = 0; row < cc.rank_of(k - 1); ++row) {
                const int a = cc.grades[k][col], b = cc.grades[k - 1][row];
                if (crit[a].f_value <= crit[b].f_value)
                    continue;
                std::vector<Contribution> terms;
                auto it = moduli.find({a, b});
                if (it == moduli.end()) {
                    gaps.push_back("moduli " + pair_name(a, b) + " not computed");
                    continue;
                }
                for (const auto& c : it->second.components) {
                    if (c.cut != CutStatus::Transverse || c.family) {
                        gaps.push_back("component " + c.id + " of " + pair_name(a, b) + " is " +
                                       cut_status_name(c.cut) + ", no section for it");
                        continue;
                    }
                    const PieceData* p = piece_for(pieces, c.id);
                    if (!p || p->orientation == 0) {
                        gaps.push_back("no orientation for " + c.id);
                        continue;
                    }
                    terms.push_back({"transverse", p->id, 0.0, p->orientation});
                }
                // broken pairs a -> m -> b through one index-preserving piece
                for (int m = 0; m < static_cast<int>(crit.size()); ++m) {
                    if (m == a || m == b || crit[m].f_value >= crit[a].f_value ||
                        crit[m].f_value <= crit[b].f_value)
                        continue;
                    const int im = crit[m].morse_index;
                    if (im != k && im != k - 1)
                        continue;
                    std::vector<const PieceData*> U, L;
                    pieces_of(a, m, U);
                    pieces_of(m, b, L);
                    for (const PieceData* u : U)
                        for (const PieceData* l : L) {
                            if ((u->fiber_rank > 0) == (l->fiber_rank > 0)) {
                                if (u->fiber_rank > 0)
                                    gaps.push_back("two obstructed pieces " + u->id + ", " + l->id);
                                continue;
                            }
                            const std::string pid = "(" + l->id + "," + u->id + ")";
                            bool seen = false;
                            for (const auto& g : counts) {
                                if (g.pair_id != pid)
                                    continue;
                                seen = true;
                                for (std::size_t z = 0; z < g.crossings.size(); ++z)
                                    terms.push_back({"glued", pid, g.crossings[z],
                                                     g.signs[z] * u->orientation * l->orientation});
                            }
                            if (!seen)
                                gaps.push_back("no gluing count for " + pid);
                            else if (u->orientation == 0 || l->orientation == 0)
                                gaps.push_back("undefined orientation in " + pid);
                        }
                }
                // chains with more breaks only feed this entry through longer itineraries
                for (int m1 = 0; m1 < static_cast<int>(crit.size()); ++m1)
                    for (int m2 = 0; m2 < static_cast<int>(crit.size()); ++m2) {
                        if (crit[m1].f_value >= crit[a].f_value || crit[m2].f_value >= crit[m1].f_value ||
                            crit[m2].f_value <= crit[b].f_value)
                            continue;
                        const int i1 = crit[m1].morse_index, i2 = crit[m2].morse_index;
                        if ((i1 != k && i1 != k - 1) || (i2 != k && i2 != k - 1) || i1 < i2)
                            continue;
                        auto f1 = moduli.find({a, m1}), f2 = moduli.find({m1, m2}), f3 = moduli.find({m2, b});
                        if (f1 == moduli.end() || f2 == moduli.end() || f3 == moduli.end())
                            continue;
                        if (!f1->second.components.empty() && !f2->second.components.empty() &&
                            !f3->second.components.empty())
                            gaps.push_back("three-piece chain " + pair_name(a, m1) + "," + pair_name(m1, m2) +
                                           "," + pair_name(m2, b) + " needs two-parameter gluing");
                    }
                long long v = 0;
                for (const auto& t : terms)
                    v += t.sign;
                if (ring == Ring::Z2)
                    for (auto& t : terms)
                        t.sign = 1;
                cc.boundary[k](row, col) = reduce(ring == Ring::Z2 ? static_cast<long long>(terms.size()) : v, ring);
                if (!terms.empty())
                    cc.provenance[{a, b}] = terms;
            }
    if (!gaps.empty()) {
        std::sort(gaps.begin(), gaps.end());
        gaps.erase(std::unique(gaps.begin(), gaps.end()), gaps.end());
        std::string msg = "homology: unresolved entries:";
        for (const auto& g : gaps)
            msg += "\n  " + g;
        throw MorseError(ErrorCode::IncompleteData, msg);
    }
    return cc;
}

ChainComplex make_complex(const std::vector<int>& ranks, const std::vector<IntMat>& boundary, Ring ring) {
    ChainComplex cc;
    cc.ring = ring;
    cc.top = static_cast<int>(ranks.size()) - 1;
    cc.grades.resize(ranks.size());
    int id = 0;
    for (std::size_t k = 0; k < ranks.size(); ++k)
        for (int i = 0; i < ranks[k]; ++i) {
            cc.names.push_back("g" + std::to_string(id));
            cc.grades[k].push_back(id++);
        }
    cc.boundary.assign(ranks.size(), IntMat());
    for (int k = 1; k <= cc.top; ++k) {
        const IntMat& m = boundary.at(k - 1);
        if (m.rows() != ranks[k - 1] || m.cols() != ranks[k])
            throw MorseError(ErrorCode::InvalidConfig, "homology: boundary " + std::to_string(k) + " has wrong shape");
        cc.boundary[k] = m.unaryExpr([ring](long long v) { return reduce(v, ring); });
    }
    return cc;
}

bool verify_d_squared(const ChainComplex& cc) {
    for (int k = 2; k <= cc.top; ++k) {
        const IntMat& a = cc.boundary[k - 1];
        const IntMat& b = cc.boundary[k];
        if (a.size() == 0 || b.size() == 0)
            continue;
        IntMat p = a * b;
        for (Eigen::Index i = 0; i < p.size(); ++i)
            if (reduce(p(i), cc.ring) != 0)
                return false;
    }
    return true;
}

namespace {

long long checked_axpy(long long y, long long q, long long x) {
    long long prod, out;
    if (__builtin_mul_overflow(q, x, &prod) || __builtin_sub_overflow(y, prod, &out))
        throw MorseError(ErrorCode::NumericalFailure, "homology: integer overflow in Smith normal form");
    return out;
}

}  // namespace

std::vector<long long> invariant_factors(const IntMat& input) {
    IntMat m = input;
    const Eigen::Index R = m.rows(), C = m.cols();
    std::vector<long long> diag;
    for (Eigen::Index t = 0; t < std::min(R, C); ++t) {
        while (true) {
            // pivot on the smallest nonzero entry of the remaining block
            Eigen::Index pi = -1, pj = -1;
            long long best = 0;
            for (Eigen::Index i = t; i < R; ++i)
                for (Eigen::Index j = t; j < C; ++j)
                    if (m(i, j) != 0 && (best == 0 || std::llabs(m(i, j)) < best)) {
                        best = std::llabs(m(i, j));
                        pi = i;
                        pj = j;
                    }
            if (pi < 0)
                goto done;
            m.row(t).swap(m.row(pi));
            m.col(t).swap(m.col(pj));
            bool clean = true;
            for (Eigen::Index i = t + 1; i < R; ++i) {
                const long long q = m(i, t) / m(t, t);
                for (Eigen::Index j = t; j < C; ++j)
                    m(i, j) = checked_axpy(m(i, j), q, m(t, j));
                clean = clean && m(i, t) == 0;
            }
            for (Eigen::Index j = t + 1; j < C; ++j) {
                const long long q = m(t, j) / m(t, t);
                for (Eigen::Index i = t; i < R; ++i)
                    m(i, j) = checked_axpy(m(i, j), q, m(i, t));
                clean = clean && m(t, j) == 0;
            }
            if (!clean)
                continue;
            // divisibility: fold in a row holding an entry not divisible by the pivot
            Eigen::Index bad = -1;
            for (Eigen::Index i = t + 1; i < R && bad < 0; ++i)
                for (Eigen::Index j = t + 1; j < C; ++j)
                    if (m(i, j) % m(t, t) != 0) {
                        bad = i;
                        break;
                    }
            if (bad < 0)
                break;
            for (Eigen::Index j = t; j < C; ++j)
                m(t, j) = checked_axpy(m(t, j), -1, m(bad, j));
        }
        diag.push_back(std::llabs(m(t, t)));
    }
done:
    return diag;
}

int rank_mod2(const IntMat& input) {
    IntMat m = input.unaryExpr([](long long v) { return reduce(v, Ring::Z2); });
    int rank = 0;
    for (Eigen::Index c = 0; c < m.cols() && rank < m.rows(); ++c) {
        Eigen::Index piv = -1;
        for (Eigen::Index r = rank; r < m.rows(); ++r)
            if (m(r, c)) {
                piv = r;
                break;
            }
        if (piv < 0)
            continue;
        m.row(rank).swap(m.row(piv));
        for (Eigen::Index r = 0; r < m.rows(); ++r)
            if (r != rank && m(r, c))
                m.row(r) = (m.row(r) + m.row(rank)).unaryExpr([](long long v) { return v % 2; });
        ++rank;
    }
    return rank;
}

std::vector<HomologyGroup> homology_ranks(const ChainComplex& cc) {
    if (!verify_d_squared(cc))
        throw MorseError(ErrorCode::NotAComplex, "homology: d^2 != 0");
    std::vector<int> rk(cc.top + 2, 0);
    std::vector<std::vector<long long>> tors(cc.top + 2);
    for (int k = 1; k <= cc.top; ++k) {
        const IntMat& d = cc.boundary[k];
        if (d.size() == 0)
            continue;
        if (cc.ring == Ring::Z2) {
            rk[k] = rank_mod2(d);
        } else {
            const auto f = invariant_factors(d);
            rk[k] = static_cast<int>(f.size());
            for (long long x : f)
                if (x > 1)
                    tors[k - 1].push_back(x);
        }
    }
    std::vector<HomologyGroup> out;
    for (int k = 0; k <= cc.top; ++k)
        out.push_back({k, cc.rank_of(k) - rk[k] - rk[k + 1], tors[k]});
    return out;
}

bool euler_consistent(const ChainComplex& cc, const std::vector<HomologyGroup>& h) {
    long long a = 0, b = 0;
    for (int k = 0; k <= cc.top; ++k) {
        const int s = (k % 2) ? -1 : 1;
        a += s * cc.rank_of(k);
        b += s * h[k].rank;
    }
    return a == b;
}

}  // namespace cleanmorse
