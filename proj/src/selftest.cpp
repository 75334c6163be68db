#include "cleanmorse/selftest.hpp"

#include <cmath>
#include <functional>
#include <random>

#include <Eigen/LU>

#include "cleanmorse/errors.hpp"
#include "cleanmorse/homology.hpp"
#include "cleanmorse/kuranishi.hpp"

namespace cleanmorse {

namespace {

IntMat unimodular(int n, std::mt19937& rng) {
    std::uniform_int_distribution<int> pick(0, n - 1), coef(-2, 2);
    IntMat m = IntMat::Identity(n, n);
    for (int s = 0; s < 3 * n; ++s) {
        const int i = pick(rng), j = pick(rng);
        if (i != j)
            m.row(i) += coef(rng) * m.row(j);
    }
    return m;
}

ModeCoeff mode(int label, double lambda, double c) {
    ModeCoeff m;
    m.label = label;
    m.lambda = lambda;
    m.coefficient = c;
    return m;
}

}  // namespace

std::vector<SelftestResult> run_selftest(unsigned seed) {
    std::vector<SelftestResult> out;
    std::mt19937 rng(seed);
    auto run = [&](const std::string& name, const std::function<std::string()>& body) {
        SelftestResult r;
        r.name = name;
        try {
            r.detail = body();
            r.ok = r.detail.empty();
        } catch (const std::exception& e) {
            r.detail = e.what();
        }
        out.push_back(r);
    };

    run("smith form recovers planted invariant factors", [&]() -> std::string {
        for (int trial = 0; trial < 200; ++trial) {
            std::uniform_int_distribution<int> dim(1, 5), fac(1, 4);
            const int r = dim(rng), c = dim(rng);
            IntMat D = IntMat::Zero(r, c);
            std::vector<long long> want;
            long long d = 1;
            for (int i = 0; i < std::min(r, c) - (trial % 2); ++i) {
                d *= fac(rng);
                D(i, i) = d;
                want.push_back(d);
            }
            const IntMat M = unimodular(r, rng) * D * unimodular(c, rng);
            if (invariant_factors(M) != want)
                return "trial " + std::to_string(trial);
        }
        return "";
    });

    run("integer rank agrees with floating LU rank", [&]() -> std::string {
        std::uniform_int_distribution<int> dim(1, 6), val(-3, 3);
        for (int trial = 0; trial < 200; ++trial) {
            IntMat M(dim(rng), dim(rng));
            for (Eigen::Index i = 0; i < M.size(); ++i)
                M(i) = val(rng) * (trial % 3 == 0 ? 0 : 1) + (trial % 3 == 0 ? (i % 2) : 0);
            Eigen::FullPivLU<Mat> lu(M.cast<double>());
            if (static_cast<long>(invariant_factors(M).size()) != lu.rank())
                return "trial " + std::to_string(trial);
            int odd = 0;
            for (long long f : invariant_factors(M))
                odd += f % 2;
            if (rank_mod2(M) != odd)
                return "mod 2 rank, trial " + std::to_string(trial);
        }
        return "";
    });

    run("d^2 check rejects a corrupted complex", [&]() -> std::string {
        IntMat d1(1, 2), d2(2, 1);
        d1 << 1, 1;
        d2 << 1, -1;
        ChainComplex cc = make_complex({1, 2, 1}, {d1, d2}, Ring::Z);
        if (!verify_d_squared(cc))
            return "valid complex rejected";
        cc.boundary[2](1, 0) = 1;
        if (verify_d_squared(cc))
            return "corrupted complex accepted";
        try {
            homology_ranks(cc);
            return "NotAComplex not raised";
        } catch (const MorseError& e) {
            return e.code() == ErrorCode::NotAComplex ? "" : e.what();
        }
    });

    run("torsion of [2]", [&]() -> std::string {
        const ChainComplex cc = make_complex({1, 1}, {IntMat::Constant(1, 1, 2)}, Ring::Z);
        const auto h = homology_ranks(cc);
        if (h[0].rank != 0 || h[0].torsion != std::vector<long long>{2} || h[1].rank != 0)
            return "wrong groups";
        const auto h2 = homology_ranks(make_complex({1, 1}, {IntMat::Constant(1, 1, 2)}, Ring::Z2));
        return h2[0].rank == 1 && h2[1].rank == 1 ? "" : "wrong Z/2 groups";
    });

    run("contraction identities on random catalogs", [&]() -> std::string {
        std::uniform_real_distribution<double> u(-5, 5);
        for (int n : {4, 5, 6}) {
            std::vector<std::string> ids;
            std::vector<double> f;
            for (int i = 0; i < n; ++i) {
                ids.push_back("c" + std::to_string(i));
                f.push_back(u(rng));
            }
            const IdentityReport r = check_iterated_equals_simultaneous(build_catalog(ids, f), 4);
            if (!r.ok())
                return r.violations.front();
        }
        return "";
    });

    run("four-point strata and chart cover", [&]() -> std::string {
        const ModuliCatalog cat = build_catalog({"p", "q", "r", "s"}, {3, 1, -1, -3});
        const std::vector<IndexTuple> want{{6}, {3, 4}, {5, 1}, {3, 2, 1}};
        if (enumerate_strata(cat, 6) != want)
            return "strata of 6";
        const Box dom = m6_small_domain();
        if (!validate_chart_cover(cat, m6_small_layout(cat), &dom).ok())
            return "layout rejected";
        if (validate_chart_cover(cat, m6_small_layout(cat, true), &dom).ok())
            return "mutant accepted";
        return "";
    });

    run("ramp is monotone within its C1 bound", [&]() -> std::string {
        const RampConfig rc;
        const double R = 2.0;
        double prev = 0.0;
        for (int k = 0; k <= 20000; ++k) {
            const double T = R + 8.0 * k / 20000;
            const double v = ramp(rc, R, T), s = ramp_slope(rc, R, T);
            if (T <= R + rc.delta1 && v != 0.0)
                return "nonzero near R";
            if (T >= R + rc.delta2 && v != 1.0)
                return "not one past delta2";
            if (v < prev - 1e-15 || s > rc.c1_bound || s < 0)
                return "slope out of bounds at T=" + std::to_string(T);
            prev = v;
        }
        return "";
    });

    run("s0 agrees with the direct sums", [&]() -> std::string {
        std::uniform_real_distribution<double> c(-2, 2), lam(0.3, 2.0);
        for (int trial = 0; trial < 50; ++trial) {
            BrokenPair bp;
            bp.upper.fiber_rank = 1;
            bp.lower.fiber_rank = 1;
            bp.lower.coker_source.resize(1);
            bp.upper.coker_target.resize(1);
            double lp[2] = {lam(rng), lam(rng)}, lm[2] = {-lam(rng), -lam(rng)};
            double cm[2], dp[2], cp[2], dm[2];
            for (int i = 0; i < 2; ++i) {
                cm[i] = c(rng), dp[i] = c(rng), cp[i] = c(rng), dm[i] = c(rng);
                bp.upper.at_target.modes.push_back(mode(i + 1, lp[i], cm[i]));
                bp.lower.coker_source[0].modes.push_back(mode(i + 1, lp[i], dp[i]));
                bp.lower.at_source.modes.push_back(mode(-(i + 1), lm[i], cp[i]));
                bp.upper.coker_target[0].modes.push_back(mode(-(i + 1), lm[i], dm[i]));
            }
            for (double T : {1.0, 2.5, 4.0}) {
                const SectionValue v = linearized_obstruction_section(bp, T);
                double plus = 0, minus = 0;
                for (int i = 0; i < 2; ++i) {
                    plus += cm[i] * dp[i] * std::exp(-4 * lp[i] * T);
                    minus -= cp[i] * dm[i] * std::exp(4 * lm[i] * T);
                }
                if (std::abs(v.plus.at(0) - plus) > 1e-12 || std::abs(v.minus.at(0) - minus) > 1e-12)
                    return "trial " + std::to_string(trial);
            }
        }
        return "";
    });
    return out;
}

}  // namespace cleanmorse
