#include <random>

#include <Eigen/LU>

#include "doctest.h"

#include "cleanmorse/errors.hpp"
#include "cleanmorse/homology.hpp"

using namespace cleanmorse;

TEST_CASE("invariant factors of planted diagonals") {
    std::mt19937 rng(5);
    std::uniform_int_distribution<int> pick(-1, 1);
    for (int trial = 0; trial < 30; ++trial) {
        // D = diag(1, 2, 6, 0) scrambled by unimodular row and column operations
        IntMat M = IntMat::Zero(4, 5);
        M(0, 0) = 1;
        M(1, 1) = 2;
        M(2, 2) = 6;
        for (int k = 0; k < 40; ++k) {
            const int i = k % 4, j = (k * 7 + 1) % 4, c = pick(rng);
            if (i != j)
                M.row(i) += c * M.row(j);
            const int a = k % 5, b = (k * 3 + 2) % 5;
            if (a != b)
                M.col(a) += pick(rng) * M.col(b);
        }
        CHECK(invariant_factors(M) == std::vector<long long>{1, 2, 6});
        CHECK(rank_mod2(M) == 1);
        CHECK(Eigen::FullPivLU<Eigen::MatrixXd>(M.cast<double>()).rank() == 3);
    }
}

TEST_CASE("torsion and coefficients") {
    const auto hz = homology_ranks(make_complex({1, 1}, {IntMat::Constant(1, 1, 2)}, Ring::Z));
    CHECK(hz[0].rank == 0);
    CHECK(hz[0].torsion == std::vector<long long>{2});
    CHECK(hz[1].rank == 0);
    const auto h2 = homology_ranks(make_complex({1, 1}, {IntMat::Constant(1, 1, 2)}, Ring::Z2));
    CHECK(h2[0].rank == 1);
    CHECK(h2[1].rank == 1);
    CHECK(parse_ring("z2") == Ring::Z2);
    CHECK_THROWS_AS(parse_ring("q"), MorseError);
}

TEST_CASE("torus-shaped complex") {
    // one generator in degrees 0 and 2, two in degree 1, every boundary zero
    const ChainComplex cc = make_complex({1, 2, 1}, {IntMat::Zero(1, 2), IntMat::Zero(2, 1)}, Ring::Z);
    CHECK(verify_d_squared(cc));
    const auto h = homology_ranks(cc);
    CHECK(h[0].rank == 1);
    CHECK(h[1].rank == 2);
    CHECK(h[2].rank == 1);
    CHECK(euler_consistent(cc, h));
}

TEST_CASE("a corrupted boundary is not a complex") {
    IntMat d1(1, 2), d2(2, 1);
    d1 << 1, 1;
    d2 << 1, -1;
    ChainComplex cc = make_complex({1, 2, 1}, {d1, d2}, Ring::Z);
    CHECK(verify_d_squared(cc));
    const auto h = homology_ranks(cc);
    CHECK(h[0].rank == 0);
    CHECK(h[1].rank == 0);
    CHECK(h[2].rank == 0);

    cc.boundary[2](1, 0) = 1;
    CHECK(!verify_d_squared(cc));
    try {
        homology_ranks(cc);
        FAIL("no error");
    } catch (const MorseError& e) {
        CHECK(e.code() == ErrorCode::NotAComplex);
    }
}
