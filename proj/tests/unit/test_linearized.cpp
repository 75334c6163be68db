#include <cmath>
#include <random>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "doctest.h"

#include "cleanmorse/errors.hpp"
#include "fixtures.hpp"

using namespace cleanmorse;

namespace {

// D = d/ds + a(s) on [-L, L], scalar, with a given coefficient function.
template <class F>
LinearOperator scalar_operator(F a, double L, double h) {
    std::vector<double> s;
    for (double x = -L; x <= L + 1e-12; x += h)
        s.push_back(x);
    std::vector<Mat> H, Hm;
    for (std::size_t k = 0; k < s.size(); ++k) {
        H.push_back(Mat::Constant(1, 1, a(s[k])));
        if (k + 1 < s.size())
            Hm.push_back(Mat::Constant(1, 1, a(0.5 * (s[k] + s[k + 1]))));
    }
    const Mat Eb = decaying_subspace(H.front(), -1), Ee = decaying_subspace(H.back(), 1);
    return assemble_operator(s, H, Hm, Eb, Ee);
}

}  // namespace

TEST_CASE("kink operator: kernel and cokernel against sech") {
    // d/ds + tanh s has kernel sech s; d/ds - tanh s has cokernel sech s (-eta' - tanh eta = 0)
    const LinearOperator up = scalar_operator([](double s) { return std::tanh(s); }, 20.0, 0.02);
    const KernelCokernel kc = kernel_cokernel_dims(up);
    CHECK(kc.dim_ker == 1);
    CHECK(kc.dim_coker == 0);
    CHECK_THROWS_AS(obstruction_fiber(up), MorseError);

    // the adjoint discretization converges at second order; h = 0.005 reaches 1e-6
    const LinearOperator down = scalar_operator([](double s) { return -std::tanh(s); }, 20.0, 0.005);
    const KernelCokernel kd = kernel_cokernel_dims(down);
    CHECK(kd.dim_ker == 0);
    CHECK(kd.dim_coker == 1);
    const ObstructionFiber fib = obstruction_fiber(down);
    REQUIRE(fib.rank == 1);
    const Mat& eta = fib.basis[0];
    // fix the sign by projection on the oracle; the norm is the L2 one, int sech^2 = 2
    double num = 0;
    for (int k = 0; k < eta.cols(); ++k) {
        const double o = 1.0 / std::cosh(fib.s_mid[k]);
        num += eta(0, k) * o;
    }
    const double alpha = (num > 0 ? 1.0 : -1.0) / std::sqrt(2.0);
    double worst = 0;
    for (int k = 0; k < eta.cols(); ++k) {
        worst = std::max(worst, std::abs(eta(0, k) - alpha / std::cosh(fib.s_mid[k])));
    }
    CHECK(worst < 1e-6);
}

TEST_CASE("constant Hessian model against the analytic spectrum") {
    // D = d/ds + diag(-1, 1): D*D = -d^2/ds^2 + 1, spectrum [1, inf) on the line.
    // On [-L, L] each component is pinned at its growing end and free at the other,
    // where D xi = 0 is the natural condition; xi = sin(k (L - s)) with
    // tan(2 k L) = -k gives sigma = sqrt(1 + k^2).
    for (double L : {10.0, 20.0}) {
        const double h = 0.1;
        std::vector<double> s;
        for (double x = -L; x <= L + 1e-12; x += h)
            s.push_back(x);
        Mat H = Mat::Zero(2, 2);
        H(0, 0) = -1;
        H(1, 1) = 1;
        const std::vector<Mat> Hn(s.size(), H), Hm(s.size() - 1, H);
        const LinearOperator op = assemble_operator(s, Hn, Hm, decaying_subspace(H, -1), decaying_subspace(H, 1));
        CHECK(op.domain_dim() == op.range_dim());  // index 0

        const Mat A = op.w_range.cwiseSqrt().asDiagonal() * Mat(op.D) *
                      op.w_domain.cwiseSqrt().cwiseInverse().asDiagonal();
        const Vec sv = Eigen::BDCSVD<Mat>(A).singularValues();
        double lo = M_PI / (4 * L) + 1e-12, hi = M_PI / (2 * L) - 1e-12;
        for (int i = 0; i < 200; ++i) {
            const double m = 0.5 * (lo + hi);
            (std::tan(2 * m * L) + m > 0 ? hi : lo) = m;
        }
        const double oracle = std::sqrt(1 + lo * lo);
        // both components share the bottom
        CHECK(std::abs(sv[sv.size() - 1] - oracle) < 1e-4);
        CHECK(std::abs(sv[sv.size() - 2] - oracle) < 1e-4);

        const KernelCokernel kc = kernel_cokernel_dims(op);
        CHECK(kc.dim_ker == 0);
        CHECK(kc.dim_coker == 0);
        std::mt19937 rng(7);
        CHECK(adjoint_pairing_defect(op, 50, rng) < 1e-8);
    }
}

TEST_CASE("rank decision needs a spectral gap") {
    CHECK(decide_rank({1e-12, 0.5, 1.0}, 2.0, 0).rank == 1);
    CHECK(decide_rank({0.5, 1.0}, 2.0, 0).rank == 0);
    try {
        decide_rank({1e-6, 5e-6, 1.0}, 2.0, 0);  // 1e-6 counts as zero but sits next to 5e-6
        FAIL("no error");
    } catch (const MorseError& e) {
        CHECK(e.code() == ErrorCode::SpectralGapAmbiguous);
    }
}

TEST_CASE("torus linearizations") {
    const auto& T = fixtures::torus();
    const Trajectory& u = T.M(T.p, T.q).components[0].members[0];
    const Trajectory& v = T.M(T.q, T.r).components[0].members[0];

    const LinearOperator Du = linearize_along(*T.ctx, u);
    const LinearOperator Dv = linearize_along(*T.ctx, v);
    CHECK(velocity_residual(Du, u) < 1e-6);
    CHECK(velocity_residual(Dv, v) < 1e-6);

    const KernelCokernel ku = kernel_cokernel_dims(Du), kv = kernel_cokernel_dims(Dv);
    CHECK(ku.dim_ker == 1);
    CHECK(ku.dim_coker == 0);
    CHECK(kv.dim_ker == 1);
    CHECK(kv.dim_coker == 1);

    // Hessian limits are the cataloged ones at q and r
    const Vec& lq = T.setup.critical_points[T.q].eigenvalues;
    const Vec& lr = T.setup.critical_points[T.r].eigenvalues;
    auto eig = [](const Mat& m) { return Eigen::SelfAdjointEigenSolver<Mat>(m).eigenvalues(); };
    CHECK((eig(Dv.H.front()) - lq).norm() < 1e-2);
    CHECK((eig(Dv.H.back()) - lr).norm() < 1e-2);

    const ObstructionFiber fib = obstruction_fiber(Dv, kv);
    REQUIRE(fib.rank == 1);
    CHECK(fib.residuals[0] < 1e-6);

    std::mt19937 rng(3);
    CHECK(adjoint_pairing_defect(Dv, 50, rng) < 1e-8);

    ModuliSpace M = T.M(T.q, T.r);
    const CleanReport cr = check_clean(*T.ctx, M);
    CHECK(cr.index_ok);
    for (const auto& c : cr.components)
        CHECK(c.status == CutStatus::Clean);
}
