#include "cleanmorse/linearized.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/QR>
#include <Eigen/SVD>
#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>

#include "cleanmorse/errors.hpp"

namespace cleanmorse {

namespace {

using Sparse = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

// Column offset of node k in the reduced domain.
int column_of(const LinearOperator& op, int k) {
    if (k == 0)
        return 0;
    return static_cast<int>(op.E_begin.cols()) + (k - 1) * op.n;
}

// Interval blocks: r_k = B_k z_k + C_k z_{k+1}.
void interval_blocks(const Mat& Hk, const Mat& Hm, const Mat& Hk1, double h, Mat& B, Mat& C) {
    const int n = static_cast<int>(Hk.rows());
    const Mat I = Mat::Identity(n, n);
    B = -I / h + Hk / 6.0 + (2.0 / 3.0) * Hm * (0.5 * I - (h / 8.0) * Hk);
    C = I / h + Hk1 / 6.0 + (2.0 / 3.0) * Hm * (0.5 * I + (h / 8.0) * Hk1);
}

Mat frame_hessian(const MorseSetup& S, const TrajectorySample& smp) {
    const LocalGeometry L = S.local(smp.pt, true);
    Mat H = smp.frame.transpose() * L.hessian * smp.frame;
    return 0.5 * (H + H.transpose());
}

}  // namespace

Mat decaying_subspace(const Mat& H, int sign) {
    Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (H + H.transpose()));
    std::vector<int> idx;
    for (int i = 0; i < H.rows(); ++i)
        if (sign * es.eigenvalues()[i] > 0)
            idx.push_back(i);
    std::sort(idx.begin(), idx.end(), [&](int a, int b) {
        return std::abs(es.eigenvalues()[a]) < std::abs(es.eigenvalues()[b]);
    });
    Mat E(H.rows(), idx.size());
    for (std::size_t j = 0; j < idx.size(); ++j)
        E.col(j) = es.eigenvectors().col(idx[j]);
    return E;
}

LinearOperator assemble_operator(const std::vector<double>& s, const std::vector<Mat>& H,
                                 const std::vector<Mat>& H_mid, const Mat& E_begin, const Mat& E_end) {
    LinearOperator op;
    op.n = static_cast<int>(H.front().rows());
    op.s = s;
    op.H = H;
    op.H_mid = H_mid;
    op.E_begin = E_begin;
    op.E_end = E_end;
    const int N = op.intervals();
    const int n = op.n;
    if (N < 2 || static_cast<int>(H.size()) != N + 1 || static_cast<int>(H_mid.size()) != N)
        throw MorseError(ErrorCode::InvalidConfig, "linearized: inconsistent grid data");
    for (int k = 0; k < N; ++k)
        op.s_mid.push_back(0.5 * (s[k] + s[k + 1]));

    const int kb = static_cast<int>(E_begin.cols()), ke = static_cast<int>(E_end.cols());
    const int cols = kb + (N - 1) * n + ke;
    op.w_domain.resize(cols);
    op.w_domain.head(kb).setConstant(0.5 * op.h(0));
    for (int k = 1; k < N; ++k)
        op.w_domain.segment(column_of(op, k), n).setConstant(0.5 * (op.h(k - 1) + op.h(k)));
    op.w_domain.tail(ke).setConstant(0.5 * op.h(N - 1));
    op.w_range.resize(n * N);
    for (int k = 0; k < N; ++k)
        op.w_range.segment(k * n, n).setConstant(op.h(k));

    std::vector<Triplet> trip;
    trip.reserve(static_cast<std::size_t>(N) * 2 * n * n);
    auto put = [&](int row0, int col0, const Mat& M) {
        for (int j = 0; j < M.cols(); ++j)
            for (int i = 0; i < M.rows(); ++i)
                if (M(i, j) != 0.0)
                    trip.emplace_back(row0 + i, col0 + j, M(i, j));
    };
    for (int k = 0; k < N; ++k) {
        Mat B, C;
        interval_blocks(H[k], H_mid[k], H[k + 1], op.h(k), B, C);
        put(k * n, column_of(op, k), k == 0 ? Mat(B * E_begin) : B);
        put(k * n, column_of(op, k + 1), k + 1 == N ? Mat(C * E_end) : C);
    }
    op.D.resize(n * N, cols);
    op.D.setFromTriplets(trip.begin(), trip.end());
    op.D.makeCompressed();
    return op;
}

Vec LinearOperator::reduce(const Mat& nodal) const {
    const int N = intervals();
    Vec x(domain_dim());
    x.head(E_begin.cols()) = E_begin.transpose() * nodal.col(0);
    for (int k = 1; k < N; ++k)
        x.segment(column_of(*this, k), n) = nodal.col(k);
    x.tail(E_end.cols()) = E_end.transpose() * nodal.col(N);
    return x;
}

Mat LinearOperator::expand(const Vec& x) const {
    const int N = intervals();
    Mat z(n, N + 1);
    z.col(0) = E_begin * x.head(E_begin.cols());
    for (int k = 1; k < N; ++k)
        z.col(k) = x.segment(column_of(*this, k), n);
    z.col(N) = E_end * x.tail(E_end.cols());
    return z;
}

Mat LinearOperator::apply_full(const Mat& z) const {
    const int N = intervals();
    Mat r(n, N);
    for (int k = 0; k < N; ++k) {
        Mat B, C;
        interval_blocks(H[k], H_mid[k], H[k + 1], h(k), B, C);
        r.col(k) = B * z.col(k) + C * z.col(k + 1);
    }
    return r;
}

Vec LinearOperator::apply_adjoint(const Vec& y) const {
    return (D.transpose() * w_range.cwiseProduct(y)).cwiseQuotient(w_domain);
}

double LinearOperator::inner_domain(const Vec& a, const Vec& b) const {
    return a.dot(w_domain.cwiseProduct(b));
}

double LinearOperator::inner_range(const Vec& a, const Vec& b) const {
    return a.dot(w_range.cwiseProduct(b));
}

LinearOperator linearize_along(const FlowContext& ctx, const Trajectory& traj) {
    const MorseSetup& S = *ctx.setup;
    const CriticalPoint& P = S.critical_points.at(traj.source);
    const CriticalPoint& Q = S.critical_points.at(traj.target);
    for (const TailData* t : {&traj.tail_source, &traj.tail_target})
        if (t->time_in_chart < 0.6 * t->needed)
            throw MorseError(ErrorCode::TailsTooShort, "linearized: tail covers " + std::to_string(t->time_in_chart) +
                                                           " of " + std::to_string(t->needed));
    const int N = traj.nodes() - 1;
    std::vector<double> s(N + 1);
    std::vector<Mat> H(N + 1), Hm(N);
    for (int k = 0; k <= N; ++k) {
        s[k] = traj.samples[2 * k].s;
        H[k] = frame_hessian(S, traj.samples[2 * k]);
        if (k < N)
            Hm[k] = frame_hessian(S, traj.samples[2 * k + 1]);
    }
    const Mat Eb = decaying_subspace(H.front(), -1);
    const Mat Ee = decaying_subspace(H.back(), 1);
    if (Eb.cols() != P.morse_index || Ee.cols() != S.dim - Q.morse_index)
        throw MorseError(ErrorCode::TailsTooShort, "linearized: end Hessians do not split like the critical points");
    LinearOperator op = assemble_operator(s, H, Hm, Eb, Ee);
    op.limit_source = P.eigenvalues;
    op.limit_target = Q.eigenvalues;
    return op;
}

Mat unstable_reference(const MorseSetup& S, int c, const TrajectorySample& smp) {
    const CriticalPoint& cp = S.critical_points.at(c);
    const auto home = S.to_patch(smp.pt, cp.location.patch);
    if (!home)
        throw MorseError(ErrorCode::OutOfAtlas, "linearized: sample cannot be moved to the home patch of " + cp.id);
    const Mat J = S.transition_jacobian({cp.location.patch, *home}, smp.pt);
    const Mat G = S.metric(smp.pt);
    return smp.frame.transpose() * G * J * cp.eigenvectors.leftCols(cp.morse_index);
}

namespace {

// Orthonormal columns with the orientation of A (Gram-Schmidt with positive R diagonal).
Mat orient_orthonormal(const Mat& A) {
    Eigen::HouseholderQR<Mat> qr(A);
    Mat Q = qr.householderQ() * Mat::Identity(A.rows(), A.cols());
    const Mat R = Q.transpose() * A;
    for (int j = 0; j < A.cols(); ++j)
        if (R(j, j) < 0)
            Q.col(j) = -Q.col(j);
    return Q;
}

int sign_of_det(const Mat& M) {
    if (M.rows() == 0)
        return 1;
    const double d = M.determinant();
    if (!(std::abs(d) > 1e-10))
        throw MorseError(ErrorCode::NumericalFailure, "linearized: degenerate orientation comparison");
    return d > 0 ? 1 : -1;
}

}  // namespace

int trajectory_orientation(const FlowContext& ctx, const Trajectory& traj, const LinearOperator& op,
                           const ObstructionFiber* fiber, int element) {
    const MorseSetup& S = *ctx.setup;
    const int kp = S.critical_points.at(traj.source).morse_index;
    const int kq = S.critical_points.at(traj.target).morse_index;
    const int rank = fiber ? 1 : 0;
    if (kq != kp - 1 + rank)
        throw MorseError(ErrorCode::InvalidConfig, "linearized: orientation needs index difference 1, or 0 with a rank-1 fiber");
    const Mat vel = velocity_field(traj);
    const int N = op.intervals();
    const Mat Bp = unstable_reference(S, traj.source, traj.samples.front());
    const Vec v0 = vel.col(0).normalized();

    // start: (-u', W) positively oriented against Bp
    Vec a = Bp.transpose() * (-v0);
    int o = 1;
    Mat W(op.n, kp - 1);
    if (kp == 1) {
        o = a[0] > 0 ? 1 : -1;
    } else {
        Mat A(kp, kp);
        A.col(0) = a.normalized();
        A.rightCols(kp - 1) = Mat::Identity(kp, kp).leftCols(kp - 1);
        Mat Q = orient_orthonormal(A);
        if (Q.determinant() < 0)
            Q.col(kp - 1) = -Q.col(kp - 1);
        W = Bp * Q.rightCols(kp - 1);
    }
    for (int k = 0; k < N; ++k) {
        if (W.cols() == 0)
            break;
        Mat B, C;
        interval_blocks(op.H[k], op.H_mid[k], op.H[k + 1], op.h(k), B, C);
        W = -C.partialPivLu().solve(B * W);
        const Vec v = vel.col(k + 1).normalized();
        W -= v * (v.transpose() * W);
        W = orient_orthonormal(W);
    }
    Mat end = W;
    if (fiber) {
        const Mat& eta = fiber->basis.at(element);
        end.conservativeResize(op.n, W.cols() + 1);
        end.col(W.cols()) = eta.col(eta.cols() - 1).normalized();
    }
    const Mat Bq = unstable_reference(S, traj.target, traj.samples.back());
    return o * sign_of_det(Bq.transpose() * end);
}

Mat velocity_field(const Trajectory& traj) {
    const int N = traj.nodes() - 1;
    Mat z(traj.samples.front().velocity.size(), N + 1);
    for (int k = 0; k <= N; ++k) {
        const auto& smp = traj.samples[2 * k];
        z.col(k) = smp.frame.partialPivLu().solve(smp.velocity);
    }
    return z;
}

double velocity_residual(const LinearOperator& op, const Trajectory& traj) {
    const Mat r = op.apply_full(velocity_field(traj));
    return r.colwise().norm().maxCoeff();
}

double largest_singular(const LinearOperator& op) {
    const Sparse& D = op.D;
    const Vec sd = op.w_domain.cwiseSqrt().cwiseInverse();
    const Vec sr = op.w_range.cwiseSqrt();
    std::mt19937 rng(7);
    std::normal_distribution<double> nd;
    Vec x(op.domain_dim());
    for (int i = 0; i < x.size(); ++i)
        x[i] = nd(rng);
    x.normalize();
    double sig = 0.0;
    for (int it = 0; it < 200; ++it) {
        const Vec y = sr.cwiseProduct(D * sd.cwiseProduct(x));
        const Vec z = sd.cwiseProduct(D.transpose() * sr.cwiseProduct(y));
        const double next = std::sqrt(z.norm());
        x = z / z.norm();
        if (std::abs(next - sig) < 1e-6 * next)
            return next;
        sig = next;
    }
    return sig;
}

SpectrumEnd smallest_singular(const LinearOperator& op, int count, bool adjoint) {
    // weighted operator A = W_r^{1/2} D W_d^{-1/2}
    Sparse A = op.D;
    {
        const Vec sd = op.w_domain.cwiseSqrt().cwiseInverse();
        const Vec sr = op.w_range.cwiseSqrt();
        A = sr.asDiagonal() * A * sd.asDiagonal();
    }
    if (adjoint)
        A = Sparse(A.transpose());
    const int c = static_cast<int>(A.cols());
    count = std::min(count, c);
    Sparse G = A.transpose() * A;
    const double scale = G.diagonal().maxCoeff();
    Sparse shift(c, c);
    shift.setIdentity();
    G += (1e-13 * scale) * shift;
    Eigen::SimplicialLDLT<Sparse> ldlt(G);
    if (ldlt.info() != Eigen::Success)
        throw MorseError(ErrorCode::NumericalFailure, "linearized: factorization failed");
    const int b = std::min(c, count + 4);
    std::mt19937 rng(11);
    std::normal_distribution<double> nd;
    Mat V(c, b);
    for (int j = 0; j < b; ++j)
        for (int i = 0; i < c; ++i)
            V(i, j) = nd(rng);
    V = orthonormalize(V);
    Vec prev = Vec::Constant(b, -1.0);
    Eigen::JacobiSVD<Mat> svd;
    for (int it = 0; it < 60; ++it) {
        Mat W(c, b);
        for (int j = 0; j < b; ++j)
            W.col(j) = ldlt.solve(V.col(j));
        V = orthonormalize(W);
        svd.compute(A * V, Eigen::ComputeThinV);
        Vec sv = svd.singularValues().reverse();
        if (it > 2 && ((sv - prev).cwiseAbs().array() <= 1e-10 * sv.maxCoeff() + 1e-3 * sv.array()).head(count).all())
            break;
        prev = sv;
    }
    svd.compute(A * V, Eigen::ComputeThinV);
    SpectrumEnd out;
    const Vec sv = svd.singularValues();
    const Mat R = V * svd.matrixV();
    out.vectors.resize(c, count);
    for (int j = 0; j < count; ++j) {
        const int src = static_cast<int>(sv.size()) - 1 - j;
        out.sigma.push_back(sv[src]);
        out.vectors.col(j) = R.col(src);
    }
    return out;
}

RankThresholds& rank_thresholds() {
    static RankThresholds t;
    return t;
}

RankDecision decide_rank(const std::vector<double>& sigma, double sigma_max, int structural) {
    RankDecision d;
    d.sigma = sigma;
    d.sigma_max = sigma_max;
    const RankThresholds& th = rank_thresholds();
    const double tiny = th.zero_relative * sigma_max;
    int r = 0;
    while (r < static_cast<int>(sigma.size()) && sigma[r] < tiny)
        ++r;
    if (r == static_cast<int>(sigma.size()))
        throw MorseError(ErrorCode::SpectralGapAmbiguous,
                         "linearized: all " + std::to_string(r) + " computed singular values are below threshold");
    // r counts the zero candidates; the next one must clear the relative gap and
    // every candidate must sit 10x below it
    if (r > 0 && !(sigma[r - 1] < th.gap_ratio * sigma[r]))
        throw MorseError(ErrorCode::SpectralGapAmbiguous,
                         "linearized: ranks " + std::to_string(r - 1) + " or " + std::to_string(r) +
                             " (sigma " + std::to_string(sigma[r - 1]) + " vs " + std::to_string(sigma[r]) + ")");
    if (r < structural)
        throw MorseError(ErrorCode::NumericalFailure, "linearized: structural null space not resolved");
    d.rank = r;
    return d;
}

KernelCokernel kernel_cokernel_dims(const LinearOperator& op) {
    const int index = op.domain_dim() - op.range_dim();
    const int want = 6 + std::max(index, 0);
    const double smax = largest_singular(op);
    KernelCokernel kc;
    const SpectrumEnd ke = smallest_singular(op, want, false);
    const SpectrumEnd ce = smallest_singular(op, want - std::max(index, 0) + std::max(-index, 0), true);
    kc.ker = decide_rank(ke.sigma, smax, std::max(index, 0));
    kc.coker = decide_rank(ce.sigma, smax, std::max(-index, 0));
    kc.dim_ker = kc.ker.rank;
    kc.dim_coker = kc.coker.rank;
    const Vec sd = op.w_domain.cwiseSqrt().cwiseInverse();
    const Vec sr = op.w_range.cwiseSqrt().cwiseInverse();
    for (int j = 0; j < kc.dim_ker; ++j)
        kc.kernel.push_back(op.expand(sd.cwiseProduct(ke.vectors.col(j))));
    const int N = op.intervals();
    for (int j = 0; j < kc.dim_coker; ++j) {
        const Vec y = sr.cwiseProduct(ce.vectors.col(j));
        kc.cokernel.push_back(Eigen::Map<const Mat>(y.data(), op.n, N));
    }
    return kc;
}

ObstructionFiber obstruction_fiber(const LinearOperator& op, const KernelCokernel& kc) {
    if (kc.dim_coker == 0)
        throw MorseError(ErrorCode::EmptyFiber, "linearized: operator is surjective");
    ObstructionFiber fib;
    fib.rank = kc.dim_coker;
    fib.s_mid = op.s_mid;
    const int N = op.intervals();
    for (const Mat& eta : kc.cokernel) {
        // sign: largest component positive
        Mat e = eta;
        Eigen::Index i, j;
        e.cwiseAbs().maxCoeff(&i, &j);
        if (e(i, j) < 0)
            e = -e;
        fib.basis.push_back(e);
        const Vec y = Eigen::Map<const Vec>(e.data(), e.size());
        const Vec dstar = op.apply_adjoint(y);
        fib.residuals.push_back(std::sqrt(op.inner_domain(dstar, dstar)));
        double worst = 0.0;
        for (int k = 1; k + 1 < N; ++k) {
            const double h = op.s_mid[k + 1] - op.s_mid[k - 1];
            const Vec d = -(e.col(k + 1) - e.col(k - 1)) / h + op.H_mid[k] * e.col(k);
            worst = std::max(worst, d.norm());
        }
        fib.ode_residuals.push_back(worst);
    }
    return fib;
}

ObstructionFiber obstruction_fiber(const LinearOperator& op) {
    return obstruction_fiber(op, kernel_cokernel_dims(op));
}

double adjoint_pairing_defect(const LinearOperator& op, int pairs, std::mt19937& rng) {
    std::normal_distribution<double> nd;
    std::uniform_int_distribution<int> pick(1, op.intervals() - 2);
    double worst = 0.0;
    for (int p = 0; p < pairs; ++p) {
        // compact support: a random block of nodes away from the ends
        int a = pick(rng), b = pick(rng);
        if (a > b)
            std::swap(a, b);
        Mat z = Mat::Zero(op.n, op.intervals() + 1);
        for (int k = a; k <= b; ++k)
            for (int i = 0; i < op.n; ++i)
                z(i, k) = nd(rng);
        const Vec xi = op.reduce(z);
        Vec eta = Vec::Zero(op.range_dim());
        int c = pick(rng), d = pick(rng);
        if (c > d)
            std::swap(c, d);
        for (int k = c; k <= d; ++k)
            for (int i = 0; i < op.n; ++i)
                eta[k * op.n + i] = nd(rng);
        const Vec Dxi = op.D * xi;
        const double lhs = op.inner_range(Dxi, eta);
        const double rhs = op.inner_domain(xi, op.apply_adjoint(eta));
        const double nx = std::sqrt(op.inner_domain(xi, xi)), ne = std::sqrt(op.inner_range(eta, eta));
        worst = std::max(worst, std::abs(lhs - rhs) / (nx * ne));
    }
    return worst;
}

double linearization_fd_error(const FlowContext& ctx, const Trajectory& traj, const LinearOperator& op,
                              const Vec& amplitude, double center, double width, double t) {
    const MorseSetup& S = *ctx.setup;
    const int n = S.dim;
    double worst = 0.0;
    const int N = traj.nodes() - 1;
    auto gamma = [&](const std::vector<Mat>& G, const Vec& a, const Vec& b) {
        Vec out(n);
        for (int k = 0; k < n; ++k)
            out(k) = a.dot(G[k] * b);
        return out;
    };
    for (int k = 0; k <= N; ++k) {
        const auto& smp = traj.samples[2 * k];
        const double x = (smp.s - center) / width;
        if (std::abs(x) >= 1.0)
            continue;
        // bump (1 - x^2)^3 and its s-derivative
        const double b = std::pow(1 - x * x, 3), db = -6 * x * std::pow(1 - x * x, 2) / width;
        const Vec zeta = b * amplitude, dzeta = db * amplitude;
        const LocalGeometry L = S.local(smp.pt, true);
        const Mat& F = smp.frame;
        // parallel frame: F' = -Gamma(u', F)
        Mat dF(n, n);
        for (int i = 0; i < n; ++i)
            dF.row(i) = -(smp.velocity.transpose() * L.christoffel[i] * F);
        const Vec xi = F * zeta;
        const Vec dxi = dF * zeta + F * dzeta;
        // exp_u(t xi) = u + t xi - t^2/2 Gamma(xi, xi) + O(t^3); its s-derivative
        // needs dGamma/ds, taken by central differences along u'
        const double d = 1e-5;
        const LocalGeometry Lp = S.local(ChartPoint{smp.pt.patch, smp.pt.x + d * smp.velocity}, true);
        const LocalGeometry Lm = S.local(ChartPoint{smp.pt.patch, smp.pt.x - d * smp.velocity}, true);
        std::vector<Mat> dG(n);
        for (int i = 0; i < n; ++i)
            dG[i] = (Lp.christoffel[i] - Lm.christoffel[i]) / (2 * d);
        const Vec g2 = gamma(L.christoffel, xi, xi);
        const Vec dg2 = gamma(dG, xi, xi) + 2.0 * gamma(L.christoffel, dxi, xi);
        const ChartPoint moved{smp.pt.patch, smp.pt.x + t * xi - 0.5 * t * t * g2};
        const Vec L0 = smp.velocity + L.gradient;
        const Vec L1 = smp.velocity + t * dxi - 0.5 * t * t * dg2 + S.gradient(moved);
        const Vec fd = (L1 - L0) / t;
        const Vec lin = F * (dzeta + op.H[k] * zeta);
        worst = std::max(worst, (fd - lin).norm());
    }
    return worst;
}

CleanReport check_clean(const FlowContext& ctx, ModuliSpace& M, int stride) {
    const MorseSetup& S = *ctx.setup;
    CleanReport rep;
    const int index = S.critical_points[M.source].morse_index - S.critical_points[M.target].morse_index;
    for (auto& comp : M.components) {
        CleanComponent cc;
        cc.id = comp.id;
        for (std::size_t m = 0; m < comp.members.size(); m += std::max(1, stride)) {
            const LinearOperator op = linearize_along(ctx, comp.members[m]);
            const KernelCokernel kc = kernel_cokernel_dims(op);
            cc.dim_ker.push_back(kc.dim_ker);
            cc.dim_coker.push_back(kc.dim_coker);
            cc.velocity_residual = std::max(cc.velocity_residual, velocity_residual(op, comp.members[m]));
            if (kc.dim_ker - kc.dim_coker != index) {
                rep.index_ok = false;
                rep.notes.push_back(comp.members[m].id + ": index " + std::to_string(kc.dim_ker - kc.dim_coker) +
                                    " != " + std::to_string(index));
            }
        }
        const bool ker_const = std::adjacent_find(cc.dim_ker.begin(), cc.dim_ker.end(),
                                                  std::not_equal_to<>()) == cc.dim_ker.end();
        const bool coker_const = std::adjacent_find(cc.dim_coker.begin(), cc.dim_coker.end(),
                                                    std::not_equal_to<>()) == cc.dim_coker.end();
        if (cc.dim_ker.empty() || !ker_const || !coker_const)
            cc.status = CutStatus::Unresolved;
        else
            cc.status = cc.dim_coker.front() == 0 ? CutStatus::Transverse : CutStatus::Clean;
        comp.cut = cc.status;
        comp.dim_ker = cc.dim_ker.empty() ? -1 : cc.dim_ker.front();
        comp.dim_coker = cc.dim_coker.empty() ? -1 : cc.dim_coker.front();
        rep.components.push_back(std::move(cc));
    }
    return rep;
}

}  // namespace cleanmorse
