#include "cleanmorse/ode.hpp"

#include <algorithm>
#include <cmath>

#include "cleanmorse/errors.hpp"

namespace cleanmorse {

namespace {

constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                 a64 = 49.0 / 176, a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                 b6 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                 e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

struct Stages {
    Vec k1, k2, k3, k4, k5, k6, k7, tmp;
};

// Fills y_new and the embedded error estimate; k1 must hold f(s, y).
void dp_core(const Rhs& rhs, double s, const Vec& y, double h, Stages& k, Vec& y_new, Vec* err) {
    k.tmp = y + h * a21 * k.k1;
    rhs(s + c2 * h, k.tmp, k.k2);
    k.tmp = y + h * (a31 * k.k1 + a32 * k.k2);
    rhs(s + c3 * h, k.tmp, k.k3);
    k.tmp = y + h * (a41 * k.k1 + a42 * k.k2 + a43 * k.k3);
    rhs(s + c4 * h, k.tmp, k.k4);
    k.tmp = y + h * (a51 * k.k1 + a52 * k.k2 + a53 * k.k3 + a54 * k.k4);
    rhs(s + c5 * h, k.tmp, k.k5);
    k.tmp = y + h * (a61 * k.k1 + a62 * k.k2 + a63 * k.k3 + a64 * k.k4 + a65 * k.k5);
    rhs(s + h, k.tmp, k.k6);
    y_new = y + h * (b1 * k.k1 + b3 * k.k3 + b4 * k.k4 + b5 * k.k5 + b6 * k.k6);
    if (err) {
        rhs(s + h, y_new, k.k7);
        *err = h * (e1 * k.k1 + e3 * k.k3 + e4 * k.k4 + e5 * k.k5 + e6 * k.k6 + e7 * k.k7);
    }
}

}  // namespace

Vec dp_step(const Rhs& rhs, double s, const Vec& y, double h) {
    Stages k;
    rhs(s, y, k.k1);
    Vec y_new;
    dp_core(rhs, s, y, h, k, y_new, nullptr);
    return y_new;
}

OdeResult integrate(const Rhs& rhs, double s0, const Vec& y0, double s_end,
                    const OdeOptions& opt, const Observer& observer) {
    OdeResult res;
    res.s = s0;
    res.y = y0;
    const double dir = s_end >= s0 ? 1.0 : -1.0;
    const int m = opt.error_dims < 0 ? static_cast<int>(y0.size()) : opt.error_dims;
    double h = std::min(opt.h0, opt.hmax);
    Stages k;
    Vec y_new, err;
    rhs(res.s, res.y, k.k1);
    while (dir * (s_end - res.s) > 1e-14 * std::max(1.0, std::abs(s_end))) {
        if (res.steps >= opt.max_steps)
            throw MorseError(ErrorCode::NumericalFailure, "ode: step budget exhausted");
        bool last = false;
        if (h >= dir * (s_end - res.s)) {
            h = dir * (s_end - res.s);
            last = true;
        }
        dp_core(rhs, res.s, res.y, dir * h, k, y_new, &err);
        double en = 0.0;
        for (int i = 0; i < m; ++i) {
            const double sc = opt.atol + opt.rtol * std::max(std::abs(res.y[i]), std::abs(y_new[i]));
            const double e = std::abs(err[i]) / sc;
            if (!(e <= en))  // NaN must win
                en = e;
        }
        if (!y_new.allFinite() || !k.k7.allFinite())
            en = 1e10;
        if (!std::isfinite(en))
            en = 1e10;
        if (en <= 1.0) {
            res.s = last ? s_end : res.s + dir * h;
            res.y = y_new;
            k.k1 = k.k7;
            ++res.steps;
            const double fac = en == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(en, -0.2), 0.2, 5.0);
            h = std::min(h * fac, opt.hmax);
            res.h_next = h;
            if (observer && observer(res.s, res.y) == StepAction::Stop) {
                res.stopped = true;
                return res;
            }
        } else {
            h *= std::max(0.2, 0.9 * std::pow(en, -0.2));
            if (h < 1e-14)
                throw MorseError(ErrorCode::NumericalFailure, "ode: step size underflow");
        }
    }
    res.h_next = h;
    return res;
}

Mat inverse_sqrt_spd(const Mat& G) {
    Eigen::SelfAdjointEigenSolver<Mat> es(G);
    return es.eigenvectors() * es.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() *
           es.eigenvectors().transpose();
}

Mat orthonormalize(const Mat& A) {
    Eigen::HouseholderQR<Mat> qr(A);
    Mat Q = qr.householderQ() * Mat::Identity(A.rows(), A.cols());
    Mat R = qr.matrixQR().topRows(A.cols()).triangularView<Eigen::Upper>();
    for (int j = 0; j < A.cols(); ++j)
        if (R(j, j) < 0)
            Q.col(j) = -Q.col(j);
    return Q;
}

}  // namespace cleanmorse
