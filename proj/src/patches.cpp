#include <cmath>
#include <sstream>

#include "cleanmorse/geometry.hpp"

namespace cleanmorse {

TorusPatch::TorusPatch(double R, double r, double theta_c, double phi_c, double half_width)
    : R_(R), r_(r), tc_(theta_c), pc_(phi_c), w_(half_width) {}

double TorusPatch::margin(const Vec& x) const {
    return std::min(w_ - std::abs(x[0] - tc_), w_ - std::abs(x[1] - pc_));
}

PatchJet TorusPatch::jet(const Vec& x, bool second_order) const {
    const double ct = std::cos(x[0]), st = std::sin(x[0]);
    const double cp = std::cos(x[1]), sp = std::sin(x[1]);
    const double rho = R_ + r_ * cp;
    PatchJet j;
    j.X = Vec(3);
    j.X << rho * ct, r_ * sp, rho * st;
    j.dX = Mat(3, 2);
    j.dX.col(0) << -rho * st, 0.0, rho * ct;
    j.dX.col(1) << -r_ * sp * ct, r_ * cp, -r_ * sp * st;
    if (second_order) {
        j.d2X.assign(2, Mat(3, 2));
        j.d2X[0].col(0) << -rho * ct, 0.0, -rho * st;
        j.d2X[0].col(1) << r_ * sp * st, 0.0, -r_ * sp * ct;
        j.d2X[1].col(0) = j.d2X[0].col(1);
        j.d2X[1].col(1) << -r_ * cp * ct, -r_ * sp, -r_ * cp * st;
    }
    return j;
}

std::optional<Vec> TorusPatch::chart_of(const Vec& p) const {
    const double rho = std::hypot(p[0], p[2]);
    double th = std::atan2(p[2], p[0]);
    double ph = std::atan2(p[1], rho - R_);
    th += 2 * M_PI * std::round((tc_ - th) / (2 * M_PI));
    ph += 2 * M_PI * std::round((pc_ - ph) / (2 * M_PI));
    Vec x(2);
    x << th, ph;
    if (margin(x) < 0)
        return std::nullopt;
    return x;
}

std::string TorusPatch::label() const {
    std::ostringstream os;
    os << "torus(theta=" << tc_ << ",phi=" << pc_ << ")";
    return os.str();
}

GraphPatch::GraphPatch(std::shared_ptr<const ImplicitSurface> F, int axis, Eigen::Vector2d center,
                       double half_width, double c_lo, double c_hi)
    : F_(std::move(F)), axis_(axis), center_(center), w_(half_width), lo_(c_lo), hi_(c_hi) {
    ia_ = axis == 0 ? 1 : 0;
    ib_ = axis == 2 ? 1 : 2;
}

Eigen::Vector3d GraphPatch::embed(double a, double b, double c) const {
    Eigen::Vector3d p;
    p[ia_] = a;
    p[ib_] = b;
    p[axis_] = c;
    return p;
}

std::optional<double> GraphPatch::solve(double a, double b, double* sheet_margin) const {
    // The sheet taken is the sign change nearest the middle of the depth range.
    constexpr int kScan = 24;
    const double mid = 0.5 * (lo_ + hi_);
    double lo = 0, hi = 0, best = 1e300, rival = 1e300;
    double prev = F_->value(embed(a, b, lo_));
    for (int i = 1; i <= kScan; ++i) {
        const double c0 = lo_ + (hi_ - lo_) * (i - 1) / kScan;
        const double c = lo_ + (hi_ - lo_) * i / kScan;
        const double v = F_->value(embed(a, b, c));
        if ((prev < 0) != (v < 0)) {
            const double dist = std::abs(0.5 * (c0 + c) - mid);
            if (dist < best) {
                rival = best;
                best = dist;
                lo = c0;
                hi = c;
            } else {
                rival = std::min(rival, dist);
            }
        }
        prev = v;
    }
    if (best == 1e300)
        return std::nullopt;
    if (sheet_margin)
        *sheet_margin = 0.5 * (rival - best);
    double flo = F_->value(embed(a, b, lo));
    double c = 0.5 * (lo + hi);
    for (int it = 0; it < 100; ++it) {
        const Eigen::Vector3d p = embed(a, b, c);
        const double v = F_->value(p);
        if ((v < 0) == (flo < 0)) {
            lo = c;
            flo = v;
        } else {
            hi = c;
        }
        const double d = F_->gradient(p)[axis_];
        double next = c - v / d;
        if (!(next > lo && next < hi))
            next = 0.5 * (lo + hi);
        const double step = std::abs(next - c);
        c = next;
        if (step < 1e-15 * std::max(1.0, std::abs(c)) || hi - lo < 1e-15)
            break;
    }
    return c;
}

double GraphPatch::margin(const Vec& x) const {
    double m = std::min(w_ - std::abs(x[0] - center_[0]), w_ - std::abs(x[1] - center_[1]));
    if (m < -0.5)
        return m;
    double sheet = 0.0;
    const auto c = solve(x[0], x[1], &sheet);
    if (!c)
        return std::min(m, -1e-3);
    m = std::min(m, sheet);
    const Eigen::Vector3d g = F_->gradient(embed(x[0], x[1], *c));
    const double tilt = std::abs(g[axis_]) / g.norm();
    m = std::min(m, 0.5 * (tilt - 0.4));
    m = std::min(m, std::min(*c - lo_, hi_ - *c));
    return m;
}

PatchJet GraphPatch::jet(const Vec& x, bool second_order) const {
    const auto c = solve(x[0], x[1]);
    if (!c)
        throw std::domain_error("graph patch: no root");
    const Eigen::Vector3d p = embed(x[0], x[1], *c);
    const Eigen::Vector3d g = F_->gradient(p);
    const double Fc = g[axis_];
    const double ha = -g[ia_] / Fc, hb = -g[ib_] / Fc;
    PatchJet j;
    j.X = p;
    j.dX = Mat::Zero(3, 2);
    j.dX(ia_, 0) = 1.0;
    j.dX(axis_, 0) = ha;
    j.dX(ib_, 1) = 1.0;
    j.dX(axis_, 1) = hb;
    if (second_order) {
        const Eigen::Matrix3d H = F_->hessian(p);
        const int A = ia_, B = ib_, C = axis_;
        const double haa = -(H(A, A) + 2 * H(A, C) * ha + H(C, C) * ha * ha) / Fc;
        const double hbb = -(H(B, B) + 2 * H(B, C) * hb + H(C, C) * hb * hb) / Fc;
        const double hab = -(H(A, B) + H(A, C) * hb + H(B, C) * ha + H(C, C) * ha * hb) / Fc;
        j.d2X.assign(2, Mat::Zero(3, 2));
        j.d2X[0](C, 0) = haa;
        j.d2X[0](C, 1) = hab;
        j.d2X[1](C, 0) = hab;
        j.d2X[1](C, 1) = hbb;
    }
    return j;
}

std::optional<Vec> GraphPatch::chart_of(const Vec& p) const {
    Vec x(2);
    x << p[ia_], p[ib_];
    if (std::abs(x[0] - center_[0]) > w_ || std::abs(x[1] - center_[1]) > w_)
        return std::nullopt;
    if (p[axis_] < lo_ || p[axis_] > hi_)
        return std::nullopt;
    const auto c = solve(x[0], x[1]);
    if (!c || std::abs(*c - p[axis_]) > 1e-6 * std::max(1.0, std::abs(p[axis_])))
        return std::nullopt;
    return x;
}

std::string GraphPatch::label() const {
    std::ostringstream os;
    os << "graph(axis=" << axis_ << ",center=" << center_[0] << "," << center_[1] << ",c=[" << lo_
       << "," << hi_ << "])";
    return os.str();
}

}  // namespace cleanmorse
