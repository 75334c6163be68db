#include "cleanmorse/geometry.hpp"

#include <algorithm>
#include <cmath>

#include "cleanmorse/errors.hpp"

namespace cleanmorse {

namespace {

class SphereSurface : public ImplicitSurface {
public:
    explicit SphereSurface(double R) : R_(R) {}
    double value(const Eigen::Vector3d& p) const override { return p.squaredNorm() - R_ * R_; }
    Eigen::Vector3d gradient(const Eigen::Vector3d& p) const override { return 2 * p; }
    Eigen::Matrix3d hessian(const Eigen::Vector3d&) const override {
        return 2 * Eigen::Matrix3d::Identity();
    }

private:
    double R_;
};

// Scaled double torus: (g(x/k) + (y/k)^2)^2 + (z/k)^2 = a^2 with
// g(t) = t (t-1)^2 (t-2).
class Genus2Surface : public ImplicitSurface {
public:
    Genus2Surface(double k, double a) : k_(k), a_(a) {}
    static double g(double t) { const double w = t * t - 2 * t; return w * w + w; }
    static double g1(double t) { const double w = t * t - 2 * t; return (2 * w + 1) * (2 * t - 2); }
    static double g2(double t) {
        const double w = t * t - 2 * t;
        return 2 * (2 * t - 2) * (2 * t - 2) + 2 * (2 * w + 1);
    }
    double value(const Eigen::Vector3d& p) const override {
        const double X = p[0] / k_, Y = p[1] / k_, Z = p[2] / k_;
        const double u = g(X) + Y * Y;
        return u * u + Z * Z - a_ * a_;
    }
    Eigen::Vector3d gradient(const Eigen::Vector3d& p) const override {
        const double X = p[0] / k_, Y = p[1] / k_, Z = p[2] / k_;
        const double u = g(X) + Y * Y;
        return Eigen::Vector3d(2 * u * g1(X), 4 * u * Y, 2 * Z) / k_;
    }
    Eigen::Matrix3d hessian(const Eigen::Vector3d& p) const override {
        const double X = p[0] / k_, Y = p[1] / k_;
        const double u = g(X) + Y * Y;
        const double gx = g1(X);
        Eigen::Matrix3d H = Eigen::Matrix3d::Zero();
        H(0, 0) = 2 * gx * gx + 2 * u * g2(X);
        H(0, 1) = H(1, 0) = 4 * gx * Y;
        H(1, 1) = 8 * Y * Y + 4 * u;
        H(2, 2) = 2;
        return H / (k_ * k_);
    }
    double k() const { return k_; }
    double a() const { return a_; }

private:
    double k_, a_;
};

// Greedy cover of the double torus by graph patches seeded from surface samples.
std::vector<std::shared_ptr<const Patch>> genus2_atlas(std::shared_ptr<const Genus2Surface> S) {
    const double k = S->k();
    // Roots of F along lines parallel to each axis, on a grid over the other two.
    std::vector<Eigen::Vector3d> samples;
    const double lo[3] = {-0.2 * k, -0.8 * k, -0.2 * k}, hi[3] = {2.2 * k, 0.8 * k, 0.2 * k};
    const double step = 0.01 * k;
    for (int axis = 0; axis < 3; ++axis) {
        const int ia = axis == 0 ? 1 : 0, ib = axis == 2 ? 1 : 2;
        for (double A = lo[ia]; A <= hi[ia]; A += step)
            for (double B = lo[ib]; B <= hi[ib]; B += step) {
                Eigen::Vector3d P;
                P[ia] = A;
                P[ib] = B;
                const int m = 200;
                double prev = 0;
                for (int i = 0; i <= m; ++i) {
                    P[axis] = lo[axis] + (hi[axis] - lo[axis]) * i / m;
                    const double v = S->value(P);
                    if (i > 0 && (v < 0) != (prev < 0)) {
                        double l = P[axis] - (hi[axis] - lo[axis]) / m, h = P[axis];
                        Eigen::Vector3d Q = P;
                        for (int it = 0; it < 60; ++it) {
                            Q[axis] = 0.5 * (l + h);
                            if ((S->value(Q) < 0) == (prev < 0))
                                l = Q[axis];
                            else
                                h = Q[axis];
                        }
                        samples.push_back(Q);
                    }
                    prev = v;
                }
            }
    }
    const double w = 0.4, depth = 0.4, keep = 0.08;
    std::vector<std::shared_ptr<const Patch>> atlas;
    std::vector<Eigen::Vector3d> centers;
    for (const auto& P : samples) {
        bool covered = false;
        for (std::size_t i = 0; i < atlas.size() && !covered; ++i) {
            if ((centers[i] - P).cwiseAbs().maxCoeff() > w + depth)
                continue;
            const auto x = atlas[i]->chart_of(P);
            covered = x && atlas[i]->margin(*x) >= keep;
        }
        if (covered)
            continue;
        const Eigen::Vector3d n = S->gradient(P).normalized();
        int axis = 0;
        n.cwiseAbs().maxCoeff(&axis);
        const int ia = axis == 0 ? 1 : 0, ib = axis == 2 ? 1 : 2;
        auto patch = std::make_shared<GraphPatch>(S, axis, Eigen::Vector2d(P[ia], P[ib]), w,
                                                  P[axis] - depth, P[axis] + depth);
        atlas.push_back(patch);
        centers.push_back(P);
    }
    return atlas;
}

}  // namespace

double NormalChart::model(const Vec& y) const {
    return f_center + 0.5 * (eigenvalues.array() * y.array().square()).sum();
}

double MorseSetup::margin(const ChartPoint& pt) const { return atlas.at(pt.patch)->margin(pt.x); }

double MorseSetup::f(const ChartPoint& pt) const {
    return height.dot(atlas.at(pt.patch)->jet(pt.x, false).X);
}

Vec MorseSetup::ambient(const ChartPoint& pt) const { return atlas.at(pt.patch)->jet(pt.x, false).X; }

Mat MorseSetup::metric(const ChartPoint& pt) const {
    const PatchJet j = atlas.at(pt.patch)->jet(pt.x, false);
    return j.dX.transpose() * j.dX;
}

Vec MorseSetup::gradient(const ChartPoint& pt) const {
    const PatchJet j = atlas.at(pt.patch)->jet(pt.x, false);
    const Mat G = j.dX.transpose() * j.dX;
    return G.ldlt().solve(j.dX.transpose() * height);
}

LocalGeometry MorseSetup::local(const ChartPoint& pt, bool second_order) const {
    const PatchJet j = atlas.at(pt.patch)->jet(pt.x, second_order);
    const int n = static_cast<int>(pt.x.size());
    LocalGeometry L;
    L.f = height.dot(j.X);
    L.df = j.dX.transpose() * height;
    L.metric = j.dX.transpose() * j.dX;
    L.metric_inv = L.metric.inverse();
    L.gradient = L.metric_inv * L.df;
    if (second_order) {
        Mat d2f(n, n);
        // lowered symbols <X_ij, X_l>
        std::vector<Mat> low(n, Mat(n, n));
        for (int i = 0; i < n; ++i) {
            for (int jj = 0; jj < n; ++jj) {
                d2f(i, jj) = height.dot(j.d2X[i].col(jj));
                for (int l = 0; l < n; ++l)
                    low[l](i, jj) = j.d2X[i].col(jj).dot(j.dX.col(l));
            }
        }
        L.christoffel.assign(n, Mat::Zero(n, n));
        for (int kk = 0; kk < n; ++kk)
            for (int l = 0; l < n; ++l)
                L.christoffel[kk] += L.metric_inv(kk, l) * low[l];
        L.hessian = d2f;
        for (int kk = 0; kk < n; ++kk)
            L.hessian -= L.df[kk] * L.christoffel[kk];
        L.hessian = 0.5 * (L.hessian + L.hessian.transpose());
    }
    return L;
}

ChartPoint MorseSetup::locate(const Vec& amb) const {
    int best = -1;
    double best_margin = -1e300;
    Vec best_x;
    for (std::size_t i = 0; i < atlas.size(); ++i) {
        const auto x = atlas[i]->chart_of(amb);
        if (!x)
            continue;
        const double m = atlas[i]->margin(*x);
        if (m > best_margin) {
            best_margin = m;
            best = static_cast<int>(i);
            best_x = *x;
        }
    }
    if (best < 0 || best_margin <= 0)
        throw MorseError(ErrorCode::OutOfAtlas, "geometry: ambient point not covered by the atlas");
    return {best, best_x};
}

std::optional<Vec> MorseSetup::to_patch(const ChartPoint& pt, int patch) const {
    if (pt.patch == patch)
        return pt.x;
    return atlas.at(patch)->chart_of(ambient(pt));
}

ChartPoint MorseSetup::rechart(const ChartPoint& pt) const { return locate(ambient(pt)); }

Mat MorseSetup::transition_jacobian(const ChartPoint& from, const ChartPoint& to) const {
    if (from.patch == to.patch)
        return Mat::Identity(from.x.size(), from.x.size());
    const PatchJet a = atlas.at(from.patch)->jet(from.x, false);
    const PatchJet b = atlas.at(to.patch)->jet(to.x, false);
    const Mat Gb = b.dX.transpose() * b.dX;
    return Gb.ldlt().solve(b.dX.transpose() * a.dX);
}

int MorseSetup::crit_index(const std::string& id) const {
    for (std::size_t i = 0; i < critical_points.size(); ++i)
        if (critical_points[i].id == id)
            return static_cast<int>(i);
    throw MorseError(ErrorCode::UnknownSetup, "geometry: no critical point '" + id + "' in " + name);
}

double MorseSetup::feature_length() const {
    if (params.family == "sphere")
        return params.radius;
    if (params.family == "torus")
        return params.minor_radius;
    return params.scale * params.thickness;
}

double MorseSetup::min_critical_gap() const {
    std::vector<double> v;
    for (const auto& c : critical_points)
        v.push_back(c.f_value);
    std::sort(v.begin(), v.end());
    double gap = 1e300;
    for (std::size_t i = 1; i < v.size(); ++i)
        gap = std::min(gap, v[i] - v[i - 1]);
    return gap;
}

Vec eval_gradient(const MorseSetup& setup, const ChartPoint& pt) {
    if (pt.patch < 0 || pt.patch >= static_cast<int>(setup.atlas.size()) || setup.margin(pt) < 0)
        throw MorseError(ErrorCode::OutOfAtlas, "geometry: point outside its patch");
    return setup.gradient(pt);
}

CriticalPoint refine_critical_point(const MorseSetup& setup, const ChartPoint& seed,
                                    const std::string& id) {
    ChartPoint pt = setup.rechart(seed);
    for (int round = 0; round < 3; ++round) {
        for (int it = 0; it < 100; ++it) {
            const PatchJet j = setup.atlas[pt.patch]->jet(pt.x, true);
            const int n = static_cast<int>(pt.x.size());
            const Vec df = j.dX.transpose() * setup.height;
            Mat d2f(n, n);
            for (int a = 0; a < n; ++a)
                for (int b = 0; b < n; ++b)
                    d2f(a, b) = setup.height.dot(j.d2X[a].col(b));
            const Vec step = -d2f.fullPivLu().solve(df);
            double t = 1.0;
            for (int k = 0; k < 30; ++k, t *= 0.5) {
                ChartPoint trial{pt.patch, pt.x + t * step};
                if (setup.margin(trial) <= 0)
                    continue;
                const Vec df2 = setup.atlas[pt.patch]->jet(trial.x, false).dX.transpose() * setup.height;
                if (df2.norm() < df.norm() || df.norm() < 1e-14) {
                    pt = trial;
                    break;
                }
            }
            if ((t * step).norm() < 1e-13)
                break;
        }
        pt = setup.rechart(pt);
    }
    const LocalGeometry L = setup.local(pt, true);
    if (L.gradient.norm() > 1e-10)
        throw MorseError(ErrorCode::NumericalFailure, "geometry: Newton did not converge at " + id);
    Eigen::GeneralizedSelfAdjointEigenSolver<Mat> es(L.hessian, L.metric);
    CriticalPoint c;
    c.id = id;
    c.location = pt;
    c.ambient = setup.ambient(pt);
    c.f_value = L.f;
    c.eigenvalues = es.eigenvalues();
    c.eigenvectors = es.eigenvectors();
    for (int k = 0; k < c.eigenvectors.cols(); ++k) {
        Eigen::Index imax = 0;
        c.eigenvectors.col(k).cwiseAbs().maxCoeff(&imax);
        if (c.eigenvectors(imax, k) < 0)
            c.eigenvectors.col(k) *= -1.0;
    }
    c.morse_index = 0;
    for (int k = 0; k < c.eigenvalues.size(); ++k) {
        if (std::abs(c.eigenvalues[k]) < 1e-8)
            throw MorseError(ErrorCode::NumericalFailure, "geometry: degenerate critical point " + id);
        if (c.eigenvalues[k] < 0)
            ++c.morse_index;
    }
    return c;
}

std::vector<std::string> builtin_setup_names() {
    return {"round_sphere", "upright_torus", "tilted_torus", "upright_genus2"};
}

MorseSetup make_builtin_setup(const std::string& name) {
    SetupParams p;
    p.name = name;
    if (name == "round_sphere") {
        p.family = "sphere";
    } else if (name == "upright_torus") {
        p.family = "torus";
    } else if (name == "tilted_torus") {
        p.family = "torus";
        p.tilt = 0.1;
    } else if (name == "upright_genus2") {
        p.family = "genus2";
    } else {
        throw MorseError(ErrorCode::UnknownSetup, "geometry: unknown setup '" + name + "'");
    }
    return make_setup(p);
}

MorseSetup make_setup(const SetupParams& p) {
    MorseSetup s;
    s.params = p;
    s.name = p.name;
    s.dim = 2;
    auto seed_at = [&](const Vec& amb) { return s.locate(amb); };
    if (p.family == "sphere") {
        if (!(p.radius > 0))
            throw MorseError(ErrorCode::InvalidConfig, "geometry: sphere radius must be positive");
        auto F = std::make_shared<SphereSurface>(p.radius);
        const double w = 0.85 * p.radius;
        for (int axis = 0; axis < 3; ++axis)
            for (int sgn : {1, -1}) {
                const double lo = sgn > 0 ? 0.1 * p.radius : -1.1 * p.radius;
                const double hi = sgn > 0 ? 1.1 * p.radius : -0.1 * p.radius;
                s.atlas.push_back(std::make_shared<GraphPatch>(F, axis, Eigen::Vector2d::Zero(), w, lo, hi));
            }
        s.height = Eigen::Vector3d(0, 0, 1);
        s.euler_characteristic = 2;
        s.critical_points.push_back(
            refine_critical_point(s, seed_at(Eigen::Vector3d(0, 0, p.radius)), "max"));
        s.critical_points.push_back(
            refine_critical_point(s, seed_at(Eigen::Vector3d(0, 0, -p.radius)), "min"));
    } else if (p.family == "torus") {
        if (!(p.major_radius > p.minor_radius && p.minor_radius > 0))
            throw MorseError(ErrorCode::InvalidConfig, "geometry: torus needs major > minor > 0");
        const double w = M_PI / 2 + 0.5;
        for (double tc : {M_PI / 2, -M_PI / 2})
            for (double pc : {0.0, M_PI})
                s.atlas.push_back(std::make_shared<TorusPatch>(p.major_radius, p.minor_radius, tc, pc, w));
        s.height = Eigen::Vector3d(0, std::sin(p.tilt), std::cos(p.tilt));
        s.euler_characteristic = 0;
        const double R = p.major_radius, r = p.minor_radius;
        s.critical_points.push_back(refine_critical_point(s, seed_at(Eigen::Vector3d(0, 0, R + r)), "p"));
        s.critical_points.push_back(refine_critical_point(s, seed_at(Eigen::Vector3d(0, 0, R - r)), "q"));
        s.critical_points.push_back(refine_critical_point(s, seed_at(Eigen::Vector3d(0, 0, -R + r)), "r"));
        s.critical_points.push_back(refine_critical_point(s, seed_at(Eigen::Vector3d(0, 0, -R - r)), "s"));
    } else if (p.family == "genus2") {
        auto F = std::make_shared<Genus2Surface>(p.scale, p.thickness);
        s.atlas = genus2_atlas(F);
        s.height = Eigen::Vector3d(1, 0, 0);
        s.euler_characteristic = -2;
        // Critical points sit on y = z = 0 where g(x/k) = +-a.
        const double a = p.thickness, k = p.scale;
        const double wp = (-1 + std::sqrt(1 + 4 * a)) / 2;
        const double wm1 = (-1 + std::sqrt(1 - 4 * a)) / 2, wm2 = (-1 - std::sqrt(1 - 4 * a)) / 2;
        const double xs[6] = {1 + std::sqrt(1 + wp), 1 + std::sqrt(1 + wm1), 1 + std::sqrt(1 + wm2),
                              1 - std::sqrt(1 + wm2), 1 - std::sqrt(1 + wm1), 1 - std::sqrt(1 + wp)};
        const char* ids[6] = {"max", "s4", "s3", "s2", "s1", "min"};
        for (int i = 0; i < 6; ++i) {
            s.critical_points.push_back(
                refine_critical_point(s, seed_at(Eigen::Vector3d(xs[i] * k, 0, 0)), ids[i]));
        }
    } else {
        throw MorseError(ErrorCode::UnknownSetup, "geometry: unknown family '" + p.family + "'");
    }
    std::sort(s.critical_points.begin(), s.critical_points.end(),
              [](const CriticalPoint& a, const CriticalPoint& b) { return a.f_value > b.f_value; });
    return s;
}

NormalChart build_normal_chart(const MorseSetup& setup, const CriticalPoint& crit, double radius) {
    if (!(radius > 0))
        throw MorseError(ErrorCode::ChartRadiusTooLarge, "geometry: radius must be positive");
    NormalChart ch;
    ch.crit_id = crit.id;
    ch.radius = radius;
    ch.patch = crit.location.patch;
    ch.center = crit.location.x;
    ch.eigenvalues = crit.eigenvalues;
    ch.frame = crit.eigenvectors;
    ch.f_center = crit.f_value;
    ch.frame_dual = crit.eigenvectors.transpose() * setup.metric(crit.location);
    const int n = static_cast<int>(ch.center.size());
    std::vector<Vec> dirs;
    for (int i = 0; i < n; ++i) {
        for (int sgn : {1, -1})
            dirs.push_back(sgn * Vec::Unit(n, i));
        for (int j = i + 1; j < n; ++j)
            for (int si : {1, -1})
                for (int sj : {1, -1})
                    dirs.push_back((si * Vec::Unit(n, i) + sj * Vec::Unit(n, j)) / std::sqrt(2.0));
    }
    if (n == 2) {
        dirs.clear();
        for (int k = 0; k < 32; ++k) {
            Vec d(2);
            d << std::cos(2 * M_PI * k / 32), std::sin(2 * M_PI * k / 32);
            dirs.push_back(d);
        }
    }
    for (double frac : {0.25, 0.5, 0.75, 1.0}) {
        for (const Vec& d : dirs) {
            const Vec y = frac * radius * d;
            ChartPoint pt{ch.patch, ch.point(y)};
            if (setup.margin(pt) <= 0)
                throw MorseError(ErrorCode::ChartRadiusTooLarge,
                                 "geometry: normal chart at " + crit.id + " leaves its patch");
            ch.residual = std::max(ch.residual, std::abs(setup.f(pt) - ch.model(y)));
            const Mat Gy = ch.frame.transpose() * setup.metric(pt) * ch.frame;
            ch.metric_residual =
                std::max(ch.metric_residual, (Gy - Mat::Identity(n, n)).cwiseAbs().maxCoeff());
        }
    }
    return ch;
}

std::optional<Vec> normal_coords(const MorseSetup& setup, const NormalChart& chart,
                                 const ChartPoint& pt) {
    const auto x = setup.to_patch(pt, chart.patch);
    if (!x)
        return std::nullopt;
    return chart.coords(*x);
}

}  // namespace cleanmorse
