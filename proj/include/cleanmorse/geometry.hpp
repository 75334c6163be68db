#pragma once
// Morse data (M, f, g) on an embedded manifold given by a patchwork atlas.
// f is a linear height function of the embedding, g the induced metric.
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "cleanmorse/linalg.hpp"

namespace cleanmorse {

// Embedding X and its derivatives at a chart point. d2X[i].col(j) = d_i d_j X.
struct PatchJet {
    Vec X;
    Mat dX;
    std::vector<Mat> d2X;
};

class Patch {
public:
    virtual ~Patch() = default;
    virtual int dim() const = 0;
    virtual int ambient_dim() const = 0;
    // Positive inside the usable domain; roughly the distance to its edge.
    virtual double margin(const Vec& x) const = 0;
    virtual PatchJet jet(const Vec& x, bool second_order) const = 0;
    virtual std::optional<Vec> chart_of(const Vec& ambient) const = 0;
    virtual std::string label() const = 0;
};

// Angular patch of a torus of revolution with axis along y.
class TorusPatch : public Patch {
public:
    TorusPatch(double R, double r, double theta_c, double phi_c, double half_width);
    int dim() const override { return 2; }
    int ambient_dim() const override { return 3; }
    double margin(const Vec& x) const override;
    PatchJet jet(const Vec& x, bool second_order) const override;
    std::optional<Vec> chart_of(const Vec& ambient) const override;
    std::string label() const override;

private:
    double R_, r_, tc_, pc_, w_;
};

// Level set {F = 0} in R^3.
class ImplicitSurface {
public:
    virtual ~ImplicitSurface() = default;
    virtual double value(const Eigen::Vector3d& p) const = 0;
    virtual Eigen::Vector3d gradient(const Eigen::Vector3d& p) const = 0;
    virtual Eigen::Matrix3d hessian(const Eigen::Vector3d& p) const = 0;
};

// Graph patch of an implicit surface: coordinate `axis` is solved from the
// other two inside [c_lo, c_hi].
class GraphPatch : public Patch {
public:
    GraphPatch(std::shared_ptr<const ImplicitSurface> F, int axis, Eigen::Vector2d center,
               double half_width, double c_lo, double c_hi);
    int dim() const override { return 2; }
    int ambient_dim() const override { return 3; }
    double margin(const Vec& x) const override;
    PatchJet jet(const Vec& x, bool second_order) const override;
    std::optional<Vec> chart_of(const Vec& ambient) const override;
    std::string label() const override;

private:
    std::optional<double> solve(double a, double b, double* sheet_margin = nullptr) const;
    Eigen::Vector3d embed(double a, double b, double c) const;

    std::shared_ptr<const ImplicitSurface> F_;
    int axis_, ia_, ib_;
    Eigen::Vector2d center_;
    double w_, lo_, hi_;
};

struct ChartPoint {
    int patch = 0;
    Vec x;
};

struct CriticalPoint {
    std::string id;
    ChartPoint location;
    Vec ambient;
    int morse_index = 0;
    double f_value = 0.0;
    Vec eigenvalues;   // ascending; negative block first
    Mat eigenvectors;  // columns, orthonormal in the metric at the point
};

// Everything the flow and the linearization need at one point.
struct LocalGeometry {
    double f = 0.0;
    Vec df;
    Mat metric;
    Mat metric_inv;
    std::vector<Mat> christoffel;  // christoffel[k](i, j) = Gamma^k_ij
    Mat hessian;                   // covariant Hessian, lower indices
    Vec gradient;
};

struct SetupParams {
    std::string name;
    std::string family;  // sphere | torus | genus2
    double radius = 1.0;
    double major_radius = 2.0;
    double minor_radius = 1.0;
    double tilt = 0.0;
    double scale = 5.0;
    double thickness = 0.1;
};

class MorseSetup {
public:
    SetupParams params;
    std::string name;
    int dim = 2;
    int euler_characteristic = 0;
    std::vector<std::shared_ptr<const Patch>> atlas;
    Vec height;  // f = height . X
    std::vector<CriticalPoint> critical_points;

    double f(const ChartPoint& pt) const;
    Vec ambient(const ChartPoint& pt) const;
    Vec gradient(const ChartPoint& pt) const;
    Mat metric(const ChartPoint& pt) const;
    LocalGeometry local(const ChartPoint& pt, bool second_order = true) const;
    double margin(const ChartPoint& pt) const;

    // Best-margin patch containing an ambient point.
    ChartPoint locate(const Vec& ambient) const;
    std::optional<Vec> to_patch(const ChartPoint& pt, int patch) const;
    // Moves pt to its best-margin patch.
    ChartPoint rechart(const ChartPoint& pt) const;
    // d(x_to)/d(x_from) at the same physical point.
    Mat transition_jacobian(const ChartPoint& from, const ChartPoint& to) const;

    int crit_index(const std::string& id) const;
    const CriticalPoint& crit(const std::string& id) const { return critical_points[crit_index(id)]; }
    double min_critical_gap() const;
    // Smallest ambient length of the surface: sphere radius, torus tube radius,
    // genus-2 tube half-thickness.
    double feature_length() const;
};

MorseSetup make_builtin_setup(const std::string& name);
MorseSetup make_setup(const SetupParams& params);
std::vector<std::string> builtin_setup_names();

// Gradient g^{-1} df at a chart point; OutOfAtlas when the point is outside its patch.
Vec eval_gradient(const MorseSetup& setup, const ChartPoint& pt);

// Damped Newton on df = 0 starting from a chart point.
CriticalPoint refine_critical_point(const MorseSetup& setup, const ChartPoint& seed,
                                    const std::string& id);

// Eigenframe coordinates y = V^T G_p (x - p) around a critical point.
struct NormalChart {
    std::string crit_id;
    double radius = 0.0;
    double residual = 0.0;         // max |f - quadratic model| on the chart
    double metric_residual = 0.0;  // max |V^T G V - I| on the chart
    int patch = 0;
    Vec center;
    Vec eigenvalues;
    Mat frame;       // V
    Mat frame_dual;  // V^T G_p
    double f_center = 0.0;

    Vec coords(const Vec& x_home) const { return frame_dual * (x_home - center); }
    Vec point(const Vec& y) const { return center + frame * y; }
    double model(const Vec& y) const;
};

NormalChart build_normal_chart(const MorseSetup& setup, const CriticalPoint& crit, double radius);

// Coordinates of pt in the normal chart; nullopt when pt cannot be moved to the home patch.
std::optional<Vec> normal_coords(const MorseSetup& setup, const NormalChart& chart,
                                 const ChartPoint& pt);

}  // namespace cleanmorse
