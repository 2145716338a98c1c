#pragma once

#include "hopfgeom/expression.hpp"

#include <filesystem>
#include <string>
#include <string_view>

namespace hopf {

enum class Family { FlatPlane, FlatCylinder, ConformalPlane, RotationalPlane, RotationalCylinder };

std::string_view family_name(Family family);

// A point in the surface's chart.
//  - FlatPlane / ConformalPlane: Cartesian (x, y) = (u, v).
//  - RotationalPlane: polar (r, theta) about the pole.
//  - FlatCylinder / RotationalCylinder: (t, theta).
// theta is kept in [0, 2pi) by `canonical`.
struct PointChart {
    double u = 0.0;
    double v = 0.0;
};

struct CurvatureSample {
    PointChart point;
    double K = 0.0;
};

// gamma[k][i][j] = Gamma^k_{ij}, symmetric in (i, j).
struct Christoffel {
    double gamma[2][2][2] = {};
    double operator()(int k, int i, int j) const { return gamma[k][i][j]; }
};

// The metric in every supported chart is diagonal: ds^2 = guu du^2 + gvv dv^2.
struct MetricDiag {
    double guu = 1.0;
    double gvv = 1.0;
};

// Warping profile f and its first two derivatives at a coordinate value.
struct WarpProfile {
    double f = 0.0;
    double df = 0.0;
    double ddf = 0.0;
};

// Conformal factor exp(2 phi) and the derivatives the geometry needs.
struct ConformalFactor {
    double phi = 0.0;
    double phi_x = 0.0;
    double phi_y = 0.0;
    double laplacian = 0.0;
};

class SurfaceSpec {
public:
    // Radius below which RotationalPlane quantities use the pole series
    // f(r) ~ r + f'''(0) r^3 / 6.
    static constexpr double kPoleEpsilon = 1e-6;

    static SurfaceSpec flat_plane(std::string label = "flat_plane");
    static SurfaceSpec flat_cylinder(double radius, std::string label = "flat_cylinder");
    static SurfaceSpec conformal_plane(const std::string& phi, std::string label = "conformal_plane");
    static SurfaceSpec rotational_plane(const std::string& f, std::string label = "rotational_plane");
    static SurfaceSpec rotational_cylinder(const std::string& f,
                                           std::string label = "rotational_cylinder");

    Family family() const { return family_; }
    const std::string& label() const { return label_; }
    const std::string& source() const { return source_; }
    double radius() const { return radius_; }

    bool is_plane() const;
    bool is_cylinder() const;
    // Charts of the form du^2 + f(u)^2 dtheta^2.
    bool is_warped() const;
    // Curvature depends on u only (warped charts, plus FlatPlane).
    bool is_rotational() const { return is_warped() || family_ == Family::FlatPlane; }
    bool is_flat() const { return family_ == Family::FlatPlane || family_ == Family::FlatCylinder; }

    // Warped charts only.
    WarpProfile profile(double u) const;
    double profile_third_at_pole() const { return pole_c3_; }

    // Conformal charts (FlatPlane included, phi = 0).
    ConformalFactor conformal(double x, double y) const;

    // Checks the family invariants on a default sample grid; throws
    // InvariantError naming the check and the offending sample.
    void validate() const;

private:
    SurfaceSpec() = default;
    void prepare_profile();

    Family family_ = Family::FlatPlane;
    std::string label_;
    std::string source_;
    double radius_ = 1.0;
    Expr f_, df_, ddf_;
    Expr phi_, phi_x_, phi_y_, phi_xx_, phi_yy_;
    double pole_c3_ = 0.0;
};

// Parses the key=value spec-file format (see README). Validates the result.
SurfaceSpec parse_metric_spec(std::string_view text);
SurfaceSpec load_metric_spec(const std::filesystem::path& path);

PointChart canonical(const SurfaceSpec& spec, PointChart p);

MetricDiag metric_at(const SurfaceSpec& spec, PointChart p);
double gauss_curvature(const SurfaceSpec& spec, PointChart p);
CurvatureSample curvature_at(const SurfaceSpec& spec, PointChart p);
Christoffel christoffels_at(const SurfaceSpec& spec, PointChart p);

// True iff p is the pole of a RotationalPlane chart.
bool at_pole(const SurfaceSpec& spec, PointChart p);

// Chart velocity of the unit vector making `angle` with the first
// orthonormal frame vector at p (e_u / |e_u|). At the pole of a rotational
// plane the frame is the Cartesian one, so the angle is the polar direction.
struct ChartVelocity {
    double du = 0.0;
    double dv = 0.0;
};
ChartVelocity unit_velocity(const SurfaceSpec& spec, PointChart p, double angle);
double velocity_angle(const SurfaceSpec& spec, PointChart p, ChartVelocity w);
double speed_squared(const SurfaceSpec& spec, PointChart p, ChartVelocity w);

}  // namespace hopf
