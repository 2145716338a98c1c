#pragma once

#include "hopfgeom/metric.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace hopf {

// Unit tangent vector: base point plus the angle against the orthonormal
// frame (e_u/|e_u|, e_v/|e_v|) at the base.
struct UnitTangent {
    PointChart base;
    double angle = 0.0;
};

// One point of the combined geodesic + scalar Jacobi system
//   x'' = -Gamma(x)(x', x'),   J'' + K(x) J = 0,
// in raw chart coordinates (RotationalPlane paths may carry a signed radius).
struct FlowState {
    double s = 0.0;
    double u = 0.0, v = 0.0;
    double du = 0.0, dv = 0.0;
    double J = 0.0, dJ = 0.0;

    PointChart point() const { return {u, v}; }
    ChartVelocity velocity() const { return {du, dv}; }
};

// Initial state for the geodesic with initial velocity `tangent`.
FlowState initial_state(const SurfaceSpec& spec, UnitTangent tangent, double J0, double dJ0);

// Same geodesic point with the velocity reversed (for backward solves).
FlowState reversed(const FlowState& state);

// Unit tangent represented by a raw flow state.
UnitTangent tangent_of(const SurfaceSpec& spec, const FlowState& state);

struct FlowOptions {
    double tol = 1e-10;           // absolute and relative error per step
    double min_step = 1e-13;      // step-size underflow threshold
    std::size_t max_steps = 2000000;
    bool track_jacobi_zero = false;
    double zero_tol = 1e-10;      // bisection tolerance in s
};

struct FlowRun {
    std::vector<FlowState> samples;   // at the requested times, in order
    FlowState end;
    std::optional<double> first_zero; // first sign change of J on (0, length]
    bool degenerate_zero = false;     // J and J' both below tolerance at a zero
    double max_speed_defect = 0.0;    // max |g(x',x') - 1| at samples and steps
    std::size_t steps = 0;
};

// Integrates the combined system from `init` over arc length [0, length].
// `times` must be increasing within [0, length]; each gets a dense-output
// sample. Throws NumericalError on step underflow or when the state leaves
// the numerically valid domain.
FlowRun integrate_flow(const SurfaceSpec& spec, const FlowState& init, double length,
                       std::span<const double> times, const FlowOptions& options);

struct GeodesicSample {
    double s = 0.0;
    PointChart point;     // canonical chart coordinates
    UnitTangent tangent;
    double speed_defect = 0.0;
};

struct GeodesicPath {
    SurfaceSpec spec;
    FlowState start;
    double s_max = 0.0;
    double tolerance = 0.0;
    std::vector<GeodesicSample> samples;
    std::vector<FlowState> raw;  // same times as samples
    double max_speed_defect = 0.0;
};

struct JacobiSample {
    double s = 0.0;
    double lambda = 0.0;
    double dlambda = 0.0;
};

struct JacobiRecord {
    const GeodesicPath* path = nullptr;
    double lambda0 = 0.0;
    double dlambda0 = 0.0;
    std::vector<JacobiSample> samples;
};

// Integrates gamma_v on [0, s_max]. Samples are taken every `sample_step`
// (default s_max/1024). Unit speed is monitored, never rescaled: a drift
// beyond 10*tol*max(1, s_max) throws NumericalError.
GeodesicPath shoot_geodesic(const SurfaceSpec& spec, UnitTangent v, double s_max, double tol,
                            double sample_step = 0.0);

// Solves lambda'' + K(gamma(s)) lambda = 0 along the path, co-integrated with
// the geodesic, sampled at the path's sample parameters.
JacobiRecord jacobi_along(const GeodesicPath& path, double lambda0, double dlambda0);

// Wronskian lambda1 lambda2' - lambda2 lambda1' at every common sample.
std::vector<double> wronskian(const JacobiRecord& a, const JacobiRecord& b);

// Smallest s* in (0, s_max] where the (0,1) Jacobi field vanishes, located by
// sign change and bisection to `tol`. Throws NumericalError("degenerate,
// refine") on a grazing zero.
std::optional<double> first_conjugate(const GeodesicPath& path, double tol = 1e-10);

// Maximum deviation between the stored samples and a re-integration of each
// sample-to-sample segment at tolerance tol/100.
double geodesic_residual(const GeodesicPath& path);

// Polar chart at p: lambda(theta_j, r_k) is the (0,1) Jacobi field along the
// unit-speed geodesic leaving p at angle theta_j = 2 pi j / n_theta,
// r_k = k * dr, k = 0..n_r.
struct RadialChart {
    SurfaceSpec spec;
    PointChart basepoint;
    std::size_t n_theta = 0;
    std::size_t n_r = 0;  // number of intervals
    double dr = 0.0;
    double tol = 0.0;
    // row-major [j * (n_r + 1) + k]
    std::vector<FlowState> states;
    std::vector<double> K;
    // conjugate[j]: first conjugate parameter along direction j, if < r_max
    std::vector<std::optional<double>> conjugate;

    double r_max() const { return dr * static_cast<double>(n_r); }
    double theta(std::size_t j) const;
    double r(std::size_t k) const { return dr * static_cast<double>(k); }
    const FlowState& at(std::size_t j, std::size_t k) const { return states[j * (n_r + 1) + k]; }
    double lambda(std::size_t j, std::size_t k) const { return at(j, k).J; }
    double dlambda(std::size_t j, std::size_t k) const { return at(j, k).dJ; }
    double curvature(std::size_t j, std::size_t k) const { return K[j * (n_r + 1) + k]; }
    bool truncated() const;

    // H^1(dB(p, r_k)) by the periodic trapezoid rule in theta.
    double boundary_length(std::size_t k) const;
    // d/dr of the boundary length, from the co-integrated lambda'.
    double boundary_length_derivative(std::size_t k) const;

    std::string to_csv() const;  // columns theta,r,lambda,conjugate_flag
};

RadialChart radial_chart(const SurfaceSpec& spec, PointChart p, double r_max, std::size_t n_theta = 256,
                         double dr = 0.0, double tol = 1e-10);

}  // namespace hopf
