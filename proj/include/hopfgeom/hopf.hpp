#pragma once

#include "hopfgeom/geodesic.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace hopf {

struct RiccatiOptions {
    std::vector<double> ladder{4.0, 8.0, 16.0};  // increasing horizons T
    double tol = 1e-3;                           // Cauchy tolerance at the top rung
    double flow_tol = 1e-10;                     // integrator tolerance
};

struct RiccatiSample {
    UnitTangent v;
    double U = 0.0;            // extrapolated limit of u_T(0)
    double horizon = 0.0;      // top rung
    double convergence = 0.0;  // Cauchy estimate at the top rung
    bool converged = false;
    bool monotone = true;      // u_T(0) non-decreasing along the ladder
    std::vector<double> u_T;   // raw u_T(0) per rung
};

// u_T(0) = J_T'(0)/J_T(0) where J_T is the Jacobi field along gamma_v with
// J_T(T) = 0, J_T'(T) = -1, for every T of the ladder. The limit is
// extrapolated linearly in 1/T from the top two rungs. The convergence
// estimate compares the top two extrapolants (raw u_T values when the ladder
// has only two rungs). Throws PremiseViolation on a conjugate point in [0, T].
RiccatiSample stable_riccati(const SurfaceSpec& spec, UnitTangent v, const RiccatiOptions& options = {});

struct RiccatiTrack {
    std::vector<double> s;
    std::vector<double> u;         // raw u along the path from the top-horizon backward solve
    std::vector<double> U;         // extrapolated values from two backward solves
    std::vector<double> K;
    std::vector<PointChart> point;
    std::vector<UnitTangent> tangent;
    double max_residual = 0.0;     // max |u' + u^2 + K|, u' by fourth-order centred differences
};

// One backward solve from gamma_v(T_top + s_max) gives u on [0, s_max].
RiccatiTrack riccati_along(const SurfaceSpec& spec, UnitTangent v, double s_max,
                           const RiccatiOptions& options = {});

// Requires a converged stable_riccati sample at v (DomainError otherwise).
double riccati_residual(const SurfaceSpec& spec, UnitTangent v, double s_max, const RiccatiOptions& options = {});

// Metric ball B(center, radius) on a plane, or the coordinate band
// t0 <= t <= t1 on a rotational cylinder.
struct Region {
    enum class Kind { Ball, Band };
    Kind kind = Kind::Ball;
    PointChart center;
    double radius = 0.0;
    double t0 = 0.0, t1 = 0.0;

    static Region ball(PointChart c, double r) { return {Kind::Ball, c, r, 0.0, 0.0}; }
    static Region band(double t0, double t1) { return {Kind::Band, {}, 0.0, t0, t1}; }
    std::string describe() const;
};

struct SamplerGrid {
    std::size_t n_theta = 256;
    std::size_t n_r = 2048;
};

struct LiouvilleSample {
    UnitTangent v;
    double radial = 0.0;  // r in the ball's polar chart, or t in a band
    double theta = 0.0;
};

// Base points with density proportional to the area element (polar chart of
// the ball or f(t) dt dtheta on a band), fiber angle uniform. Sample i only
// depends on (seed, i).
std::vector<LiouvilleSample> sample_liouville(const SurfaceSpec& spec, const Region& q, std::size_t n,
                                              std::uint64_t seed, const SamplerGrid& grid = {});

// Area of the region by the same quadrature the sampler uses.
double region_area(const SurfaceSpec& spec, const Region& q, const SamplerGrid& grid = {});

struct BalanceOptions {
    std::size_t n = 100000;
    std::uint64_t seed = 1;
    RiccatiOptions riccati{{4.0, 8.0, 16.0}, 1e-3, 1e-8};
    std::size_t n_fiber = 64;
    std::size_t n_theta_boundary = 32;
    SamplerGrid grid;
};

struct BalanceReport {
    std::string region;
    double area = 0.0;
    double lhs = 0.0;
    double curvature_term = 0.0;
    double boundary_term = 0.0;
    double discrepancy = 0.0;
    double stderr_lhs = 0.0;
    double quadrature_budget = 0.0;
    double riccati_budget = 0.0;
    double budget = 0.0;  // 3 * (stderr + quadrature + riccati)
    std::size_t n = 0;
    std::uint64_t seed = 0;
    std::size_t nonconverged = 0;
    bool pass = false;

    std::string to_json() const;
};

BalanceReport hopf_balance(const SurfaceSpec& spec, const Region& q, const BalanceOptions& options = {});

// Uniform double in [0, 1) from the top 53 bits of a 64-bit draw.
double unit_uniform(std::uint64_t bits);

}  // namespace hopf
