#pragma once

#include "hopfgeom/geodesic.hpp"
#include "hopfgeom/hopf.hpp"

#include <string>
#include <vector>

namespace hopf {

struct GrowthGrid {
    std::size_t n_theta = 256;
    double dr = 0.0;  // 0: r_max / 2048
    double tol = 1e-10;
};

struct GrowthCurve {
    std::string label;
    PointChart basepoint;
    std::vector<double> r;
    std::vector<double> A;
    std::vector<double> L;
    std::vector<double> Asecond;   // dL/dr from the co-integrated lambda'
    std::vector<double> omega;     // integral of K over B(p, r)
    std::vector<double> F;         // empty until fiber_energy
    std::vector<double> G;         // F' = fiber integral of U^2 over the sphere of radius r
    std::vector<double> errA;
    std::vector<double> errF;
    double max_abs_K = 0.0;
    bool F_reliable = true;
    std::size_t nonconverged = 0;

    // max_k |Asecond - (2 pi - omega)|
    double gauss_bonnet_defect() const;
    std::string to_csv() const;  // columns r,A,L,Asecond,omega,F,errA,errF
};

// Cumulative integral of samples y on a uniform grid, fourth order.
std::vector<double> cumulative_simpson(const std::vector<double>& y, double h);

// Throws PremiseViolation naming the first conjugate (theta, r) in the chart.
GrowthCurve ball_growth(const SurfaceSpec& spec, PointChart p, double r_max, const GrowthGrid& grid = {});

struct FiberOptions {
    std::size_t n_ang = 16;
    std::size_t r_stride = 32;      // U sampled on every r_stride-th radius of the curve
    std::size_t theta_stride = 8;   // and on every theta_stride-th chart direction
    RiccatiOptions riccati{{4.0, 8.0, 16.0}, 1e-3, 1e-8};
    double unreliable_fraction = 0.01;
};

// Fills F, G and errF. The chart is rebuilt on the curve's grid.
void fiber_energy(const SurfaceSpec& spec, GrowthCurve& curve, const FiberOptions& options = {},
                  const GrowthGrid& grid = {});

struct Theorem1Options {
    double tail = 0.5;
    GrowthGrid grid;
    FiberOptions fiber;
    double flat_ratio_tol = 1e-6;
    double flat_F_tol = 1e-9;
    double flat_K_tol = 1e-9;
};

struct Theorem1Report {
    std::string label;
    double r_max = 0.0;
    double window_lo = 0.0;
    double liminf_ratio = 0.0;   // min of A / (pi r^2) over [window_lo, r_max]
    std::string tail_trend;      // "increasing", "decreasing", "constant" or "mixed"
    double F_tail = 0.0;
    double max_abs_K = 0.0;
    double gauss_bonnet_defect = 0.0;
    double inequality_min_margin = 0.0;  // min of 2 pi A'' + sqrt(2 pi F' A') - 4 pi^2 - F
    double inequality_budget = 0.0;
    double inequality_max_violation = 0.0;
    bool inequality_holds = true;
    bool F_reliable = true;
    std::string verdict;  // consistent-flat, strictly-above-1, inconclusive, premise-violated
    std::string detail;

    std::string to_json() const;
};

Theorem1Report theorem1_report(const SurfaceSpec& spec, PointChart p, double r_max,
                               const Theorem1Options& options = {});

// Same, reusing curves already computed (F filled).
Theorem1Report theorem1_from_curve(const GrowthCurve& curve, const Theorem1Options& options = {});

}  // namespace hopf
