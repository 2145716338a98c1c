#pragma once

#include "hopfgeom/distance.hpp"
#include "hopfgeom/hopf.hpp"
#include "hopfgeom/ode_lemma.hpp"

#include <string>
#include <vector>

namespace hopf {

// Geodesic ray from `base` at `angle`. On cylinders the axial rays are
// angle 0 (end 2, t -> +inf) and angle pi (end 1, t -> -inf).
struct Ray {
    PointChart base;
    double angle = 0.0;

    static Ray axial(PointChart base, int end) { return {base, end == 1 ? 3.141592653589793 : 0.0}; }
};

PointChart ray_point(const SurfaceSpec& spec, const Ray& ray, double s);

struct BusemannOptions {
    std::vector<double> ladder{8.0, 16.0, 32.0};
    double h = 0.05;
    double pad = 2.0;  // window margin beyond the query points and gamma(T)
};

struct BusemannValue {
    double value = 0.0;                 // extrapolated in 1/T from the top two rungs
    double convergence = 0.0;
    std::vector<double> truncated;      // d(p, gamma(T)) - d(gamma(0), gamma(T)) per rung
    std::vector<double> ray_defect;     // |d(gamma(0), gamma(T)) - T| per rung
    bool monotone = true;               // truncations non-increasing in T (within 2h)
};

// Throws PremiseViolation if the ray is not minimal to within the grid budget.
BusemannValue busemann_value(const SurfaceSpec& spec, const Ray& ray, PointChart p, const BusemannOptions& options = {});

// Busemann values on the nodes of a cylinder window (periodic in theta).
struct BusemannField {
    Ray ray;
    double t_min = 0.0, h = 0.0;
    std::size_t nt = 0, ntheta = 0;
    std::vector<double> values;       // [i * ntheta + j]
    std::vector<double> convergence;
    std::vector<double> horizons;
    std::size_t nonmonotone = 0;

    double at(std::size_t i, std::size_t j) const { return values[i * ntheta + j]; }
    double t(std::size_t i) const { return t_min + h * static_cast<double>(i); }
};

BusemannField busemann_field(const SurfaceSpec& spec, const Ray& ray, double t_lo, double t_hi,
                             const BusemannOptions& options = {});

struct ExhaustionOptions {
    std::size_t n_t = 512;          // intervals on [0, t_max]
    std::size_t r_stride = 16;      // U sampled on every r_stride-th level
    std::size_t n_ang = 16;
    RiccatiOptions riccati{{4.0, 8.0, 16.0}, 1e-3, 1e-8};
    bool fiber_energy = true;       // false leaves F, G and errF at zero
    bool validate_levels = true;
    double validate_span = 2.0;     // levels checked on tau in [0, validate_span]
    BusemannOptions busemann;
};

struct ExhaustionCurve {
    std::string label;
    int end = 2;
    PointChart base;
    std::vector<double> t;       // level parameter tau >= 0
    std::vector<double> H;       // area of the region between the base circle and level tau
    std::vector<double> h;       // length of the level
    std::vector<double> omega;   // 2 pi minus the rotation of the level
    std::vector<double> F;
    std::vector<double> G;       // F' (fiber integral of U^2 over the level)
    std::vector<double> errH;
    std::vector<double> errF;
    double area_derivative_defect = 0.0;   // max |H' - h|
    double rotation_defect = 0.0;          // max |h' - (2 pi - omega)|
    bool levels_circular = true;
    double level_deviation = 0.0;          // max spread of b over a level row
    double equidistant_defect = 0.0;       // max |b(level tau) + tau|
    std::size_t nonconverged = 0;

    std::string to_csv() const;  // t,H,h,omega,F,errH,errF
};

ExhaustionCurve exhaustion_curves(const SurfaceSpec& spec, PointChart base, int end, double t_max,
                                  const ExhaustionOptions& options = {});

struct BolFialaResult {
    std::vector<double> r;
    std::vector<double> margin;  // h(r) - int_0^r (2 pi - omega)
    double min_margin = 0.0;
    bool pass = false;
};

BolFialaResult bol_fiala_check(const ExhaustionCurve& curve, double tol = 1e-6);

// Least squares fit y ~ alpha + beta / s.
struct TailFit {
    double alpha = 0.0;
    double beta = 0.0;
};
TailFit fit_tail(const std::vector<double>& s, const std::vector<double>& y);

struct EndOpeningOptions {
    std::vector<double> ladder{1.0, 2.0, 4.0, 8.0, 16.0, 32.0};
    double h = 0.05;
    std::size_t tail = 3;          // fits use the last `tail` rungs
    double threshold = 0.25;       // alpha <= threshold means the quantity tends to 0
};

struct EndOpeningReport {
    std::string label;
    int end = 2;
    PointChart base;
    std::vector<double> s;
    std::vector<double> loop;          // l(gamma(s_j))
    std::vector<double> ratio;         // l / s
    TailFit ratio_fit;
    bool opens_less_than_linearly = false;
    std::vector<double> area;          // A(U cap B(p0, s_j))
    std::vector<double> area_ratio;    // area / s^2
    TailFit area_fit;
    bool subquadratic = false;
    std::vector<double> sphere_length; // H^1(U cap dB(p0, s_j))
    std::vector<double> sphere_margin;
    double sphere_from = 0.0;         // half the loop at the base
    double sphere_min = 0.0;          // over s_j >= sphere_from
    double loop_at_base = 0.0;
    std::vector<double> eight_pi_margin;  // (8/pi)(s+L)L - H(s - l), NaN when s <= l
    bool eight_pi_holds = true;
    bool agreement = false;

    std::string to_json() const;
};

EndOpeningReport end_opening_report(const SurfaceSpec& spec, PointChart base, int end,
                                    const EndOpeningOptions& options = {});

struct Theorem2Options {
    double r_max = 16.0;
    double tail = 0.5;
    ExhaustionOptions exhaustion;
    EndOpeningOptions opening;
    double flat_tol = 1e-9;
};

struct Theorem2Report {
    std::string label;
    PointChart base;
    double r_max = 0.0;
    bool premise_end[2] = {false, false};
    bool circular_end[2] = {false, false};
    double ratio_alpha[2] = {0.0, 0.0};
    double bol_fiala_min[2] = {0.0, 0.0};
    double hypothesis_defect[2] = {0.0, 0.0};  // lemma hypothesis per end, via check_hypothesis
    double doubling_max_rel = 0.0;             // int K vs omega1 + omega2 - 4 pi
    double diffineq_min_margin = 0.0;
    double diffineq_budget = 0.0;
    LemmaVerdict lemma_end2;
    LemmaVerdict lemma_end1;
    double tail_coefficient[2] = {0.0, 0.0};   // alpha of H_i / r^2 ~ alpha + beta / r
    double energy_total = 0.0;                 // F0 + sup F1 + sup F2 on the window
    double energy_bound = 0.0;                 // 4 pi (coefficient 1 + coefficient 2)
    double max_abs_K = 0.0;
    std::string verdict;  // consistent-flat, premise-violated, inconclusive
    std::string detail;

    std::string to_json() const;
};

Theorem2Report theorem2_report(const SurfaceSpec& spec, PointChart base, const Theorem2Options& options = {});

// int K dA over the band [a, b], i.e. 2 pi int K f dt by composite Simpson on
// n intervals, with K from the metric kernel.
double band_curvature_integral(const SurfaceSpec& spec, double a, double b, std::size_t n = 4096);

}  // namespace hopf
