#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace hopf {

// Piecewise-linear interpolant of samples on an increasing grid. Outside the
// grid it is extended by constants.
class PiecewiseLinear {
public:
    PiecewiseLinear(std::vector<double> x, std::vector<double> y);

    double operator()(double t) const;
    double slope(std::size_t cell) const;
    std::size_t cells() const { return x_.size() - 1; }
    const std::vector<double>& x() const { return x_; }
    const std::vector<double>& y() const { return y_; }

    // Breakpoints of the grid strictly inside (q, r), with q and r added.
    std::vector<double> breakpoints(double q, double r) const;

private:
    std::vector<double> x_;
    std::vector<double> y_;
};

struct IteratedIntegral {
    double nested = 0.0;    // int_q^r int_q^rho (F(t) - F(q)) dt drho
    double weighted = 0.0;  // int_q^r (r - rho) (F(rho) - F(q)) drho
};

// Both forms, each exact for the piecewise-linear surrogate. Throws
// DomainError unless q < r; InvariantError if they differ beyond 1e-10 relative.
IteratedIntegral iterated_integral(const PiecewiseLinear& F, double q, double r);

// int_q^r (int_q^rho f) drho and int_q^r (r - rho) f(rho) drho for a
// piecewise-linear f (f itself, not shifted).
IteratedIntegral nested_and_weighted(const PiecewiseLinear& f, double q, double r);

struct CauchySchwarzStep {
    double lhs = 0.0;  // int_q^r (r - rho) sqrt(F' A') drho
    double rhs = 0.0;  // sqrt(2 I(q, r) A(r))
    double margin = 0.0;
};

// F and A must share the grid. Throws InvariantError on a negative slope
// beyond round-off.
CauchySchwarzStep check_cauchy_schwarz_step(const PiecewiseLinear& F, const PiecewiseLinear& A, double q, double r);

// max over grid nodes of int_0^r int_0^rho R - A(r). R is extended by its
// first value on [0, r_1] when the grid starts after 0.
double check_hypothesis(const PiecewiseLinear& A, const PiecewiseLinear& R);

struct OdeLemmaData {
    std::vector<double> r;
    std::vector<double> A;
    std::vector<double> F;
    std::vector<double> R;
    double a = 0.0;
    double b = 0.0;
    double c = 0.0;

    // Throws InvariantError on a broken invariant.
    void validate() const;
};

OdeLemmaData load_lemma_csv(const std::filesystem::path& path, double a, double b, double c);
OdeLemmaData parse_lemma_csv(std::string_view text, double a, double b, double c);

struct LemmaOptions {
    double tail = 0.5;
    double tol = 1e-9;                // absolute slack, scaled by max(1, magnitude)
    double divergence_factor = 2.0;   // increasing A/r^2 growing by this factor reads as unbounded
};

struct LemmaVerdict {
    double sup_F = 0.0;
    double liminf_ratio = 0.0;   // min of A / r^2 over the tail window
    double window_lo = 0.0;
    double window_hi = 0.0;
    std::string tail_trend;
    double bound = 0.0;          // 2 a liminf + c
    double margin = 0.0;         // bound - sup F
    double hypothesis_defect = 0.0;
    double inequality_min_margin = 0.0;  // min of a R + b sqrt(F'A') + c - F at cell ends
    bool hypothesis_ok = false;
    bool inequality_ok = false;
    bool bound_is_lower_estimate = false;  // A / r^2 still increasing across the window
    bool diverging = false;
    std::string bound_display;  // "> x" for a lower estimate
    std::string status;  // "pass", "fail", "inconclusive", "precondition-failed"
    std::string detail;

    std::string to_json() const;
};

LemmaVerdict sharp_bound(const OdeLemmaData& data, const LemmaOptions& options = {});

}  // namespace hopf
