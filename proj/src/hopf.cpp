#include "hopfgeom/hopf.hpp"

#include "hopfgeom/error.hpp"
#include "hopfgeom/io.hpp"
#include "hopfgeom/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "json.hpp"

namespace hopf {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * kPi;

void check_ladder(const RiccatiOptions& o) {
    if (o.ladder.empty()) throw DomainError("hopf_machinery", "empty horizon ladder");
    for (std::size_t i = 0; i < o.ladder.size(); ++i) {
        if (!(o.ladder[i] > 0.0) || (i && o.ladder[i] <= o.ladder[i - 1]))
            throw DomainError("hopf_machinery", "horizon ladder must be positive and increasing");
    }
    if (!(o.tol > 0.0) || !(o.flow_tol > 0.0)) throw DomainError("hopf_machinery", "tolerances must be positive");
}

// Backward Jacobi solve from the state at gamma(T): returns u_T at the end of
// the reversed path (= gamma(0)). Samples, if requested, are in reversed
// arc length sigma = T - s.
FlowRun backward(const SurfaceSpec& spec, const FlowState& at_T, double T, std::span<const double> sigma,
                 double flow_tol) {
    FlowState b = reversed(at_T);
    b.s = 0.0;
    b.J = 0.0;
    b.dJ = 1.0;
    FlowOptions opt;
    opt.tol = flow_tol;
    opt.track_jacobi_zero = true;
    opt.zero_tol = 1e-10;
    FlowRun run = integrate_flow(spec, b, T, sigma, opt);
    if (run.first_zero)
        throw PremiseViolation("hopf_machinery", "conjugate point along the geodesic: the Jacobi field vanishing at "
                                                 "horizon T=" + num(T) + " vanishes again at s=" +
                                                     num(T - *run.first_zero));
    return run;
}

double u_from(const FlowState& st) {
    if (!(std::abs(st.J) > 1e-300)) throw NumericalError("hopf_machinery", "Jacobi field underflow at s=0");
    // reversed parametrisation: d/ds = -d/dsigma
    return -st.dJ / st.J;
}

double extrapolate(double T1, double u1, double T2, double u2) { return (T2 * u2 - T1 * u1) / (T2 - T1); }

void mix_seed(std::uint64_t seed, std::uint64_t index, std::mt19937_64& out) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
    out.seed(seq);
}

// Inverse CDF of a piecewise-linear density on one interval: smallest x in
// [0, h] with a x + (b - a) x^2 / (2h) = target.
double invert_linear(double a, double b, double h, double target) {
    const double c = (b - a) / (2.0 * h);
    double x;
    if (std::abs(c) < 1e-14 * (std::abs(a) + 1e-300) / h) {
        x = a > 0 ? target / a : 0.0;
    } else {
        const double disc = std::max(0.0, a * a + 4.0 * c * target);
        x = (2.0 * target) / (a + std::sqrt(disc));
    }
    return std::clamp(x, 0.0, h);
}

struct BallTable {
    RadialChart chart;
    std::vector<double> row_cum;  // per row, n_r + 1 cumulative weights
    std::vector<double> cell_cum; // n_theta + 1
    double area = 0.0;
};

BallTable ball_table(const SurfaceSpec& spec, const Region& q, const SamplerGrid& grid) {
    if (!spec.is_plane()) throw DomainError("hopf_machinery", "metric balls are supported on planes only");
    if (!(q.radius > 0.0)) throw DomainError("hopf_machinery", "ball radius must be positive");
    BallTable t{radial_chart(spec, q.center, q.radius, grid.n_theta, q.radius / static_cast<double>(grid.n_r)), {}, {}, 0.0};
    const RadialChart& c = t.chart;
    if (c.truncated()) {
        for (std::size_t j = 0; j < c.n_theta; ++j)
            if (c.conjugate[j])
                throw PremiseViolation("hopf_machinery", "conjugate point inside the ball at theta=" + num(c.theta(j)) +
                                                             ", r=" + num(*c.conjugate[j]));
    }
    const std::size_t row = c.n_r + 1;
    t.row_cum.assign(c.n_theta * row, 0.0);
    t.cell_cum.assign(c.n_theta + 1, 0.0);
    for (std::size_t j = 0; j < c.n_theta; ++j) {
        double acc = 0.0;
        for (std::size_t k = 0; k < c.n_r; ++k) {
            acc += 0.5 * (c.lambda(j, k) + c.lambda(j, k + 1)) * c.dr;
            t.row_cum[j * row + k + 1] = acc;
        }
        t.cell_cum[j + 1] = t.cell_cum[j] + acc;
    }
    t.area = t.cell_cum.back() * kTwoPi / static_cast<double>(c.n_theta);
    return t;
}

struct BandTable {
    double t0 = 0.0, dt = 0.0;
    std::size_t n = 0;
    std::vector<double> f;
    std::vector<double> cum;
    double area = 0.0;
};

BandTable band_table(const SurfaceSpec& spec, const Region& q, const SamplerGrid& grid) {
    if (!spec.is_cylinder()) throw DomainError("hopf_machinery", "bands are supported on cylinders only");
    if (!(q.t1 > q.t0)) throw DomainError("hopf_machinery", "band needs t0 < t1");
    BandTable b;
    b.n = grid.n_r;
    b.t0 = q.t0;
    b.dt = (q.t1 - q.t0) / static_cast<double>(b.n);
    b.f.resize(b.n + 1);
    b.cum.assign(b.n + 1, 0.0);
    for (std::size_t k = 0; k <= b.n; ++k) b.f[k] = spec.profile(q.t0 + b.dt * static_cast<double>(k)).f;
    for (std::size_t k = 0; k < b.n; ++k) b.cum[k + 1] = b.cum[k] + 0.5 * (b.f[k] + b.f[k + 1]) * b.dt;
    b.area = kTwoPi * b.cum.back();
    return b;
}

std::size_t bucket(const double* cum, std::size_t cells, double target) {
    const double* it = std::upper_bound(cum, cum + cells + 1, target);
    std::size_t k = static_cast<std::size_t>(it - cum);
    k = k == 0 ? 0 : k - 1;
    return std::min(k, cells - 1);
}

// Base point and outward radial frame angle at polar coordinates (r, theta)
// about the ball's centre.
struct PolarPoint {
    PointChart base;
    double radial_angle = 0.0;
    double lambda = 0.0;
};

PolarPoint polar_point(const SurfaceSpec& spec, PointChart centre, double r, double theta, double flow_tol) {
    if (spec.family() == Family::FlatPlane) {
        return {{centre.u + r * std::cos(theta), centre.v + r * std::sin(theta)}, theta, r};
    }
    if (spec.family() == Family::RotationalPlane && at_pole(spec, centre)) {
        return {canonical(spec, {r, theta}), 0.0, spec.profile(r).f};
    }
    FlowOptions opt;
    opt.tol = flow_tol;
    const FlowState init = initial_state(spec, {centre, theta}, 0.0, 1.0);
    const FlowRun run = integrate_flow(spec, init, r, {}, opt);
    const UnitTangent t = tangent_of(spec, run.end);
    return {t.base, t.angle, run.end.J};
}

bool symmetric_ball(const SurfaceSpec& spec, const Region& q) {
    return spec.family() == Family::FlatPlane ||
           (spec.family() == Family::RotationalPlane && at_pole(spec, q.center));
}

}  // namespace

double unit_uniform(std::uint64_t bits) { return static_cast<double>(bits >> 11) * 0x1.0p-53; }

RiccatiSample stable_riccati(const SurfaceSpec& spec, UnitTangent v, const RiccatiOptions& options) {
    check_ladder(options);
    RiccatiSample out;
    out.v = v;
    out.horizon = options.ladder.back();
    const FlowState init = initial_state(spec, v, 0.0, 1.0);
    FlowOptions fwd;
    fwd.tol = options.flow_tol;
    const FlowRun ahead = integrate_flow(spec, init, options.ladder.back(), options.ladder, fwd);
    out.u_T.reserve(options.ladder.size());
    for (std::size_t k = 0; k < options.ladder.size(); ++k) {
        const FlowRun back = backward(spec, ahead.samples[k], options.ladder[k], {}, options.flow_tol);
        out.u_T.push_back(u_from(back.end));
        if (k && out.u_T[k] < out.u_T[k - 1] - 1e-9) out.monotone = false;
    }
    const auto& L = options.ladder;
    const auto& u = out.u_T;
    const std::size_t m = L.size();
    if (m == 1) {
        out.U = u[0];
        out.convergence = std::numeric_limits<double>::infinity();
    } else if (m == 2) {
        out.U = extrapolate(L[0], u[0], L[1], u[1]);
        out.convergence = std::abs(u[1] - u[0]);
    } else {
        out.U = extrapolate(L[m - 2], u[m - 2], L[m - 1], u[m - 1]);
        out.convergence = std::abs(out.U - extrapolate(L[m - 3], u[m - 3], L[m - 2], u[m - 2]));
    }
    out.converged = out.convergence < options.tol;
    return out;
}

RiccatiTrack riccati_along(const SurfaceSpec& spec, UnitTangent v, double s_max, const RiccatiOptions& options) {
    check_ladder(options);
    if (!(s_max > 0.0)) throw DomainError("hopf_machinery", "s_max must be positive");
    const double top = options.ladder.back();
    const double low = options.ladder.size() > 1 ? options.ladder[options.ladder.size() - 2] : 0.5 * top;
    const double H1 = top + s_max, H2 = low + s_max;
    const auto m = static_cast<std::size_t>(std::max(16.0, std::ceil(s_max / 0.01)));
    const double ds = s_max / static_cast<double>(m);

    const FlowState init = initial_state(spec, v, 0.0, 1.0);
    FlowOptions fwd;
    fwd.tol = options.flow_tol;
    const std::vector<double> ends{H2, H1};
    const FlowRun ahead = integrate_flow(spec, init, H1, ends, fwd);

    auto solve = [&](const FlowState& at_end, double H) {
        std::vector<double> sigma(m + 1);
        for (std::size_t i = 0; i <= m; ++i) sigma[i] = H - ds * static_cast<double>(m - i);
        sigma[m] = H;
        return backward(spec, at_end, H, sigma, options.flow_tol);
    };
    const FlowRun b1 = solve(ahead.samples[1], H1);
    const FlowRun b2 = solve(ahead.samples[0], H2);

    RiccatiTrack tr;
    tr.s.resize(m + 1);
    tr.u.resize(m + 1);
    tr.U.resize(m + 1);
    tr.K.resize(m + 1);
    tr.point.resize(m + 1);
    tr.tangent.resize(m + 1);
    for (std::size_t i = 0; i <= m; ++i) {
        // sample index m - i of the backward run sits at s = i * ds
        const FlowState& a = b1.samples[m - i];
        const FlowState& b = b2.samples[m - i];
        const double s = ds * static_cast<double>(i);
        tr.s[i] = s;
        tr.u[i] = u_from(a);
        tr.U[i] = extrapolate(H2 - s, u_from(b), H1 - s, tr.u[i]);
        tr.point[i] = canonical(spec, a.point());
        tr.tangent[i] = tangent_of(spec, reversed(a));
        tr.K[i] = gauss_curvature(spec, a.point());
    }
    // Fourth-order centred differences; the two samples next to each end are
    // only used as stencil points.
    for (std::size_t i = 2; i + 2 <= m; ++i) {
        const double du = (8.0 * (tr.u[i + 1] - tr.u[i - 1]) - (tr.u[i + 2] - tr.u[i - 2])) / (12.0 * ds);
        tr.max_residual = std::max(tr.max_residual, std::abs(du + tr.u[i] * tr.u[i] + tr.K[i]));
    }
    return tr;
}

double riccati_residual(const SurfaceSpec& spec, UnitTangent v, double s_max, const RiccatiOptions& options) {
    const RiccatiSample r = stable_riccati(spec, v, options);
    if (!r.converged)
        throw DomainError("hopf_machinery", "Riccati sample did not converge (estimate " + num(r.convergence) + ")");
    return riccati_along(spec, v, s_max, options).max_residual;
}

std::string Region::describe() const {
    if (kind == Kind::Ball) return "ball(center=(" + num(center.u) + "," + num(center.v) + "), r=" + num(radius) + ")";
    return "band(t0=" + num(t0) + ", t1=" + num(t1) + ")";
}

double region_area(const SurfaceSpec& spec, const Region& q, const SamplerGrid& grid) {
    return q.kind == Region::Kind::Ball ? ball_table(spec, q, grid).area : band_table(spec, q, grid).area;
}

std::vector<LiouvilleSample> sample_liouville(const SurfaceSpec& spec, const Region& q, std::size_t n,
                                              std::uint64_t seed, const SamplerGrid& grid) {
    std::vector<LiouvilleSample> out(n);
    if (q.kind == Region::Kind::Ball) {
        const BallTable t = ball_table(spec, q, grid);
        const RadialChart& c = t.chart;
        const std::size_t row = c.n_r + 1;
        const double dth = kTwoPi / static_cast<double>(c.n_theta);
        parallel_for(n, [&](std::size_t i) {
            std::mt19937_64 rng;
            mix_seed(seed, i, rng);
            const double x1 = unit_uniform(rng()), x2 = unit_uniform(rng());
            const double x3 = unit_uniform(rng()), x4 = unit_uniform(rng());
            const std::size_t j = bucket(t.cell_cum.data(), c.n_theta, x1 * t.cell_cum.back());
            double theta = c.theta(j) + (x2 - 0.5) * dth;
            const double* cum = t.row_cum.data() + j * row;
            const double target = x3 * cum[c.n_r];
            const std::size_t k = bucket(cum, c.n_r, target);
            const double r = c.r(k) + invert_linear(c.lambda(j, k), c.lambda(j, k + 1), c.dr, target - cum[k]);
            theta = std::fmod(theta + kTwoPi, kTwoPi);
            const PolarPoint pp = polar_point(spec, q.center, r, theta, 1e-10);
            out[i] = {{pp.base, kTwoPi * x4}, r, theta};
        });
    } else {
        const BandTable b = band_table(spec, q, grid);
        parallel_for(n, [&](std::size_t i) {
            std::mt19937_64 rng;
            mix_seed(seed, i, rng);
            const double x1 = unit_uniform(rng()), x2 = unit_uniform(rng()), x3 = unit_uniform(rng());
            const double target = x1 * b.cum.back();
            const std::size_t k = bucket(b.cum.data(), b.n, target);
            const double t = b.t0 + b.dt * static_cast<double>(k) + invert_linear(b.f[k], b.f[k + 1], b.dt, target - b.cum[k]);
            const double theta = kTwoPi * x2;
            out[i] = {{canonical(spec, {t, theta}), kTwoPi * x3}, t, theta};
        });
    }
    return out;
}

BalanceReport hopf_balance(const SurfaceSpec& spec, const Region& q, const BalanceOptions& options) {
    if (options.n < 2) throw DomainError("hopf_machinery", "need at least two Monte Carlo samples");
    if (options.n_fiber < 4 || options.n_fiber % 2) throw DomainError("hopf_machinery", "fiber nodes must be even, >= 4");
    check_ladder(options.riccati);
    BalanceReport rep;
    rep.region = q.describe();
    rep.n = options.n;
    rep.seed = options.seed;

    // Deterministic pieces: area, curvature integral, boundary flux.
    double curv = 0.0, curv_coarse = 0.0;
    struct BoundaryPoint {
        PointChart base;
        double out_angle;
        double weight;  // arc-length weight
    };
    std::vector<BoundaryPoint> boundary;
    if (q.kind == Region::Kind::Ball) {
        const BallTable t = ball_table(spec, q, options.grid);
        const RadialChart& c = t.chart;
        rep.area = t.area;
        for (int pass = 0; pass < 2; ++pass) {
            const std::size_t sj = pass ? 2 : 1, sk = pass ? 2 : 1;
            double total = 0.0;
            for (std::size_t j = 0; j < c.n_theta; j += sj) {
                double rowsum = 0.0;
                for (std::size_t k = 0; k + sk <= c.n_r; k += sk)
                    rowsum += 0.5 * (c.curvature(j, k) * c.lambda(j, k) + c.curvature(j, k + sk) * c.lambda(j, k + sk)) *
                              c.dr * static_cast<double>(sk);
                total += rowsum;
            }
            total *= kTwoPi * static_cast<double>(sj) / static_cast<double>(c.n_theta);
            (pass ? curv_coarse : curv) = total;
        }
        if (symmetric_ball(spec, q)) {
            const PolarPoint pp = polar_point(spec, q.center, q.radius, 0.0, options.riccati.flow_tol);
            boundary.push_back({pp.base, pp.radial_angle, c.boundary_length(c.n_r)});
        } else {
            const std::size_t nb = options.n_theta_boundary;
            boundary.resize(nb);
            parallel_for(nb, [&](std::size_t j) {
                const double th = kTwoPi * static_cast<double>(j) / static_cast<double>(nb);
                const PolarPoint pp = polar_point(spec, q.center, q.radius, th, options.riccati.flow_tol);
                boundary[j] = {pp.base, pp.radial_angle, pp.lambda * kTwoPi / static_cast<double>(nb)};
            });
        }
    } else {
        const BandTable b = band_table(spec, q, options.grid);
        rep.area = b.area;
        // integral of K f = -f'' over [t0, t1], times 2 pi; the coarse pass is
        // the trapezoid rule on the K f samples.
        const WarpProfile p0 = spec.profile(q.t0), p1 = spec.profile(q.t1);
        curv = -kTwoPi * (p1.df - p0.df);
        double trap = 0.0;
        for (std::size_t k = 0; k < b.n; ++k) {
            const double ta = b.t0 + b.dt * static_cast<double>(k), tb = ta + b.dt;
            trap += 0.5 * (-spec.profile(ta).ddf - spec.profile(tb).ddf) * b.dt;
        }
        curv_coarse = kTwoPi * trap;
        boundary.push_back({canonical(spec, {q.t1, 0.0}), 0.0, kTwoPi * p1.f});
        boundary.push_back({canonical(spec, {q.t0, 0.0}), kPi, kTwoPi * p0.f});
    }
    rep.curvature_term = -kTwoPi * curv;

    const std::size_t nf = options.n_fiber;
    const std::size_t nbf = boundary.size() * nf;
    std::vector<double> bU(nbf), bconv(nbf);
    std::vector<std::uint8_t> bok(nbf);
    parallel_for(nbf, [&](std::size_t idx) {
        const BoundaryPoint& bp = boundary[idx / nf];
        const double psi = kTwoPi * static_cast<double>(idx % nf) / static_cast<double>(nf);
        const RiccatiSample r = stable_riccati(spec, {bp.base, bp.out_angle + psi}, options.riccati);
        bU[idx] = r.U;
        bconv[idx] = r.convergence;
        bok[idx] = r.converged;
    });
    double bterm = 0.0, bterm_half = 0.0, bbudget = 0.0;
    for (std::size_t idx = 0; idx < nbf; ++idx) {
        const BoundaryPoint& bp = boundary[idx / nf];
        const std::size_t m = idx % nf;
        const double psi = kTwoPi * static_cast<double>(m) / static_cast<double>(nf);
        const double c = -std::cos(psi);
        const double w = bp.weight * kTwoPi / static_cast<double>(nf);
        bterm += w * bU[idx] * c;
        if (m % 2 == 0) bterm_half += 2.0 * w * bU[idx] * c;
        bbudget += w * std::abs(c) * (std::isfinite(bconv[idx]) ? bconv[idx] : 0.0);
        if (!bok[idx]) ++rep.nonconverged;
    }
    rep.boundary_term = bterm;

    // Monte Carlo left-hand side.
    const std::vector<LiouvilleSample> samples = sample_liouville(spec, q, options.n, options.seed, options.grid);
    std::vector<double> U2(options.n), lconv(options.n);
    std::vector<std::uint8_t> ok(options.n);
    parallel_for(options.n, [&](std::size_t i) {
        const RiccatiSample r = stable_riccati(spec, samples[i].v, options.riccati);
        U2[i] = r.U * r.U;
        lconv[i] = 2.0 * std::abs(r.U) * (std::isfinite(r.convergence) ? r.convergence : 0.0);
        ok[i] = r.converged;
    });
    double mean = 0.0, mconv = 0.0;
    for (std::size_t i = 0; i < options.n; ++i) {
        mean += U2[i];
        mconv += lconv[i];
        if (!ok[i]) ++rep.nonconverged;
    }
    mean /= static_cast<double>(options.n);
    mconv /= static_cast<double>(options.n);
    double var = 0.0;
    for (double x : U2) var += (x - mean) * (x - mean);
    var /= static_cast<double>(options.n - 1);
    const double mass = kTwoPi * rep.area;
    rep.lhs = mass * mean;
    rep.stderr_lhs = mass * std::sqrt(var / static_cast<double>(options.n));

    rep.quadrature_budget = kTwoPi * std::abs(curv - curv_coarse) + std::abs(bterm - bterm_half);
    rep.riccati_budget = mass * mconv + bbudget;
    rep.discrepancy = rep.lhs - rep.curvature_term - rep.boundary_term;
    rep.budget = 3.0 * (rep.stderr_lhs + rep.quadrature_budget + rep.riccati_budget);
    rep.pass = std::abs(rep.discrepancy) <= rep.budget;
    return rep;
}

std::string BalanceReport::to_json() const {
    nlohmann::ordered_json j;
    j["region"] = region;
    j["area"] = area;
    j["lhs"] = lhs;
    j["curvature_term"] = curvature_term;
    j["boundary_term"] = boundary_term;
    j["discrepancy"] = discrepancy;
    j["stderr"] = stderr_lhs;
    j["quadrature_budget"] = quadrature_budget;
    j["riccati_budget"] = riccati_budget;
    j["budget"] = budget;
    j["n"] = n;
    j["seed"] = seed;
    j["nonconverged"] = nonconverged;
    j["verdict"] = pass ? "pass" : "fail";
    return j.dump(2) + "\n";
}

}  // namespace hopf
