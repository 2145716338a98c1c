#include "hopfgeom/growth.hpp"

#include "hopfgeom/error.hpp"
#include "hopfgeom/io.hpp"
#include "hopfgeom/parallel.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace hopf {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::vector<double> cumulative_trapezoid(const std::vector<double>& y, double h) {
    std::vector<double> out(y.size(), 0.0);
    for (std::size_t k = 1; k < y.size(); ++k) out[k] = out[k - 1] + 0.5 * h * (y[k - 1] + y[k]);
    return out;
}

bool symmetric_about(const SurfaceSpec& spec, PointChart p) {
    return spec.family() == Family::FlatPlane || (spec.family() == Family::RotationalPlane && at_pole(spec, p));
}

void require_no_conjugate(const RadialChart& c, const char* module) {
    if (!c.truncated()) return;
    std::size_t first = c.n_theta;
    for (std::size_t j = 0; j < c.n_theta; ++j)
        if (c.conjugate[j] && (first == c.n_theta || *c.conjugate[j] < *c.conjugate[first])) first = j;
    throw PremiseViolation(module, "conjugate point at theta=" + num(c.theta(first)) +
                                       ", r=" + num(*c.conjugate[first]));
}

}  // namespace

std::vector<double> cumulative_simpson(const std::vector<double>& y, double h) {
    std::vector<double> out(y.size(), 0.0);
    if (y.size() < 3) return cumulative_trapezoid(y, h);
    // Even nodes by composite Simpson; odd nodes add the first half of the
    // next (or last) parabola.
    for (std::size_t k = 2; k < y.size(); k += 2) out[k] = out[k - 2] + h / 3.0 * (y[k - 2] + 4.0 * y[k - 1] + y[k]);
    for (std::size_t k = 1; k < y.size(); k += 2) {
        if (k + 1 < y.size())
            out[k] = out[k - 1] + h / 12.0 * (5.0 * y[k - 1] + 8.0 * y[k] - y[k + 1]);
        else
            out[k] = out[k - 1] + h / 12.0 * (-y[k - 2] + 8.0 * y[k - 1] + 5.0 * y[k]);
    }
    return out;
}

double GrowthCurve::gauss_bonnet_defect() const {
    double d = 0.0;
    for (std::size_t k = 0; k < r.size(); ++k) d = std::max(d, std::abs(Asecond[k] - (kTwoPi - omega[k])));
    return d;
}

std::string GrowthCurve::to_csv() const {
    CsvTable t{"r", "A", "L", "Asecond", "omega", "F", "errA", "errF"};
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (std::size_t k = 0; k < r.size(); ++k) {
        t.add_row({r[k], A[k], L[k], Asecond[k], omega[k], F.empty() ? nan : F[k], errA[k],
                   errF.empty() ? nan : errF[k]});
    }
    return t.str();
}

GrowthCurve ball_growth(const SurfaceSpec& spec, PointChart p, double r_max, const GrowthGrid& grid) {
    const RadialChart c = radial_chart(spec, p, r_max, grid.n_theta, grid.dr, grid.tol);
    require_no_conjugate(c, "plane_growth");

    GrowthCurve g;
    g.label = spec.label();
    g.basepoint = c.basepoint;
    const std::size_t row = c.n_r + 1;
    g.r.resize(row);
    g.L.resize(row);
    g.Asecond.resize(row);
    for (std::size_t k = 0; k < row; ++k) {
        g.r[k] = c.r(k);
        g.L[k] = c.boundary_length(k);
        g.Asecond[k] = c.boundary_length_derivative(k);
    }
    g.r.back() = r_max;

    g.A = cumulative_simpson(g.L, c.dr);
    const auto lowA = cumulative_trapezoid(g.L, c.dr);
    g.errA.resize(row);
    for (std::size_t k = 0; k < row; ++k) g.errA[k] = std::abs(g.A[k] - lowA[k]);

    g.omega.assign(row, 0.0);
    std::vector<double> kl(row);
    for (std::size_t j = 0; j < c.n_theta; ++j) {
        for (std::size_t k = 0; k < row; ++k) {
            kl[k] = c.curvature(j, k) * c.lambda(j, k);
            g.max_abs_K = std::max(g.max_abs_K, std::abs(c.curvature(j, k)));
        }
        const auto cum = cumulative_simpson(kl, c.dr);
        for (std::size_t k = 0; k < row; ++k) g.omega[k] += cum[k];
    }
    for (auto& w : g.omega) w *= kTwoPi / static_cast<double>(c.n_theta);
    return g;
}

void fiber_energy(const SurfaceSpec& spec, GrowthCurve& curve, const FiberOptions& options, const GrowthGrid& grid) {
    if (curve.r.size() < 2) throw DomainError("plane_growth", "growth curve has no intervals");
    if (options.n_ang < 4 || options.n_ang % 2 != 0)
        throw DomainError("plane_growth", "n_ang must be even and at least 4");
    const std::size_t n_r = curve.r.size() - 1;
    const double r_max = curve.r.back();
    const bool sym = symmetric_about(spec, curve.basepoint);
    const std::size_t stride_t = std::max<std::size_t>(1, options.theta_stride);
    const std::size_t n_dir = sym ? 4 : std::max<std::size_t>(4, grid.n_theta / stride_t);
    const RadialChart c = radial_chart(spec, curve.basepoint, r_max, n_dir, r_max / static_cast<double>(n_r), grid.tol);
    require_no_conjugate(c, "plane_growth");

    // Coarse radii: every r_stride-th node plus the last one.
    std::vector<std::size_t> ks;
    const std::size_t stride_r = std::max<std::size_t>(1, std::min(options.r_stride, n_r));
    for (std::size_t k = 0; k <= n_r; k += stride_r) ks.push_back(k);
    if (ks.back() != n_r) ks.push_back(n_r);
    const std::size_t m = ks.size();
    const std::size_t used_dir = sym ? 1 : n_dir;
    const std::size_t na = options.n_ang;

    // U^2 at (direction, radius, fiber angle), its convergence, and the flag.
    const std::size_t total = used_dir * m * na;
    std::vector<double> u2(total, 0.0), conv(total, 0.0);
    std::vector<char> bad(total, 0);
    parallel_for(total, [&](std::size_t idx) {
        const std::size_t a = idx % na;
        const std::size_t i = (idx / na) % m;
        const std::size_t j = idx / (na * m);
        if (ks[i] == 0) return;  // lambda = 0 on the basepoint fiber
        if (spec.family() == Family::FlatPlane) return;
        const UnitTangent t = tangent_of(spec, c.at(j, ks[i]));
        const double psi = kTwoPi * static_cast<double>(a) / static_cast<double>(na);
        const RiccatiSample s = stable_riccati(spec, {t.base, t.angle + psi}, options.riccati);
        u2[idx] = s.U * s.U;
        conv[idx] = 2.0 * std::abs(s.U) * s.convergence + s.convergence * s.convergence;
        bad[idx] = s.converged ? 0 : 1;
    });

    std::vector<double> G(m, 0.0), G_half_fiber(m, 0.0), G_half_dir(m, 0.0), G_ric(m, 0.0);
    const double dpsi = kTwoPi / static_cast<double>(na);
    for (std::size_t i = 0; i < m; ++i) {
        const std::size_t k = ks[i];
        for (std::size_t j = 0; j < used_dir; ++j) {
            double full = 0.0, half = 0.0, ric = 0.0;
            for (std::size_t a = 0; a < na; ++a) {
                const std::size_t idx = (j * m + i) * na + a;
                full += u2[idx] * dpsi;
                if (a % 2 == 0) half += u2[idx] * 2.0 * dpsi;
                ric += conv[idx] * dpsi;
            }
            const double w = sym ? curve.L[k] : c.lambda(j, k) * kTwoPi / static_cast<double>(n_dir);
            G[i] += full * w;
            G_half_fiber[i] += half * w;
            G_ric[i] += ric * w;
            if (!sym && j % 2 == 0) G_half_dir[i] += 2.0 * full * w;
        }
        if (sym) G_half_dir[i] = G[i];
    }
    std::size_t nbad = 0;
    for (char b : bad) nbad += b;
    curve.nonconverged = nbad;
    curve.F_reliable = static_cast<double>(nbad) <= options.unreliable_fraction * static_cast<double>(total);

    // F on the coarse radii, then linear in between.
    std::vector<double> coarse_r(m);
    for (std::size_t i = 0; i < m; ++i) coarse_r[i] = curve.r[ks[i]];
    std::vector<double> Fc(m, 0.0), Fc_low(m, 0.0), errG(m, 0.0);
    for (std::size_t i = 0; i < m; ++i)
        errG[i] = std::abs(G[i] - G_half_fiber[i]) + std::abs(G[i] - G_half_dir[i]) + G_ric[i];
    // Non-uniform only in the last interval; integrate it separately.
    std::size_t uniform = m;
    if (m >= 2 && ks[m - 1] - ks[m - 2] != stride_r) uniform = m - 1;
    {
        std::vector<double> head(G.begin(), G.begin() + static_cast<std::ptrdiff_t>(uniform));
        const double h = curve.r[stride_r] - curve.r[0];
        const auto s = cumulative_simpson(head, h);
        const auto t = cumulative_trapezoid(head, h);
        for (std::size_t i = 0; i < uniform; ++i) {
            Fc[i] = s[i];
            Fc_low[i] = t[i];
        }
        if (uniform < m) {
            const double hl = coarse_r[m - 1] - coarse_r[m - 2];
            Fc[m - 1] = Fc[m - 2] + 0.5 * hl * (G[m - 2] + G[m - 1]);
            Fc_low[m - 1] = Fc_low[m - 2] + 0.5 * hl * (G[m - 2] + G[m - 1]);
        }
    }
    std::vector<double> errFc(m, 0.0);
    double clamp = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        if (i > 0 && Fc[i] < Fc[i - 1]) {
            clamp += Fc[i - 1] - Fc[i];
            Fc[i] = Fc[i - 1];
        }
        double eg = 0.0;
        for (std::size_t q = 1; q <= i; ++q) eg += 0.5 * (coarse_r[q] - coarse_r[q - 1]) * (errG[q - 1] + errG[q]);
        errFc[i] = eg + std::abs(Fc[i] - Fc_low[i]) + clamp;
    }

    curve.F.assign(n_r + 1, 0.0);
    curve.G.assign(n_r + 1, 0.0);
    curve.errF.assign(n_r + 1, 0.0);
    for (std::size_t i = 0; i + 1 < m; ++i) {
        for (std::size_t k = ks[i]; k <= ks[i + 1]; ++k) {
            const double w = (curve.r[k] - coarse_r[i]) / (coarse_r[i + 1] - coarse_r[i]);
            curve.F[k] = (1.0 - w) * Fc[i] + w * Fc[i + 1];
            curve.G[k] = (1.0 - w) * G[i] + w * G[i + 1];
            curve.errF[k] = (1.0 - w) * errFc[i] + w * errFc[i + 1];
        }
    }
    if (m == 1) {
        curve.F[0] = Fc[0];
        curve.G[0] = G[0];
    }
}

Theorem1Report theorem1_from_curve(const GrowthCurve& g, const Theorem1Options& options) {
    if (g.F.empty()) throw DomainError("plane_growth", "fiber energy missing from the growth curve");
    if (!(options.tail > 0.0 && options.tail < 1.0)) throw DomainError("plane_growth", "tail must be in (0, 1)");
    Theorem1Report rep;
    rep.label = g.label;
    rep.r_max = g.r.back();
    rep.window_lo = options.tail * rep.r_max;
    rep.max_abs_K = g.max_abs_K;
    rep.gauss_bonnet_defect = g.gauss_bonnet_defect();
    rep.F_tail = g.F.back();
    rep.F_reliable = g.F_reliable;

    rep.liminf_ratio = std::numeric_limits<double>::infinity();
    int up = 0, down = 0;
    double prev = std::numeric_limits<double>::quiet_NaN();
    for (std::size_t k = 0; k < g.r.size(); ++k) {
        if (g.r[k] < rep.window_lo || g.r[k] <= 0.0) continue;
        const double ratio = g.A[k] / (kPi * g.r[k] * g.r[k]);
        rep.liminf_ratio = std::min(rep.liminf_ratio, ratio);
        if (!std::isnan(prev)) {
            if (ratio > prev + 1e-12 * std::abs(prev)) ++up;
            if (ratio < prev - 1e-12 * std::abs(prev)) ++down;
        }
        prev = ratio;
    }
    rep.tail_trend = up && down ? "mixed" : up ? "increasing" : down ? "decreasing" : "constant";

    // F <= 2 pi A'' + sqrt(2 pi F' A') - 4 pi^2 with F' = G and A' = L.
    rep.inequality_min_margin = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < g.r.size(); ++k) {
        const double root = std::sqrt(kTwoPi * std::max(0.0, g.G[k] * g.L[k]));
        const double rhs = kTwoPi * g.Asecond[k] + root - 4.0 * kPi * kPi;
        const double margin = rhs - g.F[k];
        const double gb = std::abs(g.Asecond[k] - (kTwoPi - g.omega[k]));
        const double budget = g.errF[k] + kTwoPi * gb + 1e-9 * std::max({1.0, std::abs(rhs), g.F[k]});
        rep.inequality_min_margin = std::min(rep.inequality_min_margin, margin);
        if (-margin > budget) rep.inequality_holds = false;
        rep.inequality_max_violation = std::max(rep.inequality_max_violation, -margin);
        rep.inequality_budget = std::max(rep.inequality_budget, budget);
    }

    const bool flat_like = std::abs(rep.liminf_ratio - 1.0) <= options.flat_ratio_tol && rep.F_tail <= options.flat_F_tol &&
                           rep.max_abs_K <= options.flat_K_tol;
    if (flat_like) {
        rep.verdict = "consistent-flat";
    } else if (rep.liminf_ratio > 1.0 + options.flat_ratio_tol) {
        rep.verdict = "strictly-above-1";
    } else {
        rep.verdict = "inconclusive";
        rep.detail = "tail ratio not above 1 on a non-flat metric within the window";
    }
    return rep;
}

Theorem1Report theorem1_report(const SurfaceSpec& spec, PointChart p, double r_max, const Theorem1Options& options) {
    try {
        GrowthCurve g = ball_growth(spec, p, r_max, options.grid);
        fiber_energy(spec, g, options.fiber, options.grid);
        return theorem1_from_curve(g, options);
    } catch (const PremiseViolation& e) {
        Theorem1Report rep;
        rep.label = spec.label();
        rep.r_max = r_max;
        rep.window_lo = options.tail * r_max;
        rep.verdict = "premise-violated";
        rep.detail = e.what();
        const double nan = std::numeric_limits<double>::quiet_NaN();
        rep.liminf_ratio = rep.F_tail = rep.inequality_min_margin = nan;
        return rep;
    }
}

std::string Theorem1Report::to_json() const {
    nlohmann::ordered_json j;
    j["label"] = label;
    j["r_max"] = r_max;
    j["window"] = {window_lo, r_max};
    j["liminf_ratio"] = liminf_ratio;
    j["tail_trend"] = tail_trend;
    j["F_tail"] = F_tail;
    j["F_reliable"] = F_reliable;
    j["max_abs_K"] = max_abs_K;
    j["gauss_bonnet_defect"] = gauss_bonnet_defect;
    j["inequality_min_margin"] = inequality_min_margin;
    j["inequality_max_violation"] = inequality_max_violation;
    j["inequality_budget"] = inequality_budget;
    j["inequality_holds"] = inequality_holds;
    j["verdict"] = verdict;
    j["detail"] = detail;
    return j.dump(2);
}

}  // namespace hopf
