#include "doctest.h"

#include "hopfgeom/error.hpp"
#include "hopfgeom/hopf.hpp"

#include <cmath>
#include <numbers>
#include <random>

using namespace hopf;

namespace {

constexpr double kPi = std::numbers::pi;

SurfaceSpec conical() { return SurfaceSpec::rotational_plane("1.5*r - 0.5*tanh(r)", "conical"); }

}  // namespace

TEST_CASE("stable Riccati closed forms") {
    const auto flat = SurfaceSpec::flat_plane();
    const auto a = stable_riccati(flat, {{0.3, 0.1}, 1.0});
    REQUIRE(a.u_T.size() == 3);
    CHECK(a.u_T[0] == doctest::Approx(-0.25).epsilon(1e-10));
    CHECK(a.u_T[2] == doctest::Approx(-1.0 / 16).epsilon(1e-10));
    CHECK(std::abs(a.U) < 1e-10);
    CHECK(a.converged);
    CHECK(a.monotone);

    const auto hyp = SurfaceSpec::rotational_plane("sinh(r)");
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> ur(0.0, 3.0), ua(0.0, 2 * kPi);
    for (int i = 0; i < 20; ++i) {
        const auto s = stable_riccati(hyp, {{ur(rng), ua(rng)}, ua(rng)});
        CHECK(s.U == doctest::Approx(-1.0).epsilon(1e-6));
        CHECK(s.u_T[0] == doctest::Approx(-1.0 / std::tanh(4.0)).epsilon(1e-8));
        CHECK(s.converged);
    }
    const auto cusp = SurfaceSpec::rotational_cylinder("exp(-t)");
    for (double ang : {0.0, 1.0, 2.5, kPi, 4.0}) {
        const auto s = stable_riccati(cusp, {{0.5, 0.0}, ang});
        CHECK(s.U == doctest::Approx(-1.0).epsilon(1e-6));
    }
}

TEST_CASE("Riccati comparison on non-positive curvature") {
    const auto s = conical();
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> ur(0.0, 6.0), ua(0.0, 2 * kPi);
    for (int i = 0; i < 20; ++i) {
        const auto r = stable_riccati(s, {{ur(rng), ua(rng)}, ua(rng)});
        CHECK(r.U <= 1e-9);
        CHECK(r.U * r.U <= 1.0 + 1e-9);
        CHECK(r.monotone);
    }
}

TEST_CASE("premise violation on positive curvature") {
    const auto sphere = SurfaceSpec::conformal_plane("log(2/(1+x^2+y^2))");
    CHECK_THROWS_AS(stable_riccati(sphere, {{1.0, 0.0}, kPi / 2}), PremiseViolation);
}

TEST_CASE("Riccati residual") {
    CHECK(riccati_residual(SurfaceSpec::flat_plane(), {{0, 0}, 0.3}, 5.0) < 1e-9);
    const auto hyp = SurfaceSpec::rotational_plane("sinh(r)");
    CHECK(riccati_residual(hyp, {{1.0, 0.5}, 2.0}, 5.0) < 1e-6);
    const auto s = conical();
    RiccatiOptions loose;
    loose.flow_tol = 1e-6;
    RiccatiOptions tight;
    tight.flow_tol = 1e-9;
    loose.tol = tight.tol = 0.05;
    const double r1 = riccati_along(s, {{2.0, 0.0}, 2.0}, 5.0, loose).max_residual;
    const double r2 = riccati_along(s, {{2.0, 0.0}, 2.0}, 5.0, tight).max_residual;
    CHECK(r2 < r1);
    CHECK(r2 < 1e-6);
}

TEST_CASE("flow invariance of the extrapolated solution") {
    const auto s = conical();
    RiccatiOptions opt;
    opt.tol = 2e-3;
    const auto tr = riccati_along(s, {{1.5, 0.2}, 0.7}, 3.0, opt);
    for (std::size_t i = 0; i < tr.s.size(); i += 50) {
        const auto r = stable_riccati(s, tr.tangent[i], opt);
        CHECK(std::abs(r.U - tr.U[i]) < 2 * opt.tol);
    }
}

TEST_CASE("Liouville sampler statistics") {
    const auto flat = SurfaceSpec::flat_plane();
    const std::size_t n = 20000;
    const auto smp = sample_liouville(flat, Region::ball({0.5, -0.5}, 1.0), n, 42);
    double mr = 0, mr2 = 0, mc = 0;
    for (const auto& x : smp) {
        mr += x.radial;
        mr2 += x.radial * x.radial;
        mc += std::cos(x.v.angle);
    }
    mr /= n;
    mr2 /= n;
    mc /= n;
    const double sd_r = std::sqrt(mr2 - mr * mr);
    CHECK(std::abs(mr - 2.0 / 3.0) < 4 * sd_r / std::sqrt(double(n)));
    CHECK(std::abs(mc) < 4 * std::sqrt(0.5 / n));
    const double d = std::hypot(smp[7].v.base.u - 0.5, smp[7].v.base.v + 0.5);
    CHECK(d == doctest::Approx(smp[7].radial).epsilon(1e-12));

    const auto hyp = SurfaceSpec::rotational_plane("sinh(r)");
    const auto hs = sample_liouville(hyp, Region::ball({0, 0}, 2.0), n, 3);
    double inside = 0;
    for (const auto& x : hs) inside += x.radial <= 1.0;
    const double p = (std::cosh(1.0) - 1) / (std::cosh(2.0) - 1);
    CHECK(std::abs(inside / n - p) < 4 * std::sqrt(p * (1 - p) / n));

    // Same seed, same samples; sample i does not depend on n.
    const auto again = sample_liouville(hyp, Region::ball({0, 0}, 2.0), 100, 3);
    for (std::size_t i = 0; i < again.size(); ++i) {
        CHECK(again[i].radial == hs[i].radial);
        CHECK(again[i].v.angle == hs[i].v.angle);
    }

    const auto cusp = SurfaceSpec::rotational_cylinder("exp(-t)");
    const auto band = sample_liouville(cusp, Region::band(0.0, 3.0), n, 5);
    double below1 = 0;
    for (const auto& x : band) below1 += x.radial <= 1.0;
    const double q = (1 - std::exp(-1.0)) / (1 - std::exp(-3.0));
    CHECK(std::abs(below1 / n - q) < 4 * std::sqrt(q * (1 - q) / n));
    CHECK(region_area(cusp, Region::band(0.0, 3.0)) == doctest::Approx(2 * kPi * (1 - std::exp(-3.0))).epsilon(1e-6));
}

TEST_CASE("Hopf balance") {
    BalanceOptions opt;
    opt.n = 2000;
    const auto flat = hopf_balance(SurfaceSpec::flat_plane(), Region::ball({0, 0}, 3.0), opt);
    CHECK(std::abs(flat.lhs) < 1e-12);
    CHECK(std::abs(flat.curvature_term) == 0.0);
    CHECK(std::abs(flat.boundary_term) < 1e-12);
    CHECK(flat.pass);

    const auto hyp = SurfaceSpec::rotational_plane("sinh(r)");
    const auto h = hopf_balance(hyp, Region::ball({0, 0}, 2.0), opt);
    const double A = 2 * kPi * (std::cosh(2.0) - 1);
    CHECK(h.area == doctest::Approx(A).epsilon(1e-6));
    CHECK(h.lhs == doctest::Approx(2 * kPi * A).epsilon(1e-5));
    CHECK(h.curvature_term == doctest::Approx(2 * kPi * A).epsilon(1e-6));
    CHECK(std::abs(h.boundary_term) < 1e-5);
    CHECK(h.pass);

    const auto cusp = SurfaceSpec::rotational_cylinder("exp(-t)");
    const auto c = hopf_balance(cusp, Region::band(-1.0, 2.0), opt);
    CHECK(c.pass);
    CHECK(c.lhs == doctest::Approx(2 * kPi * c.area).epsilon(1e-5));

    opt.n = 4000;
    const auto k = hopf_balance(conical(), Region::ball({0, 0}, 6.0), opt);
    CAPTURE(k.to_json());
    CHECK(k.pass);
    const auto k2 = hopf_balance(conical(), Region::ball({0, 0}, 6.0), opt);
    CHECK(k.to_json() == k2.to_json());
}
