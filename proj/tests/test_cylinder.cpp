#include "doctest.h"

#include "hopfgeom/cylinder.hpp"
#include "hopfgeom/error.hpp"

#include <cmath>
#include <numbers>

using namespace hopf;

namespace {

constexpr double kPi = std::numbers::pi;

}  // namespace

TEST_CASE("ray points") {
    const auto plane = SurfaceSpec::flat_plane();
    const auto q = ray_point(plane, {{1, 2}, kPi / 2}, 3.0);
    CHECK(q.u == doctest::Approx(1.0));
    CHECK(q.v == doctest::Approx(5.0));

    const auto cyl = SurfaceSpec::rotational_cylinder("exp(-t)");
    CHECK(ray_point(cyl, Ray::axial({0.5, 1.0}, 2), 2.0).u == doctest::Approx(2.5));
    CHECK(ray_point(cyl, Ray::axial({0.5, 1.0}, 1), 2.0).u == doctest::Approx(-1.5));
    CHECK(ray_point(cyl, Ray::axial({0.5, 1.0}, 1), 2.0).v == doctest::Approx(1.0));

    // Off-axis ray on the flat cylinder: a helix, t grows like s cos(angle).
    const auto fc = SurfaceSpec::flat_cylinder(1.0);
    const auto h = ray_point(fc, {{0, 0}, kPi / 3}, 2.0);
    CHECK(h.u == doctest::Approx(1.0).epsilon(1e-9));

    CHECK_THROWS_AS(ray_point(plane, {{0, 0}, 0}, -1.0), DomainError);
}

TEST_CASE("Busemann values against closed forms") {
    const auto fc = SurfaceSpec::flat_cylinder(1.0);
    const auto b = busemann_value(fc, Ray::axial({0, 0}, 2), {3, 1});
    CHECK(std::abs(b.value + 3.0) < 0.05);
    CHECK(b.monotone);
    for (double d : b.ray_defect) CHECK(d < 0.5);

    const auto plane = SurfaceSpec::flat_plane();
    const auto bp = busemann_value(plane, {{0, 0}, 0.0}, {1, 2});
    CHECK(std::abs(bp.value + 1.0) < 0.05);

    // Hyperbolic plane: b = log(cosh d - sinh d cos psi).
    const auto hyp = SurfaceSpec::rotational_plane("sinh(r)");
    BusemannOptions opt;
    opt.ladder = {2.0, 3.0, 4.0};
    opt.h = 0.1;
    opt.pad = 1.0;
    const auto bh = busemann_value(hyp, {{0, 0}, 0.0}, {1, 2}, opt);
    const double oracle = std::log(std::cosh(1.0) - std::sinh(1.0) * std::cos(2.0));
    CHECK(std::abs(bh.value - oracle) < 0.05);
}

TEST_CASE("Busemann levels on the flat cylinder are the coordinate circles") {
    const auto fc = SurfaceSpec::flat_cylinder(1.0);
    const auto bf = busemann_field(fc, Ray::axial({0, 0}, 2), 0.0, 2.0);
    CHECK(bf.nt == 41);
    double spread = 0.0, eq = 0.0;
    for (std::size_t i = 0; i < bf.nt; ++i)
        for (std::size_t j = 0; j < bf.ntheta; ++j) {
            spread = std::max(spread, std::abs(bf.at(i, j) - bf.at(i, 0)));
            eq = std::max(eq, std::abs(bf.at(i, j) + bf.t(i)));
        }
    CHECK(spread < 0.05);
    CHECK(eq < 0.05);
    CHECK(bf.nonmonotone == 0);
}

TEST_CASE("exhaustion of the cusp end") {
    const auto cusp = SurfaceSpec::rotational_cylinder("exp(-t)");
    const auto c = exhaustion_curves(cusp, {0, 0}, 2, 8.0);
    REQUIRE(c.t.size() == 513);
    for (std::size_t k = 0; k < c.t.size(); k += 37) {
        const double t = c.t[k];
        CHECK(std::abs(c.h[k] - 2 * kPi * std::exp(-t)) < 1e-12);
        CHECK(std::abs(c.H[k] - 2 * kPi * (1 - std::exp(-t))) < 1e-4);
        CHECK(std::abs(c.omega[k] - 2 * kPi * (1 + std::exp(-t))) < 1e-12);
        CHECK(c.errH[k] >= 0.0);
    }
    CHECK(c.area_derivative_defect < 1e-5);
    CHECK(c.rotation_defect < 1e-5);
    CHECK(c.levels_circular);
    CHECK(c.equidistant_defect < 0.05);
    CHECK(c.nonconverged == 0);

    // K = -1 gives U^2 = 1 in every direction, so F = 2 pi H.
    for (std::size_t k = 0; k < c.t.size(); k += 64) {
        CAPTURE(c.t[k]);
        CHECK(std::abs(c.F[k] - 2 * kPi * c.H[k]) <= c.errF[k] + 1e-9);
        CHECK(std::abs(c.F[k] - 2 * kPi * c.H[k]) <= 5e-3 * std::max(1.0, 2 * kPi * c.H[k]));
    }

    const auto csv = c.to_csv();
    CHECK(csv.rfind("t,H,h,omega,F,errH,errF\n", 0) == 0);

    CHECK_THROWS_AS(exhaustion_curves(cusp, {0, 0}, 3, 8.0), DomainError);
    CHECK_THROWS_AS(exhaustion_curves(SurfaceSpec::flat_plane(), {0, 0}, 2, 8.0), DomainError);
}

TEST_CASE("flaring end has non-circular Busemann levels") {
    const auto cusp = SurfaceSpec::rotational_cylinder("exp(-t)");
    ExhaustionOptions opt;
    opt.n_t = 128;
    const auto c = exhaustion_curves(cusp, {0, 0}, 1, 4.0, opt);
    CHECK_FALSE(c.levels_circular);
}

TEST_CASE("Bol-Fiala margin") {
    const auto fc = SurfaceSpec::flat_cylinder(2.0);
    ExhaustionOptions opt;
    opt.validate_levels = false;
    const auto flat = bol_fiala_check(exhaustion_curves(fc, {0, 0}, 2, 8.0, opt));
    CHECK(flat.pass);
    CHECK(flat.min_margin == doctest::Approx(4 * kPi).epsilon(1e-12));

    // Rotational cylinders: the margin is the base circle length.
    const auto cusp = SurfaceSpec::rotational_cylinder("exp(-t)");
    for (int end : {1, 2}) {
        const auto r = bol_fiala_check(exhaustion_curves(cusp, {0.3, 0}, end, 6.0, opt));
        CHECK(r.pass);
        CHECK(std::abs(r.min_margin - 2 * kPi * std::exp(-0.3)) < 1e-6);
    }
}

TEST_CASE("doubling identity") {
    const auto cusp = SurfaceSpec::rotational_cylinder("exp(-t)");
    ExhaustionOptions opt;
    opt.validate_levels = false;
    opt.n_t = 64;
    const auto c1 = exhaustion_curves(cusp, {0, 0}, 1, 1.0, opt);
    const auto c2 = exhaustion_curves(cusp, {0, 0}, 2, 2.0, opt);
    const double integral = band_curvature_integral(cusp, -1.0, 2.0);
    CHECK(std::abs(integral + 2 * kPi * (std::exp(1.0) - std::exp(-2.0))) < 1e-9);
    CHECK(std::abs(integral - (c1.omega.back() + c2.omega.back() - 4 * kPi)) < 1e-6);

    const auto bump = SurfaceSpec::rotational_cylinder("cosh(t)");
    const double ib = band_curvature_integral(bump, -1.5, 0.5);
    CHECK(std::abs(ib + 2 * kPi * (std::sinh(0.5) + std::sinh(1.5))) < 1e-9);
}

TEST_CASE("tail fit") {
    const std::vector<double> s{4, 8, 16, 32};
    std::vector<double> y;
    for (double x : s) y.push_back(0.7 - 3.0 / x);
    const auto f = fit_tail(s, y);
    CHECK(f.alpha == doctest::Approx(0.7).epsilon(1e-12));
    CHECK(f.beta == doctest::Approx(-3.0).epsilon(1e-12));
    CHECK_THROWS_AS(fit_tail({1.0}, {1.0}), DomainError);
}

TEST_CASE("end opening diagnostics") {
    const auto fc = SurfaceSpec::flat_cylinder(1.0);
    for (int end : {1, 2}) {
        const auto r = end_opening_report(fc, {0, 0}, end);
        CHECK(r.opens_less_than_linearly);
        CHECK(r.subquadratic);
        CHECK(r.agreement);
        CHECK(r.sphere_from == doctest::Approx(kPi).epsilon(1e-3));
        CHECK(r.sphere_min >= -1e-6);
        CHECK(r.eight_pi_holds);
        for (double l : r.loop) CHECK(std::abs(l - 2 * kPi) < 1e-6);
    }

    const auto cusp = SurfaceSpec::rotational_cylinder("exp(-t)");
    const auto e2 = end_opening_report(cusp, {0, 0}, 2);
    CHECK(e2.opens_less_than_linearly);
    CHECK(e2.subquadratic);
    CHECK(e2.agreement);
    CHECK(e2.sphere_min >= -1e-6);
    CHECK(e2.eight_pi_holds);
    CHECK(std::abs(e2.loop.back() - 2 * kPi * std::exp(-32.0)) < 1e-9);

    const auto e1 = end_opening_report(cusp, {0, 0}, 1);
    CHECK_FALSE(e1.opens_less_than_linearly);
    CHECK_FALSE(e1.subquadratic);
    CHECK(e1.agreement);
    CHECK(e1.sphere_min >= -1e-6);
    CHECK(e1.ratio_fit.alpha == doctest::Approx(2.0).epsilon(1e-3));
}

TEST_CASE("two-ended assembly") {
    const auto fc = SurfaceSpec::flat_cylinder(1.0);
    const auto flat = theorem2_report(fc, {0, 0});
    CHECK(flat.verdict == "consistent-flat");
    CHECK(flat.doubling_max_rel < 1e-9);
    CHECK(flat.diffineq_min_margin >= -flat.diffineq_budget);

    const auto cusp = SurfaceSpec::rotational_cylinder("exp(-t)");
    const auto c = theorem2_report(cusp, {0, 0});
    CHECK(c.verdict == "premise-violated");
    CHECK(c.detail.find("premise violated at end 1") != std::string::npos);
    CHECK(c.doubling_max_rel < 1e-6);

    const auto bump = SurfaceSpec::rotational_cylinder("cosh(t)");
    const auto b = theorem2_report(bump, {0, 0});
    CHECK(b.verdict == "premise-violated");
    CHECK(b.detail.find("at both ends") != std::string::npos);
}
