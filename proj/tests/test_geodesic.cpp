#include "doctest.h"

#include "hopfgeom/error.hpp"
#include "hopfgeom/geodesic.hpp"

#include <cmath>
#include <numbers>
#include <vector>

using namespace hopf;

namespace {

constexpr double kPi = std::numbers::pi;

SurfaceSpec round_sphere_chart() {
    // Stereographic chart of the unit sphere, K = +1.
    return SurfaceSpec::conformal_plane("log(2/(1+x^2+y^2))", "unit_sphere");
}

double endpoint_error_flat(double tol) {
    const auto s = SurfaceSpec::flat_plane();
    const auto path = shoot_geodesic(s, {{0.3, -0.2}, 0.7}, 10.0, tol);
    const auto& e = path.samples.back().point;
    return std::hypot(e.u - (0.3 + 10 * std::cos(0.7)), e.v - (-0.2 + 10 * std::sin(0.7)));
}

}  // namespace

TEST_CASE("flat plane: straight segment") {
    const auto s = SurfaceSpec::flat_plane();
    const auto path = shoot_geodesic(s, {{0.0, 0.0}, 0.0}, 5.0, 1e-10);
    REQUIRE(path.samples.size() == 1025);
    CHECK(path.samples.back().s == doctest::Approx(5.0));
    CHECK(path.samples.back().point.u == doctest::Approx(5.0).epsilon(1e-12));
    CHECK(std::abs(path.samples.back().point.v) < 1e-12);
    for (const auto& smp : path.samples) CHECK(smp.speed_defect < 1e-9);
    CHECK(geodesic_residual(path) < 1e-10);
}

TEST_CASE("meridians stay meridians") {
    const auto cyl = SurfaceSpec::rotational_cylinder("cosh(t)");
    const auto path = shoot_geodesic(cyl, {{-1.0, 1.3}, 0.0}, 4.0, 1e-10);
    for (const auto& smp : path.samples) {
        CHECK(smp.point.v == doctest::Approx(1.3).epsilon(1e-14));
        CHECK(smp.point.u == doctest::Approx(-1.0 + smp.s).epsilon(1e-9));
    }
    const auto plane = SurfaceSpec::rotational_plane("sinh(r)");
    const auto p2 = shoot_geodesic(plane, {{1.0, 0.3}, kPi}, 3.0, 1e-10);
    // Goes through the pole and out along theta = 0.3 + pi.
    const auto& end = p2.samples.back().point;
    CHECK(end.u == doctest::Approx(2.0).epsilon(1e-8));
    CHECK(end.v == doctest::Approx(0.3 + kPi).epsilon(1e-12));
}

TEST_CASE("Clairaut integral on the cosh cylinder") {
    const auto cyl = SurfaceSpec::rotational_cylinder("cosh(t)");
    const double tol = 1e-10;
    const auto path = shoot_geodesic(cyl, {{0.4, 0.2}, 0.9}, 6.0, tol);
    auto clairaut = [](const FlowState& f) { return std::cosh(f.u) * std::cosh(f.u) * f.dv; };
    const double c0 = clairaut(path.raw.front());
    double worst = 0.0;
    for (const auto& f : path.raw) worst = std::max(worst, std::abs(clairaut(f) - c0));
    CHECK(worst < 100 * tol);
    CHECK(path.max_speed_defect < 10 * tol * 6.0);
}

TEST_CASE("Jacobi closed forms") {
    const auto flat = SurfaceSpec::flat_plane();
    const auto pf = shoot_geodesic(flat, {{1.0, 2.0}, 0.4}, 5.0, 1e-10);
    const auto jf = jacobi_along(pf, 0.0, 1.0);
    for (const auto& j : jf.samples) CHECK(j.lambda == doctest::Approx(j.s).epsilon(1e-10));

    const auto hyp = SurfaceSpec::rotational_plane("sinh(r)");
    const auto ph = shoot_geodesic(hyp, {{0.7, 1.0}, 2.0}, 4.0, 1e-11);
    const auto js = jacobi_along(ph, 0.0, 1.0);
    const auto jc = jacobi_along(ph, 1.0, 0.0);
    for (std::size_t i = 0; i < js.samples.size(); ++i) {
        const double s = js.samples[i].s;
        CHECK(js.samples[i].lambda == doctest::Approx(std::sinh(s)).epsilon(1e-8));
        CHECK(jc.samples[i].lambda == doctest::Approx(std::cosh(s)).epsilon(1e-8));
    }
    const auto w = wronskian(jc, js);
    for (double x : w) CHECK(x == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("Wronskian stays constant on a variable-curvature plane") {
    const auto s = SurfaceSpec::rotational_plane("1.5*r - 0.5*tanh(r)");
    const auto path = shoot_geodesic(s, {{0.5, 0.0}, 1.1}, 8.0, 1e-10);
    const auto a = jacobi_along(path, 0.0, 1.0);
    const auto b = jacobi_along(path, 1.0, 0.3);
    const auto w = wronskian(a, b);
    for (double x : w) CHECK(std::abs(x - w.front()) / std::abs(w.front()) < 1e-6);
}

TEST_CASE("endpoint error shrinks with the tolerance") {
    const auto hyp = SurfaceSpec::rotational_plane("sinh(r)");
    // Radial geodesic from the pole: r(s) = s exactly.
    auto err = [&](double tol) {
        const auto path = shoot_geodesic(hyp, {{0.0, 0.0}, 0.4}, 5.0, tol);
        return std::abs(path.samples.back().point.u - 5.0);
    };
    CHECK(err(1e-10) < 1e-8);
    CHECK(err(1e-6) <= err(1e-4) + 1e-15);
    CHECK(endpoint_error_flat(1e-8) < 1e-10);
}

TEST_CASE("time reversal returns to the start") {
    const auto s = SurfaceSpec::rotational_plane("1.5*r - 0.5*tanh(r)");
    const double tol = 1e-10;
    const auto fwd = shoot_geodesic(s, {{2.0, 0.5}, 0.8}, 6.0, tol);
    FlowOptions opt;
    opt.tol = tol;
    const auto back = integrate_flow(s, reversed(fwd.raw.back()), 6.0, {}, opt);
    const FlowState& e = back.end;
    const PointChart p = canonical(s, e.point());
    CHECK(p.u == doctest::Approx(2.0).epsilon(10 * tol));
    CHECK(p.v == doctest::Approx(0.5).epsilon(10 * tol));
}

TEST_CASE("conjugate points") {
    const auto sphere = round_sphere_chart();
    CHECK(curvature_at(sphere, {0.3, -0.2}).K == doctest::Approx(1.0).epsilon(1e-12));
    const auto eq = shoot_geodesic(sphere, {{1.0, 0.0}, kPi / 2}, 4.0, 1e-12);
    const auto sstar = first_conjugate(eq, 1e-10);
    REQUIRE(sstar.has_value());
    CHECK(std::abs(*sstar - kPi) < 1e-8);

    const auto flat = SurfaceSpec::flat_plane();
    CHECK_FALSE(first_conjugate(shoot_geodesic(flat, {{0, 0}, 1.0}, 50.0, 1e-10)).has_value());
    const auto hyp = SurfaceSpec::rotational_plane("sinh(r)");
    CHECK_FALSE(first_conjugate(shoot_geodesic(hyp, {{0, 0}, 1.0}, 10.0, 1e-10)).has_value());
}

TEST_CASE("radial charts") {
    const auto flat = SurfaceSpec::flat_plane();
    const auto cf = radial_chart(flat, {0.5, 0.5}, 3.0, 16, 0.25);
    REQUIRE(cf.n_r == 12);
    CHECK_FALSE(cf.truncated());
    for (std::size_t j = 0; j < cf.n_theta; ++j)
        for (std::size_t k = 0; k <= cf.n_r; ++k) CHECK(cf.lambda(j, k) == doctest::Approx(cf.r(k)).epsilon(1e-10));
    CHECK(cf.boundary_length(12) == doctest::Approx(2 * kPi * 3.0).epsilon(1e-12));

    const auto hyp = SurfaceSpec::rotational_plane("sinh(r)");
    const auto ch = radial_chart(hyp, {0.0, 0.0}, 4.0, 32, 0.5);
    for (std::size_t j = 0; j < ch.n_theta; ++j) {
        CHECK(ch.lambda(j, 0) == 0.0);
        CHECK(ch.dlambda(j, 0) == 1.0);
        for (std::size_t k = 0; k <= ch.n_r; ++k) {
            CHECK(ch.lambda(j, k) == doctest::Approx(std::sinh(ch.r(k))).epsilon(1e-9));
            CHECK(ch.lambda(j, k) == ch.lambda(0, k));
        }
    }
    CHECK(ch.boundary_length(8) == doctest::Approx(2 * kPi * std::sinh(4.0)).epsilon(1e-9));
    CHECK(ch.boundary_length_derivative(8) == doctest::Approx(2 * kPi * std::cosh(4.0)).epsilon(1e-9));

    // Positive curvature concentrated near the pole focuses geodesics from an
    // off-pole basepoint.
    const auto cap = SurfaceSpec::rotational_plane("tanh(r)");
    const auto ct = radial_chart(cap, {1.0, 0.0}, 12.0, 32, 0.1);
    CHECK(ct.truncated());
    const auto at_pole_chart = radial_chart(cap, {0.0, 0.0}, 5.0, 8, 0.1);
    CHECK_FALSE(at_pole_chart.truncated());
    const std::string csv = cf.to_csv();
    CHECK(csv.rfind("theta,r,lambda,conjugate_flag\n", 0) == 0);
}

TEST_CASE("domain errors") {
    const auto hyp = SurfaceSpec::rotational_plane("sinh(r)");
    CHECK_THROWS_AS(shoot_geodesic(hyp, {{0, 0}, 0.0}, -1.0, 1e-10), DomainError);
    CHECK_THROWS_AS(shoot_geodesic(hyp, {{0, 0}, 0.0}, 1.0, 0.0), DomainError);
}

TEST_CASE("geodesics grazing the pole") {
    const auto hyp = SurfaceSpec::rotational_plane("sinh(r)");
    for (double eps : {1e-3, 1e-5, 1e-7, 1e-9, 1e-11, 1e-14}) {
        CAPTURE(eps);
        const auto path = shoot_geodesic(hyp, {{1.0, 0.0}, kPi - eps}, 3.0, 1e-10);
        const auto& end = path.samples.back().point;
        // Passing near the pole the path continues almost straight to r = 2.
        CHECK(end.u == doctest::Approx(2.0).epsilon(10 * eps + 1e-8));
    }
}
