#include "doctest.h"

#include "hopfgeom/error.hpp"
#include "hopfgeom/metric.hpp"

#include <cmath>
#include <numbers>
#include <vector>

using namespace hopf;

namespace {

constexpr double kPi = std::numbers::pi;

// Curvature from second differences of metric values only (independent of the
// symbolic path). Diagonal metric E du^2 + G dv^2:
// K = -1/(2 sqrt(EG)) [ d_u (G_u / sqrt(EG)) + d_v (E_v / sqrt(EG)) ].
double fd_curvature(const SurfaceSpec& s, PointChart p, double h) {
    auto sq = [&](double u, double v) {
        const MetricDiag g = metric_at(s, {u, v});
        return std::sqrt(g.guu * g.gvv);
    };
    auto Gu = [&](double u, double v) {
        return (metric_at(s, {u + h, v}).gvv - metric_at(s, {u - h, v}).gvv) / (2 * h);
    };
    auto Ev = [&](double u, double v) {
        return (metric_at(s, {u, v + h}).guu - metric_at(s, {u, v - h}).guu) / (2 * h);
    };
    const double a = (Gu(p.u + h, p.v) / sq(p.u + h, p.v) - Gu(p.u - h, p.v) / sq(p.u - h, p.v)) / (2 * h);
    const double b = (Ev(p.u, p.v + h) / sq(p.u, p.v + h) - Ev(p.u, p.v - h) / sq(p.u, p.v - h)) / (2 * h);
    return -(a + b) / (2 * sq(p.u, p.v));
}

// Christoffel symbols from central differences of the metric.
Christoffel fd_christoffel(const SurfaceSpec& s, PointChart p, double h) {
    double dg[2][2][2] = {};  // dg[k][i][j] = d_k g_ij (diagonal only)
    for (int k = 0; k < 2; ++k) {
        PointChart a = p, b = p;
        (k == 0 ? a.u : a.v) += h;
        (k == 0 ? b.u : b.v) -= h;
        const MetricDiag ga = metric_at(s, a), gb = metric_at(s, b);
        dg[k][0][0] = (ga.guu - gb.guu) / (2 * h);
        dg[k][1][1] = (ga.gvv - gb.gvv) / (2 * h);
    }
    const MetricDiag g = metric_at(s, p);
    const double ginv[2] = {1.0 / g.guu, 1.0 / g.gvv};
    Christoffel c;
    for (int k = 0; k < 2; ++k)
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j)
                c.gamma[k][i][j] = 0.5 * ginv[k] * (dg[i][k][j] + dg[j][k][i] - dg[k][i][j]);
    return c;
}

std::vector<SurfaceSpec> families() {
    return {SurfaceSpec::flat_plane(),
            SurfaceSpec::flat_cylinder(1.3),
            SurfaceSpec::rotational_plane("sinh(r)"),
            SurfaceSpec::rotational_plane("tanh(r)"),
            SurfaceSpec::rotational_plane("1.5*r - 0.5*tanh(r)"),
            SurfaceSpec::rotational_cylinder("exp(-t)"),
            SurfaceSpec::rotational_cylinder("cosh(t)"),
            SurfaceSpec::conformal_plane("0.3*exp(-(x^2 + y^2))"),
            SurfaceSpec::conformal_plane("log(2/(1 + x^2 + y^2))")};
}

}  // namespace

TEST_CASE("parse_metric_spec accepts the documented families") {
    CHECK(parse_metric_spec("family=flat_plane\n").family() == Family::FlatPlane);

    const SurfaceSpec s = parse_metric_spec("# hyperbolic\nfamily = rotational_plane\nf = sinh(r)\nlabel=H2\n");
    CHECK(s.family() == Family::RotationalPlane);
    CHECK(s.label() == "H2");
    CHECK(s.profile(0.0).f == 0.0);
    // f'(0) = 1 by finite differences
    CHECK((s.profile(1e-4).f - s.profile(-1e-4).f) / 2e-4 == doctest::Approx(1.0).epsilon(1e-8));

    const SurfaceSpec c = parse_metric_spec("family=flat_cylinder\nradius=2.5\n");
    CHECK(c.radius() == 2.5);
    CHECK(parse_metric_spec("family=rotational_cylinder\nf=exp(-t)").is_cylinder());
    CHECK(parse_metric_spec("family=conformal_plane\r\nphi=0.1*x*y\r\n").family() == Family::ConformalPlane);
}

TEST_CASE("parse_metric_spec rejects invalid specs") {
    SUBCASE("pole derivative f'(0)=0") {
        try {
            (void)parse_metric_spec("family=rotational_plane\nf=r^2\n");
            FAIL("expected rejection");
        } catch (const InvariantError& e) {
            CHECK(std::string(e.what()).find("f'(0)=1") != std::string::npos);
        }
    }
    SUBCASE("non-positive profile") {
        CHECK_THROWS_AS((void)parse_metric_spec("family=rotational_cylinder\nf=t\n"), InvariantError);
        CHECK_THROWS_AS((void)parse_metric_spec("family=rotational_plane\nf=sin(r)\n"), InvariantError);
    }
    SUBCASE("syntax errors carry line and column") {
        try {
            (void)parse_metric_spec("family=rotational_plane\nf = sinh(r))\n");
            FAIL("expected ParseError");
        } catch (const ParseError& e) {
            CHECK(e.line() == 2);
            CHECK(e.column() == 12);
        }
        CHECK_THROWS_AS((void)parse_metric_spec("family=torus\n"), ParseError);
        CHECK_THROWS_AS((void)parse_metric_spec("f=sinh(r)\n"), ParseError);
        CHECK_THROWS_AS((void)parse_metric_spec("family=flat_plane\nfoo=1\n"), ParseError);
        CHECK_THROWS_AS((void)parse_metric_spec("family=rotational_plane\n"), ParseError);
        CHECK_THROWS_AS((void)parse_metric_spec("family=flat_cylinder\nradius=abc\n"), ParseError);
        CHECK_THROWS_AS((void)parse_metric_spec("family=rotational_plane\nf=sinh(x)\n"), ParseError);
    }
}

TEST_CASE("curvature closed forms") {
    CHECK(curvature_at(SurfaceSpec::flat_cylinder(1.0), {0.3, 2.0}).K == 0.0);
    const SurfaceSpec h2 = SurfaceSpec::rotational_plane("sinh(r)");
    for (double r : {0.0, 1e-8, 0.5, 3.0}) CHECK(curvature_at(h2, {r, 1.0}).K == doctest::Approx(-1.0));

    const SurfaceSpec th = SurfaceSpec::rotational_plane("tanh(r)");
    const double sech = 1.0 / std::cosh(0.5);
    CHECK(curvature_at(th, {0.5, 0.0}).K == doctest::Approx(2 * sech * sech).epsilon(1e-12));
    CHECK(curvature_at(th, {0.5, 0.0}).K == doctest::Approx(1.573).epsilon(1e-3));
    // pole value -f'''(0) = 2 for tanh
    CHECK(curvature_at(th, {0.0, 0.0}).K == doctest::Approx(2.0));

    // Stereographic sphere: K = +1 everywhere.
    const SurfaceSpec sphere = SurfaceSpec::conformal_plane("log(2/(1 + x^2 + y^2))");
    CHECK(curvature_at(sphere, {0.7, -1.2}).K == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("symbolic curvature matches finite differences with Richardson-consistent decay") {
    const PointChart points[] = {{0.8, 0.4}, {1.6, 2.2}, {-0.5, 1.1}};
    for (const SurfaceSpec& s : families()) {
        for (PointChart p : points) {
            if (s.family() == Family::RotationalPlane && p.u < 0) continue;
            const double K = curvature_at(s, p).K;
            const double e1 = std::abs(fd_curvature(s, p, 2e-2) - K);
            const double e2 = std::abs(fd_curvature(s, p, 1e-2) - K);
            CHECK_MESSAGE(e2 <= 1e-3 * std::max(1.0, std::abs(K)), s.label());
            // second-order scheme: halving h cuts the error ~4x
            if (e1 > 1e-9) CHECK_MESSAGE(e1 / e2 == doctest::Approx(4.0).epsilon(0.15), s.label());
        }
    }
}

TEST_CASE("rotational curvature is theta-invariant") {
    for (const SurfaceSpec& s : families()) {
        if (!s.is_warped()) continue;
        const double K0 = curvature_at(s, {0.9, 0.0}).K;
        for (double th : {0.5, 2.0, 4.0, 6.1}) CHECK(curvature_at(s, {0.9, th}).K == K0);
    }
}

TEST_CASE("christoffel symbols") {
    const Christoffel flat = christoffels_at(SurfaceSpec::flat_plane(), {1.0, 2.0});
    const Christoffel conf0 = christoffels_at(SurfaceSpec::conformal_plane("0"), {1.0, 2.0});
    for (int k = 0; k < 2; ++k)
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) {
                CHECK(flat(k, i, j) == 0.0);
                CHECK(conf0(k, i, j) == 0.0);
            }
    const Christoffel cusp = christoffels_at(SurfaceSpec::rotational_cylinder("exp(-t)"), {0.0, 0.0});
    CHECK(cusp(0, 1, 1) == doctest::Approx(1.0));
    CHECK(cusp(1, 0, 1) == doctest::Approx(-1.0));

    for (const SurfaceSpec& s : families()) {
        const PointChart p{0.9, 0.7};
        const Christoffel a = christoffels_at(s, p);
        const Christoffel b = fd_christoffel(s, p, 1e-5);
        for (int k = 0; k < 2; ++k)
            for (int i = 0; i < 2; ++i)
                for (int j = 0; j < 2; ++j) CHECK(a(k, i, j) == doctest::Approx(b(k, i, j)).epsilon(1e-7).scale(1.0));
    }
}

TEST_CASE("unit velocities have unit g-norm and canonical charts wrap theta") {
    for (const SurfaceSpec& s : families()) {
        const PointChart p{0.6, 1.9};
        for (double a : {0.0, 1.0, 2.5, -2.0}) {
            const ChartVelocity w = unit_velocity(s, p, a);
            CHECK(speed_squared(s, p, w) == doctest::Approx(1.0));
            CHECK(velocity_angle(s, p, w) == doctest::Approx(std::remainder(a, 2 * kPi)));
        }
    }
    const SurfaceSpec h2 = SurfaceSpec::rotational_plane("sinh(r)");
    const PointChart q = canonical(h2, {-1.0, 7.0});
    CHECK(q.u == 1.0);
    CHECK(q.v == doctest::Approx(7.0 + kPi - 2 * kPi));
    CHECK(canonical(SurfaceSpec::flat_cylinder(1), {0.0, -0.5}).v == doctest::Approx(2 * kPi - 0.5));
}
