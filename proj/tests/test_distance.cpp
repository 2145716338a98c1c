#include "doctest.h"

#include "hopfgeom/distance.hpp"
#include "hopfgeom/error.hpp"

#include <cmath>
#include <numbers>

using namespace hopf;

namespace {

constexpr double kPi = std::numbers::pi;

double flat_max_error(double h) {
    const auto s = SurfaceSpec::flat_plane();
    const auto f = solve_distance(s, {-3, 3, -3, 3}, h, DistanceSource::point({0.0, 0.0}));
    double worst = 0.0;
    for (std::size_t i = 0; i < f.nu; ++i)
        for (std::size_t j = 0; j < f.nv; ++j) {
            const auto p = f.point(i, j);
            if (!f.reliable(i, j)) continue;
            worst = std::max(worst, std::abs(f.at(i, j) - std::hypot(p.u, p.v)));
        }
    return worst;
}

}  // namespace

TEST_CASE("flat plane distance converges at first order") {
    const double e1 = flat_max_error(0.1);
    const double e2 = flat_max_error(0.05);
    const double e3 = flat_max_error(0.025);
    CHECK(e1 < 0.1);
    CHECK(e2 < e1);
    CHECK(e3 < e2);
    CHECK(e1 / e2 > 1.3);
    CHECK(e2 / e3 > 1.3);
}

TEST_CASE("flat cylinder: distance in the strip") {
    const auto s = SurfaceSpec::flat_cylinder(1.0);
    FieldOptions opt;
    opt.periodic_v = true;
    const auto f = solve_distance(s, {-4, 4, 0, 0}, 0.02, DistanceSource::point({0.0, 0.0}), opt);
    CHECK(f.layout == GridLayout::PeriodicV);
    double worst = 0.0;
    for (std::size_t i = 0; i < f.nu; ++i)
        for (std::size_t j = 0; j < f.nv; ++j) {
            if (!f.reliable(i, j)) continue;
            const auto p = f.point(i, j);
            const double dth = std::min(p.v, 2 * kPi - p.v);
            worst = std::max(worst, std::abs(f.at(i, j) - std::hypot(p.u, dth)));
        }
    CHECK(worst < 0.08);
    // Axis-aligned values are exact.
    CHECK(f.at(f.nu - 1, 0) == doctest::Approx(4.0).epsilon(1e-12));
}

TEST_CASE("hyperbolic plane from the pole: radial nodes are exact") {
    const auto s = SurfaceSpec::rotational_plane("sinh(r)");
    const auto f = solve_distance(s, {0, 5, 0, 0}, 0.05, DistanceSource::point({0.0, 0.0}));
    CHECK(f.layout == GridLayout::Polar);
    for (std::size_t i = 0; i < f.nu; ++i)
        for (std::size_t j = 0; j < f.nv; j += 17) CHECK(f.at(i, j) == doctest::Approx(f.point(i, j).u).epsilon(1e-12));
    CHECK(f.value({2.345, 1.0}) == doctest::Approx(2.345).epsilon(1e-12));
}

TEST_CASE("level sets and sublevel areas") {
    const auto s = SurfaceSpec::flat_plane();
    const auto f = solve_distance(s, {-3, 3, -3, 3}, 0.02, DistanceSource::point({0.0, 0.0}));
    CHECK(f.level_set_length(2.0, {}) == doctest::Approx(4 * kPi).epsilon(0.02));
    CHECK(f.sublevel_area(2.0, {}) == doctest::Approx(4 * kPi).epsilon(0.03));
    const auto upper = [](PointChart p) { return p.v > 0.0; };
    CHECK(f.level_set_length(2.0, upper) == doctest::Approx(2 * kPi).epsilon(0.02));

    const auto hyp = SurfaceSpec::rotational_plane("sinh(r)");
    const auto g = solve_distance(hyp, {0, 3, 0, 0}, 0.01, DistanceSource::point({0.0, 0.0}));
    CHECK(g.level_set_length(2.0, {}) == doctest::Approx(2 * kPi * std::sinh(2.0)).epsilon(1e-3));
    CHECK(g.sublevel_area(2.0, {}) == doctest::Approx(2 * kPi * (std::cosh(2.0) - 1)).epsilon(1e-2));
}

TEST_CASE("curve source") {
    const auto s = SurfaceSpec::flat_plane();
    const auto f =
        solve_distance(s, {-2, 2, -2, 2}, 0.05, DistanceSource::curve({{-2.0, 0.0}, {2.0, 0.0}}));
    for (std::size_t i = 0; i < f.nu; ++i)
        for (std::size_t j = 0; j < f.nv; ++j) CHECK(f.at(i, j) == doctest::Approx(std::abs(f.point(i, j).v)).epsilon(1e-9));
}

TEST_CASE("witness descent") {
    const auto s = SurfaceSpec::flat_plane();
    const auto f = solve_distance(s, {-3, 3, -3, 3}, 0.02, DistanceSource::point({0.0, 0.0}));
    const auto path = f.descend({2.0, 1.0});
    CHECK(path.back().u == 0.0);
    CHECK(path.back().v == 0.0);
    CHECK(polyline_length(s, path) == doctest::Approx(std::sqrt(5.0)).epsilon(0.03));
}

TEST_CASE("shortest loops") {
    const auto flat = SurfaceSpec::flat_cylinder(1.0);
    const auto l0 = loop_length(flat, {0.3, 1.0}, {-2.0, 2.5, 0, 0}, 0.02);
    CHECK(l0.length == doctest::Approx(2 * kPi).epsilon(1e-12));
    CHECK(l0.witness_length == doctest::Approx(l0.length).epsilon(0.01));

    const auto cusp = SurfaceSpec::rotational_cylinder("exp(-t)");
    const PointChart p{3.0, 0.0};
    const auto l1 = loop_length(cusp, p, loop_window(cusp, p), 0.01);
    const double circle = 2 * kPi * std::exp(-3.0);
    CHECK(l1.length <= circle * (1 + 1e-12));
    CHECK(l1.length == doctest::Approx(circle).epsilon(0.02));
    const auto l1r = loop_length(cusp, {3.0, 1.234}, loop_window(cusp, p), 0.01);
    CHECK(l1r.length == l1.length);

    const auto waist = SurfaceSpec::rotational_cylinder("cosh(t)");
    const auto l2 = loop_length(waist, {0.0, 0.0}, loop_window(waist, {0.0, 0.0}), 0.01);
    CHECK(l2.length == doctest::Approx(2 * kPi).epsilon(1e-9));
    CHECK(l2.witness_length == doctest::Approx(2 * kPi).epsilon(0.01));

    // Flare side: the loop travels toward the small end and back.
    const PointChart q{-4.0, 0.0};
    const auto [bound, tstar] = competitor_loop(cusp, q.u, 20.0);
    CHECK(tstar == doctest::Approx(std::log(kPi)).epsilon(1e-2));
    const auto l3 = loop_length(cusp, q, loop_window(cusp, q), 0.02);
    CHECK(l3.length <= bound + 0.05);
    CHECK(l3.length > 0.8 * bound);
}

TEST_CASE("distance errors") {
    const auto s = SurfaceSpec::flat_plane();
    CHECK_THROWS_AS(solve_distance(s, {-1, 1, -1, 1}, 0.0, DistanceSource::point({0, 0})), DomainError);
    CHECK_THROWS_AS(solve_distance(s, {-1, 1, -1, 1}, 0.05, DistanceSource::point({0.98, 0})), DomainError);
    CHECK_THROWS_AS(loop_length(s, {0, 0}, {-1, 1, 0, 0}, 0.05), DomainError);
}
