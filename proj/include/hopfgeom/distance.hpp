#pragma once

#include "hopfgeom/metric.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace hopf {

// Chart rectangle [u_min, u_max] x [v_min, v_max]. For RotationalPlane the
// grid is polar about the pole: u_min must be 0 and the v range is ignored.
// For cylinders with a periodic axis the v range is ignored as well.
struct ChartWindow {
    double u_min = 0.0, u_max = 0.0;
    double v_min = 0.0, v_max = 0.0;
};

struct DistanceSource {
    enum class Kind { Point, Curve };
    Kind kind = Kind::Point;
    std::vector<PointChart> points;  // one point, or polyline vertices

    static DistanceSource point(PointChart p) { return {Kind::Point, {p}}; }
    static DistanceSource curve(std::vector<PointChart> polyline) { return {Kind::Curve, std::move(polyline)}; }
};

struct FieldOptions {
    double hv = 0.0;           // v spacing; 0 means "same as h"
    bool periodic_v = false;   // cylinders only: theta is periodic with period 2 pi
    double band_safety = 3.0;  // unreliable band width in grid cells
};

enum class GridLayout { Cartesian, PeriodicV, Polar };

// Distance from a source set, first-order fast marching on a node grid.
// Nodes are (u_min + i hu, v_min + j hv). In the polar layout row i = 0 is
// the single pole node.
struct DistanceField {
    SurfaceSpec spec;
    GridLayout layout = GridLayout::Cartesian;
    double u_min = 0.0, v_min = 0.0;
    double hu = 0.0, hv = 0.0;
    std::size_t nu = 0, nv = 0;
    std::vector<double> dist;
    std::vector<std::uint8_t> unreliable;
    double band_width = 0.0;  // in metric units
    DistanceSource source;

    std::size_t node_count() const { return dist.size(); }
    std::size_t index(std::size_t i, std::size_t j) const {
        return layout == GridLayout::Polar ? (i == 0 ? 0 : 1 + (i - 1) * nv + j) : i * nv + j;
    }
    PointChart point(std::size_t i, std::size_t j) const {
        return {u_min + hu * static_cast<double>(i), v_min + hv * static_cast<double>(j)};
    }
    double at(std::size_t i, std::size_t j) const { return dist[index(i, j)]; }
    bool reliable(std::size_t i, std::size_t j) const { return !unreliable[index(i, j)]; }

    // Bilinear interpolation; NaN outside the grid.
    double value(PointChart p) const;
    bool reliable_at(PointChart p) const;
    // Chart partial derivatives (d_u, d_v) of the interpolant.
    ChartVelocity gradient(PointChart p) const;

    // Descent path from `from` to the source: gradient steps with a discrete
    // steepest-neighbour fallback where the gradient does not decrease the
    // distance. Ends at the source point (point sources) or where the
    // distance falls below one grid step.
    std::vector<PointChart> descend(PointChart from) const;

    // Length of the level set {d = level} restricted to points where `keep`
    // holds (marching squares, metric length per segment).
    double level_set_length(double level, const std::function<bool(PointChart)>& keep) const;
    // Area of {d <= level} restricted to `keep` (4x4 sub-cell sampling).
    double sublevel_area(double level, const std::function<bool(PointChart)>& keep) const;

    std::string to_csv() const;
};

// Metric length of a chart polyline, midpoint rule per segment.
double polyline_length(const SurfaceSpec& spec, const std::vector<PointChart>& path);

DistanceField solve_distance(const SurfaceSpec& spec, const ChartWindow& window, double h,
                             const DistanceSource& source, const FieldOptions& options = {});

struct LoopLengthSample {
    PointChart basepoint;
    double length = 0.0;
    std::vector<PointChart> witness;  // cover coordinates, from T.p back to p
    double witness_length = 0.0;
    ChartWindow window;
    double h = 0.0;
};

// Shortest non-contractible loop at p on a cylinder: the distance between the
// lifts (t, theta) and (t, theta + 2 pi) in the universal cover strip. The
// window's v range is ignored; the strip spans [theta - pi/2, theta + 5 pi/2].
LoopLengthSample loop_length(const SurfaceSpec& spec, PointChart p, const ChartWindow& window, double h);

// Coordinate-circle competitor bound min over t* of 2|t* - t| + 2 pi f(t*),
// scanned on [t - span, t + span]; returns {bound, t*}.
std::pair<double, double> competitor_loop(const SurfaceSpec& spec, double t, double span, double step = 1e-3);

// Window that must contain every loop at p of length <= the competitor bound.
ChartWindow loop_window(const SurfaceSpec& spec, PointChart p, double margin = 1.0);

}  // namespace hopf
