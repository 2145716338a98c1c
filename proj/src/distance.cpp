#include "hopfgeom/distance.hpp"

#include "hopfgeom/error.hpp"
#include "hopfgeom/io.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <queue>

namespace hopf {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct Coef {
    double a, b;  // sqrt(guu), sqrt(gvv)
};

Coef coef_at(const SurfaceSpec& spec, PointChart p) {
    const MetricDiag g = metric_at(spec, p);
    return {std::sqrt(g.guu), std::sqrt(g.gvv)};
}

// Distance between two nearby chart points, exact for flat charts and second
// order otherwise.
double local_distance(const SurfaceSpec& spec, PointChart p, PointChart q) {
    if (spec.family() == Family::RotationalPlane) {
        // law of cosines about the pole
        const double f1 = spec.profile(p.u).f;
        const double f2 = spec.profile(q.u).f;
        const double s = std::sin(0.5 * (q.v - p.v));
        return std::sqrt((q.u - p.u) * (q.u - p.u) + 4.0 * std::abs(f1 * f2) * s * s);
    }
    if (spec.is_warped()) return std::hypot(q.u - p.u, spec.profile(0.5 * (p.u + q.u)).f * (q.v - p.v));
    const Coef c = coef_at(spec, {0.5 * (p.u + q.u), 0.5 * (p.v + q.v)});
    return std::hypot(c.a * (q.u - p.u), c.b * (q.v - p.v));
}

double segment_distance(double px, double py, double ax, double ay, double bx, double by) {
    const double dx = bx - ax, dy = by - ay;
    const double len2 = dx * dx + dy * dy;
    double t = len2 > 0.0 ? ((px - ax) * dx + (py - ay) * dy) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    return std::hypot(px - (ax + t * dx), py - (ay + t * dy));
}

class Marcher {
public:
    Marcher(DistanceField& f, std::vector<Coef> coef) : f_(f), coef_(std::move(coef)) {
        state_.assign(f_.node_count(), 0);
    }

    void seed(std::size_t i, std::size_t j, double d) {
        const std::size_t id = f_.index(i, j);
        if (d < f_.dist[id]) {
            f_.dist[id] = d;
            heap_.push({d, id});
        }
    }

    void run() {
        while (!heap_.empty()) {
            const auto [d, id] = heap_.top();
            heap_.pop();
            if (state_[id] == 2 || d > f_.dist[id]) continue;
            state_[id] = 2;
            const auto [i, j] = coords(id);
            visit_neighbours(i, j, [&](std::size_t ni, std::size_t nj) {
                const std::size_t nid = f_.index(ni, nj);
                if (state_[nid] == 2) return;
                const double t = update(ni, nj);
                if (t < f_.dist[nid]) {
                    f_.dist[nid] = t;
                    heap_.push({t, nid});
                }
            });
        }
    }

private:
    using Entry = std::pair<double, std::size_t>;

    std::pair<std::size_t, std::size_t> coords(std::size_t id) const {
        if (f_.layout == GridLayout::Polar) {
            if (id == 0) return {0, 0};
            return {1 + (id - 1) / f_.nv, (id - 1) % f_.nv};
        }
        return {id / f_.nv, id % f_.nv};
    }

    bool periodic() const { return f_.layout != GridLayout::Cartesian; }

    template <class Fn>
    void visit_neighbours(std::size_t i, std::size_t j, Fn&& fn) const {
        if (f_.layout == GridLayout::Polar && i == 0) {
            if (f_.nu > 1)
                for (std::size_t k = 0; k < f_.nv; ++k) fn(1, k);
            return;
        }
        if (i > 0) fn(i - 1, f_.layout == GridLayout::Polar && i == 1 ? 0 : j);
        if (i + 1 < f_.nu) fn(i + 1, j);
        if (periodic()) {
            fn(i, (j + f_.nv - 1) % f_.nv);
            fn(i, (j + 1) % f_.nv);
        } else {
            if (j > 0) fn(i, j - 1);
            if (j + 1 < f_.nv) fn(i, j + 1);
        }
    }

    double accepted(std::size_t i, std::size_t j) const {
        const std::size_t id = f_.index(i, j);
        return state_[id] == 2 ? f_.dist[id] : kInf;
    }

    double update(std::size_t i, std::size_t j) const {
        const Coef& c = coef_[f_.index(i, j)];
        if (f_.layout == GridLayout::Polar && i == 0) {
            double best = kInf;
            for (std::size_t k = 0; k < f_.nv; ++k) best = std::min(best, accepted(1, k));
            return best + c.a * f_.hu;
        }
        double U = kInf, V = kInf;
        if (i > 0) U = accepted(i - 1, f_.layout == GridLayout::Polar && i == 1 ? 0 : j);
        if (i + 1 < f_.nu) U = std::min(U, accepted(i + 1, j));
        if (periodic()) {
            V = std::min(accepted(i, (j + f_.nv - 1) % f_.nv), accepted(i, (j + 1) % f_.nv));
        } else {
            if (j > 0) V = accepted(i, j - 1);
            if (j + 1 < f_.nv) V = std::min(V, accepted(i, j + 1));
        }
        const double A = c.a * f_.hu;
        const double B = c.b * f_.hv;
        if (!std::isfinite(U) && !std::isfinite(V)) return kInf;
        if (!std::isfinite(V) || B <= 0.0) return std::isfinite(U) ? U + A : V;
        if (!std::isfinite(U)) return V + B;
        const double one_sided = std::min(U + A, V + B);
        const double ia = 1.0 / (A * A), ib = 1.0 / (B * B);
        const double disc = ia + ib - (U - V) * (U - V) * ia * ib;
        if (disc < 0.0) return one_sided;
        const double t = (U * ia + V * ib + std::sqrt(disc)) / (ia + ib);
        if (t < std::max(U, V)) return one_sided;
        return std::min(t, one_sided);
    }

    DistanceField& f_;
    std::vector<Coef> coef_;
    std::vector<std::uint8_t> state_;
    std::priority_queue<Entry, std::vector<Entry>, std::greater<>> heap_;
};

}  // namespace

DistanceField solve_distance(const SurfaceSpec& spec, const ChartWindow& window, double h,
                             const DistanceSource& source, const FieldOptions& options) {
    if (!(h > 0.0)) throw DomainError("distance_field", "grid spacing must be positive");
    if (source.points.empty()) throw DomainError("distance_field", "empty source");
    const double hv_req = options.hv > 0.0 ? options.hv : h;

    DistanceField f{spec, GridLayout::Cartesian, 0, 0, 0, 0, 0, 0, {}, {}, 0.0, source};
    if (spec.family() == Family::RotationalPlane) {
        if (window.u_min != 0.0) throw DomainError("distance_field", "polar grids start at the pole (u_min = 0)");
        f.layout = GridLayout::Polar;
    } else if (options.periodic_v) {
        if (!spec.is_cylinder()) throw DomainError("distance_field", "periodic v axis needs a cylinder");
        f.layout = GridLayout::PeriodicV;
    }
    if (!(window.u_max > window.u_min)) throw DomainError("distance_field", "empty window");

    f.u_min = window.u_min;
    f.nu = static_cast<std::size_t>(std::llround((window.u_max - window.u_min) / h)) + 1;
    if (f.nu < 3) throw DomainError("distance_field", "window is smaller than three grid steps");
    f.hu = (window.u_max - window.u_min) / static_cast<double>(f.nu - 1);
    if (f.layout == GridLayout::Cartesian) {
        if (!(window.v_max > window.v_min)) throw DomainError("distance_field", "empty window");
        f.v_min = window.v_min;
        f.nv = static_cast<std::size_t>(std::llround((window.v_max - window.v_min) / hv_req)) + 1;
        if (f.nv < 3) throw DomainError("distance_field", "window is smaller than three grid steps");
        f.hv = (window.v_max - window.v_min) / static_cast<double>(f.nv - 1);
    } else {
        f.v_min = f.layout == GridLayout::Polar ? 0.0 : window.v_min;
        f.nv = std::max<std::size_t>(8, static_cast<std::size_t>(std::llround(kTwoPi / hv_req)));
        f.hv = kTwoPi / static_cast<double>(f.nv);
    }
    const std::size_t count = f.layout == GridLayout::Polar ? 1 + (f.nu - 1) * f.nv : f.nu * f.nv;
    f.dist.assign(count, kInf);
    f.unreliable.assign(count, 0);

    std::vector<Coef> coef(count);
    double max_step = 0.0;
    for (std::size_t i = 0; i < f.nu; ++i) {
        const std::size_t jn = f.layout == GridLayout::Polar && i == 0 ? 1 : f.nv;
        for (std::size_t j = 0; j < jn; ++j) {
            const PointChart p = f.point(i, j);
            Coef c = coef_at(spec, p);
            if (!std::isfinite(c.a) || !std::isfinite(c.b) || c.a <= 0.0)
                throw DomainError("distance_field", "metric is not finite/positive at u=" + num(p.u) +
                                                        ", v=" + num(p.v));
            coef[f.index(i, j)] = c;
            max_step = std::max({max_step, c.a * f.hu, c.b * f.hv});
        }
    }
    f.band_width = max_step * options.band_safety;

    const auto band = static_cast<std::size_t>(std::ceil(options.band_safety));
    for (std::size_t i = 0; i < f.nu; ++i) {
        const std::size_t jn = f.layout == GridLayout::Polar && i == 0 ? 1 : f.nv;
        for (std::size_t j = 0; j < jn; ++j) {
            bool edge = i + band >= f.nu;
            if (f.layout != GridLayout::Polar) edge = edge || i < band;
            if (f.layout == GridLayout::Cartesian) edge = edge || j < band || j + band >= f.nv;
            f.unreliable[f.index(i, j)] = edge ? 1 : 0;
        }
    }

    // Source must sit inside the reliable part of the window.
    for (const PointChart& s : source.points) {
        if (source.kind == DistanceSource::Kind::Curve) {
            const bool in_u = s.u >= window.u_min && s.u <= window.u_max;
            const bool in_v = f.layout != GridLayout::Cartesian || (s.v >= window.v_min && s.v <= window.v_max);
            if (!in_u || !in_v) throw DomainError("distance_field", "curve source leaves the window");
            continue;
        }
        const double x = (s.u - f.u_min) / f.hu;
        const double b = static_cast<double>(band);
        bool inside = x <= static_cast<double>(f.nu - 1) - b;
        if (f.layout != GridLayout::Polar) inside = inside && x >= b;
        if (f.layout == GridLayout::Cartesian) {
            const double y = (s.v - f.v_min) / f.hv;
            inside = inside && y >= b && y <= static_cast<double>(f.nv - 1) - b;
        }
        if (!inside)
            throw DomainError("distance_field", "window too small: source (" + num(s.u) + ", " + num(s.v) +
                                                    ") touches the boundary band");
    }

    Marcher m(f, std::move(coef));
    const long reach = 2;
    auto each_near = [&](double umin, double umax, double vmin, double vmax, auto&& fn) {
        const long i0 = static_cast<long>(std::floor((umin - f.u_min) / f.hu)) - reach;
        const long i1 = static_cast<long>(std::ceil((umax - f.u_min) / f.hu)) + reach;
        const long j0 = static_cast<long>(std::floor((vmin - f.v_min) / f.hv)) - reach;
        const long j1 = static_cast<long>(std::ceil((vmax - f.v_min) / f.hv)) + reach;
        for (long i = std::max(0L, i0); i <= std::min<long>(static_cast<long>(f.nu) - 1, i1); ++i) {
            if (f.layout == GridLayout::Polar && i == 0) {
                fn(0, 0);
                continue;
            }
            for (long j = j0; j <= j1; ++j) {
                long jj = j;
                if (f.layout == GridLayout::Cartesian) {
                    if (j < 0 || j >= static_cast<long>(f.nv)) continue;
                } else {
                    jj = ((j % static_cast<long>(f.nv)) + static_cast<long>(f.nv)) % static_cast<long>(f.nv);
                }
                fn(static_cast<std::size_t>(i), static_cast<std::size_t>(jj));
            }
        }
    };

    if (source.kind == DistanceSource::Kind::Point) {
        PointChart s = canonical(spec, source.points[0]);
        if (f.layout == GridLayout::Polar && at_pole(spec, s)) {
            m.seed(0, 0, 0.0);
        } else {
            if (f.layout == GridLayout::Cartesian) s = source.points[0];
            each_near(s.u, s.u, s.v, s.v, [&](std::size_t i, std::size_t j) {
                PointChart q = f.point(i, j);
                m.seed(i, j, local_distance(spec, s, q));
            });
        }
    } else {
        if (f.layout == GridLayout::Polar)
            throw DomainError("distance_field", "curve sources need a Cartesian or cylinder grid");
        const auto& pts = source.points;
        for (std::size_t k = 0; k + 1 < pts.size() || (k == 0 && pts.size() == 1); ++k) {
            const PointChart a = pts[k];
            const PointChart b = pts.size() == 1 ? pts[0] : pts[k + 1];
            each_near(std::min(a.u, b.u), std::max(a.u, b.u), std::min(a.v, b.v), std::max(a.v, b.v),
                      [&](std::size_t i, std::size_t j) {
                          const PointChart q = f.point(i, j);
                          const Coef c = coef_at(spec, q);
                          double qv = q.v;
                          if (f.layout == GridLayout::PeriodicV) {
                              // nearest periodic image of the node to the segment
                              const double mid = 0.5 * (a.v + b.v);
                              qv += kTwoPi * std::round((mid - qv) / kTwoPi);
                          }
                          const double d =
                              segment_distance(c.a * q.u, c.b * qv, c.a * a.u, c.b * a.v, c.a * b.u, c.b * b.v);
                          m.seed(i, j, d);
                      });
            if (pts.size() == 1) break;
        }
    }
    m.run();
    return f;
}

double DistanceField::value(PointChart p) const {
    double x = (p.u - u_min) / hu;
    if (layout == GridLayout::Polar) {
        p = canonical(spec, p);
        x = p.u / hu;
    }
    const double umax = static_cast<double>(nu - 1);
    if (!(x >= -1e-9 && x <= umax + 1e-9)) return kNaN;
    x = std::clamp(x, 0.0, umax);
    double y = (p.v - v_min) / hv;
    const double n = static_cast<double>(nv);
    if (layout == GridLayout::Cartesian) {
        if (!(y >= -1e-9 && y <= n - 1 + 1e-9)) return kNaN;
        y = std::clamp(y, 0.0, n - 1);
    } else {
        y = std::fmod(y, n);
        if (y < 0) y += n;
    }
    auto i0 = static_cast<std::size_t>(std::floor(x));
    auto j0 = static_cast<std::size_t>(std::floor(y));
    if (i0 >= nu - 1) i0 = nu - 2;
    if (layout == GridLayout::Cartesian && j0 >= nv - 1) j0 = nv - 2;
    if (j0 >= nv) j0 = nv - 1;
    const std::size_t j1 = layout == GridLayout::Cartesian ? j0 + 1 : (j0 + 1) % nv;
    const double fx = x - static_cast<double>(i0);
    const double fy = y - static_cast<double>(j0);
    const double d00 = at(i0, j0), d01 = at(i0, j1), d10 = at(i0 + 1, j0), d11 = at(i0 + 1, j1);
    return (1 - fx) * ((1 - fy) * d00 + fy * d01) + fx * ((1 - fy) * d10 + fy * d11);
}

bool DistanceField::reliable_at(PointChart p) const {
    double x = (p.u - u_min) / hu;
    if (layout == GridLayout::Polar) x = canonical(spec, p).u / hu;
    if (!(x >= 0.0 && x <= static_cast<double>(nu - 1))) return false;
    double y = (p.v - v_min) / hv;
    if (layout != GridLayout::Cartesian) {
        y = std::fmod(y, static_cast<double>(nv));
        if (y < 0) y += static_cast<double>(nv);
    } else if (!(y >= 0.0 && y <= static_cast<double>(nv - 1))) {
        return false;
    }
    const auto i0 = std::min(static_cast<std::size_t>(x), nu - 2);
    const auto j0 = std::min(static_cast<std::size_t>(y), layout == GridLayout::Cartesian ? nv - 2 : nv - 1);
    const std::size_t j1 = layout == GridLayout::Cartesian ? j0 + 1 : (j0 + 1) % nv;
    return reliable(i0, j0) && reliable(i0 + 1, j0) && reliable(i0, j1) && reliable(i0 + 1, j1);
}

ChartVelocity DistanceField::gradient(PointChart p) const {
    const double du = 0.25 * hu, dv = 0.25 * hv;
    const double a = value({p.u + du, p.v}), b = value({p.u - du, p.v});
    const double c = value({p.u, p.v + dv}), d = value({p.u, p.v - dv});
    ChartVelocity g;
    if (std::isfinite(a) && std::isfinite(b))
        g.du = (a - b) / (2 * du);
    else if (std::isfinite(a))
        g.du = (a - value(p)) / du;
    else
        g.du = (value(p) - b) / du;
    g.dv = (c - d) / (2 * dv);
    return g;
}

std::vector<PointChart> DistanceField::descend(PointChart from) const {
    std::vector<PointChart> path{from};
    PointChart p = from;
    double d = value(p);
    if (!std::isfinite(d)) throw DomainError("distance_field", "descent start is outside the reached grid");
    const std::size_t max_iter = 4 * (nu + nv) * 64 + 100000;
    for (std::size_t it = 0; it < max_iter; ++it) {
        const Coef c = coef_at(spec, p);
        const double cell = std::min(c.a * hu, std::max(c.b * hv, 0.05 * c.a * hu));
        if (d <= 2.0 * cell) break;
        const double step = 0.5 * cell;
        const ChartVelocity g = gradient(p);
        const double wu = g.du / (c.a * c.a);
        const double wv = c.b > 0 ? g.dv / (c.b * c.b) : 0.0;
        const double norm = std::hypot(c.a * wu, c.b * wv);
        PointChart q{kNaN, kNaN};
        double dq = kNaN;
        if (norm > 0.0 && std::isfinite(norm)) {
            q = {p.u - step * wu / norm, p.v - step * wv / norm};
            if (layout == GridLayout::Polar) q = canonical(spec, q);
            dq = value(q);
        }
        if (!(dq < d - 0.25 * step)) {
            // Discrete steepest neighbour of the nearest node.
            double x = (p.u - u_min) / hu;
            if (layout == GridLayout::Polar) x = canonical(spec, p).u / hu;
            const long i = std::lround(x);
            const long j = std::lround((p.v - v_min) / hv);
            double best = kInf;
            PointChart best_pt = p;
            for (long di = -1; di <= 1; ++di) {
                for (long dj = -1; dj <= 1; ++dj) {
                    const long ii = i + di;
                    if (ii < 0 || ii >= static_cast<long>(nu)) continue;
                    long jj = j + dj;
                    long jw = jj;
                    if (layout == GridLayout::Cartesian) {
                        if (jj < 0 || jj >= static_cast<long>(nv)) continue;
                    } else {
                        jw = ((jj % static_cast<long>(nv)) + static_cast<long>(nv)) % static_cast<long>(nv);
                    }
                    const double val = at(static_cast<std::size_t>(ii), ii == 0 && layout == GridLayout::Polar
                                                                             ? 0
                                                                             : static_cast<std::size_t>(jw));
                    if (val < best) {
                        best = val;
                        best_pt = {u_min + hu * static_cast<double>(ii), v_min + hv * static_cast<double>(jj)};
                    }
                }
            }
            if (!(best < d)) break;
            q = best_pt;
            dq = best;
        }
        path.push_back(q);
        p = q;
        d = dq;
    }
    if (source.kind == DistanceSource::Kind::Point) path.push_back(source.points[0]);
    return path;
}

double polyline_length(const SurfaceSpec& spec, const std::vector<PointChart>& path) {
    double total = 0.0;
    for (std::size_t k = 0; k + 1 < path.size(); ++k) total += local_distance(spec, path[k], path[k + 1]);
    return total;
}

double DistanceField::level_set_length(double level, const std::function<bool(PointChart)>& keep) const {
    double total = 0.0;
    const std::size_t jcells = layout == GridLayout::Cartesian ? nv - 1 : nv;
    for (std::size_t i = 0; i + 1 < nu; ++i) {
        for (std::size_t j = 0; j < jcells; ++j) {
            const std::size_t jn = layout == GridLayout::Cartesian ? j + 1 : (j + 1) % nv;
            const double u0 = u_min + hu * static_cast<double>(i), u1 = u0 + hu;
            const double v0 = v_min + hv * static_cast<double>(j), v1 = v0 + hv;
            const PointChart P[4] = {{u0, v0}, {u1, v0}, {u1, v1}, {u0, v1}};
            const double D[4] = {at(i, j) - level, at(i + 1, j) - level, at(i + 1, jn) - level, at(i, jn) - level};
            bool ok = true;
            for (double x : D) ok = ok && std::isfinite(x);
            if (!ok) continue;
            PointChart X[4];
            bool has[4] = {};
            int count = 0;
            for (int e = 0; e < 4; ++e) {
                const int a = e, b = (e + 1) % 4;
                if ((D[a] >= 0) != (D[b] >= 0)) {
                    const double t = D[a] / (D[a] - D[b]);
                    X[e] = {P[a].u + t * (P[b].u - P[a].u), P[a].v + t * (P[b].v - P[a].v)};
                    has[e] = true;
                    ++count;
                }
            }
            if (count < 2) continue;
            auto add = [&](int e1, int e2) {
                const PointChart m{0.5 * (X[e1].u + X[e2].u), 0.5 * (X[e1].v + X[e2].v)};
                if (keep && !keep(m)) return;
                total += local_distance(spec, X[e1], X[e2]);
            };
            if (count == 2) {
                int e1 = -1, e2 = -1;
                for (int e = 0; e < 4; ++e)
                    if (has[e]) (e1 < 0 ? e1 : e2) = e;
                add(e1, e2);
            } else {
                const double centre = 0.25 * (D[0] + D[1] + D[2] + D[3]);
                if ((centre >= 0) == (D[0] >= 0)) {
                    add(0, 1);
                    add(2, 3);
                } else {
                    add(3, 0);
                    add(1, 2);
                }
            }
        }
    }
    return total;
}

double DistanceField::sublevel_area(double level, const std::function<bool(PointChart)>& keep) const {
    constexpr int kSub = 4;
    double total = 0.0;
    const std::size_t jcells = layout == GridLayout::Cartesian ? nv - 1 : nv;
    const double du = hu / kSub, dv = hv / kSub;
    for (std::size_t i = 0; i + 1 < nu; ++i) {
        for (std::size_t j = 0; j < jcells; ++j) {
            const std::size_t jn = layout == GridLayout::Cartesian ? j + 1 : (j + 1) % nv;
            const double d00 = at(i, j), d10 = at(i + 1, j), d11 = at(i + 1, jn), d01 = at(i, jn);
            if (std::min({d00, d10, d11, d01}) > level) continue;
            const double u0 = u_min + hu * static_cast<double>(i);
            const double v0 = v_min + hv * static_cast<double>(j);
            for (int a = 0; a < kSub; ++a) {
                const double fx = (a + 0.5) / kSub;
                const double u = u0 + fx * hu;
                const Coef cu = spec.is_warped() ? coef_at(spec, {u, 0.0}) : Coef{0, 0};
                for (int b = 0; b < kSub; ++b) {
                    const double fy = (b + 0.5) / kSub;
                    const double val =
                        (1 - fx) * ((1 - fy) * d00 + fy * d01) + fx * ((1 - fy) * d10 + fy * d11);
                    if (!(val <= level)) continue;
                    const PointChart q{u, v0 + fy * hv};
                    if (keep && !keep(q)) continue;
                    const Coef c = spec.is_warped() ? cu : coef_at(spec, q);
                    total += std::abs(c.a * c.b) * du * dv;
                }
            }
        }
    }
    return total;
}

std::string DistanceField::to_csv() const {
    std::string header;
    if (spec.is_cylinder())
        header = "t,theta,distance";
    else if (layout == GridLayout::Polar)
        header = "r,theta,distance";
    else
        header = "x,y,distance";
    std::string out = header + "\n";
    for (std::size_t i = 0; i < nu; ++i) {
        const std::size_t jn = layout == GridLayout::Polar && i == 0 ? 1 : nv;
        for (std::size_t j = 0; j < jn; ++j) {
            const PointChart p = point(i, j);
            out += num(p.u) + "," + num(p.v) + "," + num(at(i, j)) + "\n";
        }
    }
    return out;
}

std::pair<double, double> competitor_loop(const SurfaceSpec& spec, double t, double span, double step) {
    if (!spec.is_cylinder()) throw DomainError("distance_field", "loops need a cylinder");
    double best = kTwoPi * spec.profile(t).f, best_t = t;
    const auto n = static_cast<long>(std::ceil(span / step));
    for (long k = -n; k <= n; ++k) {
        const double ts = t + step * static_cast<double>(k);
        const double f = spec.profile(ts).f;
        if (!std::isfinite(f)) continue;
        const double len = 2.0 * std::abs(ts - t) + kTwoPi * f;
        if (len < best) {
            best = len;
            best_t = ts;
        }
    }
    return {best, best_t};
}

ChartWindow loop_window(const SurfaceSpec& spec, PointChart p, double margin) {
    const double circle = kTwoPi * spec.profile(p.u).f;
    const double span = std::min(0.5 * circle, 60.0);
    const double bound = competitor_loop(spec, p.u, span, std::max(1e-3, span / 20000.0)).first;
    const double reach = 0.5 * bound + margin;
    return {p.u - reach, p.u + reach, 0.0, 0.0};
}

LoopLengthSample loop_length(const SurfaceSpec& spec, PointChart p, const ChartWindow& window, double h) {
    if (!spec.is_cylinder()) throw DomainError("distance_field", "loop_length needs a cylinder spec");
    if (!(h > 0.0)) throw DomainError("distance_field", "grid spacing must be positive");
    p = canonical(spec, p);
    const long per = std::max(8L, std::lround(kTwoPi / h));
    const double hv = kTwoPi / static_cast<double>(per);
    const long pad = std::lround(0.25 * static_cast<double>(per));
    // Align the grid so that both lifts of p are nodes.
    const double below = std::max(0.0, p.u - window.u_min);
    const double above = std::max(0.0, window.u_max - p.u);
    const long ib = std::lround(std::ceil(below / h - 1e-9));
    const long ia = std::lround(std::ceil(above / h - 1e-9));
    ChartWindow strip{p.u - static_cast<double>(ib) * h, p.u + static_cast<double>(ia) * h,
                      p.v - static_cast<double>(pad) * hv, p.v + static_cast<double>(per + pad) * hv};
    FieldOptions opt;
    opt.hv = hv;
    // The cover strip is a plane chart with the cylinder's metric.
    const DistanceField field = solve_distance(spec, strip, h, DistanceSource::point(p), opt);
    const auto i = static_cast<std::size_t>(ib);
    const auto j = static_cast<std::size_t>(pad + per);
    LoopLengthSample out;
    out.basepoint = p;
    out.length = field.at(i, j);
    out.window = strip;
    out.h = h;
    const PointChart lift{p.u, p.v + kTwoPi};
    out.witness = field.descend(lift);
    out.witness.front() = lift;
    out.witness_length = polyline_length(spec, out.witness);
    for (const PointChart& q : out.witness) {
        if (!field.reliable_at(q)) {
            const double grow = strip.u_max - strip.u_min;
            throw DomainError("distance_field", "shortest loop reaches the window's unreliable band; enlarge "
                                                "the window to t in [" +
                                                    num(strip.u_min - 0.5 * grow) + ", " +
                                                    num(strip.u_max + 0.5 * grow) + "]");
        }
    }
    return out;
}

}  // namespace hopf
