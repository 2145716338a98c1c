#include "hopfgeom/geodesic.hpp"

#include "hopfgeom/error.hpp"
#include "hopfgeom/io.hpp"
#include "hopfgeom/parallel.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include <boost/numeric/odeint.hpp>

namespace hopf {

namespace {

namespace ode = boost::numeric::odeint;

using State = std::array<double, 6>;

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kMaxStep = 0.5;

State pack(const FlowState& f) { return {f.u, f.v, f.du, f.dv, f.J, f.dJ}; }

FlowState unpack(const State& x, double s) {
    FlowState f;
    f.s = s;
    f.u = x[0];
    f.v = x[1];
    f.du = x[2];
    f.dv = x[3];
    f.J = x[4];
    f.dJ = x[5];
    return f;
}

struct System {
    const SurfaceSpec* spec;

    void operator()(const State& x, State& dx, double /*s*/) const {
        const double u = x[0], v = x[1], du = x[2], dv = x[3];
        dx[0] = du;
        dx[1] = dv;
        dx[4] = x[5];
        if (spec->is_warped()) {
            const WarpProfile w = spec->profile(u);
            double K;
            if (spec->family() == Family::RotationalPlane && std::abs(u) < SurfaceSpec::kPoleEpsilon) {
                K = -spec->profile_third_at_pole();
            } else {
                if (w.f == 0.0 || !std::isfinite(w.f) ||
                    (spec->family() == Family::RotationalCylinder && w.f < 0.0))
                    throw DomainError("geodesic_engine",
                                      "warping function vanishes along the geodesic at u=" + num(u));
                K = -w.ddf / w.f;
            }
            dx[2] = w.f * w.df * dv * dv;
            // Radial geodesics through the pole have dv == 0 exactly; f'/f is
            // singular there but its coefficient vanishes.
            dx[3] = dv == 0.0 ? 0.0 : -2.0 * (w.df / w.f) * du * dv;
            dx[5] = -K * x[4];
        } else {
            const ConformalFactor c = spec->conformal(u, v);
            dx[2] = -(c.phi_x * du * du + 2.0 * c.phi_y * du * dv - c.phi_x * dv * dv);
            dx[3] = -(-c.phi_y * du * du + 2.0 * c.phi_x * du * dv + c.phi_y * dv * dv);
            dx[5] = std::exp(-2.0 * c.phi) * c.laplacian * x[4];
        }
    }
};

bool finite(const State& x) {
    for (double c : x)
        if (!std::isfinite(c)) return false;
    return true;
}

double speed_defect(const SurfaceSpec& spec, const State& x) {
    return std::abs(speed_squared(spec, {x[0], x[1]}, {x[2], x[3]}) - 1.0);
}

int sign_of(double a) { return (a > 0.0) - (a < 0.0); }

}  // namespace

FlowState initial_state(const SurfaceSpec& spec, UnitTangent tangent, double J0, double dJ0) {
    FlowState f;
    if (at_pole(spec, tangent.base)) {
        // Radial chart at the pole: the direction is carried by theta.
        f.u = 0.0;
        f.v = tangent.angle;
        f.du = 1.0;
        f.dv = 0.0;
    } else {
        const PointChart b = canonical(spec, tangent.base);
        const ChartVelocity w = unit_velocity(spec, b, tangent.angle);
        f.u = b.u;
        f.v = b.v;
        f.du = w.du;
        f.dv = w.dv;
        // A Clairaut constant at round-off level means the geodesic runs
        // through the pole, where the polar chart cannot resolve the swing.
        if (spec.family() == Family::RotationalPlane) {
            const double f0 = spec.profile(b.u).f;
            if (std::abs(f0 * f0 * f.dv) < 1e-12 * std::max(1.0, f0)) {
                f.dv = 0.0;
                f.du = f.du < 0.0 ? -1.0 : 1.0;
            }
        }
    }
    f.J = J0;
    f.dJ = dJ0;
    return f;
}

FlowState reversed(const FlowState& state) {
    FlowState r = state;
    r.du = -r.du;
    r.dv = -r.dv;
    return r;
}

UnitTangent tangent_of(const SurfaceSpec& spec, const FlowState& state) {
    if (spec.family() == Family::RotationalPlane && state.u == 0.0) {
        // At the pole the direction of travel is the polar angle.
        double dir = state.du >= 0.0 ? state.v : state.v + std::numbers::pi;
        dir = std::fmod(dir, kTwoPi);
        if (dir < 0.0) dir += kTwoPi;
        return {{0.0, dir}, dir};
    }
    PointChart p = state.point();
    ChartVelocity w = state.velocity();
    if (spec.family() == Family::RotationalPlane && p.u < 0.0) w.du = -w.du;
    p = canonical(spec, p);
    return {p, velocity_angle(spec, p, w)};
}

FlowRun integrate_flow(const SurfaceSpec& spec, const FlowState& init, double length,
                       std::span<const double> times, const FlowOptions& options) {
    if (!(length >= 0.0) || !std::isfinite(length))
        throw DomainError("geodesic_engine", "integration length must be finite and >= 0");
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (times[i] < 0.0 || times[i] > length * (1.0 + 1e-15) + 1e-300 || (i && times[i] < times[i - 1]))
            throw DomainError("geodesic_engine", "sample times must be increasing within [0, length]");
    }

    FlowRun run;
    run.samples.reserve(times.size());
    const System sys{&spec};
    State x0 = pack(init);
    run.max_speed_defect = speed_defect(spec, x0);

    std::size_t next = 0;
    while (next < times.size() && times[next] <= 0.0) {
        run.samples.push_back(unpack(x0, times[next]));
        ++next;
    }
    if (length == 0.0) {
        run.end = unpack(x0, 0.0);
        return run;
    }

    auto stepper = ode::make_dense_output(options.tol, options.tol, kMaxStep, ode::runge_kutta_dopri5<State>());
    stepper.initialize(x0, 0.0, std::min(1e-3, length));

    int prev_sign = sign_of(init.J);
    if (prev_sign == 0) prev_sign = sign_of(init.dJ);

    State tmp{};
    try {
        while (true) {
            const auto [t0, t1] = stepper.do_step(sys);
            ++run.steps;
            const State& x = stepper.current_state();
            if (!finite(x))
                throw NumericalError("geodesic_engine", "state left the finite range at s=" + num(t1));
            if (run.steps > options.max_steps)
                throw NumericalError("geodesic_engine", "step budget exhausted at s=" + num(t1));
            if (t1 < length && stepper.current_time_step() < options.min_step)
                throw NumericalError("geodesic_engine", "step size underflow at s=" + num(t1));
            run.max_speed_defect = std::max(run.max_speed_defect, speed_defect(spec, x));

            if (options.track_jacobi_zero && !run.first_zero && prev_sign != 0) {
                const double t_hi = std::min(t1, length);
                stepper.calc_state(t_hi, tmp);
                const int s1 = sign_of(tmp[4]);
                if (s1 != prev_sign) {
                    double a = t0, b = t_hi;
                    while (b - a > options.zero_tol) {
                        const double m = 0.5 * (a + b);
                        stepper.calc_state(m, tmp);
                        if (sign_of(tmp[4]) == prev_sign)
                            a = m;
                        else
                            b = m;
                    }
                    const double root = 0.5 * (a + b);
                    stepper.calc_state(root, tmp);
                    if (root > 0.0) {
                        run.first_zero = root;
                        if (std::abs(tmp[5]) < 1e-8) run.degenerate_zero = true;
                    }
                }
                prev_sign = s1 == 0 ? prev_sign : s1;
            }

            while (next < times.size() && times[next] <= t1) {
                stepper.calc_state(times[next], tmp);
                run.samples.push_back(unpack(tmp, times[next]));
                run.max_speed_defect = std::max(run.max_speed_defect, speed_defect(spec, tmp));
                ++next;
            }
            if (t1 >= length) {
                stepper.calc_state(length, tmp);
                run.end = unpack(tmp, length);
                break;
            }
        }
    } catch (const ode::step_adjustment_error& e) {
        throw NumericalError("geodesic_engine", std::string("step size underflow: ") + e.what());
    } catch (const ode::no_progress_error& e) {
        throw NumericalError("geodesic_engine", std::string("no progress: ") + e.what());
    }
    while (next < times.size()) {
        run.samples.push_back(run.end);
        run.samples.back().s = times[next];
        ++next;
    }
    return run;
}

GeodesicPath shoot_geodesic(const SurfaceSpec& spec, UnitTangent v, double s_max, double tol,
                            double sample_step) {
    if (!(s_max > 0.0)) throw DomainError("geodesic_engine", "s_max must be positive");
    if (!(tol > 0.0)) throw DomainError("geodesic_engine", "tolerance must be positive");
    if (sample_step <= 0.0) sample_step = s_max / 1024.0;
    const auto n = static_cast<std::size_t>(std::ceil(s_max / sample_step - 1e-9));
    std::vector<double> times(n + 1);
    for (std::size_t i = 0; i < n; ++i) times[i] = sample_step * static_cast<double>(i);
    times[n] = s_max;

    GeodesicPath path{spec, initial_state(spec, v, 0.0, 1.0), s_max, tol, {}, {}, 0.0};
    FlowOptions opt;
    opt.tol = tol;
    FlowRun run = integrate_flow(spec, path.start, s_max, times, opt);
    const double limit = 10.0 * tol * std::max(1.0, s_max);
    if (run.max_speed_defect > limit)
        throw NumericalError("geodesic_engine", "unit speed drifted by " + num(run.max_speed_defect) +
                                                    " (limit " + num(limit) + ")");
    path.max_speed_defect = run.max_speed_defect;
    path.raw = std::move(run.samples);
    path.samples.reserve(path.raw.size());
    for (const FlowState& f : path.raw) {
        const State x = pack(f);
        path.samples.push_back({f.s, canonical(spec, f.point()), tangent_of(spec, f), speed_defect(spec, x)});
    }
    return path;
}

JacobiRecord jacobi_along(const GeodesicPath& path, double lambda0, double dlambda0) {
    std::vector<double> times;
    times.reserve(path.raw.size());
    for (const FlowState& f : path.raw) times.push_back(f.s);
    FlowState init = path.start;
    init.J = lambda0;
    init.dJ = dlambda0;
    FlowOptions opt;
    opt.tol = path.tolerance;
    const FlowRun run = integrate_flow(path.spec, init, path.s_max, times, opt);
    JacobiRecord rec{&path, lambda0, dlambda0, {}};
    rec.samples.reserve(run.samples.size());
    for (const FlowState& f : run.samples) rec.samples.push_back({f.s, f.J, f.dJ});
    return rec;
}

std::vector<double> wronskian(const JacobiRecord& a, const JacobiRecord& b) {
    if (a.samples.size() != b.samples.size())
        throw DomainError("geodesic_engine", "Jacobi records are sampled differently");
    std::vector<double> w(a.samples.size());
    for (std::size_t i = 0; i < w.size(); ++i)
        w[i] = a.samples[i].lambda * b.samples[i].dlambda - b.samples[i].lambda * a.samples[i].dlambda;
    return w;
}

std::optional<double> first_conjugate(const GeodesicPath& path, double tol) {
    FlowState init = path.start;
    init.J = 0.0;
    init.dJ = 1.0;
    FlowOptions opt;
    opt.tol = std::min(path.tolerance, tol);
    opt.track_jacobi_zero = true;
    opt.zero_tol = tol;
    const FlowRun run = integrate_flow(path.spec, init, path.s_max, {}, opt);
    if (run.degenerate_zero) throw NumericalError("geodesic_engine", "degenerate, refine");
    return run.first_zero;
}

double geodesic_residual(const GeodesicPath& path) {
    FlowOptions opt;
    opt.tol = path.tolerance / 100.0;
    double worst = 0.0;
    for (std::size_t i = 0; i + 1 < path.raw.size(); ++i) {
        const FlowState& a = path.raw[i];
        const FlowState& b = path.raw[i + 1];
        const double ds = b.s - a.s;
        if (ds <= 0.0) continue;
        const FlowRun run = integrate_flow(path.spec, a, ds, {}, opt);
        const FlowState& e = run.end;
        worst = std::max({worst, std::abs(e.u - b.u), std::abs(e.v - b.v), std::abs(e.du - b.du),
                          std::abs(e.dv - b.dv)});
    }
    return worst;
}

double RadialChart::theta(std::size_t j) const {
    return kTwoPi * static_cast<double>(j) / static_cast<double>(n_theta);
}

bool RadialChart::truncated() const {
    for (const auto& c : conjugate)
        if (c) return true;
    return false;
}

double RadialChart::boundary_length(std::size_t k) const {
    double sum = 0.0;
    for (std::size_t j = 0; j < n_theta; ++j) sum += lambda(j, k);
    return sum * kTwoPi / static_cast<double>(n_theta);
}

double RadialChart::boundary_length_derivative(std::size_t k) const {
    double sum = 0.0;
    for (std::size_t j = 0; j < n_theta; ++j) sum += dlambda(j, k);
    return sum * kTwoPi / static_cast<double>(n_theta);
}

std::string RadialChart::to_csv() const {
    CsvTable t{"theta", "r", "lambda", "conjugate_flag"};
    for (std::size_t j = 0; j < n_theta; ++j) {
        for (std::size_t k = 0; k <= n_r; ++k) {
            const bool past = conjugate[j] && r(k) >= *conjugate[j];
            t.add_row({theta(j), r(k), lambda(j, k), past ? 1.0 : 0.0});
        }
    }
    return t.str();
}

RadialChart radial_chart(const SurfaceSpec& spec, PointChart p, double r_max, std::size_t n_theta, double dr,
                         double tol) {
    if (!(r_max > 0.0)) throw DomainError("geodesic_engine", "r_max must be positive");
    if (n_theta < 4) throw DomainError("geodesic_engine", "n_theta must be at least 4");
    if (dr <= 0.0) dr = r_max / 2048.0;
    std::size_t n_r = static_cast<std::size_t>(std::llround(r_max / dr));
    if (n_r == 0) n_r = 1;
    RadialChart chart{spec, canonical(spec, p), n_theta, n_r, r_max / static_cast<double>(n_r), tol, {}, {}, {}};
    const std::size_t row = chart.n_r + 1;
    chart.states.resize(n_theta * row);
    chart.K.resize(n_theta * row);
    chart.conjugate.assign(n_theta, std::nullopt);

    std::vector<double> times(row);
    for (std::size_t k = 0; k < row; ++k) times[k] = chart.r(k);
    times.back() = r_max;

    parallel_for(n_theta, [&](std::size_t j) {
        const FlowState init = initial_state(spec, {chart.basepoint, chart.theta(j)}, 0.0, 1.0);
        FlowOptions opt;
        opt.tol = tol;
        opt.track_jacobi_zero = true;
        opt.zero_tol = std::max(tol, 1e-12);
        const FlowRun run = integrate_flow(spec, init, r_max, times, opt);
        for (std::size_t k = 0; k < row; ++k) {
            chart.states[j * row + k] = run.samples[k];
            chart.K[j * row + k] = gauss_curvature(spec, run.samples[k].point());
        }
        chart.conjugate[j] = run.first_zero;
    });
    return chart;
}

}  // namespace hopf
