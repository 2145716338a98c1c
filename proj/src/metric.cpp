#include "hopfgeom/metric.hpp"

#include "hopfgeom/error.hpp"

#include <array>
#include <cmath>
#include <fstream>
#include <numbers>
#include <optional>
#include <sstream>

namespace hopf {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

const std::array<std::string, 1> kRadialVar{"r"};
const std::array<std::string, 1> kAxialVar{"t"};
const std::array<std::string, 2> kPlaneVars{"x", "y"};

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(6);
    os << v;
    return os.str();
}

}  // namespace

std::string_view family_name(Family family) {
    switch (family) {
        case Family::FlatPlane: return "flat_plane";
        case Family::FlatCylinder: return "flat_cylinder";
        case Family::ConformalPlane: return "conformal_plane";
        case Family::RotationalPlane: return "rotational_plane";
        case Family::RotationalCylinder: return "rotational_cylinder";
    }
    return "unknown";
}

SurfaceSpec SurfaceSpec::flat_plane(std::string label) {
    SurfaceSpec s;
    s.family_ = Family::FlatPlane;
    s.label_ = std::move(label);
    return s;
}

SurfaceSpec SurfaceSpec::flat_cylinder(double radius, std::string label) {
    if (!(radius > 0.0) || !std::isfinite(radius))
        throw InvariantError("metric_kernel", "flat_cylinder radius must be positive, got " + fmt(radius));
    SurfaceSpec s;
    s.family_ = Family::FlatCylinder;
    s.label_ = std::move(label);
    s.radius_ = radius;
    s.source_ = fmt(radius);
    s.f_ = Expr::constant(radius);
    s.prepare_profile();
    return s;
}

SurfaceSpec SurfaceSpec::conformal_plane(const std::string& phi, std::string label) {
    SurfaceSpec s;
    s.family_ = Family::ConformalPlane;
    s.label_ = std::move(label);
    s.source_ = phi;
    s.phi_ = Expr::parse(phi, kPlaneVars);
    s.phi_x_ = s.phi_.derivative(0);
    s.phi_y_ = s.phi_.derivative(1);
    s.phi_xx_ = s.phi_x_.derivative(0);
    s.phi_yy_ = s.phi_y_.derivative(1);
    return s;
}

SurfaceSpec SurfaceSpec::rotational_plane(const std::string& f, std::string label) {
    SurfaceSpec s;
    s.family_ = Family::RotationalPlane;
    s.label_ = std::move(label);
    s.source_ = f;
    s.f_ = Expr::parse(f, kRadialVar);
    s.prepare_profile();
    return s;
}

SurfaceSpec SurfaceSpec::rotational_cylinder(const std::string& f, std::string label) {
    SurfaceSpec s;
    s.family_ = Family::RotationalCylinder;
    s.label_ = std::move(label);
    s.source_ = f;
    s.f_ = Expr::parse(f, kAxialVar);
    s.prepare_profile();
    return s;
}

void SurfaceSpec::prepare_profile() {
    df_ = f_.derivative(0);
    ddf_ = df_.derivative(0);
    pole_c3_ = ddf_.derivative(0).eval(0.0);
}

bool SurfaceSpec::is_plane() const {
    return family_ == Family::FlatPlane || family_ == Family::ConformalPlane ||
           family_ == Family::RotationalPlane;
}

bool SurfaceSpec::is_cylinder() const { return !is_plane(); }

bool SurfaceSpec::is_warped() const {
    return family_ == Family::RotationalPlane || family_ == Family::FlatCylinder ||
           family_ == Family::RotationalCylinder;
}

WarpProfile SurfaceSpec::profile(double u) const {
    if (family_ == Family::FlatCylinder) return {radius_, 0.0, 0.0};
    if (family_ == Family::RotationalPlane && std::abs(u) < kPoleEpsilon) {
        const double c = pole_c3_;
        return {u + c * u * u * u / 6.0, 1.0 + 0.5 * c * u * u, c * u};
    }
    return {f_.eval(u), df_.eval(u), ddf_.eval(u)};
}

ConformalFactor SurfaceSpec::conformal(double x, double y) const {
    if (family_ == Family::FlatPlane) return {};
    return {phi_.eval(x, y), phi_x_.eval(x, y), phi_y_.eval(x, y), phi_xx_.eval(x, y) + phi_yy_.eval(x, y)};
}

void SurfaceSpec::validate() const {
    auto fail = [&](const std::string& check, const std::string& where) {
        throw InvariantError("metric_kernel",
                             "spec '" + label_ + "' violates " + check + " at " + where);
    };
    switch (family_) {
        case Family::FlatPlane:
        case Family::FlatCylinder: return;
        case Family::RotationalPlane: {
            const double f0 = f_.eval(0.0);
            if (!(std::abs(f0) <= 1e-12)) fail("pole condition f(0)=0 (f(0)=" + fmt(f0) + ")", "r=0");
            const double h = 1e-4;
            const double d0 = (f_.eval(h) - f_.eval(-h)) / (2.0 * h);
            if (!(std::abs(d0 - 1.0) <= 1e-6))
                fail("pole condition f'(0)=1 (finite difference gives " + fmt(d0) + ")", "r=0");
            for (int i = 1; i <= 400; ++i) {
                const double r = 0.075 * i;
                const double v = f_.eval(r);
                if (!(v > 0.0) || !std::isfinite(v)) fail("positivity f(r)>0", "r=" + fmt(r));
            }
            return;
        }
        case Family::RotationalCylinder: {
            for (int i = -400; i <= 400; ++i) {
                const double t = 0.075 * i;
                const double v = f_.eval(t);
                if (!(v > 0.0) || !std::isfinite(v)) fail("positivity f(t)>0", "t=" + fmt(t));
            }
            return;
        }
        case Family::ConformalPlane: {
            for (int i = -20; i <= 20; ++i) {
                for (int j = -20; j <= 20; ++j) {
                    const double x = 0.5 * i;
                    const double y = 0.5 * j;
                    const ConformalFactor c = conformal(x, y);
                    if (!std::isfinite(c.phi) || !std::isfinite(c.phi_x) || !std::isfinite(c.phi_y) ||
                        !std::isfinite(c.laplacian))
                        fail("finite conformal factor", "(x,y)=(" + fmt(x) + "," + fmt(y) + ")");
                }
            }
            return;
        }
    }
}

namespace {

std::string trim(std::string_view s, std::size_t* lead = nullptr) {
    std::size_t b = 0;
    while (b < s.size() && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    std::size_t e = s.size();
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    if (lead) *lead = b;
    return std::string(s.substr(b, e - b));
}

}  // namespace

SurfaceSpec parse_metric_spec(std::string_view text) {
    struct Entry {
        std::string value;
        int line = 0;
        int column = 0;
    };
    std::optional<Entry> family, f, phi, radius, label;

    int line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t nl = text.find('\n', pos);
        std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);

        std::size_t lead = 0;
        const std::string stripped = trim(line, &lead);
        if (stripped.empty() || stripped[0] == '#') continue;

        const std::size_t eq = line.find('=');
        if (eq == std::string_view::npos)
            throw ParseError("expected key=value", line_no, static_cast<int>(lead) + 1);
        const std::string key = trim(line.substr(0, eq));
        std::size_t vlead = 0;
        const std::string value = trim(line.substr(eq + 1), &vlead);
        const int vcol = static_cast<int>(eq + 1 + vlead);
        if (value.empty()) throw ParseError("empty value for '" + key + "'", line_no, vcol + 1);

        Entry entry{value, line_no, vcol};
        std::optional<Entry>* slot = nullptr;
        if (key == "family") slot = &family;
        else if (key == "f") slot = &f;
        else if (key == "phi") slot = &phi;
        else if (key == "radius") slot = &radius;
        else if (key == "label") slot = &label;
        else throw ParseError("unknown key '" + key + "'", line_no, static_cast<int>(lead) + 1);
        if (slot->has_value())
            throw ParseError("duplicate key '" + key + "'", line_no, static_cast<int>(lead) + 1);
        *slot = entry;
    }

    if (!family) throw ParseError("missing 'family' key", line_no, 1);
    const std::string name = family->value;
    const std::string lbl = label ? label->value : name;

    auto require = [&](const std::optional<Entry>& e, const char* key) -> const Entry& {
        if (!e) throw ParseError(std::string("family '") + name + "' requires key '" + key + "'",
                                 family->line, family->column + 1);
        return *e;
    };
    auto forbid = [&](const std::optional<Entry>& e, const char* key) {
        if (e) throw ParseError(std::string("key '") + key + "' not allowed for family '" + name + "'",
                                e->line, 1);
    };
    auto parse_expr = [&](const Entry& e, std::span<const std::string> vars) {
        // Parse once for syntax errors with file positions; the factory reparses.
        (void)Expr::parse(e.value, vars, e.line, e.column);
        return e.value;
    };

    SurfaceSpec spec = SurfaceSpec::flat_plane(lbl);
    if (name == "flat_plane") {
        forbid(f, "f"), forbid(phi, "phi"), forbid(radius, "radius");
        spec = SurfaceSpec::flat_plane(lbl);
    } else if (name == "flat_cylinder") {
        forbid(f, "f"), forbid(phi, "phi");
        double r = 1.0;
        if (radius) {
            char* end = nullptr;
            r = std::strtod(radius->value.c_str(), &end);
            if (end == radius->value.c_str() || *end != '\0')
                throw ParseError("malformed radius", radius->line, radius->column + 1);
        }
        spec = SurfaceSpec::flat_cylinder(r, lbl);
    } else if (name == "conformal_plane") {
        forbid(f, "f"), forbid(radius, "radius");
        spec = SurfaceSpec::conformal_plane(parse_expr(require(phi, "phi"), kPlaneVars), lbl);
    } else if (name == "rotational_plane") {
        forbid(phi, "phi"), forbid(radius, "radius");
        spec = SurfaceSpec::rotational_plane(parse_expr(require(f, "f"), kRadialVar), lbl);
    } else if (name == "rotational_cylinder") {
        forbid(phi, "phi"), forbid(radius, "radius");
        spec = SurfaceSpec::rotational_cylinder(parse_expr(require(f, "f"), kAxialVar), lbl);
    } else {
        throw ParseError("unknown family '" + name + "'", family->line, family->column + 1);
    }
    spec.validate();
    return spec;
}

SurfaceSpec load_metric_spec(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DomainError("metric_kernel", "cannot open spec file " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_metric_spec(ss.str());
}

PointChart canonical(const SurfaceSpec& spec, PointChart p) {
    if (!spec.is_warped()) return p;
    if (spec.family() == Family::RotationalPlane && p.u < 0.0) {
        p.u = -p.u;
        p.v += std::numbers::pi;
    }
    p.v = std::fmod(p.v, kTwoPi);
    if (p.v < 0.0) p.v += kTwoPi;
    if (p.v >= kTwoPi) p.v = 0.0;
    return p;
}

bool at_pole(const SurfaceSpec& spec, PointChart p) {
    return spec.family() == Family::RotationalPlane && p.u == 0.0;
}

MetricDiag metric_at(const SurfaceSpec& spec, PointChart p) {
    if (spec.is_warped()) {
        const double f = spec.profile(p.u).f;
        return {1.0, f * f};
    }
    const double e2 = std::exp(2.0 * spec.conformal(p.u, p.v).phi);
    return {e2, e2};
}

double gauss_curvature(const SurfaceSpec& spec, PointChart p) {
    switch (spec.family()) {
        case Family::FlatPlane:
        case Family::FlatCylinder: return 0.0;
        case Family::ConformalPlane: {
            const ConformalFactor c = spec.conformal(p.u, p.v);
            return -std::exp(-2.0 * c.phi) * c.laplacian;
        }
        case Family::RotationalPlane:
            if (std::abs(p.u) < SurfaceSpec::kPoleEpsilon) return -spec.profile_third_at_pole();
            [[fallthrough]];
        case Family::RotationalCylinder: {
            const WarpProfile w = spec.profile(p.u);
            if (w.f == 0.0 || !std::isfinite(w.f))
                throw DomainError("metric_kernel", "ill-posed spec '" + spec.label() +
                                                       "': f vanishes at u=" + fmt(p.u));
            return -w.ddf / w.f;
        }
    }
    return 0.0;
}

CurvatureSample curvature_at(const SurfaceSpec& spec, PointChart p) {
    const double K = gauss_curvature(spec, p);
    if (!std::isfinite(K))
        throw DomainError("metric_kernel", "curvature not finite at (" + fmt(p.u) + "," + fmt(p.v) + ")");
    return {canonical(spec, p), K};
}

Christoffel christoffels_at(const SurfaceSpec& spec, PointChart p) {
    Christoffel c;
    if (spec.is_flat()) return c;
    if (spec.is_warped()) {
        const WarpProfile w = spec.profile(p.u);
        if (w.f == 0.0)
            throw DomainError("metric_kernel", "Christoffel symbols undefined at the pole");
        c.gamma[0][1][1] = -w.f * w.df;
        c.gamma[1][0][1] = c.gamma[1][1][0] = w.df / w.f;
        return c;
    }
    const ConformalFactor cf = spec.conformal(p.u, p.v);
    c.gamma[0][0][0] = cf.phi_x;
    c.gamma[0][0][1] = c.gamma[0][1][0] = cf.phi_y;
    c.gamma[0][1][1] = -cf.phi_x;
    c.gamma[1][0][0] = -cf.phi_y;
    c.gamma[1][0][1] = c.gamma[1][1][0] = cf.phi_x;
    c.gamma[1][1][1] = cf.phi_y;
    return c;
}

ChartVelocity unit_velocity(const SurfaceSpec& spec, PointChart p, double angle) {
    if (at_pole(spec, p)) return {1.0, 0.0};
    const MetricDiag g = metric_at(spec, p);
    return {std::cos(angle) / std::sqrt(g.guu), std::sin(angle) / std::sqrt(g.gvv)};
}

double velocity_angle(const SurfaceSpec& spec, PointChart p, ChartVelocity w) {
    const MetricDiag g = metric_at(spec, p);
    return std::atan2(w.dv * std::sqrt(g.gvv), w.du * std::sqrt(g.guu));
}

double speed_squared(const SurfaceSpec& spec, PointChart p, ChartVelocity w) {
    const MetricDiag g = metric_at(spec, p);
    return g.guu * w.du * w.du + g.gvv * w.dv * w.dv;
}

}  // namespace hopf
