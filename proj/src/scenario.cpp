#include "hopfgeom/scenario.hpp"

#include "hopfgeom/cylinder.hpp"
#include "hopfgeom/error.hpp"
#include "hopfgeom/geodesic.hpp"
#include "hopfgeom/growth.hpp"
#include "hopfgeom/hopf.hpp"
#include "hopfgeom/io.hpp"
#include "hopfgeom/ode_lemma.hpp"

#include "json.hpp"

#include <boost/version.hpp>

#include <chrono>
#include <cmath>
#include <functional>
#include <map>
#include <numbers>

namespace hopf {

namespace {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

constexpr const char* kModule = "cli_reports";
constexpr const char* kVersion = "0.1.0";
constexpr double kPi = std::numbers::pi;

struct Run {
    const Scenario& sc;
    std::optional<SurfaceSpec> spec;
    ScenarioResult result;
    json parameters = json::object();

    void write(const std::string& name, const std::string& text) {
        write_text_file(sc.out_dir / name, text);
        result.files.push_back(name);
    }
    void finding(std::string what) {
        result.status = kExitFinding;
        if (!result.finding.empty()) result.finding += "; ";
        result.finding += what;
    }
    const SurfaceSpec& surface() const { return *spec; }
    std::vector<int> ends() const { return sc.end == 0 ? std::vector<int>{1, 2} : std::vector<int>{sc.end}; }
};

double opt_or(const std::optional<double>& v, double fallback) { return v ? *v : fallback; }
std::size_t opt_or(const std::optional<std::size_t>& v, std::size_t fallback) { return v ? *v : fallback; }

void need_cylinder(const Run& run) {
    if (!run.surface().is_cylinder()) throw DomainError(kModule, "command '" + run.sc.command + "' needs a cylinder spec");
}

void cmd_check_metric(Run& run) {
    const SurfaceSpec& spec = run.surface();
    const double extent = opt_or(run.sc.r_max, 4.0);
    const std::size_t n = opt_or(run.sc.grid, std::size_t{9});
    run.parameters["rmax"] = extent;
    run.parameters["grid"] = n;
    double kmin = INFINITY, kmax = -INFINITY;
    CsvTable tbl{"u", "v", "K"};
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            const double a = n > 1 ? double(i) / double(n - 1) : 0.0, b = n > 1 ? double(j) / double(n - 1) : 0.0;
            PointChart p;
            if (spec.family() == Family::RotationalPlane)
                p = {extent * a, 2 * kPi * b};
            else if (spec.is_cylinder())
                p = {-extent + 2 * extent * a, 2 * kPi * b};
            else
                p = {-extent + 2 * extent * a, -extent + 2 * extent * b};
            const double K = gauss_curvature(spec, p);
            kmin = std::min(kmin, K);
            kmax = std::max(kmax, K);
            tbl.add_row({p.u, p.v, K});
        }
    json j;
    j["label"] = spec.label();
    j["family"] = std::string(family_name(spec.family()));
    j["source"] = spec.source();
    if (spec.family() == Family::FlatCylinder) j["radius"] = spec.radius();
    j["invariants"] = "ok";
    j["K_min"] = kmin;
    j["K_max"] = kmax;
    run.write("metric.json", j.dump(2));
    run.write("curvature.csv", tbl.str());
    run.result.verdict = "valid";
}

void cmd_geodesic(Run& run) {
    const double len = opt_or(run.sc.r_max, 10.0), tol = opt_or(run.sc.tol, 1e-10);
    run.parameters["rmax"] = len;
    run.parameters["tol"] = tol;
    const GeodesicPath path = shoot_geodesic(run.surface(), {run.sc.point, run.sc.angle}, len, tol);
    CsvTable tbl{"s", "u", "v", "angle", "speed_defect"};
    for (const auto& s : path.samples) tbl.add_row({s.s, s.point.u, s.point.v, s.tangent.angle, s.speed_defect});
    json j;
    j["length"] = len;
    j["tol"] = tol;
    j["end"] = {path.samples.back().point.u, path.samples.back().point.v};
    j["max_speed_defect"] = path.max_speed_defect;
    j["residual"] = geodesic_residual(path);
    run.write("geodesic.csv", tbl.str());
    run.write("geodesic.json", j.dump(2));
    run.result.verdict = "ok";
}

void cmd_conjugate_scan(Run& run) {
    const double r_max = opt_or(run.sc.r_max, 10.0), tol = opt_or(run.sc.tol, 1e-10);
    const std::size_t n = opt_or(run.sc.grid, std::size_t{64});
    run.parameters["rmax"] = r_max;
    run.parameters["grid"] = n;
    run.parameters["tol"] = tol;
    // Directions angle + 2 pi j / n. A direction whose geodesic leaves the
    // chart (e.g. through the point at infinity of a stereographic chart)
    // is recorded as such and does not stop the scan.
    CsvTable tbl{"theta", "first_conjugate", "chart_exit"};
    std::optional<double> best;
    double best_theta = 0.0;
    std::size_t exits = 0;
    for (std::size_t j = 0; j < n; ++j) {
        const double theta = run.sc.angle + 2 * kPi * double(j) / double(n);
        try {
            const auto c = first_conjugate(shoot_geodesic(run.surface(), {run.sc.point, theta}, r_max, tol), tol);
            tbl.add_row({theta, c ? *c : NAN, 0.0});
            if (c && (!best || *c < *best)) {
                best = c;
                best_theta = theta;
            }
        } catch (const NumericalError&) {
            ++exits;
            tbl.add_row({theta, NAN, 1.0});
        }
    }
    if (exits == n) throw NumericalError(kModule, "every scanned geodesic left the chart");
    json j;
    j["r_max"] = r_max;
    j["directions"] = n;
    j["tol"] = tol;
    j["chart_exits"] = exits;
    j["first_conjugate_min"] = best ? json(*best) : json(nullptr);
    j["theta_at_min"] = best ? json(best_theta) : json(nullptr);
    run.write("conjugate.csv", tbl.str());
    run.write("conjugate.json", j.dump(2));
    if (best) {
        run.result.verdict = "conjugate-points";
        run.finding("conjugate point at r=" + num(*best) + " along theta=" + num(best_theta));
    } else {
        run.result.verdict = exits ? "none-on-scanned-directions" : "none";
    }
}

void cmd_riccati(Run& run) {
    RiccatiOptions opt;
    opt.tol = opt_or(run.sc.tol, opt.tol);
    const double span = opt_or(run.sc.r_max, 4.0);
    run.parameters["tol"] = opt.tol;
    run.parameters["rmax"] = span;
    const UnitTangent v{run.sc.point, run.sc.angle};
    const RiccatiSample s = stable_riccati(run.surface(), v, opt);
    json j;
    j["U"] = s.U;
    j["convergence"] = s.convergence;
    j["horizon"] = s.horizon;
    j["converged"] = s.converged;
    j["monotone"] = s.monotone;
    j["u_T"] = s.u_T;
    j["ladder"] = opt.ladder;
    if (s.converged) j["residual"] = riccati_residual(run.surface(), v, span, opt);
    run.write("riccati.json", j.dump(2));
    run.result.verdict = s.converged ? "converged" : "not-converged";
    if (!s.converged) run.finding("stable Riccati limit not converged (estimate " + num(s.convergence) + ")");
}

void cmd_hopf_balance(Run& run) {
    const SurfaceSpec& spec = run.surface();
    const double r = opt_or(run.sc.r_max, 2.0);
    BalanceOptions opt;
    opt.n = run.sc.samples;
    opt.seed = *run.sc.seed;
    if (run.sc.tol) opt.riccati.tol = *run.sc.tol;
    run.parameters["rmax"] = r;
    run.parameters["samples"] = opt.n;
    run.parameters["riccati_tol"] = opt.riccati.tol;
    const Region q = spec.is_cylinder() ? Region::band(run.sc.point.u - r, run.sc.point.u + r) : Region::ball(run.sc.point, r);
    const BalanceReport rep = hopf_balance(spec, q, opt);
    run.write("hopf_balance.json", rep.to_json());
    run.result.verdict = rep.pass ? "balanced" : "unbalanced";
    if (!rep.pass) run.finding("balance discrepancy " + num(rep.discrepancy) + " exceeds budget " + num(rep.budget));
}

void cmd_ball_growth(Run& run) {
    const SurfaceSpec& spec = run.surface();
    const double r_max = opt_or(run.sc.r_max, 10.0);
    GrowthGrid grid;
    grid.n_theta = opt_or(run.sc.grid, grid.n_theta);
    run.parameters["rmax"] = r_max;
    run.parameters["grid"] = grid.n_theta;
    GrowthCurve g = ball_growth(spec, run.sc.point, r_max, grid);
    fiber_energy(spec, g, {}, grid);
    CsvTable lemma{"r", "A", "F", "R"};
    for (std::size_t k = 0; k < g.r.size(); ++k) lemma.add_row({g.r[k], g.A[k], g.F[k], g.Asecond[k]});
    json j;
    j["r_max"] = r_max;
    j["A"] = g.A.back();
    j["errA"] = g.errA.back();
    j["ratio"] = g.A.back() / (kPi * r_max * r_max);
    j["F"] = g.F.back();
    j["errF"] = g.errF.back();
    j["gauss_bonnet_defect"] = g.gauss_bonnet_defect();
    j["max_abs_K"] = g.max_abs_K;
    j["F_reliable"] = g.F_reliable;
    run.write("growth.csv", g.to_csv());
    run.write("lemma.csv", lemma.str());
    run.write("growth.json", j.dump(2));
    run.result.verdict = "ok";
}

void cmd_theorem1(Run& run) {
    const double r_max = opt_or(run.sc.r_max, 10.0);
    Theorem1Options opt;
    opt.tail = opt_or(run.sc.tail, opt.tail);
    opt.grid.n_theta = opt_or(run.sc.grid, opt.grid.n_theta);
    if (run.sc.tol) opt.flat_ratio_tol = *run.sc.tol;
    run.parameters["rmax"] = r_max;
    run.parameters["tail"] = opt.tail;
    run.parameters["grid"] = opt.grid.n_theta;
    run.parameters["flat_ratio_tol"] = opt.flat_ratio_tol;
    const Theorem1Report rep = theorem1_report(run.surface(), run.sc.point, r_max, opt);
    run.write("theorem1.json", rep.to_json());
    run.result.verdict = rep.verdict;
    if (rep.verdict == "premise-violated") run.finding("premise violated: " + rep.detail);
    else if (!rep.inequality_holds) run.finding("growth inequality violated by " + num(rep.inequality_max_violation));
}

void cmd_ode_lemma(Run& run) {
    if (run.sc.data.empty()) throw DomainError(kModule, "ode-lemma needs --data CSV with columns r,A,F,R");
    const double a = run.sc.abc_given ? run.sc.a : 2 * kPi;
    const double b = run.sc.abc_given ? run.sc.b : std::sqrt(2 * kPi);
    const double c = run.sc.abc_given ? run.sc.c : -4 * kPi * kPi;
    LemmaOptions opt;
    opt.tail = opt_or(run.sc.tail, opt.tail);
    opt.tol = opt_or(run.sc.tol, opt.tol);
    run.parameters["data"] = run.sc.data.generic_string();
    run.parameters["a"] = a;
    run.parameters["b"] = b;
    run.parameters["c"] = c;
    run.parameters["tail"] = opt.tail;
    run.parameters["tol"] = opt.tol;
    const LemmaVerdict v = sharp_bound(load_lemma_csv(run.sc.data, a, b, c), opt);
    run.write("ode_lemma.json", v.to_json());
    run.result.verdict = v.status;
    if (v.status == "fail") run.finding("sup F exceeds the bound by " + num(-v.margin));
    if (v.status == "precondition-failed") run.finding("lemma precondition failed: " + v.detail);
}

void cmd_busemann(Run& run) {
    const SurfaceSpec& spec = run.surface();
    BusemannOptions opt;
    if (run.sc.tol) opt.h = *run.sc.tol;
    const Ray ray = spec.is_cylinder() && run.sc.end != 0 ? Ray::axial(run.sc.base, run.sc.end) : Ray{run.sc.base, run.sc.angle};
    run.parameters["h"] = opt.h;
    run.parameters["ladder"] = opt.ladder;
    const BusemannValue b = busemann_value(spec, ray, run.sc.point, opt);
    json j;
    j["ray"] = {{"base", {ray.base.u, ray.base.v}}, {"angle", ray.angle}};
    j["point"] = {run.sc.point.u, run.sc.point.v};
    j["value"] = b.value;
    j["convergence"] = b.convergence;
    j["grid_step"] = opt.h;
    j["horizons"] = opt.ladder;
    j["truncated"] = b.truncated;
    j["ray_defect"] = b.ray_defect;
    j["monotone"] = b.monotone;
    run.write("busemann.json", j.dump(2));
    run.result.verdict = b.monotone ? "ok" : "non-monotone";
    if (!b.monotone) run.finding("truncated Busemann values increase with the horizon");
}

ExhaustionOptions exhaustion_options(Run& run) {
    ExhaustionOptions opt;
    opt.n_t = opt_or(run.sc.grid, opt.n_t);
    run.parameters["grid"] = opt.n_t;
    return opt;
}

void cmd_exhaustion(Run& run) {
    need_cylinder(run);
    const double r_max = opt_or(run.sc.r_max, 16.0);
    run.parameters["rmax"] = r_max;
    const ExhaustionOptions opt = exhaustion_options(run);
    json j = json::array();
    for (int e : run.ends()) {
        const ExhaustionCurve c = exhaustion_curves(run.surface(), run.sc.point, e, r_max, opt);
        run.write("exhaustion_end" + std::to_string(e) + ".csv", c.to_csv());
        json s;
        s["end"] = e;
        s["H"] = c.H.back();
        s["errH"] = c.errH.back();
        s["F"] = c.F.back();
        s["errF"] = c.errF.back();
        s["area_derivative_defect"] = c.area_derivative_defect;
        s["rotation_defect"] = c.rotation_defect;
        s["levels_circular"] = c.levels_circular;
        s["level_deviation"] = c.level_deviation;
        s["equidistant_defect"] = c.equidistant_defect;
        s["nonconverged"] = c.nonconverged;
        j.push_back(s);
        if (!c.levels_circular) run.finding("Busemann levels are not coordinate circles at end " + std::to_string(e));
    }
    run.write("exhaustion.json", j.dump(2));
    run.result.verdict = run.result.status == kExitPass ? "circular-levels" : "non-circular-levels";
}

void cmd_bol_fiala(Run& run) {
    need_cylinder(run);
    const double r_max = opt_or(run.sc.r_max, 16.0), tol = opt_or(run.sc.tol, 1e-6);
    run.parameters["rmax"] = r_max;
    run.parameters["tol"] = tol;
    ExhaustionOptions opt = exhaustion_options(run);
    opt.validate_levels = false;
    json j = json::array();
    for (int e : run.ends()) {
        const BolFialaResult r = bol_fiala_check(exhaustion_curves(run.surface(), run.sc.point, e, r_max, opt), tol);
        CsvTable tbl{"r", "margin"};
        for (std::size_t k = 0; k < r.r.size(); ++k) tbl.add_row({r.r[k], r.margin[k]});
        run.write("bol_fiala_end" + std::to_string(e) + ".csv", tbl.str());
        j.push_back({{"end", e}, {"min_margin", r.min_margin}, {"tol", tol}, {"pass", r.pass}});
        if (!r.pass) run.finding("Bol-Fiala margin " + num(r.min_margin) + " at end " + std::to_string(e));
    }
    run.write("bol_fiala.json", j.dump(2));
    run.result.verdict = run.result.status == kExitPass ? "pass" : "fail";
}

void cmd_end_opening(Run& run) {
    need_cylinder(run);
    EndOpeningOptions opt;
    const double tol = opt_or(run.sc.tol, 1e-6);
    run.parameters["ladder"] = opt.ladder;
    run.parameters["threshold"] = opt.threshold;
    run.parameters["tol"] = tol;
    std::string verdict;
    for (int e : run.ends()) {
        const EndOpeningReport r = end_opening_report(run.surface(), run.sc.point, e, opt);
        const std::string tag = "end" + std::to_string(e);
        run.write("end_opening_" + tag + ".json", r.to_json());
        if (!verdict.empty()) verdict += ", ";
        verdict += tag + ": " + (r.opens_less_than_linearly ? "yes" : "no") + "/" + (r.subquadratic ? "yes" : "no");
        if (!r.agreement) run.finding("opening and area-growth verdicts disagree at " + tag);
        if (r.sphere_min < -tol) run.finding("sphere-length comparison fails at " + tag + " by " + num(-r.sphere_min));
        if (!r.eight_pi_holds) run.finding("area bound (8/pi)(s+L)L fails at " + tag);
    }
    run.result.verdict = verdict;
}

void cmd_theorem2(Run& run) {
    need_cylinder(run);
    Theorem2Options opt;
    opt.r_max = opt_or(run.sc.r_max, opt.r_max);
    opt.tail = opt_or(run.sc.tail, opt.tail);
    opt.exhaustion.n_t = opt_or(run.sc.grid, opt.exhaustion.n_t);
    run.parameters["rmax"] = opt.r_max;
    run.parameters["tail"] = opt.tail;
    run.parameters["grid"] = opt.exhaustion.n_t;
    const Theorem2Report rep = theorem2_report(run.surface(), run.sc.point, opt);
    run.write("theorem2.json", rep.to_json());
    run.result.verdict = rep.verdict;
    if (rep.verdict == "premise-violated") run.finding(rep.detail);
}

const std::map<std::string, std::function<void(Run&)>>& dispatch() {
    static const std::map<std::string, std::function<void(Run&)>> table{
        {"check-metric", cmd_check_metric}, {"geodesic", cmd_geodesic},       {"conjugate-scan", cmd_conjugate_scan},
        {"riccati", cmd_riccati},           {"hopf-balance", cmd_hopf_balance}, {"ball-growth", cmd_ball_growth},
        {"theorem1", cmd_theorem1},         {"ode-lemma", cmd_ode_lemma},     {"busemann", cmd_busemann},
        {"exhaustion", cmd_exhaustion},     {"bol-fiala", cmd_bol_fiala},     {"end-opening", cmd_end_opening},
        {"theorem2", cmd_theorem2},
    };
    return table;
}

}  // namespace

const std::vector<std::string>& scenario_commands() {
    static const std::vector<std::string> names{"check-metric", "geodesic",   "conjugate-scan", "riccati",   "hopf-balance",
                                                "ball-growth",  "theorem1",   "ode-lemma",      "busemann",  "exhaustion",
                                                "bol-fiala",    "end-opening", "theorem2"};
    return names;
}

void Scenario::validate() const {
    if (!dispatch().count(command)) throw DomainError(kModule, "unknown command '" + command + "'");
    if (command != "ode-lemma" && spec_path.empty()) throw DomainError(kModule, "--spec is required");
    auto positive = [](const std::optional<double>& v, const char* name) {
        if (v && !(*v > 0.0)) throw DomainError(kModule, std::string(name) + " must be positive");
    };
    positive(tol, "--tol");
    positive(r_max, "--rmax");
    if (tail && !(*tail > 0.0 && *tail < 1.0)) throw DomainError(kModule, "--tail must lie in (0, 1)");
    if (grid && *grid == 0) throw DomainError(kModule, "--grid must be positive");
    if (end < 0 || end > 2) throw DomainError(kModule, "--end must be 1 or 2");
    if (command == "hopf-balance") {
        if (!seed) throw DomainError(kModule, "hopf-balance samples randomly and needs --seed");
        if (samples == 0) throw DomainError(kModule, "--samples must be positive");
    }
}

ScenarioResult run_scenario(const Scenario& scenario) {
    scenario.validate();
    const auto start = std::chrono::steady_clock::now();
    fs::create_directories(scenario.out_dir);
    Run run{scenario, std::nullopt, {}, json::object()};
    if (!scenario.spec_path.empty()) run.spec = load_metric_spec(scenario.spec_path);

    try {
        dispatch().at(scenario.command)(run);
    } catch (const PremiseViolation& e) {
        run.result.verdict = "premise-violated";
        run.finding("premise violated [" + e.module() + "]: " + e.what());
    }

    json m;
    m["tool"] = "hopfgeom";
    m["version"] = kVersion;
    m["command"] = scenario.command;
    if (run.spec) {
        m["spec"] = {{"path", scenario.spec_path.generic_string()},
                     {"label", run.spec->label()},
                     {"family", std::string(family_name(run.spec->family()))},
                     {"source", run.spec->source()}};
    }
    m["seed"] = scenario.seed ? json(*scenario.seed) : json(nullptr);
    m["point"] = {scenario.point.u, scenario.point.v};
    m["angle"] = scenario.angle;
    m["end"] = scenario.end;
    m["parameters"] = run.parameters;
    m["versions"] = {{"hopfgeom", kVersion}, {"boost", BOOST_LIB_VERSION}, {"compiler", __VERSION__}};
    m["status"] = run.result.status;
    m["verdict"] = run.result.verdict;
    m["finding"] = run.result.finding;
    json outputs = json::array();
    for (const auto& f : run.result.files) outputs.push_back({{"file", f.generic_string()}, {"bytes", fs::file_size(scenario.out_dir / f)}});
    m["outputs"] = outputs;
    m["timing_file"] = "timing.json";
    write_text_file(scenario.out_dir / "manifest.json", m.dump(2) + "\n");
    run.result.files.push_back("manifest.json");

    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    write_text_file(scenario.out_dir / "timing.json", json{{"wall_seconds", wall}}.dump(2) + "\n");
    return run.result;
}

}  // namespace hopf
