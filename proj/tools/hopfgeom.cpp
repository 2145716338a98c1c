#include "hopfgeom/error.hpp"
#include "hopfgeom/scenario.hpp"

#include "CLI11.hpp"

#include <iostream>

namespace {

hopf::PointChart to_point(const std::vector<double>& xy) { return {xy.at(0), xy.at(1)}; }

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Numerical diagnostics for surfaces without conjugate points"};
    app.set_config("--config", "", "Scenario file (TOML or INI keys named after the long flags)");

    hopf::Scenario sc;
    std::string command, spec, out = "out", data;
    std::uint64_t seed = 0;
    double tol = 0, rmax = 0, tail = 0;
    std::size_t grid = 0;
    std::vector<double> point{0.0, 0.0}, base{0.0, 0.0}, abc;

    app.add_option("command", command, "Command to run")
        ->required()
        ->check(CLI::IsMember(hopf::scenario_commands()));
    app.add_option("--spec", spec, "Metric spec file");
    app.add_option("--out", out, "Output directory")->capture_default_str();
    auto* seed_opt = app.add_option("--seed", seed, "Random seed (hopf-balance)");
    auto* tol_opt = app.add_option("--tol", tol, "Tolerance; integrator, verdict or grid step depending on the command");
    auto* rmax_opt = app.add_option("--rmax", rmax, "Radius, length or window extent");
    auto* grid_opt = app.add_option("--grid", grid, "Grid size (directions, levels or samples per axis)");
    auto* tail_opt = app.add_option("--tail", tail, "Tail window as a fraction of rmax");
    app.add_option("--point", point, "Basepoint u,v (query point for busemann)")->delimiter(',')->expected(2);
    app.add_option("--base", base, "Ray origin u,v for busemann")->delimiter(',')->expected(2);
    app.add_option("--angle", sc.angle, "Direction angle at the basepoint");
    app.add_option("--end", sc.end, "Cylinder end 1 or 2 (default both)");
    app.add_option("--samples", sc.samples, "Sample count for hopf-balance")->capture_default_str();
    app.add_option("--data", data, "CSV with columns r,A,F,R for ode-lemma");
    app.add_option("--abc", abc, "Lemma constants a,b,c")->delimiter(',')->expected(3);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : hopf::kExitError;
    }

    sc.command = command;
    sc.spec_path = spec;
    sc.out_dir = out;
    sc.data = data;
    sc.point = to_point(point);
    sc.base = to_point(base);
    if (*seed_opt) sc.seed = seed;
    if (*tol_opt) sc.tol = tol;
    if (*rmax_opt) sc.r_max = rmax;
    if (*grid_opt) sc.grid = grid;
    if (*tail_opt) sc.tail = tail;
    if (!abc.empty()) {
        sc.a = abc[0];
        sc.b = abc[1];
        sc.c = abc[2];
        sc.abc_given = true;
    }

    try {
        const hopf::ScenarioResult r = hopf::run_scenario(sc);
        std::cout << command << ": " << r.verdict << "\n";
        if (!r.finding.empty()) std::cout << "finding: " << r.finding << "\n";
        std::cout << "outputs: " << sc.out_dir.string() << "\n";
        return r.status;
    } catch (const hopf::Error& e) {
        std::cerr << "error [" << e.module() << "]: " << e.what() << "\n";
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
    }
    return hopf::kExitError;
}
