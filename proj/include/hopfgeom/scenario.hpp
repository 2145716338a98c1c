#pragma once

#include "hopfgeom/metric.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace hopf {

// Exit statuses of a scenario run.
enum ExitStatus : int { kExitPass = 0, kExitError = 1, kExitFinding = 2 };

// Every command name the front end accepts, in help order.
const std::vector<std::string>& scenario_commands();

struct Scenario {
    std::string command;
    std::filesystem::path spec_path;
    std::filesystem::path out_dir = "out";
    std::optional<std::uint64_t> seed;
    std::optional<double> tol;       // meaning depends on the command
    std::optional<double> r_max;
    std::optional<std::size_t> grid;
    std::optional<double> tail;

    PointChart point{0.0, 0.0};      // basepoint, or query point for busemann
    PointChart base{0.0, 0.0};       // ray origin for busemann
    double angle = 0.0;
    int end = 0;                     // 0 = both ends
    std::size_t samples = 100000;    // hopf-balance sample count
    std::filesystem::path data;      // ode-lemma CSV
    double a = 0.0, b = 0.0, c = 0.0;
    bool abc_given = false;

    // Throws DomainError on a bad parameter.
    void validate() const;
};

struct ScenarioResult {
    int status = kExitPass;
    std::string verdict;
    std::string finding;                        // set when status == kExitFinding
    std::vector<std::filesystem::path> files;   // outputs, manifest included
};

// Dispatches to the command and writes its outputs plus manifest.json into
// out_dir. Module errors propagate as exceptions; the caller maps them to
// kExitError. Wall time goes to timing.json, outside the manifest, so
// reruns give byte-identical manifests.
ScenarioResult run_scenario(const Scenario& scenario);

}  // namespace hopf
