// expcli.hpp: experiment configs, runners and CSV/JSON output
//
// Config text is flat: `key = value` lines grouped under `[section]` headers, or
// written with a dotted path (`model.theta = 0.4pi`). `#` and `;` start comments.
// Numbers accept a `pi` factor and one division: `0.4pi`, `pi/4`, `3/8`.

#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "gcl/errors.hpp"
#include "gcl/model.hpp"

namespace gcl::exp {

enum class Experiment {
    Ringdown,
    Populations,
    TeffScan,
    LinearResponse,
    ResponseMaxima,
    Bistability,
    Fluctuations,
    Parametric,
};

const char* to_string(Experiment e) noexcept;
const char* family_name(Family f) noexcept;

/// Control variable of each runner's sweep.
const char* sweep_variable(Experiment e) noexcept;

/// Every accepted key with its common default ("" = unset).
const std::map<std::string, std::string>& known_keys();

/// Per-experiment defaults layered over the common ones.
const std::map<std::string, std::string>& experiment_defaults(Experiment e);

double parse_number(const std::string& key, const std::string& text);
std::vector<double> parse_list(const std::string& key, const std::string& text);

struct Numerics {
    int N = 40;
    int steps_per_period = 200;
    int max_doublings = 3;
    double trace_tolerance = 1e-8;
    double residual_tolerance = 1e-9;
    double stroboscopic_tolerance = 1e-8;
    double max_time = 0.0;
    int snapshots = 200;
    double positivity_epsilon = 1e-6;
    int guard = 5;
    int dwell_periods = 300;
    int average_periods = 50;
    int classical_steps_per_period = 400;
};

struct ExperimentConfig {
    Experiment experiment = Experiment::Ringdown;
    ModelParams model;           // drives left empty; runners attach tones per point
    double drive_F = 0.0;        // linear amplitude F
    double drive_F2 = 0.0;       // two-photon amplitude F₂
    std::vector<Family> families;
    double x0 = 0.0;             // ringdown start, 0 = twice the nonlinear-damping threshold
    double duration = 0.0;       // ringdown length, 0 = automatic
    Numerics numerics;
    std::string sweep_variable;
    std::vector<double> sweep;
    std::vector<double> grid;    // detuning grid of linear-response
    std::string out_dir = ".";
    std::string out_name;
    std::map<std::string, std::string> resolved; // every key after defaults and overrides
};

/// Parses and validates. `overrides` are `key=value` strings applied after the file.
/// Throws ConfigError naming the key.
ExperimentConfig parse_config(std::string_view text, const std::vector<std::string>& overrides = {});

struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
};

struct RunResult {
    Table table;
    nlohmann::json diagnostics = nlohmann::json::object();
    int tasks = 0;
    int failures = 0;
};

/// Runs the experiment on a pool of `threads` workers. Rows come out in control-value order
/// regardless of the pool size.
RunResult run_experiment(const ExperimentConfig& cfg, int threads = 1);

/// 12 significant digits, `#` header block carrying the resolved config.
std::string format_csv(const ExperimentConfig& cfg, const Table& table);

nlohmann::json metadata(const ExperimentConfig& cfg, const RunResult& result, double wall_seconds);

/// 0 success, 3 all tasks failed, 4 some failed.
int exit_code(const RunResult& result);

/// Writes <out_dir>/<name>.csv and <name>.json; returns the CSV path.
std::string write_outputs(const ExperimentConfig& cfg, const RunResult& result, double wall_seconds);

} // namespace gcl::exp
