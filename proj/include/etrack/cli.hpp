#pragma once

#include "etrack/extent.hpp"
#include "etrack/simharness.hpp"
#include "etrack/validation.hpp"

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace etrack::cli {

/// Malformed scenario file; the message starts with the offending key path.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

[[nodiscard]] sim::ScenarioConfig parse_scenario(const std::string& yaml_text);
[[nodiscard]] sim::ScenarioConfig load_scenario(const std::string& path);
/// Scenario file text that parses back to an identical configuration.
[[nodiscard]] std::string emit_scenario(const sim::ScenarioConfig& cfg);
/// A file path, or one of the built-in names "constant_turn" / "variable_turn".
[[nodiscard]] sim::ScenarioConfig resolve_scenario(const std::string& path_or_name);

struct RunManifest {
    std::string command;
    std::string config;
    /// Absent for commands without randomness.
    std::optional<std::uint64_t> seed;
    std::string version;
    std::string timestamp;

    /// Lines prefixed with "# ".
    [[nodiscard]] std::string header() const;
};

[[nodiscard]] std::string software_version();
/// UTC ISO-8601 time; SOURCE_DATE_EPOCH, when set, replaces the clock.
[[nodiscard]] std::string manifest_timestamp();

struct SweepGrid {
    double v_min = 6.5;
    double v_max = 60.0;
    int v_steps = 108;
    double std_max_deg = 20.0;
    int std_steps = 21;
    double omega_deg = 10.0;
    double dt = 1.0;
    Eigen::Matrix2d v_bar = Eigen::Vector2d(100.0, 25.0).asDiagonal();
    extent::TaylorWeight taylor_weight = extent::TaylorWeight::kUnit;
};

struct SweepRow {
    double v;
    double turn_rate_var_deg2;
    double nu_optimal;
    double nu_closed;
    double rel_err;
};

/// Optimal and closed-form predicted dof over a (v, turn-rate std) grid with evenly spaced nodes.
[[nodiscard]] std::vector<SweepRow> sweep_nu(const SweepGrid& grid);
[[nodiscard]] std::string sweep_csv(const std::vector<SweepRow>& rows);
/// Per-step metrics, k-major, estimators in configuration order.
[[nodiscard]] std::string metrics_csv(const sim::MetricsReport& report);
[[nodiscard]] std::string summary_json(const sim::MetricsReport& report, const RunManifest& manifest);
[[nodiscard]] std::string validation_json(const std::vector<validation::OracleResult>& results,
                                          const RunManifest& manifest);
/// Human-readable pass/fail table with a per-result coverage listing.
[[nodiscard]] std::string validation_table(const std::vector<validation::OracleResult>& results);

struct SweepOptions {
    SweepGrid grid;
    std::string out_dir = "results";
    std::string command_line;
};

struct SimulateOptions {
    std::string scenario;
    std::optional<int> runs;
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> threads;
    std::optional<extent::NuMode> nu_mode;
    std::optional<extent::TaylorWeight> taylor_weight;
    bool no_noise = false;
    bool validate = false;
    std::string out_dir = "results";
    std::string command_line;
};

struct ValidateOptions {
    std::uint64_t seed = 20240611;
    std::size_t draws = 1'000'000;
    bool inject_trigamma_fault = false;
    std::string out_dir = "results";
    std::string command_line;
};

/// Thread count from the flag, else ETRACK_THREADS, else 0 (hardware concurrency).
[[nodiscard]] unsigned resolve_threads(std::optional<unsigned> flag);

/// Applies the command-line overrides to a scenario.
void apply_overrides(sim::ScenarioConfig& cfg, const SimulateOptions& opts);

int cmd_sweep_nu(const SweepOptions& opts);
int cmd_simulate(const SimulateOptions& opts);
int cmd_validate(const ValidateOptions& opts);

/// Writes `text` to `path`, creating parent directories; throws std::runtime_error on failure.
void write_file(const std::string& path, const std::string& text);

}  // namespace etrack::cli
