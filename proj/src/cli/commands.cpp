#include "etrack/cli.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <iostream>

namespace etrack::cli {
namespace {

std::string out_path(const std::string& dir, const std::string& file) {
    return (std::filesystem::path(dir) / file).string();
}

std::string sweep_config_text(const SweepGrid& g) {
    return fmt::format(
        "v_min: {}\nv_max: {}\nv_steps: {}\nstd_max_deg: {}\nstd_steps: {}\nomega_deg: {}\ndt: {}\n"
        "v_bar: [[{}, {}], [{}, {}]]\ntaylor_half_factor: {}\n",
        g.v_min, g.v_max, g.v_steps, g.std_max_deg, g.std_steps, g.omega_deg, g.dt, g.v_bar(0, 0), g.v_bar(0, 1),
        g.v_bar(1, 0), g.v_bar(1, 1), g.taylor_weight == extent::TaylorWeight::kHalf);
}

bool run_validation(const ValidateOptions& opts, std::vector<validation::OracleResult>& results) {
    validation::SuiteOptions suite;
    suite.seed = opts.seed;
    suite.draws = opts.draws;
    suite.taylor_draws = opts.draws;
    if (opts.inject_trigamma_fault) {
        suite.functions = validation::SpecialFunctionSet::trigamma_offset(1e-3);
    }
    results = validation::run_suite(suite);
    std::cout << validation_table(results);
    return std::all_of(results.begin(), results.end(), [](const auto& r) { return r.passed; });
}

}  // namespace

unsigned resolve_threads(std::optional<unsigned> flag) {
    if (flag) {
        return *flag;
    }
    if (const char* env = std::getenv("ETRACK_THREADS"); env != nullptr && *env != '\0') {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (*end != '\0' || v < 0) {
            throw std::runtime_error(fmt::format("ETRACK_THREADS must be a non-negative integer, got '{}'", env));
        }
        return static_cast<unsigned>(v);
    }
    return 0;
}

void apply_overrides(sim::ScenarioConfig& cfg, const SimulateOptions& opts) {
    if (opts.runs) {
        cfg.n_runs = *opts.runs;
    }
    if (opts.seed) {
        cfg.master_seed = *opts.seed;
    }
    if (opts.no_noise) {
        cfg.noise_free = true;
    }
    for (auto& e : cfg.estimators) {
        if (opts.nu_mode) {
            e.nu_mode = *opts.nu_mode;
        }
        if (opts.taylor_weight) {
            e.taylor_weight = *opts.taylor_weight;
        }
    }
}

int cmd_sweep_nu(const SweepOptions& opts) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto rows = sweep_nu(opts.grid);
    RunManifest manifest{opts.command_line, sweep_config_text(opts.grid), std::nullopt, software_version(),
                         manifest_timestamp()};
    const auto path = out_path(opts.out_dir, "sweep_nu.csv");
    write_file(path, manifest.header() + sweep_csv(rows));
    double worst = 0.0;
    for (const auto& r : rows) {
        worst = std::max(worst, r.rel_err);
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::cout << fmt::format("sweep-nu: {} grid points, max rel_err {:.4g}, {:.2f}s -> {}\n", rows.size(), worst, secs,
                             path);
    return 0;
}

int cmd_simulate(const SimulateOptions& opts) {
    auto cfg = resolve_scenario(opts.scenario);
    apply_overrides(cfg, opts);
    // The run uses exactly the configuration written into the manifest.
    const auto snapshot = emit_scenario(cfg);
    cfg = parse_scenario(snapshot);

    if (opts.validate) {
        std::vector<validation::OracleResult> results;
        if (!run_validation(ValidateOptions{}, results)) {
            std::cerr << "simulate: oracle suite failed, not running the simulation\n";
            return 1;
        }
    }

    const auto t0 = std::chrono::steady_clock::now();
    const auto report = sim::run_monte_carlo(cfg, resolve_threads(opts.threads));
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    RunManifest manifest{opts.command_line, snapshot, cfg.master_seed, software_version(), manifest_timestamp()};
    const auto csv_path = out_path(opts.out_dir, cfg.name + "_metrics.csv");
    const auto json_path = out_path(opts.out_dir, cfg.name + "_summary.json");
    write_file(csv_path, manifest.header() + metrics_csv(report));
    write_file(json_path, summary_json(report, manifest));

    std::cout << fmt::format("simulate: scenario {}, {} runs x {} steps, {:.1f}s\n", report.scenario, report.n_runs,
                             report.n_steps, secs);
    for (const auto& e : report.estimators) {
        double gw = 0.0;
        for (const auto& s : e.steps) {
            gw += s.gw;
        }
        std::cout << fmt::format("  {:<6} mean gw {:8.3f}  diverged {}/{}\n", e.name,
                                 gw / static_cast<double>(std::max<std::size_t>(e.steps.size(), 1)), e.diverged_runs,
                                 report.n_runs);
    }
    std::cout << fmt::format("  -> {}\n  -> {}\n", csv_path, json_path);
    return 0;
}

int cmd_validate(const ValidateOptions& opts) {
    std::vector<validation::OracleResult> results;
    const bool ok = run_validation(opts, results);
    const std::string config =
        fmt::format("draws: {}\ninject_fault: {}\n", opts.draws, opts.inject_trigamma_fault ? "trigamma-offset" : "none");
    RunManifest manifest{opts.command_line, config, opts.seed, software_version(), manifest_timestamp()};
    const auto path = out_path(opts.out_dir, "validation_report.json");
    write_file(path, validation_json(results, manifest));
    std::cout << fmt::format("validate: {} -> {}\n", ok ? "all oracles passed" : "ORACLE FAILURE", path);
    return ok ? 0 : 1;
}

}  // namespace etrack::cli
