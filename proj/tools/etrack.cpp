#include "etrack/cli.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <map>

namespace {

std::string command_line(int argc, char** argv) {
    std::string out = "etrack";
    for (int i = 1; i < argc; ++i) {
        out += " ";
        out += argv[i];
    }
    return out;
}

const std::map<std::string, etrack::extent::NuMode> kNuModes{{"closed", etrack::extent::NuMode::kClosedForm},
                                                             {"optimal", etrack::extent::NuMode::kOptimal}};
const std::map<std::string, etrack::extent::TaylorWeight> kHalfFactor{{"on", etrack::extent::TaylorWeight::kHalf},
                                                                      {"off", etrack::extent::TaylorWeight::kUnit}};

}  // namespace

int main(int argc, char** argv) {
    using namespace etrack::cli;
    CLI::App app{"Extended-target tracking simulator with inverse Wishart extent models"};
    app.set_version_flag("--version", software_version());
    app.require_subcommand(1);

    SweepOptions sweep;
    std::string sweep_half = "off";
    auto* sweep_cmd = app.add_subcommand("sweep-nu", "Closed-form vs optimal predicted dof over a (v, turn-rate std) grid");
    sweep_cmd->add_option("--out", sweep.out_dir, "Output directory")->capture_default_str();
    sweep_cmd->add_option("--v-min", sweep.grid.v_min, "Smallest transition dof")->capture_default_str();
    sweep_cmd->add_option("--v-max", sweep.grid.v_max, "Largest transition dof")->capture_default_str();
    sweep_cmd->add_option("--v-steps", sweep.grid.v_steps, "Number of dof nodes")->capture_default_str();
    sweep_cmd->add_option("--std-max-deg", sweep.grid.std_max_deg, "Largest turn-rate std times T [deg]")
        ->capture_default_str();
    sweep_cmd->add_option("--std-steps", sweep.grid.std_steps, "Number of std nodes")->capture_default_str();
    sweep_cmd->add_option("--omega-deg", sweep.grid.omega_deg, "Mean turn angle per step [deg]")->capture_default_str();
    sweep_cmd->add_option("--taylor-half-factor", sweep_half, "Weight 1/2 on the second-order expansion terms")
        ->check(CLI::IsMember({"on", "off"}))
        ->capture_default_str();

    SimulateOptions sim;
    std::string sim_nu_mode;
    std::string sim_half;
    int runs = 0;
    std::uint64_t seed = 0;
    unsigned threads = 0;
    auto* sim_cmd = app.add_subcommand("simulate", "Monte-Carlo run of a scenario file");
    sim_cmd->add_option("--scenario", sim.scenario, "Scenario file, or constant_turn / variable_turn")->required();
    auto* runs_opt = sim_cmd->add_option("--runs", runs, "Number of Monte-Carlo runs")->check(CLI::PositiveNumber);
    auto* seed_opt = sim_cmd->add_option("--seed", seed, "Master seed");
    auto* threads_opt =
        sim_cmd->add_option("--threads", threads, "Worker threads (0 = hardware; default $ETRACK_THREADS)");
    sim_cmd->add_option("--out", sim.out_dir, "Output directory")->capture_default_str();
    sim_cmd->add_option("--nu-mode", sim_nu_mode, "Predicted dof of the proposed filter")
        ->check(CLI::IsMember({"closed", "optimal"}));
    sim_cmd->add_option("--taylor-half-factor", sim_half, "Weight 1/2 on the second-order expansion terms")
        ->check(CLI::IsMember({"on", "off"}));
    sim_cmd->add_flag("--no-noise", sim.no_noise, "No measurement noise and no initial perturbation");
    sim_cmd->add_flag("--validate", sim.validate, "Run the oracle suite first");

    ValidateOptions val;
    std::string fault;
    auto* val_cmd = app.add_subcommand("validate", "Run the sampling and property oracle suite");
    val_cmd->add_option("--seed", val.seed, "Suite seed")->capture_default_str();
    val_cmd->add_option("--draws", val.draws, "Monte-Carlo sample size")->capture_default_str();
    val_cmd->add_option("--out", val.out_dir, "Output directory")->capture_default_str();
    val_cmd->add_option("--inject-fault", fault, "Deliberately perturb a special function")
        ->check(CLI::IsMember({"trigamma-offset"}));

    CLI11_PARSE(app, argc, argv);

    const auto cmd = command_line(argc, argv);
    try {
        if (*sweep_cmd) {
            sweep.command_line = cmd;
            sweep.grid.taylor_weight = kHalfFactor.at(sweep_half);
            return cmd_sweep_nu(sweep);
        }
        if (*sim_cmd) {
            sim.command_line = cmd;
            if (*runs_opt) {
                sim.runs = runs;
            }
            if (*seed_opt) {
                sim.seed = seed;
            }
            if (*threads_opt) {
                sim.threads = threads;
            }
            if (!sim_nu_mode.empty()) {
                sim.nu_mode = kNuModes.at(sim_nu_mode);
            }
            if (!sim_half.empty()) {
                sim.taylor_weight = kHalfFactor.at(sim_half);
            }
            return cmd_simulate(sim);
        }
        val.command_line = cmd;
        val.inject_trigamma_fault = fault == "trigamma-offset";
        return cmd_validate(val);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
