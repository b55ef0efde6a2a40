#include "etrack/cli.hpp"

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <numbers>

#ifndef ETRACK_VERSION
#define ETRACK_VERSION "unknown"
#endif

namespace etrack::cli {
namespace {

using Json = nlohmann::ordered_json;

std::string csv_num(double x) { return fmt::format("{:.12g}", x); }

/// Nan and infinities become null so that the document stays valid JSON.
Json json_num(double x) { return std::isfinite(x) ? Json(x) : Json(nullptr); }

Json manifest_json(const RunManifest& m) {
    Json j;
    j["command"] = m.command;
    j["version"] = m.version;
    j["seed"] = m.seed ? Json(*m.seed) : Json(nullptr);
    j["timestamp"] = m.timestamp;
    j["config"] = m.config;
    return j;
}

}  // namespace

std::string software_version() { return ETRACK_VERSION; }

std::string manifest_timestamp() {
    std::time_t t = 0;
    const char* epoch = std::getenv("SOURCE_DATE_EPOCH");
    if (epoch != nullptr && *epoch != '\0') {
        char* end = nullptr;
        const long long v = std::strtoll(epoch, &end, 10);
        if (*end != '\0' || v < 0) {
            throw std::runtime_error(fmt::format("SOURCE_DATE_EPOCH must be a non-negative integer, got '{}'", epoch));
        }
        t = static_cast<std::time_t>(v);
    } else {
        t = std::time(nullptr);
    }
    std::tm utc{};
    gmtime_r(&t, &utc);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &utc);
    return buf;
}

std::string RunManifest::header() const {
    std::string out = fmt::format("# etrack {}\n# command: {}\n", version, command);
    out += seed ? fmt::format("# seed: {}\n", *seed) : std::string("# seed: none\n");
    out += fmt::format("# timestamp: {}\n# config:\n", timestamp);
    std::size_t pos = 0;
    while (pos < config.size()) {
        const auto nl = config.find('\n', pos);
        const auto end = nl == std::string::npos ? config.size() : nl;
        out += "#   " + config.substr(pos, end - pos) + "\n";
        pos = end + 1;
    }
    return out;
}

std::vector<SweepRow> sweep_nu(const SweepGrid& grid) {
    constexpr int d = 2;
    if (!(grid.v_min > 2.0 * d + 2.0) || !(grid.v_max >= grid.v_min) || grid.v_steps < 1 || grid.std_steps < 1 ||
        !(grid.std_max_deg >= 0.0) || !(grid.dt > 0.0) || (grid.v_steps == 1 && grid.v_max != grid.v_min)) {
        throw DomainError(fmt::format("sweep grid invalid: need 2d + 2 < v_min <= v_max, steps >= 1, std_max >= 0, dt > 0"));
    }
    const double deg = std::numbers::pi / 180.0;
    const SpdMatrix v_bar(grid.v_bar);
    const auto transform = extent::ExtentTransform::rotation(grid.dt);
    std::vector<SweepRow> rows;
    rows.reserve(static_cast<std::size_t>(grid.v_steps) * static_cast<std::size_t>(grid.std_steps));
    for (int i = 0; i < grid.v_steps; ++i) {
        const double v =
            grid.v_steps == 1 ? grid.v_min : grid.v_min + (grid.v_max - grid.v_min) * i / (grid.v_steps - 1);
        for (int j = 0; j < grid.std_steps; ++j) {
            const double std_deg = grid.std_steps == 1 ? grid.std_max_deg : grid.std_max_deg * j / (grid.std_steps - 1);
            // Turn-rate std in deg/s so that dt * omega has the gridded angular spread.
            const double omega_std = std_deg / grid.dt * deg;
            kinematics::GaussianState kin{Eigen::VectorXd::Zero(5), Eigen::MatrixXd::Zero(5, 5)};
            kin.mean(4) = grid.omega_deg / grid.dt * deg;
            kin.cov(4, 4) = omega_std * omega_std;
            const auto c = extent::taylor_expectations(transform, v_bar, kin, grid.taylor_weight);
            const double opt = extent::nu_optimal(v, c.c1, c.c3, d);
            const double closed = extent::nu_closed_form(v, c.c1, c.c2, d);
            const double var_deg2 = (std_deg / grid.dt) * (std_deg / grid.dt);
            rows.push_back({v, var_deg2, opt, closed, std::abs(closed - opt) / opt});
        }
    }
    return rows;
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
    std::string out = "v,turn_rate_var_deg2,nu_optimal,nu_closed,rel_err\n";
    for (const auto& r : rows) {
        out += fmt::format("{},{},{},{},{}\n", csv_num(r.v), csv_num(r.turn_rate_var_deg2), csv_num(r.nu_optimal),
                           csv_num(r.nu_closed), csv_num(r.rel_err));
    }
    return out;
}

std::string metrics_csv(const sim::MetricsReport& report) {
    std::string out = "k,estimator,gw,anees_x,anees_ext,nu,logdet_V\n";
    for (int k = 0; k < report.n_steps; ++k) {
        for (const auto& e : report.estimators) {
            const auto& s = e.steps.at(static_cast<std::size_t>(k));
            out += fmt::format("{},{},{},{},{},{},{}\n", k, e.name, csv_num(s.gw), csv_num(s.anees_x),
                               csv_num(s.anees_ext), csv_num(s.nu), csv_num(s.logdet_v));
        }
    }
    return out;
}

std::string summary_json(const sim::MetricsReport& report, const RunManifest& manifest) {
    Json j;
    j["manifest"] = manifest_json(manifest);
    j["scenario"] = report.scenario;
    j["runs"] = report.n_runs;
    j["steps"] = report.n_steps;
    Json ests = Json::array();
    for (const auto& e : report.estimators) {
        double gw = 0.0;
        double gw_max = 0.0;
        double ax = 0.0;
        double ae = 0.0;
        double nu = 0.0;
        for (const auto& s : e.steps) {
            gw += s.gw;
            gw_max = std::max(gw_max, s.gw);
            ax += s.anees_x;
            ae += s.anees_ext;
            nu += s.nu;
        }
        const double n = static_cast<double>(std::max<std::size_t>(e.steps.size(), 1));
        Json je;
        je["name"] = e.name;
        je["valid_runs"] = e.valid_runs;
        je["diverged_runs"] = e.diverged_runs;
        je["mean_gw"] = json_num(gw / n);
        je["max_gw"] = json_num(gw_max);
        je["mean_anees_x"] = json_num(ax / n);
        je["mean_anees_ext"] = json_num(ae / n);
        je["mean_nu"] = json_num(nu / n);
        je["final_gw"] = e.steps.empty() ? Json(nullptr) : json_num(e.steps.back().gw);
        je["divergence_messages"] = e.divergence_messages;
        ests.push_back(std::move(je));
    }
    j["estimators"] = std::move(ests);
    return j.dump(2) + "\n";
}

std::string validation_json(const std::vector<validation::OracleResult>& results, const RunManifest& manifest) {
    Json j;
    j["manifest"] = manifest_json(manifest);
    bool all = true;
    Json checks = Json::array();
    for (const auto& r : results) {
        all = all && r.passed;
        Json c;
        c["id"] = r.id;
        c["coverage"] = r.coverage;
        c["description"] = r.description;
        c["passed"] = r.passed;
        c["measured"] = json_num(r.measured);
        c["tolerance"] = json_num(r.tolerance);
        c["detail"] = r.detail;
        c["seconds"] = r.seconds;
        checks.push_back(std::move(c));
    }
    Json coverage = Json::object();
    for (const auto& label : validation::coverage_labels()) {
        Json ids = Json::array();
        bool passed = true;
        for (const auto& r : results) {
            if (r.coverage == label) {
                ids.push_back(r.id);
                passed = passed && r.passed;
            }
        }
        const bool covered = !ids.empty();
        coverage[label] = Json{{"covered", covered}, {"passed", covered && passed}, {"checks", std::move(ids)}};
    }
    j["passed"] = all;
    j["coverage"] = std::move(coverage);
    j["checks"] = std::move(checks);
    return j.dump(2) + "\n";
}

std::string validation_table(const std::vector<validation::OracleResult>& results) {
    std::string out;
    for (const auto& r : results) {
        out += fmt::format("[{}] {:<32} {:<22} measured={:<12.4g} tol={:<10.3g} {:7.2f}s  {}\n",
                           r.passed ? "PASS" : "FAIL", r.id, r.coverage, r.measured, r.tolerance, r.seconds, r.detail);
    }
    out += "coverage:\n";
    for (const auto& label : validation::coverage_labels()) {
        int n = 0;
        bool passed = true;
        for (const auto& r : results) {
            if (r.coverage == label) {
                ++n;
                passed = passed && r.passed;
            }
        }
        out += fmt::format("  {:<22} {} ({} check{})\n", label, n == 0 ? "MISSING" : passed ? "PASS" : "FAIL", n,
                           n == 1 ? "" : "s");
    }
    return out;
}

void write_file(const std::string& path, const std::string& text) {
    const std::filesystem::path p(path);
    std::error_code ec;
    if (p.has_parent_path()) {
        std::filesystem::create_directories(p.parent_path(), ec);
        if (ec) {
            throw std::runtime_error(fmt::format("{}: cannot create directory: {}", p.parent_path().string(),
                                                 ec.message()));
        }
    }
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw std::runtime_error(fmt::format("{}: cannot open for writing", path));
    }
    out << text;
    out.close();
    if (!out) {
        throw std::runtime_error(fmt::format("{}: write failed", path));
    }
}

}  // namespace etrack::cli
