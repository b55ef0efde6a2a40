#include "etrack/cli.hpp"

#include <fmt/format.h>
#include <yaml-cpp/yaml.h>

#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <limits>
#include <numbers>
#include <sstream>

namespace etrack::cli {
namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

std::string join(const std::string& path, const std::string& key) {
    return path.empty() ? key : path + "." + key;
}

std::string index_path(const std::string& path, std::size_t i) {
    return fmt::format("{}[{}]", path, i);
}

[[noreturn]] void fail(const std::string& path, const std::string& what) {
    throw ConfigError(fmt::format("{}: {}", path.empty() ? "<root>" : path, what));
}

void require_map(const YAML::Node& node, const std::string& path) {
    if (!node.IsMap()) {
        fail(path, "expected a mapping");
    }
}

void check_keys(const YAML::Node& node, const std::string& path, std::initializer_list<const char*> allowed) {
    require_map(node, path);
    for (const auto& kv : node) {
        const auto key = kv.first.as<std::string>();
        bool known = false;
        for (const char* a : allowed) {
            known = known || key == a;
        }
        if (!known) {
            fail(join(path, key), "unknown key");
        }
    }
}

double as_double(const YAML::Node& node, const std::string& path) {
    if (!node.IsScalar()) {
        fail(path, "expected a number");
    }
    try {
        return node.as<double>();
    } catch (const YAML::Exception&) {
        fail(path, fmt::format("expected a number, got '{}'", node.Scalar()));
    }
}

long long as_integer(const YAML::Node& node, const std::string& path) {
    if (!node.IsScalar()) {
        fail(path, "expected an integer");
    }
    try {
        return node.as<long long>();
    } catch (const YAML::Exception&) {
        fail(path, fmt::format("expected an integer, got '{}'", node.Scalar()));
    }
}

std::uint64_t as_unsigned(const YAML::Node& node, const std::string& path) {
    if (!node.IsScalar() || node.Scalar().starts_with('-')) {
        fail(path, "expected a non-negative integer");
    }
    try {
        return node.as<std::uint64_t>();
    } catch (const YAML::Exception&) {
        fail(path, fmt::format("expected a non-negative integer, got '{}'", node.Scalar()));
    }
}

bool as_bool(const YAML::Node& node, const std::string& path) {
    if (!node.IsScalar()) {
        fail(path, "expected true or false");
    }
    try {
        return node.as<bool>();
    } catch (const YAML::Exception&) {
        fail(path, fmt::format("expected true or false, got '{}'", node.Scalar()));
    }
}

std::string as_string(const YAML::Node& node, const std::string& path) {
    if (!node.IsScalar()) {
        fail(path, "expected a string");
    }
    return node.Scalar();
}

void read(const YAML::Node& map, const std::string& path, const char* key, double& out) {
    if (const auto n = map[key]) {
        out = as_double(n, join(path, key));
    }
}

void read_deg(const YAML::Node& map, const std::string& path, const char* key, double& out_rad) {
    if (const auto n = map[key]) {
        out_rad = as_double(n, join(path, key)) * kDeg;
    }
}

void read(const YAML::Node& map, const std::string& path, const char* key, int& out) {
    if (const auto n = map[key]) {
        const auto v = as_integer(n, join(path, key));
        if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max()) {
            fail(join(path, key), "integer out of range");
        }
        out = static_cast<int>(v);
    }
}

void read(const YAML::Node& map, const std::string& path, const char* key, bool& out) {
    if (const auto n = map[key]) {
        out = as_bool(n, join(path, key));
    }
}

void read(const YAML::Node& map, const std::string& path, const char* key, std::string& out) {
    if (const auto n = map[key]) {
        out = as_string(n, join(path, key));
    }
}

Eigen::VectorXd read_vector(const YAML::Node& node, const std::string& path, Eigen::Index size) {
    if (!node.IsSequence() || static_cast<Eigen::Index>(node.size()) != size) {
        fail(path, fmt::format("expected a list of {} numbers", size));
    }
    Eigen::VectorXd v(size);
    for (Eigen::Index i = 0; i < size; ++i) {
        v(i) = as_double(node[static_cast<std::size_t>(i)], index_path(path, static_cast<std::size_t>(i)));
    }
    return v;
}

Eigen::MatrixXd read_matrix(const YAML::Node& node, const std::string& path, Eigen::Index size) {
    if (!node.IsSequence() || static_cast<Eigen::Index>(node.size()) != size) {
        fail(path, fmt::format("expected a {}x{} matrix as a list of rows", size, size));
    }
    Eigen::MatrixXd m(size, size);
    for (Eigen::Index i = 0; i < size; ++i) {
        m.row(i) = read_vector(node[static_cast<std::size_t>(i)], index_path(path, static_cast<std::size_t>(i)), size)
                       .transpose();
    }
    return m;
}

extent::NoiseRule read_noise(const YAML::Node& node, const std::string& path) {
    check_keys(node, path, {"rule", "scale", "matrix"});
    if (!node["rule"]) {
        fail(join(path, "rule"), "missing required key");
    }
    const auto rule = as_string(node["rule"], join(path, "rule"));
    const auto need_scale = [&] {
        if (!node["scale"]) {
            fail(join(path, "scale"), "missing required key");
        }
        if (node["matrix"]) {
            fail(join(path, "matrix"), fmt::format("not allowed with rule '{}'", rule));
        }
        return as_double(node["scale"], join(path, "scale"));
    };
    if (rule == "fixed") {
        if (node["scale"]) {
            fail(join(path, "scale"), "not allowed with rule 'fixed'");
        }
        extent::FixedNoise out;
        if (const auto m = node["matrix"]) {
            out.q = read_matrix(m, join(path, "matrix"), 2);
        }
        return out;
    }
    if (rule == "inverse_scaled") {
        return extent::InverseScaledNoise{need_scale()};
    }
    if (rule == "det_scaled_identity") {
        return extent::DeterminantScaledNoise{need_scale()};
    }
    fail(join(path, "rule"), fmt::format("unknown noise rule '{}' (fixed, inverse_scaled, det_scaled_identity)", rule));
}

extent::DofRule read_dof(const YAML::Node& node, const std::string& path) {
    check_keys(node, path, {"rule", "v"});
    if (!node["rule"]) {
        fail(join(path, "rule"), "missing required key");
    }
    const auto rule = as_string(node["rule"], join(path, "rule"));
    if (rule == "fixed") {
        if (!node["v"]) {
            fail(join(path, "v"), "missing required key");
        }
        return extent::FixedDof{as_double(node["v"], join(path, "v"))};
    }
    if (node["v"]) {
        fail(join(path, "v"), fmt::format("not allowed with rule '{}'", rule));
    }
    if (rule == "volume_coupled") {
        return extent::VolumeCoupledDof{};
    }
    if (rule == "volume_preserving") {
        return extent::VolumePreservingDof{};
    }
    fail(join(path, "rule"), fmt::format("unknown dof rule '{}' (fixed, volume_coupled, volume_preserving)", rule));
}

extent::NuMode parse_nu_mode_at(const std::string& s, const std::string& path) {
    if (s == "closed") {
        return extent::NuMode::kClosedForm;
    }
    if (s == "optimal") {
        return extent::NuMode::kOptimal;
    }
    fail(path, fmt::format("expected closed or optimal, got '{}'", s));
}

sim::EstimatorConfig read_estimator(const YAML::Node& node, const std::string& path) {
    require_map(node, path);
    if (!node["type"]) {
        fail(join(path, "type"), "missing required key");
    }
    const auto type = as_string(node["type"], join(path, "type"));
    sim::EstimatorConfig e;
    if (type == "bartlett_imm") {
        check_keys(node, path, {"name", "type", "stay_probability", "modes"});
        e.kind = sim::EstimatorKind::kBartlettImm;
        read(node, path, "stay_probability", e.stay_probability);
        if (const auto modes = node["modes"]) {
            const auto mp = join(path, "modes");
            if (!modes.IsSequence()) {
                fail(mp, "expected a list");
            }
            for (std::size_t i = 0; i < modes.size(); ++i) {
                const auto ip = index_path(mp, i);
                check_keys(modes[i], ip, {"q_tilde", "q"});
                sim::ImmMode mode;
                read(modes[i], ip, "q_tilde", mode.q_tilde);
                if (const auto q = modes[i]["q"]) {
                    mode.q = read_noise(q, join(ip, "q"));
                }
                e.modes.push_back(mode);
            }
        }
    } else if (type == "granstrom") {
        check_keys(node, path, {"name", "type", "sigma_a", "sigma_omega_deg", "n", "taylor_half_factor"});
        e.kind = sim::EstimatorKind::kGranstrom;
        read(node, path, "sigma_a", e.sigma_a);
        read_deg(node, path, "sigma_omega_deg", e.sigma_omega);
        read(node, path, "n", e.n);
    } else if (type == "proposed") {
        check_keys(node, path,
                   {"name", "type", "sigma_a", "sigma_omega_deg", "q", "v_rule", "nu_mode", "taylor_half_factor"});
        e.kind = sim::EstimatorKind::kProposed;
        read(node, path, "sigma_a", e.sigma_a);
        read_deg(node, path, "sigma_omega_deg", e.sigma_omega);
        if (const auto q = node["q"]) {
            e.q = read_noise(q, join(path, "q"));
        }
        if (const auto v = node["v_rule"]) {
            e.v_rule = read_dof(v, join(path, "v_rule"));
        }
        if (const auto m = node["nu_mode"]) {
            e.nu_mode = parse_nu_mode_at(as_string(m, join(path, "nu_mode")), join(path, "nu_mode"));
        }
    } else if (type == "feldmann") {
        check_keys(node, path, {"name", "type", "q_tilde", "tau"});
        e.kind = sim::EstimatorKind::kFeldmann;
        read(node, path, "q_tilde", e.q_tilde);
        read(node, path, "tau", e.tau);
    } else {
        fail(join(path, "type"),
             fmt::format("unknown estimator type '{}' (bartlett_imm, granstrom, proposed, feldmann)", type));
    }
    if (!node["name"]) {
        fail(join(path, "name"), "missing required key");
    }
    read(node, path, "name", e.name);
    if (const auto h = node["taylor_half_factor"]) {
        e.taylor_weight =
            as_bool(h, join(path, "taylor_half_factor")) ? extent::TaylorWeight::kHalf : extent::TaylorWeight::kUnit;
    }
    try {
        e.validate();
    } catch (const std::domain_error& err) {
        fail(path, err.what());
    }
    return e;
}

// Numbers are written in their shortest round-trip form; quantities converted from
// radians are rounded to 15 significant digits so that the file stays readable and
// parse -> emit is a fixed point.
std::string num(double x) { return fmt::format("{}", x); }
std::string deg(double rad) { return fmt::format("{:.15g}", rad / kDeg); }

std::string matrix_text(const Eigen::MatrixXd& m) {
    std::string out = "[";
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        out += i ? ", [" : "[";
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            out += (j ? ", " : "") + num(m(i, j));
        }
        out += "]";
    }
    return out + "]";
}

std::string noise_text(const extent::NoiseRule& rule) {
    if (const auto* f = std::get_if<extent::FixedNoise>(&rule)) {
        return f->q.size() == 0 ? "{rule: fixed}" : "{rule: fixed, matrix: " + matrix_text(f->q) + "}";
    }
    if (const auto* s = std::get_if<extent::InverseScaledNoise>(&rule)) {
        return "{rule: inverse_scaled, scale: " + num(s->scale) + "}";
    }
    return "{rule: det_scaled_identity, scale: " + num(std::get<extent::DeterminantScaledNoise>(rule).scale) + "}";
}

std::string dof_text(const extent::DofRule& rule) {
    if (const auto* f = std::get_if<extent::FixedDof>(&rule)) {
        return "{rule: fixed, v: " + num(f->v) + "}";
    }
    if (std::holds_alternative<extent::VolumeCoupledDof>(rule)) {
        return "{rule: volume_coupled}";
    }
    return "{rule: volume_preserving}";
}

std::string quoted(const std::string& s) {
    YAML::Emitter em;
    em << YAML::DoubleQuoted << s;
    return em.c_str();
}

}  // namespace

sim::ScenarioConfig parse_scenario(const std::string& yaml_text) {
    YAML::Node root;
    try {
        root = YAML::Load(yaml_text);
    } catch (const YAML::Exception& e) {
        throw ConfigError(fmt::format("<root>: invalid YAML at line {}: {}", e.mark.line + 1, e.msg));
    }
    check_keys(root, "",
               {"name", "runs", "seed", "dt", "poisson_mean", "lambda", "noise_free", "start", "initial_heading_deg",
                "extent", "measurement_noise_cov", "init", "segments", "estimators"});
    sim::ScenarioConfig cfg;
    read(root, "", "name", cfg.name);
    read(root, "", "runs", cfg.n_runs);
    if (const auto s = root["seed"]) {
        cfg.master_seed = as_unsigned(s, "seed");
    }
    read(root, "", "dt", cfg.dt);
    read(root, "", "poisson_mean", cfg.poisson_mean);
    read(root, "", "lambda", cfg.lambda);
    read(root, "", "noise_free", cfg.noise_free);
    if (const auto s = root["start"]) {
        cfg.start = read_vector(s, "start", 2);
    }
    if (const auto h = root["initial_heading_deg"]) {
        cfg.initial_heading_deg = as_double(h, "initial_heading_deg");
    }
    if (const auto e = root["extent"]) {
        check_keys(e, "extent", {"major_diameter", "minor_diameter"});
        read(e, "extent", "major_diameter", cfg.major_diameter);
        read(e, "extent", "minor_diameter", cfg.minor_diameter);
    }
    if (const auto r = root["measurement_noise_cov"]) {
        cfg.r = read_matrix(r, "measurement_noise_cov", 2);
    }
    if (const auto i = root["init"]) {
        check_keys(i, "init", {"position_std", "velocity_std", "turn_rate_std_deg", "nu"});
        read(i, "init", "position_std", cfg.init.position_std);
        read(i, "init", "velocity_std", cfg.init.velocity_std);
        read(i, "init", "turn_rate_std_deg", cfg.init.turn_rate_std_deg);
        read(i, "init", "nu", cfg.init.nu);
    }
    if (const auto segs = root["segments"]) {
        if (!segs.IsSequence()) {
            fail("segments", "expected a list");
        }
        for (std::size_t i = 0; i < segs.size(); ++i) {
            const auto ip = index_path("segments", i);
            check_keys(segs[i], ip, {"steps", "speed", "turn_rate_deg"});
            sim::Segment s;
            read(segs[i], ip, "steps", s.steps);
            read(segs[i], ip, "speed", s.speed);
            read(segs[i], ip, "turn_rate_deg", s.turn_rate_deg);
            cfg.segments.push_back(s);
        }
    }
    if (const auto ests = root["estimators"]) {
        if (!ests.IsSequence()) {
            fail("estimators", "expected a list");
        }
        for (std::size_t i = 0; i < ests.size(); ++i) {
            cfg.estimators.push_back(read_estimator(ests[i], index_path("estimators", i)));
        }
    }
    if (cfg.estimators.empty()) {
        fail("estimators", "at least one estimator is required");
    }
    try {
        cfg.validate();
    } catch (const std::domain_error& err) {
        throw ConfigError(err.what());
    }
    return cfg;
}

sim::ScenarioConfig load_scenario(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ConfigError(fmt::format("{}: cannot open scenario file", path));
    }
    std::ostringstream text;
    text << in.rdbuf();
    try {
        return parse_scenario(text.str());
    } catch (const ConfigError& e) {
        throw ConfigError(fmt::format("{}: {}", path, e.what()));
    }
}

sim::ScenarioConfig resolve_scenario(const std::string& path_or_name) {
    if (!std::filesystem::exists(path_or_name)) {
        if (path_or_name == "constant_turn") {
            return sim::constant_turn_scenario();
        }
        if (path_or_name == "variable_turn") {
            return sim::variable_turn_scenario();
        }
    }
    return load_scenario(path_or_name);
}

std::string emit_scenario(const sim::ScenarioConfig& cfg) {
    std::string out;
    const auto line = [&out](const std::string& s) { out += s + "\n"; };
    line("name: " + quoted(cfg.name));
    line(fmt::format("runs: {}", cfg.n_runs));
    line(fmt::format("seed: {}", cfg.master_seed));
    line("dt: " + num(cfg.dt));
    line("poisson_mean: " + num(cfg.poisson_mean));
    line("lambda: " + num(cfg.lambda));
    line(fmt::format("noise_free: {}", cfg.noise_free));
    line("start: [" + num(cfg.start.x()) + ", " + num(cfg.start.y()) + "]");
    line("initial_heading_deg: " + num(cfg.initial_heading_deg));
    line("extent: {major_diameter: " + num(cfg.major_diameter) + ", minor_diameter: " + num(cfg.minor_diameter) + "}");
    line("measurement_noise_cov: " + matrix_text(cfg.r));
    line("init: {position_std: " + num(cfg.init.position_std) + ", velocity_std: " + num(cfg.init.velocity_std) +
         ", turn_rate_std_deg: " + num(cfg.init.turn_rate_std_deg) + ", nu: " + num(cfg.init.nu) + "}");
    line("segments:");
    for (const auto& s : cfg.segments) {
        line(fmt::format("  - {{steps: {}, speed: {}, turn_rate_deg: {}}}", s.steps, num(s.speed),
                         num(s.turn_rate_deg)));
    }
    line("estimators:");
    for (const auto& e : cfg.estimators) {
        line("  - name: " + quoted(e.name));
        const bool half = e.taylor_weight == extent::TaylorWeight::kHalf;
        switch (e.kind) {
            case sim::EstimatorKind::kBartlettImm:
                line("    type: bartlett_imm");
                line("    stay_probability: " + num(e.stay_probability));
                line("    modes:");
                for (const auto& m : e.modes) {
                    line("      - {q_tilde: " + num(m.q_tilde) + ", q: " + noise_text(m.q) + "}");
                }
                break;
            case sim::EstimatorKind::kGranstrom:
                line("    type: granstrom");
                line("    sigma_a: " + num(e.sigma_a));
                line("    sigma_omega_deg: " + deg(e.sigma_omega));
                line("    n: " + num(e.n));
                line(fmt::format("    taylor_half_factor: {}", half));
                break;
            case sim::EstimatorKind::kProposed:
                line("    type: proposed");
                line("    sigma_a: " + num(e.sigma_a));
                line("    sigma_omega_deg: " + deg(e.sigma_omega));
                line("    q: " + noise_text(e.q));
                line("    v_rule: " + dof_text(e.v_rule));
                line(std::string("    nu_mode: ") + (e.nu_mode == extent::NuMode::kOptimal ? "optimal" : "closed"));
                line(fmt::format("    taylor_half_factor: {}", half));
                break;
            case sim::EstimatorKind::kFeldmann:
                line("    type: feldmann");
                line("    q_tilde: " + num(e.q_tilde));
                line("    tau: " + num(e.tau));
                break;
        }
    }
    return out;
}

}  // namespace etrack::cli
