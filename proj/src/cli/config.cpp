#include "gsptomo/cli/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>

#include "gsptomo/serialization.hpp"

namespace gsptomo::cli {

using nlohmann::json;

namespace {

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
    if (!j.is_object()) fail(ErrorCode::Config, where + " must be an object");
    for (const auto& [key, value] : j.items()) {
        if (!allowed.count(key)) fail(ErrorCode::Config, "unknown key '" + key + "' in " + where);
    }
}

double number(const json& j, const char* key, double fallback) {
    if (!j.contains(key) || j.at(key).is_null()) return fallback;
    if (!j.at(key).is_number()) fail(ErrorCode::Config, std::string("'") + key + "' must be a number");
    return j.at(key).get<double>();
}

std::optional<double> optional_number(const json& j, const char* key) {
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    return number(j, key, 0.0);
}

std::map<std::string, double> number_map(const json& j, const std::string& where) {
    if (!j.is_object()) fail(ErrorCode::Config, where + " must be an object of numbers");
    std::map<std::string, double> out;
    for (const auto& [key, value] : j.items()) {
        if (!value.is_number()) fail(ErrorCode::Config, where + "." + key + " must be a number");
        out[key] = value.get<double>();
    }
    return out;
}

json optional_json(const std::optional<double>& v) {
    return v ? json(*v) : json(nullptr);
}

} // namespace

std::string to_string(MethodChoice m) {
    switch (m) {
    case MethodChoice::Integral: return "integral";
    case MethodChoice::Differential: return "differential";
    case MethodChoice::Both: return "both";
    }
    return "integral";
}

MethodChoice method_choice_from_string(const std::string& s) {
    if (s == "integral") return MethodChoice::Integral;
    if (s == "differential") return MethodChoice::Differential;
    if (s == "both") return MethodChoice::Both;
    fail(ErrorCode::Config, "method must be integral, differential or both (got '" + s + "')");
}

ExperimentConfig config_from_json(const json& j) {
    check_keys(j,
               {"hamiltonian", "model", "probe", "method", "rotating_frame", "signs_known", "schedule",
                "simulation", "noise", "output", "figure_measurements"},
               "config");
    ExperimentConfig c;
    try {
        if (j.contains("hamiltonian")) {
            const json& h = j.at("hamiltonian");
            check_keys(h, {"mass", "omega", "delta", "hbar"}, "hamiltonian");
            c.hamiltonian = HamiltonianParams(number(h, "mass", 1.0), number(h, "omega", 1.0),
                                              number(h, "delta", 0.0), number(h, "hbar", 1.0));
        }
        if (j.contains("model")) {
            const json& m = j.at("model");
            check_keys(m, {"type", "tips", "guess"}, "model");
            const std::string type = m.value("type", std::string("benchmark"));
            if (type == "benchmark") {
                c.model = ModelKind::Benchmark;
                if (m.contains("tips")) {
                    c.benchmark_tips.clear();
                    for (const json& t : m.at("tips")) c.benchmark_tips.push_back(io::benchmark_from_json(t, c.hamiltonian));
                }
            } else if (type == "custom") {
                c.model = ModelKind::Custom;
                c.benchmark_tips.clear();
                if (!m.contains("tips") || !m.at("tips").is_array()) {
                    fail(ErrorCode::Config, "custom model needs a 'tips' array");
                }
                for (const json& t : m.at("tips")) c.custom_tips.push_back(number_map(t, "model.tips"));
                if (m.contains("guess")) c.custom_guess = number_map(m.at("guess"), "model.guess");
            } else {
                fail(ErrorCode::Config, "model.type must be benchmark or custom");
            }
        }
        if (j.contains("probe")) {
            const json& p = j.at("probe");
            check_keys(p, {"s", "x"}, "probe");
            if (p.contains("s")) {
                const auto s = p.at("s").get<std::vector<double>>();
                if (s.size() != 2) fail(ErrorCode::Config, "probe.s has two entries");
                c.probe.s = Vec2(s[0], s[1]);
            }
            if (p.contains("x")) {
                const auto x = p.at("x").get<std::vector<double>>();
                if (x.size() != 3) fail(ErrorCode::Config, "probe.x has three entries");
                c.probe.x = Vec3(x[0], x[1], x[2]);
            }
        }
        if (j.contains("method")) c.method = method_choice_from_string(j.at("method").get<std::string>());
        c.rotating_frame = j.value("rotating_frame", false);
        c.signs_known = j.value("signs_known", false);
        if (j.contains("schedule")) {
            const json& s = j.at("schedule");
            check_keys(s, {"omega_t1", "omega_t2", "omega_t_held_out", "omega_t_temperature", "omega_delta_t"},
                       "schedule");
            c.schedule.omega_t1 = number(s, "omega_t1", c.schedule.omega_t1);
            c.schedule.omega_t2 = number(s, "omega_t2", c.schedule.omega_t2);
            c.schedule.omega_t_held_out = optional_number(s, "omega_t_held_out");
            c.schedule.omega_t_temperature = optional_number(s, "omega_t_temperature");
            c.schedule.omega_delta_t = number(s, "omega_delta_t", c.schedule.omega_delta_t);
        }
        if (j.contains("simulation")) {
            const json& s = j.at("simulation");
            check_keys(s, {"omega_t_end", "samples"}, "simulation");
            c.simulation_omega_t_end = number(s, "omega_t_end", c.simulation_omega_t_end);
            c.simulation_samples = s.value("samples", c.simulation_samples);
        }
        if (j.contains("noise")) {
            const json& n = j.at("noise");
            check_keys(n, {"sigma", "seeds"}, "noise");
            c.noise_sigma = number(n, "sigma", 0.0);
            if (n.contains("seeds")) c.seeds = n.at("seeds").get<std::vector<std::uint64_t>>();
        }
        if (j.contains("output")) {
            const json& o = j.at("output");
            check_keys(o, {"dir", "run_id"}, "output");
            c.out_dir = o.value("dir", std::string("out"));
            if (o.contains("run_id") && !o.at("run_id").is_null()) c.run_id = o.at("run_id").get<std::string>();
        }
        if (j.contains("figure_measurements")) {
            for (const auto& [method, list] : j.at("figure_measurements").items()) {
                if (method != "integral" && method != "differential") {
                    fail(ErrorCode::Config, "figure_measurements keys are integral and differential");
                }
                for (const json& m : list) {
                    c.figure_measurements[method].push_back({number(m, "omega_t", 0.0), number(m, "value", 0.0)});
                }
            }
        }
    } catch (const Error& e) {
        if (e.code() == ErrorCode::Config) throw;
        fail(ErrorCode::Config, e.what());
    } catch (const json::exception& e) {
        fail(ErrorCode::Config, e.what());
    }
    validate(c);
    return c;
}

json to_json(const ExperimentConfig& c) {
    const HamiltonianParams& h = c.hamiltonian;
    json model;
    if (c.model == ModelKind::Benchmark) {
        json tips = json::array();
        for (const auto& t : c.benchmark_tips) tips.push_back(io::to_json(t, h));
        model = {{"type", "benchmark"}, {"tips", tips}};
    } else {
        model = {{"type", "custom"}, {"tips", c.custom_tips}, {"guess", c.custom_guess}};
    }
    json figures = json::object();
    for (const auto& [method, list] : c.figure_measurements) {
        json arr = json::array();
        for (const auto& m : list) arr.push_back({{"omega_t", m.omega_t}, {"value", m.value}});
        figures[method] = arr;
    }
    return {
        {"hamiltonian", {{"mass", h.mass()}, {"omega", h.omega()}, {"delta", h.delta()}, {"hbar", h.hbar()}}},
        {"model", model},
        {"probe", {{"s", {c.probe.s[0], c.probe.s[1]}}, {"x", {c.probe.x[0], c.probe.x[1], c.probe.x[2]}}}},
        {"method", to_string(c.method)},
        {"rotating_frame", c.rotating_frame},
        {"signs_known", c.signs_known},
        {"schedule",
         {{"omega_t1", c.schedule.omega_t1},
          {"omega_t2", c.schedule.omega_t2},
          {"omega_t_held_out", optional_json(c.schedule.omega_t_held_out)},
          {"omega_t_temperature", optional_json(c.schedule.omega_t_temperature)},
          {"omega_delta_t", c.schedule.omega_delta_t}}},
        {"simulation", {{"omega_t_end", c.simulation_omega_t_end}, {"samples", c.simulation_samples}}},
        {"noise", {{"sigma", c.noise_sigma}, {"seeds", c.seeds}}},
        {"output", {{"dir", c.out_dir.string()}, {"run_id", c.run_id ? json(*c.run_id) : json(nullptr)}}},
        {"figure_measurements", figures},
    };
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::Config, "cannot open config file " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        fail(ErrorCode::Config, "config file " + path.string() + ": " + e.what());
    }
    return config_from_json(j);
}

void apply_overrides(ExperimentConfig& c, const Overrides& o) {
    if (o.seed) c.seeds = {*o.seed};
    if (o.method) c.method = method_choice_from_string(*o.method);
    if (o.noise_sigma) c.noise_sigma = *o.noise_sigma;
    if (o.out_dir) c.out_dir = *o.out_dir;
    if (o.rotating_frame) c.rotating_frame = true;
    validate(c);
}

void validate(const ExperimentConfig& c) {
    try {
        validate_state(c.probe);
        if (c.model == ModelKind::Benchmark) {
            require(!c.benchmark_tips.empty(), ErrorCode::Config, "at least one tip-vector is required");
            require(c.hamiltonian.delta() == 0.0, ErrorCode::Config, "the benchmark model has delta = 0");
            for (const auto& t : c.benchmark_tips) benchmark::validate(t);
        } else {
            require(!c.custom_tips.empty(), ErrorCode::Config, "at least one tip-vector is required");
            const MecModel model = make_constant_model();
            for (const auto& t : c.custom_tips) model.check_tips(model.make_tips(t));
            if (!c.custom_guess.empty()) model.check_tips(model.make_tips(c.custom_guess));
        }
        if (c.method != MethodChoice::Differential) reconstruct::validate(c.schedule, reconstruct::Method::Integral);
        if (c.method != MethodChoice::Integral) reconstruct::validate(c.schedule, reconstruct::Method::Differential);
        require(std::isfinite(c.noise_sigma) && c.noise_sigma >= 0.0, ErrorCode::Config,
                "noise sigma must be nonnegative");
        require(!c.seeds.empty(), ErrorCode::Config, "at least one seed is required");
        require(c.simulation_omega_t_end > 0.0 && c.simulation_samples >= 2, ErrorCode::Config,
                "simulation needs a positive end time and at least two samples");
        require(!(c.rotating_frame && c.method == MethodChoice::Differential), ErrorCode::Config,
                "the rotating frame applies to the integral method only");
    } catch (const Error& e) {
        if (e.code() == ErrorCode::Config) throw;
        fail(ErrorCode::Config, e.what());
    }
}

std::uint64_t fnv1a64(const std::string& bytes) {
    std::uint64_t hash = 0xcbf29ce484222325ULL;
    for (unsigned char ch : bytes) {
        hash ^= ch;
        hash *= 0x100000001b3ULL;
    }
    return hash;
}

std::string config_hash(const ExperimentConfig& c) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(to_json(c).dump())));
    return buf;
}

std::filesystem::path run_directory(const ExperimentConfig& c) {
    return c.out_dir / c.run_id.value_or(config_hash(c).substr(0, 8));
}

} // namespace gsptomo::cli
