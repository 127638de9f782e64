#include "gsptomo/serialization.hpp"

#include <cmath>

namespace gsptomo::io {

namespace {

json number(double v) {
    return std::isfinite(v) ? json(v) : json(nullptr);
}

json numbers(const std::vector<double>& v) {
    json out = json::array();
    for (double x : v) out.push_back(number(x));
    return out;
}

double get_number(const json& j, const char* key) {
    if (!j.contains(key) || !j.at(key).is_number()) fail(ErrorCode::Config, std::string("missing number '") + key + "'");
    return j.at(key).get<double>();
}

json line_json(tomography::TomogramLine l) {
    return {{"mu", l.mu}, {"nu", l.nu}};
}

} // namespace

json to_json(const TomogramRecord& r) {
    json points = json::array();
    for (const auto& p : r.points) points.push_back({{"x", p.x}, {"value", p.value}});
    return {
        {"time", r.time}, {"line", line_json(r.line)}, {"points", points},
        {"noise_sigma", r.noise_sigma}, {"seed", r.seed},
    };
}

TomogramRecord tomogram_from_json(const json& j) {
    TomogramRecord r;
    r.time = j.contains("time") ? get_number(j, "time") : 0.0;
    if (!j.contains("line")) fail(ErrorCode::Config, "tomogram without a line");
    r.line = tomography::make_line(get_number(j.at("line"), "mu"), get_number(j.at("line"), "nu"));
    r.noise_sigma = j.contains("noise_sigma") ? get_number(j, "noise_sigma") : 0.0;
    r.seed = j.value("seed", std::uint64_t{0});
    if (!j.contains("points") || !j.at("points").is_array()) fail(ErrorCode::Config, "tomogram without points");
    for (const json& p : j.at("points")) {
        r.points.push_back({r.line, get_number(p, "x"), get_number(p, "value"), r.noise_sigma});
    }
    return r;
}

json to_json(const benchmark::BenchmarkTips& tips, const HamiltonianParams& h) {
    return {
        {"alpha_sq", tips.alpha_sq},
        {"omega_c_over_omega", tips.omega_c / h.omega()},
        {"kT_over_hbar_omega", tips.kT_over_hbar_omega},
    };
}

benchmark::BenchmarkTips benchmark_from_json(const json& j, const HamiltonianParams& h) {
    benchmark::BenchmarkTips t{
        get_number(j, "alpha_sq"),
        get_number(j, "omega_c_over_omega") * h.omega(),
        get_number(j, "kT_over_hbar_omega"),
    };
    try {
        benchmark::validate(t);
    } catch (const Error& e) {
        fail(ErrorCode::Config, e.what());
    }
    return t;
}

json to_json(const reconstruct::ReconstructionReport& r) {
    json tips = json::object();
    json truth = json::object();
    for (std::size_t i = 0; i < r.tip_names.size(); ++i) {
        if (i < r.tips_found.size()) tips[r.tip_names[i]] = number(r.tips_found[i]);
        if (i < r.tips_true.size()) truth[r.tip_names[i]] = number(r.tips_true[i]);
    }
    json brackets = json::array();
    for (const auto& [lo, hi] : r.diagnostics.brackets) brackets.push_back({number(lo), number(hi)});
    json budget = json::array();
    for (const auto& [key, count] : r.budget.per_tomogram()) {
        budget.push_back({{"time", key.time}, {"line", line_json(key.line)}, {"points", count}});
    }
    json measurements = json::array();
    for (const auto& m : r.ledger.records()) {
        measurements.push_back({{"time", m.time}, {"kind", reconstruct::to_string(m.kind)}, {"value", number(m.value)}});
    }
    json out = {
        {"method", reconstruct::to_string(r.method)},
        {"rotating_frame", r.rotating_frame},
        {"tips_found", tips},
        {"tips_true", truth},
        {"residuals", numbers(r.residuals)},
        {"total_points", r.total_points},
        {"roots_considered", numbers(r.roots_considered)},
        {"solver_diagnostics",
         {{"iterations", r.diagnostics.iterations},
          {"brackets", brackets},
          {"notes", r.diagnostics.notes},
          {"budget", budget},
          {"measurements", measurements}}},
        {"complete", r.complete},
        {"wall_time_seconds", r.wall_time_seconds},
    };
    if (r.failure_code) {
        out["failure"] = {{"code", std::string(to_string(*r.failure_code))}, {"message", r.failure}};
    }
    return out;
}

} // namespace gsptomo::io
