// serialization.hpp: JSON forms of tomograms, benchmark parameters and
// reconstruction reports.

#pragma once

#include <cstdint>
#include <vector>

#include "json.hpp"

#include "gsptomo/benchmark.hpp"
#include "gsptomo/reconstruct.hpp"
#include "gsptomo/tomography.hpp"

namespace gsptomo::io {

using json = nlohmann::json;

struct TomogramRecord {
    double time{0.0};
    tomography::TomogramLine line;
    std::vector<tomography::TomogramPoint> points;
    double noise_sigma{0.0};
    std::uint64_t seed{0};
};

// {"time", "line": {"mu", "nu"}, "points": [{"x", "value"}], "noise_sigma", "seed"}
json to_json(const TomogramRecord& r);
TomogramRecord tomogram_from_json(const json& j);

// {"alpha_sq", "omega_c_over_omega", "kT_over_hbar_omega"}; omega_c is
// stored relative to the oscillator frequency.
json to_json(const benchmark::BenchmarkTips& tips, const HamiltonianParams& h);
benchmark::BenchmarkTips benchmark_from_json(const json& j, const HamiltonianParams& h);

// {"method", "tips_found", "residuals", "total_points", "roots_considered",
//  "solver_diagnostics", ...}. Non-finite numbers become null.
json to_json(const reconstruct::ReconstructionReport& r);

} // namespace gsptomo::io
