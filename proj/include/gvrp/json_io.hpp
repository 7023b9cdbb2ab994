#pragma once

#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>

#include "json.hpp"

#include "gvrp/energy.hpp"
#include "gvrp/fit.hpp"
#include "gvrp/ga.hpp"
#include "gvrp/instance.hpp"
#include "gvrp/model.hpp"
#include "gvrp/simulator.hpp"

namespace gvrp {

using nlohmann::json;

// Malformed or inconsistent input file; the message names the file or field.
class FormatError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const json& value);

json instance_to_json(const Instance& instance);

// {"40": {"p00": .., "p10": .., "p01": .., "p20": .., "p11": .., "r_squared": ..}, ...}
json coefficients_to_json(const EnergyCoefficients& coeffs);
EnergyCoefficients coefficients_from_json(const json& j);
EnergyCoefficients read_coefficients(const std::filesystem::path& path);

// Every VehicleSpec field; absent keys keep their defaults, unknown keys are
// rejected.
json vehicle_to_json(const VehicleSpec& spec);
VehicleSpec vehicle_from_json(const json& j);
VehicleSpec read_vehicle(const std::filesystem::path& path);

json cycle_to_json(const DriveCycleConfig& cycle);
DriveCycleConfig cycle_from_json(const json& j, DriveCycleConfig base = {});
json fit_plan_to_json(const FitPlan& plan);
FitPlan fit_plan_from_json(const json& j, FitPlan base = {});

json ga_config_to_json(const GaConfig& config);
// Overlays the keys present in `j` onto `base`.
GaConfig ga_config_from_json(const json& j, GaConfig base = {});

// Routes with per-leg speeds (km/h), schedule times and energies, total
// energy and violations. Evaluates a copy when schedules are missing.
json solution_to_json(const Solution& solution, const Problem& problem);
json report_to_json(const SolveReport& report, const Problem& problem);

// One row per leg: route, leg, from, to, coordinates, load, speed, times and
// energy.
void write_route_summary_csv(const std::filesystem::path& path, const Solution& solution,
                             const Problem& problem);
void write_trace_csv(const std::filesystem::path& path, std::span<const SimSample> trace);
void write_curve_csv(const std::filesystem::path& path, std::span<const GenerationStats> curve);

}  // namespace gvrp
