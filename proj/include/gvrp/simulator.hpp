#pragma once

#include <stdexcept>
#include <utility>
#include <vector>

namespace gvrp {

class SimulationError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Motor efficiency on a (motor speed [rpm], motor torque [Nm]) grid,
// bilinearly interpolated and clamped to the grid boundary. Efficiency is
// stored as output/input, so electrical power = mechanical power / eta.
class MotorEfficiencyMap {
public:
  MotorEfficiencyMap(std::vector<double> speeds_rpm,
                     std::vector<double> torques_nm,
                     std::vector<double> efficiency);  // row-major [speed][torque]

  double efficiency(double speed_rpm, double torque_nm) const;

  const std::vector<double>& speeds_rpm() const noexcept { return speeds_; }
  const std::vector<double>& torques_nm() const noexcept { return torques_; }
  const std::vector<double>& values() const noexcept { return eta_; }

  // Flat-ish map peaking at 0.93 with losses at low torque and low speed.
  static MotorEfficiencyMap default_map();

private:
  std::vector<double> speeds_;
  std::vector<double> torques_;
  std::vector<double> eta_;
};

// Open-circuit voltage as a piecewise-linear function of state of charge,
// plus a series internal resistance.
class BatteryModel {
public:
  BatteryModel(std::vector<std::pair<double, double>> soc_voltage,
               double internal_resistance_ohm,
               double capacity_kwh);

  double open_circuit_voltage(double soc) const;
  double internal_resistance() const noexcept { return resistance_; }
  double capacity_kwh() const noexcept { return capacity_kwh_; }
  const std::vector<std::pair<double, double>>& table() const noexcept { return table_; }

  // Chemical power [kW] drawn from the cells to deliver `terminal_kw` at the
  // terminals; throws when the demand exceeds what the pack can deliver.
  double cell_power(double terminal_kw, double soc) const;

  static BatteryModel default_pack(double capacity_kwh);

private:
  std::vector<std::pair<double, double>> table_;  // (soc, volts), soc ascending
  double resistance_;
  double capacity_kwh_;
};

struct VehicleSpec {
  double curb_mass = 2115.0;          // kg
  double payload_capacity = 1000.0;   // kg
  double frontal_area = 2.5;          // m^2
  double drag_coefficient = 0.32;
  double rolling_resistance = 0.012;
  double drivetrain_efficiency = 0.95;
  double auxiliary_power = 0.3;       // kW
  double wheel_radius = 0.33;         // m
  double reduction_ratio = 9.0;
  double max_motor_power = 150.0;     // kW, mechanical
  double reserve_fraction = 0.10;     // minimum state of charge
  double air_density = 1.2;           // kg/m^3
  MotorEfficiencyMap motor = MotorEfficiencyMap::default_map();
  BatteryModel battery = BatteryModel::default_pack(50.228);

  double battery_capacity() const noexcept { return battery.capacity_kwh(); }

  // Throws SimulationError naming the offending field.
  void validate() const;
};

struct DriveCycleConfig {
  double accel = 2.0;             // m/s^2, used for starting and stopping
  double stop_interval = 5.0;     // km between full stops
  double target_speed = 40.0;     // km/h
  double load = 0.0;              // kg
  double timestep = 0.1;          // s
  double regen_efficiency = 0.0;  // fraction of braking power recovered
  double sample_interval = 1.0;   // km between emitted samples
  double dwell_time = 0.0;        // s standing still at each stop
};

struct SimSample {
  double distance = 0.0;           // km
  double cumulative_energy = 0.0;  // kWh drawn from the cells
};

// Repeated start/cruise/stop blocks. Samples start at (0, 0), are emitted
// every sample_interval and once more at the end. The run ends at
// total_distance or when the battery reaches its reserve, whichever is first.
std::vector<SimSample> simulate_cycle(const VehicleSpec& spec,
                                      const DriveCycleConfig& config,
                                      double total_distance_km);

// Speed-time breakpoints; speed is linearly interpolated between them.
struct VelocityProfile {
  std::vector<std::pair<double, double>> points;  // (time s, speed km/h)
  double duration() const { return points.empty() ? 0.0 : points.back().first; }
  double speed_at(double t) const;
};

// ECE-15 urban block repeated four times followed by the extra-urban block.
VelocityProfile nedc_profile();

struct EconomyReport {
  double distance_km = 0.0;
  double energy_kwh = 0.0;
  double km_per_kwh = 0.0;
  double kwh_per_km = 0.0;
};

EconomyReport simulate_profile(const VehicleSpec& spec,
                               const VelocityProfile& profile,
                               double load_kg = 0.0,
                               double timestep = 0.1,
                               double regen_efficiency = 0.0);

}  // namespace gvrp
