#include "gvrp/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace gvrp {

namespace {

constexpr double kGravity = 9.81;

// Index i such that grid[i] <= x <= grid[i+1], and the weight of grid[i+1].
std::pair<std::size_t, double> bracket(const std::vector<double>& grid, double x) {
  if (grid.size() == 1 || x <= grid.front()) {
    return {0, 0.0};
  }
  if (x >= grid.back()) {
    return {grid.size() - 2, 1.0};
  }
  const auto it = std::upper_bound(grid.begin(), grid.end(), x);
  const std::size_t i = static_cast<std::size_t>(it - grid.begin()) - 1;
  return {i, (x - grid[i]) / (grid[i + 1] - grid[i])};
}

void require(bool ok, const std::string& what) {
  if (!ok) {
    throw SimulationError(what);
  }
}

}  // namespace

MotorEfficiencyMap::MotorEfficiencyMap(std::vector<double> speeds_rpm,
                                       std::vector<double> torques_nm,
                                       std::vector<double> efficiency)
  : speeds_(std::move(speeds_rpm)), torques_(std::move(torques_nm)), eta_(std::move(efficiency)) {
  require(!speeds_.empty() && !torques_.empty(), "motor map grid must be nonempty");
  require(eta_.size() == speeds_.size() * torques_.size(),
          "motor map needs speeds x torques efficiency values");
  require(std::is_sorted(speeds_.begin(), speeds_.end()) &&
              std::adjacent_find(speeds_.begin(), speeds_.end()) == speeds_.end(),
          "motor map speeds must be strictly increasing");
  require(std::is_sorted(torques_.begin(), torques_.end()) &&
              std::adjacent_find(torques_.begin(), torques_.end()) == torques_.end(),
          "motor map torques must be strictly increasing");
  for (double e : eta_) {
    require(e > 0.0 && e <= 1.0, "motor efficiency values must lie in (0, 1]");
  }
}

double MotorEfficiencyMap::efficiency(double speed_rpm, double torque_nm) const {
  const auto [i, u] = bracket(speeds_, speed_rpm);
  const auto [j, w] = bracket(torques_, torque_nm);
  const std::size_t nt = torques_.size();
  const std::size_t i1 = std::min(i + 1, speeds_.size() - 1);
  const std::size_t j1 = std::min(j + 1, nt - 1);
  const double e00 = eta_[i * nt + j];
  const double e01 = eta_[i * nt + j1];
  const double e10 = eta_[i1 * nt + j];
  const double e11 = eta_[i1 * nt + j1];
  return (1 - u) * ((1 - w) * e00 + w * e01) + u * ((1 - w) * e10 + w * e11);
}

MotorEfficiencyMap MotorEfficiencyMap::default_map() {
  std::vector<double> speeds{0, 500, 1000, 2000, 3000, 4000, 6000, 8000, 10000, 12000};
  std::vector<double> torques{0, 5, 10, 20, 40, 80, 120, 160, 200, 250, 300};
  std::vector<double> eta;
  eta.reserve(speeds.size() * torques.size());
  for (double rpm : speeds) {
    for (double tq : torques) {
      const double e = 0.93 - 0.20 * std::exp(-tq / 12.0) - 0.06 * std::exp(-rpm / 800.0);
      eta.push_back(std::clamp(e, 0.5, 0.93));
    }
  }
  return MotorEfficiencyMap(std::move(speeds), std::move(torques), std::move(eta));
}

BatteryModel::BatteryModel(std::vector<std::pair<double, double>> soc_voltage,
                           double internal_resistance_ohm,
                           double capacity_kwh)
  : table_(std::move(soc_voltage)), resistance_(internal_resistance_ohm), capacity_kwh_(capacity_kwh) {
  require(table_.size() >= 2, "battery voltage table needs at least two points");
  std::sort(table_.begin(), table_.end());
  for (std::size_t i = 0; i < table_.size(); ++i) {
    require(table_[i].first >= 0.0 && table_[i].first <= 1.0, "battery soc must lie in [0, 1]");
    require(table_[i].second > 0.0, "battery voltage must be positive");
    if (i > 0) {
      require(table_[i].first > table_[i - 1].first, "battery soc breakpoints must be distinct");
      require(table_[i].second > table_[i - 1].second,
              "battery voltage must strictly decrease with depth of discharge");
    }
  }
  require(resistance_ >= 0.0, "battery internal resistance must be nonnegative");
  require(capacity_kwh_ > 0.0, "battery capacity must be positive");
}

double BatteryModel::open_circuit_voltage(double soc) const {
  if (soc <= table_.front().first) {
    return table_.front().second;
  }
  if (soc >= table_.back().first) {
    return table_.back().second;
  }
  for (std::size_t i = 1; i < table_.size(); ++i) {
    if (soc <= table_[i].first) {
      const auto [s0, v0] = table_[i - 1];
      const auto [s1, v1] = table_[i];
      return v0 + (v1 - v0) * (soc - s0) / (s1 - s0);
    }
  }
  return table_.back().second;
}

double BatteryModel::cell_power(double terminal_kw, double soc) const {
  if (resistance_ == 0.0) {
    return terminal_kw;
  }
  const double v = open_circuit_voltage(soc);
  const double p = terminal_kw * 1000.0;
  const double disc = v * v - 4.0 * resistance_ * p;
  if (disc < 0.0) {
    throw SimulationError("power demand " + std::to_string(terminal_kw) +
                          " kW exceeds what the battery can deliver");
  }
  const double current = (v - std::sqrt(disc)) / (2.0 * resistance_);
  return v * current / 1000.0;
}

BatteryModel BatteryModel::default_pack(double capacity_kwh) {
  return BatteryModel({{0.0, 300.0}, {0.1, 322.0}, {0.3, 340.0}, {0.5, 350.0},
                       {0.7, 358.0}, {0.9, 370.0}, {1.0, 380.0}},
                      0.05, capacity_kwh);
}

void VehicleSpec::validate() const {
  require(curb_mass > 0.0, "curb_mass must be positive");
  require(payload_capacity > 0.0, "payload_capacity must be positive");
  require(frontal_area > 0.0, "frontal_area must be positive");
  require(drag_coefficient > 0.0, "drag_coefficient must be positive");
  require(rolling_resistance > 0.0, "rolling_resistance must be positive");
  require(drivetrain_efficiency > 0.0 && drivetrain_efficiency <= 1.0,
          "drivetrain_efficiency must lie in (0, 1]");
  require(auxiliary_power >= 0.0, "auxiliary_power must be nonnegative");
  require(wheel_radius > 0.0, "wheel_radius must be positive");
  require(reduction_ratio > 0.0, "reduction_ratio must be positive");
  require(max_motor_power > 0.0, "max_motor_power must be positive");
  require(reserve_fraction >= 0.0 && reserve_fraction < 1.0,
          "reserve_fraction must lie in [0, 1)");
  require(air_density > 0.0, "air_density must be positive");
}

namespace {

// Longitudinal power balance over one step with mid-step speed v and
// acceleration a. Returns electrical power at the battery terminals in kW,
// auxiliaries included.
double bus_power(const VehicleSpec& spec, double mass, double v, double a, double regen) {
  const double rolling = v > 0.0 ? mass * kGravity * spec.rolling_resistance : 0.0;
  const double aero = 0.5 * spec.air_density * spec.drag_coefficient * spec.frontal_area * v * v;
  const double wheel_w = (mass * a + rolling + aero) * v;
  const double omega = v / spec.wheel_radius * spec.reduction_ratio;
  const double rpm = omega * 60.0 / (2.0 * std::numbers::pi);

  double electric_w = 0.0;
  if (wheel_w >= 0.0) {
    const double motor_w = wheel_w / spec.drivetrain_efficiency;
    if (motor_w > spec.max_motor_power * 1000.0 * (1.0 + 1e-9)) {
      throw SimulationError("target speed unreachable: required motor power " +
                            std::to_string(motor_w / 1000.0) + " kW exceeds limit " +
                            std::to_string(spec.max_motor_power) + " kW");
    }
    const double torque = omega > 0.0 ? motor_w / omega : 0.0;
    electric_w = motor_w / spec.motor.efficiency(rpm, torque);
  } else if (regen > 0.0) {
    const double motor_w = wheel_w * spec.drivetrain_efficiency;
    const double torque = omega > 0.0 ? -motor_w / omega : 0.0;
    electric_w = motor_w * spec.motor.efficiency(rpm, torque) * regen;
  }
  return electric_w / 1000.0 + spec.auxiliary_power;
}

void validate_cycle(const VehicleSpec& spec, const DriveCycleConfig& c, double total_km) {
  require(total_km > 0.0, "total distance must be positive");
  require(c.accel > 0.0, "accel must be positive");
  require(c.stop_interval > 0.0, "stop_interval must be positive");
  require(c.target_speed > 0.0, "target_speed must be positive");
  require(c.timestep > 0.0, "timestep must be positive");
  require(c.sample_interval > 0.0, "sample_interval must be positive");
  require(c.dwell_time >= 0.0, "dwell_time must be nonnegative");
  require(c.regen_efficiency >= 0.0 && c.regen_efficiency <= 1.0,
          "regen_efficiency must lie in [0, 1]");
  require(c.load >= 0.0, "load must be nonnegative");
  require(c.load <= spec.payload_capacity,
          "load " + std::to_string(c.load) + " kg exceeds payload capacity " +
              std::to_string(spec.payload_capacity) + " kg");
}

}  // namespace

std::vector<SimSample> simulate_cycle(const VehicleSpec& spec,
                                      const DriveCycleConfig& config,
                                      double total_distance_km) {
  spec.validate();
  validate_cycle(spec, config, total_distance_km);

  const double mass = spec.curb_mass + config.load;
  const double capacity = spec.battery_capacity();
  const double usable_kwh = (1.0 - spec.reserve_fraction) * capacity;
  const double target = config.target_speed / 3.6;
  const double total_m = total_distance_km * 1000.0;
  const double block_m = config.stop_interval * 1000.0;
  const double sample_m = config.sample_interval * 1000.0;
  const double dt = config.timestep;

  std::vector<SimSample> samples{{0.0, 0.0}};
  double s = 0.0;       // m
  double v = 0.0;       // m/s
  double energy = 0.0;  // kWh
  double block_end = std::min(block_m, total_m);
  double next_sample = sample_m;
  double dwell_left = 0.0;
  bool braking = false;

  // Generous bound: every block needs at most its cruise time plus start/stop.
  const double steps_per_block =
      (block_m / std::max(target, 0.1) + 2.0 * target / config.accel + config.dwell_time) / dt + 10.0;
  const auto max_steps = static_cast<long long>(steps_per_block * (total_m / block_m + 1.0)) + 1000;

  for (long long step = 0; step < max_steps && s < total_m; ++step) {
    double a = 0.0;
    double step_dt = dt;
    double ds = 0.0;
    double v_new = v;
    bool block_done = false;

    if (dwell_left > 0.0) {
      step_dt = std::min(dt, dwell_left);
      dwell_left -= step_dt;
    } else {
      const double remaining = block_end - s;
      if (!braking && v > 0.0 && v * v / (2.0 * config.accel) >= remaining) {
        braking = true;
      }
      if (braking) {
        a = -v * v / (2.0 * std::max(remaining, 1e-9));
        if (v + a * dt <= 0.0) {
          step_dt = -v / a;
          v_new = 0.0;
          ds = remaining;
          block_done = true;
        } else {
          v_new = v + a * dt;
          ds = 0.5 * (v + v_new) * dt;
        }
      } else {
        a = v < target ? std::min(config.accel, (target - v) / dt) : 0.0;
        v_new = v + a * dt;
        ds = 0.5 * (v + v_new) * dt;
        if (ds >= remaining) {
          // Only reachable when the run ends mid-block.
          ds = remaining;
          block_done = true;
        }
      }
    }

    const double v_mid = 0.5 * (v + v_new);
    const double soc = 1.0 - energy / capacity;
    const double cell_kw =
        spec.battery.cell_power(bus_power(spec, mass, v_mid, a, config.regen_efficiency), soc);
    const double de = cell_kw * step_dt / 3600.0;
    if (energy + de > usable_kwh) {
      break;  // battery at its reserve
    }

    const double s_new = s + ds;
    while (s_new >= next_sample && next_sample <= total_m && ds > 0.0) {
      const double frac = (next_sample - s) / ds;
      samples.push_back({next_sample / 1000.0, energy + frac * de});
      next_sample += sample_m;
    }
    s = s_new;
    v = v_new;
    energy += de;

    if (block_done) {
      s = block_end;
      v = 0.0;
      braking = false;
      dwell_left = config.dwell_time;
      block_end = std::min(block_end + block_m, total_m);
    }
  }

  if (samples.back().distance < s / 1000.0) {
    samples.push_back({s / 1000.0, energy});
  }
  return samples;
}

double VelocityProfile::speed_at(double t) const {
  if (points.empty()) {
    return 0.0;
  }
  if (t <= points.front().first) {
    return points.front().second;
  }
  for (std::size_t i = 1; i < points.size(); ++i) {
    if (t <= points[i].first) {
      const auto [t0, v0] = points[i - 1];
      const auto [t1, v1] = points[i];
      return t1 == t0 ? v1 : v0 + (v1 - v0) * (t - t0) / (t1 - t0);
    }
  }
  return points.back().second;
}

VelocityProfile nedc_profile() {
  VelocityProfile p;
  const std::vector<std::pair<double, double>> urban{
      {0, 0},    {11, 0},   {15, 15},  {23, 15},  {28, 0},   {49, 0},  {61, 32},
      {85, 32},  {96, 0},   {117, 0},  {143, 50}, {155, 50}, {163, 35}, {176, 35},
      {188, 0},  {195, 0}};
  const std::vector<std::pair<double, double>> extra_urban{
      {0, 0},     {20, 0},    {61, 70},   {111, 70},  {119, 50},  {188, 50}, {201, 70},
      {251, 70},  {286, 100}, {316, 100}, {336, 120}, {346, 120}, {380, 0},  {400, 0}};
  double offset = 0.0;
  for (int rep = 0; rep < 4; ++rep) {
    for (std::size_t i = rep == 0 ? 0 : 1; i < urban.size(); ++i) {
      p.points.emplace_back(offset + urban[i].first, urban[i].second);
    }
    offset += urban.back().first;
  }
  for (std::size_t i = 1; i < extra_urban.size(); ++i) {
    p.points.emplace_back(offset + extra_urban[i].first, extra_urban[i].second);
  }
  return p;
}

EconomyReport simulate_profile(const VehicleSpec& spec,
                               const VelocityProfile& profile,
                               double load_kg,
                               double timestep,
                               double regen_efficiency) {
  spec.validate();
  require(timestep > 0.0, "timestep must be positive");
  require(load_kg >= 0.0 && load_kg <= spec.payload_capacity, "load outside payload range");
  const double mass = spec.curb_mass + load_kg;
  const double capacity = spec.battery_capacity();
  const double horizon = profile.duration();

  double s = 0.0;
  double energy = 0.0;
  for (double t = 0.0; t < horizon - 1e-12;) {
    const double dt = std::min(timestep, horizon - t);
    const double v0 = profile.speed_at(t) / 3.6;
    const double v1 = profile.speed_at(t + dt) / 3.6;
    const double a = (v1 - v0) / dt;
    const double v_mid = 0.5 * (v0 + v1);
    const double soc = 1.0 - energy / capacity;
    energy += spec.battery.cell_power(bus_power(spec, mass, v_mid, a, regen_efficiency), soc) * dt /
              3600.0;
    s += v_mid * dt;
    t += dt;
  }
  EconomyReport r;
  r.distance_km = s / 1000.0;
  r.energy_kwh = energy;
  r.km_per_kwh = r.distance_km / energy;
  r.kwh_per_km = energy / r.distance_km;
  return r;
}

}  // namespace gvrp
