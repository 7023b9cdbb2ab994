#include "gvrp/json_io.hpp"

#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

namespace gvrp {

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw FormatError("cannot open " + path.string());
  }
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void write_json_file(const std::filesystem::path& path, const json& value) {
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  std::ofstream out(path);
  if (!out) {
    throw FormatError("cannot write " + path.string());
  }
  out << value.dump(2) << '\n';
}

namespace {

// Reads fields of one JSON object, remembering which keys were consumed so
// leftovers can be reported as unknown.
class Fields {
public:
  Fields(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) {
      throw FormatError(where_ + ": expected an object");
    }
  }

  template <class T>
  void read(const char* key, T& target) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end()) {
      return;
    }
    try {
      target = it->template get<T>();
    } catch (const json::exception&) {
      throw FormatError(where_ + ": field '" + key + "' has the wrong type");
    }
  }

  const json* child(const char* key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  void reject_unknown() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) {
        throw FormatError(where_ + ": unknown field '" + it.key() + "'");
      }
    }
  }

private:
  const json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

}  // namespace

json instance_to_json(const Instance& instance) {
  json nodes = json::array();
  for (const auto& c : instance.nodes()) {
    nodes.push_back({{"id", c.id},
                     {"x", c.x},
                     {"y", c.y},
                     {"demand", c.demand},
                     {"ready", c.ready},
                     {"due", c.due},
                     {"service_time", c.service_time}});
  }
  const auto& s = instance.scales();
  return {{"name", instance.name()},
          {"fleet_size", instance.fleet_size()},
          {"capacity", instance.capacity()},
          {"scales", {{"distance_km", s.distance_km}, {"time_minutes", s.time_minutes}, {"demand_kg", s.demand_kg}}},
          {"nodes", nodes}};
}

json coefficients_to_json(const EnergyCoefficients& coeffs) {
  json j = json::object();
  for (const auto& lv : coeffs.levels()) {
    const auto& p = lv.surface;
    j[std::to_string(lv.speed_kmh)] = {{"p00", p.p00}, {"p10", p.p10}, {"p01", p.p01},
                                       {"p20", p.p20}, {"p11", p.p11}, {"r_squared", lv.r_squared},
                                       {"ci95", lv.ci95}};
  }
  return j;
}

EnergyCoefficients coefficients_from_json(const json& j) {
  if (!j.is_object() || j.empty()) {
    throw FormatError("coefficients: expected a non-empty object keyed by speed");
  }
  std::vector<SpeedSurface> levels;
  for (auto it = j.begin(); it != j.end(); ++it) {
    SpeedSurface lv;
    try {
      std::size_t used = 0;
      lv.speed_kmh = std::stoi(it.key(), &used);
      if (used != it.key().size()) {
        throw std::invalid_argument(it.key());
      }
    } catch (const std::exception&) {
      throw FormatError("coefficients: speed key '" + it.key() + "' is not an integer km/h");
    }
    Fields f(*it, "coefficients[" + it.key() + "]");
    for (const char* key : {"p00", "p10", "p01", "p20", "p11"}) {
      if (!it->contains(key)) {
        throw FormatError("coefficients[" + it.key() + "]: missing '" + key + "'");
      }
    }
    f.read("p00", lv.surface.p00);
    f.read("p10", lv.surface.p10);
    f.read("p01", lv.surface.p01);
    f.read("p20", lv.surface.p20);
    f.read("p11", lv.surface.p11);
    f.read("r_squared", lv.r_squared);
    f.read("ci95", lv.ci95);
    f.reject_unknown();
    levels.push_back(lv);
  }
  try {
    return EnergyCoefficients(std::move(levels));
  } catch (const EnergyError& e) {
    throw FormatError(std::string("coefficients: ") + e.what());
  }
}

EnergyCoefficients read_coefficients(const std::filesystem::path& path) {
  try {
    return coefficients_from_json(read_json_file(path));
  } catch (const FormatError& e) {
    const std::string msg = e.what();
    throw FormatError(msg.rfind(path.string(), 0) == 0 ? msg : path.string() + ": " + msg);
  }
}

json vehicle_to_json(const VehicleSpec& spec) {
  json table = json::array();
  for (const auto& [soc, v] : spec.battery.table()) {
    table.push_back({soc, v});
  }
  return {{"curb_mass", spec.curb_mass},
          {"payload_capacity", spec.payload_capacity},
          {"frontal_area", spec.frontal_area},
          {"drag_coefficient", spec.drag_coefficient},
          {"rolling_resistance", spec.rolling_resistance},
          {"drivetrain_efficiency", spec.drivetrain_efficiency},
          {"auxiliary_power", spec.auxiliary_power},
          {"wheel_radius", spec.wheel_radius},
          {"reduction_ratio", spec.reduction_ratio},
          {"max_motor_power", spec.max_motor_power},
          {"reserve_fraction", spec.reserve_fraction},
          {"air_density", spec.air_density},
          {"battery",
           {{"capacity_kwh", spec.battery.capacity_kwh()},
            {"internal_resistance_ohm", spec.battery.internal_resistance()},
            {"soc_voltage", table}}},
          {"motor",
           {{"speeds_rpm", spec.motor.speeds_rpm()},
            {"torques_nm", spec.motor.torques_nm()},
            {"efficiency", spec.motor.values()}}}};
}

VehicleSpec vehicle_from_json(const json& j) {
  VehicleSpec spec;
  Fields f(j, "vehicle");
  f.read("curb_mass", spec.curb_mass);
  f.read("payload_capacity", spec.payload_capacity);
  f.read("frontal_area", spec.frontal_area);
  f.read("drag_coefficient", spec.drag_coefficient);
  f.read("rolling_resistance", spec.rolling_resistance);
  f.read("drivetrain_efficiency", spec.drivetrain_efficiency);
  f.read("auxiliary_power", spec.auxiliary_power);
  f.read("wheel_radius", spec.wheel_radius);
  f.read("reduction_ratio", spec.reduction_ratio);
  f.read("max_motor_power", spec.max_motor_power);
  f.read("reserve_fraction", spec.reserve_fraction);
  f.read("air_density", spec.air_density);
  try {
    if (const json* b = f.child("battery")) {
      Fields bf(*b, "vehicle.battery");
      double capacity = spec.battery.capacity_kwh();
      double resistance = spec.battery.internal_resistance();
      std::vector<std::pair<double, double>> table = spec.battery.table();
      bf.read("capacity_kwh", capacity);
      bf.read("internal_resistance_ohm", resistance);
      bf.read("soc_voltage", table);
      bf.reject_unknown();
      spec.battery = BatteryModel(std::move(table), resistance, capacity);
    }
    if (const json* m = f.child("motor")) {
      Fields mf(*m, "vehicle.motor");
      std::vector<double> speeds = spec.motor.speeds_rpm();
      std::vector<double> torques = spec.motor.torques_nm();
      std::vector<double> eta = spec.motor.values();
      mf.read("speeds_rpm", speeds);
      mf.read("torques_nm", torques);
      mf.read("efficiency", eta);
      mf.reject_unknown();
      spec.motor = MotorEfficiencyMap(std::move(speeds), std::move(torques), std::move(eta));
    }
    f.reject_unknown();
    spec.validate();
  } catch (const SimulationError& e) {
    throw FormatError(std::string("vehicle: ") + e.what());
  }
  return spec;
}

VehicleSpec read_vehicle(const std::filesystem::path& path) {
  try {
    return vehicle_from_json(read_json_file(path));
  } catch (const FormatError& e) {
    const std::string msg = e.what();
    throw FormatError(msg.rfind(path.string(), 0) == 0 ? msg : path.string() + ": " + msg);
  }
}

json cycle_to_json(const DriveCycleConfig& c) {
  return {{"accel", c.accel},
          {"stop_interval", c.stop_interval},
          {"target_speed", c.target_speed},
          {"load", c.load},
          {"timestep", c.timestep},
          {"regen_efficiency", c.regen_efficiency},
          {"sample_interval", c.sample_interval},
          {"dwell_time", c.dwell_time}};
}

DriveCycleConfig cycle_from_json(const json& j, DriveCycleConfig c) {
  Fields f(j, "cycle");
  f.read("accel", c.accel);
  f.read("stop_interval", c.stop_interval);
  f.read("target_speed", c.target_speed);
  f.read("load", c.load);
  f.read("timestep", c.timestep);
  f.read("regen_efficiency", c.regen_efficiency);
  f.read("sample_interval", c.sample_interval);
  f.read("dwell_time", c.dwell_time);
  f.reject_unknown();
  return c;
}

json fit_plan_to_json(const FitPlan& plan) {
  return {{"speeds_kmh", plan.speeds_kmh},
          {"load_levels", plan.load_levels},
          {"max_distance_km", plan.max_distance_km},
          {"cycle", cycle_to_json(plan.cycle)}};
}

FitPlan fit_plan_from_json(const json& j, FitPlan plan) {
  Fields f(j, "fit");
  f.read("speeds_kmh", plan.speeds_kmh);
  f.read("load_levels", plan.load_levels);
  f.read("max_distance_km", plan.max_distance_km);
  if (const json* c = f.child("cycle")) {
    plan.cycle = cycle_from_json(*c, plan.cycle);
  }
  f.reject_unknown();
  return plan;
}

json ga_config_to_json(const GaConfig& c) {
  return {{"population_size", c.population_size},
          {"max_generations", c.max_generations},
          {"tournament_size", c.tournament_size},
          {"k1", c.k1},
          {"k2", c.k2},
          {"k3", c.k3},
          {"k4", c.k4},
          {"reversal_rate", c.reversal_rate},
          {"nn_fraction", c.nn_fraction},
          {"penalty",
           {{"per_kg", c.penalty.per_kg},
            {"per_minute", c.penalty.per_minute},
            {"per_kwh", c.penalty.per_kwh},
            {"per_customer", c.penalty.per_customer},
            {"per_route", c.penalty.per_route}}},
          {"strategy", c.strategy.name()},
          {"split", c.split == SplitPolicy::Optimal ? "optimal" : "greedy"},
          {"seed", c.seed}};
}

GaConfig ga_config_from_json(const json& j, GaConfig c) {
  Fields f(j, "ga");
  f.read("population_size", c.population_size);
  f.read("max_generations", c.max_generations);
  f.read("tournament_size", c.tournament_size);
  f.read("k1", c.k1);
  f.read("k2", c.k2);
  f.read("k3", c.k3);
  f.read("k4", c.k4);
  f.read("reversal_rate", c.reversal_rate);
  f.read("nn_fraction", c.nn_fraction);
  f.read("seed", c.seed);
  if (const json* p = f.child("penalty")) {
    Fields pf(*p, "ga.penalty");
    pf.read("per_kg", c.penalty.per_kg);
    pf.read("per_minute", c.penalty.per_minute);
    pf.read("per_kwh", c.penalty.per_kwh);
    pf.read("per_customer", c.penalty.per_customer);
    pf.read("per_route", c.penalty.per_route);
    pf.reject_unknown();
  }
  std::string strategy;
  f.read("strategy", strategy);
  if (!strategy.empty()) {
    try {
      c.strategy = SpeedStrategy::parse(strategy);
    } catch (const std::invalid_argument& e) {
      throw FormatError(std::string("ga: ") + e.what());
    }
  }
  std::string split;
  f.read("split", split);
  if (split == "optimal") {
    c.split = SplitPolicy::Optimal;
  } else if (split == "greedy") {
    c.split = SplitPolicy::Greedy;
  } else if (!split.empty()) {
    throw FormatError("ga: split must be 'optimal' or 'greedy'");
  }
  f.reject_unknown();
  return c;
}

json solution_to_json(const Solution& solution, const Problem& problem) {
  Solution evaluated = solution;
  if (evaluated.schedules.size() != evaluated.routes.size()) {
    evaluate(evaluated, problem);
  }
  const auto& inst = problem.instance;
  json routes = json::array();
  for (std::size_t r = 0; r < evaluated.routes.size(); ++r) {
    const Route& route = evaluated.routes[r];
    const Schedule& sch = evaluated.schedules[r];
    json ids = json::array();
    for (int c : route.customers) {
      ids.push_back(inst.node(static_cast<std::size_t>(c)).id);
    }
    json speeds = json::array();
    for (auto lv : route.leg_speeds) {
      speeds.push_back(lv < problem.level_count() ? problem.speed_kmh(lv) : -1);
    }
    json visits = json::array();
    for (const auto& v : sch.visits) {
      visits.push_back({{"node", v.node},
                        {"id", inst.node(static_cast<std::size_t>(v.node)).id},
                        {"arrival_min", v.arrival},
                        {"service_start_min", v.service_start},
                        {"departure_min", v.departure},
                        {"lateness_min", v.lateness}});
    }
    json legs = json::array();
    for (const auto& l : sch.legs) {
      legs.push_back({{"from", l.from},
                      {"to", l.to},
                      {"distance_km", l.distance_km},
                      {"load_kg", l.load_kg},
                      {"speed_kmh", l.speed < problem.level_count() ? problem.speed_kmh(l.speed) : -1},
                      {"travel_min", l.travel_minutes},
                      {"energy_kwh", l.energy_kwh},
                      {"battery_after_kwh", l.battery_after_kwh}});
    }
    routes.push_back({{"customers", route.customers},
                      {"customer_ids", ids},
                      {"leg_speeds_kmh", speeds},
                      {"energy_kwh", sch.energy_kwh},
                      {"lateness_min", sch.lateness_minutes},
                      {"visits", visits},
                      {"legs", legs}});
  }
  json violations = json::array();
  for (const auto& v : evaluated.violations) {
    violations.push_back({{"kind", std::string(to_string(v.kind))},
                          {"magnitude", v.magnitude},
                          {"route", v.route},
                          {"node", v.node}});
  }
  return {{"feasible", evaluated.feasible()},
          {"total_energy_kwh", evaluated.total_energy},
          {"route_count", evaluated.routes.size()},
          {"routes", routes},
          {"violations", violations}};
}

json report_to_json(const SolveReport& report, const Problem& problem) {
  json curve = json::array();
  for (const auto& g : report.curve) {
    curve.push_back({{"generation", g.generation}, {"best", g.best}, {"average", g.average}});
  }
  return {{"instance", problem.instance.name()},
          {"seed", report.seed},
          {"runtime_s", report.runtime_seconds},
          {"best_fitness", report.best_fitness},
          {"best_tour", report.best_tour},
          {"solution", solution_to_json(report.best, problem)},
          {"fitness_curve", curve},
          {"config", ga_config_to_json(report.config)}};
}

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  std::ofstream out(path);
  if (!out) {
    throw FormatError("cannot write " + path.string());
  }
  out << std::setprecision(17);
  return out;
}

}  // namespace

void write_route_summary_csv(const std::filesystem::path& path, const Solution& solution,
                             const Problem& problem) {
  Solution evaluated = solution;
  if (evaluated.schedules.size() != evaluated.routes.size()) {
    evaluate(evaluated, problem);
  }
  const auto& inst = problem.instance;
  auto out = open_out(path);
  out << "route,leg,from,to,from_x,from_y,to_x,to_y,distance_km,load_kg,speed_kmh,arrival_min,energy_kwh\n";
  for (std::size_t r = 0; r < evaluated.routes.size(); ++r) {
    const Schedule& sch = evaluated.schedules[r];
    for (std::size_t l = 0; l < sch.legs.size(); ++l) {
      const auto& leg = sch.legs[l];
      const auto& a = inst.node(static_cast<std::size_t>(leg.from));
      const auto& b = inst.node(static_cast<std::size_t>(leg.to));
      out << r << ',' << l << ',' << a.id << ',' << b.id << ',' << a.x << ',' << a.y << ',' << b.x << ','
          << b.y << ',' << leg.distance_km << ',' << leg.load_kg << ','
          << (leg.speed < problem.level_count() ? problem.speed_kmh(leg.speed) : -1) << ','
          << sch.visits[l].arrival << ',' << leg.energy_kwh << '\n';
    }
  }
}

void write_trace_csv(const std::filesystem::path& path, std::span<const SimSample> trace) {
  auto out = open_out(path);
  out << "distance_km,energy_kwh\n";
  for (const auto& s : trace) {
    out << s.distance << ',' << s.cumulative_energy << '\n';
  }
}

void write_curve_csv(const std::filesystem::path& path, std::span<const GenerationStats> curve) {
  auto out = open_out(path);
  out << "generation,best,avg\n";
  for (const auto& g : curve) {
    out << g.generation << ',' << g.best << ',' << g.average << '\n';
  }
}

}  // namespace gvrp
