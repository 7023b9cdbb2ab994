#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"

#include "gvrp/bench.hpp"
#include "gvrp/energy.hpp"
#include "gvrp/enumerate.hpp"
#include "gvrp/fit.hpp"
#include "gvrp/ga.hpp"
#include "gvrp/instance.hpp"
#include "gvrp/json_io.hpp"
#include "gvrp/simulator.hpp"

namespace fs = std::filesystem;
using namespace gvrp;

namespace {

enum Exit : int { kOk = 0, kInfeasible = 1, kInputError = 2, kInternalError = 3 };

// Effective settings after defaults, config file and flags are layered.
struct Settings {
  std::optional<fs::path> spec;
  std::optional<fs::path> coeffs;
  std::vector<std::string> instances;
  std::string strategy = "lsa";
  std::vector<std::string> strategies{"lsa", "fixed-40", "fixed-50", "fixed-60"};
  int runs = 10;
  std::uint64_t seed = 1;
  int jobs = std::max(1u, std::thread::hardware_concurrency());
  double ta_minutes = 0.0;
  double distance_scale = 1.0;
  double time_scale = 1.0;
  std::optional<std::size_t> truncate;
  std::optional<fs::path> out_dir;
  std::optional<double> reference_km;
  GaConfig ga{};
  FitPlan fit{};
};

struct Flags {
  std::string config;
  std::optional<std::string> spec, coeffs, strategy, out_dir;
  std::vector<std::string> instances;
  std::vector<std::string> strategies;
  std::optional<int> runs, jobs, generations, population, load_levels;
  std::optional<std::uint64_t> seed;
  std::optional<double> ta_minutes, distance_scale, time_scale, reference_km;
  std::optional<std::size_t> truncate;
  bool traces = false;
};

fs::path resolve(const fs::path& base, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

void apply_config_file(const fs::path& file, Settings& s) {
  const json j = read_json_file(file);
  if (!j.is_object()) {
    throw FormatError(file.string() + ": expected an object");
  }
  const fs::path base = file.parent_path();
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string& key = it.key();
    const json& v = *it;
    try {
      if (key == "spec") s.spec = resolve(base, v.get<std::string>());
      else if (key == "coeffs") s.coeffs = resolve(base, v.get<std::string>());
      else if (key == "instances") {
        s.instances.clear();
        for (const auto& p : v) s.instances.push_back(resolve(base, p.get<std::string>()).string());
      } else if (key == "strategy") s.strategy = v.get<std::string>();
      else if (key == "strategies") s.strategies = v.get<std::vector<std::string>>();
      else if (key == "runs") s.runs = v.get<int>();
      else if (key == "seed") s.seed = v.get<std::uint64_t>();
      else if (key == "jobs") s.jobs = v.get<int>();
      else if (key == "ta_minutes") s.ta_minutes = v.get<double>();
      else if (key == "distance_scale") s.distance_scale = v.get<double>();
      else if (key == "time_scale") s.time_scale = v.get<double>();
      else if (key == "truncate") s.truncate = v.get<std::size_t>();
      else if (key == "out_dir") s.out_dir = resolve(base, v.get<std::string>());
      else if (key == "reference_km") s.reference_km = v.get<double>();
      else if (key == "ga") s.ga = ga_config_from_json(v, s.ga);
      else if (key == "fit") s.fit = fit_plan_from_json(v, s.fit);
      else throw FormatError("unknown config key '" + key + "'");
    } catch (const json::exception&) {
      throw FormatError(file.string() + ": config key '" + key + "' has the wrong type");
    } catch (const FormatError& e) {
      throw FormatError(file.string() + ": " + e.what());
    }
  }
}

Settings layer(const Flags& f) {
  Settings s;
  std::string config = f.config;
  if (config.empty()) {
    if (const char* env = std::getenv("GVRP_EV_CONFIG"); env && *env) {
      config = env;
    }
  }
  if (!config.empty()) {
    apply_config_file(config, s);
  }
  if (f.spec) s.spec = *f.spec;
  if (f.coeffs) s.coeffs = *f.coeffs;
  if (!f.instances.empty()) s.instances = f.instances;
  if (f.strategy) s.strategy = *f.strategy;
  if (!f.strategies.empty()) s.strategies = f.strategies;
  if (f.runs) s.runs = *f.runs;
  if (f.seed) s.seed = *f.seed;
  if (f.jobs) s.jobs = *f.jobs;
  if (f.ta_minutes) s.ta_minutes = *f.ta_minutes;
  if (f.distance_scale) s.distance_scale = *f.distance_scale;
  if (f.time_scale) s.time_scale = *f.time_scale;
  if (f.truncate) s.truncate = *f.truncate;
  if (f.out_dir) s.out_dir = *f.out_dir;
  if (f.reference_km) s.reference_km = *f.reference_km;
  if (f.generations) s.ga.max_generations = *f.generations;
  if (f.population) s.ga.population_size = *f.population;
  if (f.load_levels) s.fit.load_levels = *f.load_levels;
  if (s.runs < 1) throw std::invalid_argument("--runs must be at least 1");
  if (s.jobs < 1) throw std::invalid_argument("--jobs must be at least 1");
  if (!(s.distance_scale > 0.0) || !(s.time_scale > 0.0)) {
    throw std::invalid_argument("scales must be positive");
  }
  if (s.ta_minutes < 0.0) throw std::invalid_argument("--ta-minutes must be nonnegative");
  return s;
}

json settings_to_json(const Settings& s) {
  json j = {{"strategy", s.strategy},
            {"strategies", s.strategies},
            {"runs", s.runs},
            {"seed", s.seed},
            {"ta_minutes", s.ta_minutes},
            {"distance_scale", s.distance_scale},
            {"time_scale", s.time_scale},
            {"instances", s.instances},
            {"ga", ga_config_to_json(s.ga)},
            {"fit", fit_plan_to_json(s.fit)}};
  j["spec"] = s.spec ? json(s.spec->string()) : json("built-in");
  j["coeffs"] = s.coeffs ? json(s.coeffs->string()) : json("fitted from spec");
  j["truncate"] = s.truncate ? json(*s.truncate) : json(nullptr);
  return j;
}

VehicleSpec load_spec(const Settings& s) {
  if (!s.spec) {
    return VehicleSpec{};
  }
  if (!fs::exists(*s.spec)) {
    throw FormatError("spec file not found: " + s.spec->string());
  }
  return read_vehicle(*s.spec);
}

EnergyCoefficients load_coeffs(const Settings& s, const VehicleSpec& spec) {
  if (s.coeffs) {
    if (!fs::exists(*s.coeffs)) {
      throw FormatError("coefficient file not found: " + s.coeffs->string());
    }
    return read_coefficients(*s.coeffs);
  }
  return build_coefficients(spec, s.fit);
}

Instance load_instance(const std::string& path, const Settings& s) {
  if (!fs::exists(path)) {
    throw FormatError("instance file not found: " + path);
  }
  Instance inst = [&] {
    try {
      return load_solomon(path, Scales{s.distance_scale, s.time_scale, 1.0});
    } catch (const ParseError& e) {
      throw FormatError(path + ": " + e.what());
    }
  }();
  if (s.truncate && *s.truncate < inst.customer_count()) {
    inst = truncate(inst, *s.truncate);
  }
  return inst;
}

std::string single_instance(const Settings& s) {
  if (s.instances.size() != 1) {
    throw std::invalid_argument("exactly one --instance is required");
  }
  return s.instances.front();
}

std::vector<std::string> expand_instances(const std::vector<std::string>& inputs) {
  std::vector<std::string> out;
  for (const auto& in : inputs) {
    if (fs::is_directory(in)) {
      std::vector<std::string> files;
      for (const auto& e : fs::directory_iterator(in)) {
        if (e.is_regular_file() && e.path().extension() == ".txt") {
          files.push_back(e.path().string());
        }
      }
      std::sort(files.begin(), files.end());
      out.insert(out.end(), files.begin(), files.end());
    } else {
      out.push_back(in);
    }
  }
  return out;
}

int cmd_fit(const Settings& s, bool traces) {
  const VehicleSpec spec = load_spec(s);
  const auto runs = simulate_plan(spec, s.fit);
  const EnergyCoefficients coeffs = fit_coefficients(to_fit_points(runs));
  const fs::path dir = s.out_dir.value_or(".");
  const fs::path out = s.coeffs.value_or(dir / "coefficients.json");
  write_json_file(out, coefficients_to_json(coeffs));
  if (traces) {
    for (const auto& r : runs) {
      write_trace_csv(dir / "traces" /
                          ("trace_" + std::to_string(r.speed_kmh) + "kmh_" +
                           std::to_string(static_cast<int>(r.load_kg)) + "kg.csv"),
                      r.trace);
    }
  }
  std::cout << "wrote " << out.string() << '\n';
  for (const auto& lv : coeffs.levels()) {
    std::cout << "  " << lv.speed_kmh << " km/h  R^2 = " << std::setprecision(6) << lv.r_squared << '\n';
  }
  return kOk;
}

int cmd_validate(const Settings& s) {
  const VehicleSpec spec = load_spec(s);
  const EconomyReport rep = simulate_profile(spec, nedc_profile());
  const double range = nedc_range(rep.km_per_kwh, spec.battery_capacity());
  json out = {{"distance_km", rep.distance_km},
              {"energy_kwh", rep.energy_kwh},
              {"km_per_kwh", rep.km_per_kwh},
              {"kwh_per_km", rep.kwh_per_km},
              {"battery_kwh", spec.battery_capacity()},
              {"range_km", range}};
  std::cout << std::fixed << std::setprecision(4) << "cycle distance  " << rep.distance_km << " km\n"
            << "cycle energy    " << rep.energy_kwh << " kWh\n"
            << "economy         " << rep.km_per_kwh << " km/kWh, " << rep.kwh_per_km << " kWh/km\n"
            << "range           " << std::setprecision(2) << range << " km\n";
  if (s.reference_km) {
    const double delta = nedc_delta(*s.reference_km, range);
    out["reference_km"] = *s.reference_km;
    out["delta_pct"] = delta;
    std::cout << "delta vs " << *s.reference_km << " km: " << delta << " %\n";
  }
  if (s.out_dir) {
    out["config"] = {{"spec", s.spec ? s.spec->string() : "built-in"}};
    write_json_file(*s.out_dir / "validation.json", out);
  }
  return kOk;
}

int cmd_solve(const Settings& s) {
  const VehicleSpec spec = load_spec(s);
  const Problem problem(load_instance(single_instance(s), s), load_coeffs(s, spec), spec, s.ta_minutes);
  GaConfig ga = s.ga;
  ga.strategy = SpeedStrategy::parse(s.strategy);
  ga.seed = s.seed;
  const SolveReport report = evolve(problem, ga);

  json doc = report_to_json(report, problem);
  doc.erase("runtime_s");  // kept out so reruns with one seed produce identical files
  Settings echo = s;
  echo.ga = ga;
  doc["effective_config"] = settings_to_json(echo);
  if (s.out_dir) {
    write_json_file(*s.out_dir / "solution.json", doc);
    write_route_summary_csv(*s.out_dir / "route_summary.csv", report.best, problem);
    write_curve_csv(*s.out_dir / "fitness_curve.csv", report.curve);
  } else {
    std::cout << doc.dump(2) << '\n';
  }
  std::cerr << problem.instance.name() << " " << ga.strategy.name() << ": "
            << (report.best.feasible() ? "feasible" : "INFEASIBLE") << ", " << report.best.routes.size()
            << " routes, " << std::setprecision(6) << report.best.total_energy << " kWh, "
            << std::setprecision(3) << report.runtime_seconds << " s\n";
  return report.best.feasible() ? kOk : kInfeasible;
}

int cmd_benchmark(const Settings& s) {
  const VehicleSpec spec = load_spec(s);
  const EnergyCoefficients coeffs = load_coeffs(s, spec);
  const auto files = expand_instances(s.instances);
  if (files.empty()) {
    throw std::invalid_argument("no instances given (use --instance, repeatable, files or directories)");
  }
  std::vector<BenchInstance> instances;
  bool load_failed = false;
  for (const auto& f : files) {
    BenchInstance bi;
    bi.name = fs::path(f).stem().string();
    try {
      bi.problem = std::make_shared<const Problem>(load_instance(f, s), coeffs, spec, s.ta_minutes);
    } catch (const std::exception& e) {
      bi.error = e.what();
      load_failed = true;
      std::cerr << "failed to load " << f << ": " << e.what() << '\n';
    }
    instances.push_back(std::move(bi));
  }

  ExperimentConfig cfg;
  cfg.strategies.clear();
  for (const auto& name : s.strategies) {
    cfg.strategies.push_back(SpeedStrategy::parse(name));
  }
  for (const auto& st : cfg.strategies) {
    if (st.kind == SpeedStrategy::Kind::Fixed) {
      coeffs.level_of(st.fixed_kmh);
    }
  }
  cfg.runs = s.runs;
  cfg.seed = s.seed;
  cfg.jobs = s.jobs;
  cfg.ga = s.ga;

  const std::size_t total = instances.size() * cfg.strategies.size() * static_cast<std::size_t>(cfg.runs);
  std::size_t done = 0;
  const ExperimentResult result = run_experiment(instances, cfg, [&](const StrategyResult& c, const RunRecord& r) {
    ++done;
    std::cerr << "[" << done << "/" << total << "] " << c.instance << " " << c.strategy << " run " << r.run
              << ": " << std::setprecision(6) << r.energy_kwh << " kWh" << (r.feasible ? "" : " (infeasible)")
              << '\n';
  });

  const fs::path dir = s.out_dir.value_or("bench_out");
  json config = settings_to_json(s);
  config["jobs"] = s.jobs;
  write_json_file(dir / "config.json", config);
  const std::string comment = "config " + settings_to_json(s).dump();
  write_results_raw(dir / "results_raw.csv", result.cells, comment);
  write_gap_table(dir / "gap_table.csv", result.table, comment);
  write_fitness_curves(dir / "fitness_curves", result.cells, comment);
  print_gap_table(std::cout, result.table);
  for (const auto& c : result.cells) {
    if (c.failed()) {
      std::cerr << "cell failed: " << c.instance << " " << c.strategy << ": " << c.error << '\n';
    }
  }
  if (load_failed) {
    return kInputError;
  }
  return result.any_failed() ? kInternalError : kOk;
}

int cmd_enumerate(const Settings& s) {
  const VehicleSpec spec = load_spec(s);
  const Problem problem(load_instance(single_instance(s), s), load_coeffs(s, spec), spec, s.ta_minutes);
  const auto result = enumerate_optimum(problem);
  json doc;
  doc["instance"] = problem.instance.name();
  doc["effective_config"] = settings_to_json(s);
  if (result) {
    doc["energy_kwh"] = result->energy_kwh;
    doc["sequences_examined"] = result->sequences;
    doc["solution"] = solution_to_json(result->solution, problem);
  } else {
    doc["energy_kwh"] = nullptr;
    doc["solution"] = nullptr;
  }
  if (s.out_dir) {
    write_json_file(*s.out_dir / "optimum.json", doc);
  } else {
    std::cout << doc.dump(2) << '\n';
  }
  if (!result) {
    std::cerr << problem.instance.name() << ": no feasible solution exists\n";
    return kInfeasible;
  }
  std::cerr << problem.instance.name() << ": optimum " << std::setprecision(8) << result->energy_kwh << " kWh over "
            << result->solution.routes.size() << " routes\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Energy-minimising electric vehicle routing with speed optimisation"};
  app.require_subcommand(1);
  Flags flags;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", flags.config, "JSON config file (default: $GVRP_EV_CONFIG)");
    sub->add_option("--spec", flags.spec, "vehicle spec JSON");
    sub->add_option("--out-dir", flags.out_dir, "output directory");
  };
  auto problem_opts = [&](CLI::App* sub) {
    sub->add_option("--coeffs", flags.coeffs, "energy coefficient JSON (default: fit from the vehicle spec)");
    sub->add_option("--ta-minutes", flags.ta_minutes, "allowed early service before ready time");
    sub->add_option("--distance-scale", flags.distance_scale, "km per instance distance unit");
    sub->add_option("--time-scale", flags.time_scale, "minutes per instance time unit");
    sub->add_option("--truncate", flags.truncate, "keep the first N customers");
  };
  auto ga_opts = [&](CLI::App* sub) {
    sub->add_option("--seed", flags.seed, "base random seed");
    sub->add_option("--generations", flags.generations, "GA generations");
    sub->add_option("--population", flags.population, "GA population size");
  };

  auto* fit = app.add_subcommand("fit", "simulate drive cycles and fit energy coefficients");
  common(fit);
  fit->add_option("--coeffs,-o", flags.coeffs, "output coefficient file (default: <out-dir>/coefficients.json)");
  fit->add_option("--load-levels", flags.load_levels, "number of equally spaced load steps");
  fit->add_flag("--traces", flags.traces, "also write simulator traces as CSV");

  auto* validate = app.add_subcommand("validate", "economy on the NEDC profile");
  common(validate);
  validate->add_option("--reference-km", flags.reference_km, "measured range to compare against");

  auto* solve = app.add_subcommand("solve", "solve one instance with the GA");
  common(solve);
  problem_opts(solve);
  ga_opts(solve);
  solve->add_option("--instance", flags.instances, "Solomon instance file")->expected(1);
  solve->add_option("--strategy,--speed-strategy", flags.strategy, "lsa | fixed-40 | fixed-50 | fixed-60");

  auto* bench = app.add_subcommand("benchmark", "strategies x instances x seeded runs");
  common(bench);
  problem_opts(bench);
  ga_opts(bench);
  bench->add_option("--instance", flags.instances, "instance files or directories (repeatable)");
  bench->add_option("--strategy", flags.strategies, "strategies to compare (repeatable; default all four)");
  bench->add_option("--runs", flags.runs, "runs per cell");
  bench->add_option("--jobs", flags.jobs, "worker threads");

  auto* enumerate = app.add_subcommand("enumerate", "exact optimum of a tiny instance");
  common(enumerate);
  problem_opts(enumerate);
  enumerate->add_option("--instance", flags.instances, "Solomon instance file")->expected(1);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kInputError;
  }

  try {
    const Settings s = layer(flags);
    if (*fit) return cmd_fit(s, flags.traces);
    if (*validate) return cmd_validate(s);
    if (*solve) return cmd_solve(s);
    if (*bench) return cmd_benchmark(s);
    if (*enumerate) return cmd_enumerate(s);
  } catch (const FormatError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInputError;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInputError;
  } catch (const InstanceError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInputError;
  } catch (const EnumerationBoundError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInputError;
  } catch (const FitError& e) {
    std::cerr << "fit failed: " << e.what() << '\n';
    return kInputError;
  } catch (const SimulationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInputError;
  } catch (const EnergyError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInputError;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInputError;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return kInternalError;
  }
  return kInternalError;
}
