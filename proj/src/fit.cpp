#include "gvrp/fit.hpp"

#include <Eigen/Dense>
#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <cmath>
#include <string>

namespace gvrp {

namespace {

constexpr int kTerms = 5;

SpeedSurface fit_one(int speed, const std::vector<FitPoint>& pts) {
  const auto n = static_cast<Eigen::Index>(pts.size());
  if (n < kTerms) {
    throw FitError("speed " + std::to_string(speed) + " km/h: need at least 5 samples, got " +
                   std::to_string(n));
  }
  Eigen::MatrixXd x(n, kTerms);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& p = pts[static_cast<std::size_t>(i)];
    x(i, 0) = 1.0;
    x(i, 1) = p.distance_km;
    x(i, 2) = p.load_kg;
    x(i, 3) = p.distance_km * p.distance_km;
    x(i, 4) = p.distance_km * p.load_kg;
    y(i) = p.energy_kwh;
  }

  // Column scaling to unit max magnitude keeps the problem well conditioned
  // when L^2 and L*W are orders of magnitude larger than the intercept.
  Eigen::VectorXd scale(kTerms);
  for (int c = 0; c < kTerms; ++c) {
    const double m = x.col(c).cwiseAbs().maxCoeff();
    scale(c) = m > 0.0 ? m : 1.0;
    x.col(c) /= scale(c);
  }

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
  qr.setThreshold(1e-10);
  if (qr.rank() < kTerms) {
    throw FitError("speed " + std::to_string(speed) +
                   " km/h: design matrix is rank deficient (rank " + std::to_string(qr.rank()) +
                   " of 5); samples must span several distances and loads");
  }
  const Eigen::VectorXd beta_scaled = qr.solve(y);
  const Eigen::VectorXd beta = beta_scaled.cwiseQuotient(scale);

  const Eigen::VectorXd resid = y - x * beta_scaled;
  const double rss = resid.squaredNorm();
  const double mean = y.mean();
  const double tss = (y.array() - mean).square().sum();

  SpeedSurface out;
  out.speed_kmh = speed;
  out.surface = {beta(0), beta(1), beta(2), beta(3), beta(4)};
  out.r_squared = tss > 0.0 ? 1.0 - rss / tss : (rss == 0.0 ? 1.0 : 0.0);

  const auto dof = n - kTerms;
  if (dof > 0) {
    const double sigma2 = rss / static_cast<double>(dof);
    const Eigen::MatrixXd cov_scaled = (x.transpose() * x).inverse() * sigma2;
    const boost::math::students_t dist(static_cast<double>(dof));
    const double t = boost::math::quantile(dist, 0.975);
    for (int c = 0; c < kTerms; ++c) {
      out.ci95[static_cast<std::size_t>(c)] = t * std::sqrt(std::max(0.0, cov_scaled(c, c))) / scale(c);
    }
  }
  return out;
}

}  // namespace

EnergyCoefficients fit_coefficients(const std::map<int, std::vector<FitPoint>>& samples_by_speed) {
  if (samples_by_speed.empty()) {
    throw FitError("no samples to fit");
  }
  std::vector<SpeedSurface> levels;
  for (const auto& [speed, pts] : samples_by_speed) {
    levels.push_back(fit_one(speed, pts));
  }
  return EnergyCoefficients(std::move(levels));
}

std::vector<double> plan_loads(const VehicleSpec& spec, int load_levels) {
  if (load_levels < 1) {
    throw FitError("load_levels must be at least 1");
  }
  std::vector<double> loads;
  if (load_levels == 1) {
    loads.push_back(0.0);
    return loads;
  }
  for (int i = 0; i < load_levels; ++i) {
    loads.push_back(spec.payload_capacity * i / (load_levels - 1));
  }
  return loads;
}

std::vector<SimulationSet> simulate_plan(const VehicleSpec& spec, const FitPlan& plan) {
  std::vector<SimulationSet> runs;
  for (int speed : plan.speeds_kmh) {
    for (double load : plan_loads(spec, plan.load_levels)) {
      DriveCycleConfig cfg = plan.cycle;
      cfg.target_speed = speed;
      cfg.load = load;
      runs.push_back({speed, load, simulate_cycle(spec, cfg, plan.max_distance_km)});
    }
  }
  return runs;
}

std::map<int, std::vector<FitPoint>> to_fit_points(const std::vector<SimulationSet>& runs) {
  std::map<int, std::vector<FitPoint>> out;
  for (const auto& run : runs) {
    auto& pts = out[run.speed_kmh];
    for (const auto& s : run.trace) {
      pts.push_back({s.distance, run.load_kg, s.cumulative_energy});
    }
  }
  return out;
}

EnergyCoefficients build_coefficients(const VehicleSpec& spec, const FitPlan& plan) {
  return fit_coefficients(to_fit_points(simulate_plan(spec, plan)));
}

bool surfaces_monotone(const EnergyCoefficients& coeffs, double max_km, double max_kg, int grid) {
  const double hl = max_km / grid;
  const double hw = max_kg / grid;
  for (const auto& level : coeffs.levels()) {
    const auto& f = level.surface;
    for (int i = 0; i < grid; ++i) {
      for (int j = 0; j <= grid; ++j) {
        const double l = i * hl;
        const double w = j * hw;
        if (!(f(l + hl, w) - f(l, w) > 0.0)) {
          return false;
        }
        if (j < grid && f(l + hl, w + hw) - f(l + hl, w) < 0.0) {
          return false;
        }
      }
    }
  }
  return true;
}

}  // namespace gvrp
