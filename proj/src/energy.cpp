#include "gvrp/energy.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace gvrp {

double Surface::equivalent_distance(double load_kg, double energy_kwh) const {
  const double a = p20;
  const double b = p10 + p11 * load_kg;
  const double c = p00 + p01 * load_kg - energy_kwh;
  // Relative slack for energies that equal the zero-distance value up to rounding.
  const double tol = 1e-12 * std::max({1.0, std::abs(energy_kwh), std::abs(p00 + p01 * load_kg)});
  if (c > tol) {
    throw EnergyError("energy " + std::to_string(energy_kwh) +
                      " kWh is below the zero-distance energy of the surface");
  }
  if (c >= 0.0) {
    return 0.0;
  }
  if (a == 0.0) {
    if (!(b > 0.0)) {
      throw EnergyError("surface is not increasing in distance; cannot invert");
    }
    return -c / b;
  }
  const double disc = b * b - 4.0 * a * c;
  if (disc < 0.0) {
    throw EnergyError("energy " + std::to_string(energy_kwh) +
                      " kWh exceeds the maximum of the surface");
  }
  // Root on the increasing branch; this form avoids cancellation when a is small.
  const double denom = b + std::sqrt(disc);
  if (!(denom > 0.0)) {
    throw EnergyError("surface has no nonnegative increasing root");
  }
  return -2.0 * c / denom;
}

double Surface::leg_energy(double load_kg, double prior_kwh, double leg_km) const {
  const double start = std::max(prior_kwh, (*this)(0.0, load_kg));
  const double l_eq = equivalent_distance(load_kg, start);
  return (*this)(l_eq + leg_km, load_kg) - (*this)(l_eq, load_kg);
}

EnergyCoefficients::EnergyCoefficients(std::vector<SpeedSurface> levels)
  : levels_(std::move(levels)) {
  if (levels_.empty()) {
    throw EnergyError("coefficient set needs at least one speed level");
  }
  std::sort(levels_.begin(), levels_.end(),
            [](const auto& l, const auto& r) { return l.speed_kmh < r.speed_kmh; });
  for (std::size_t i = 0; i < levels_.size(); ++i) {
    if (levels_[i].speed_kmh <= 0) {
      throw EnergyError("speed levels must be positive");
    }
    if (i > 0 && levels_[i].speed_kmh == levels_[i - 1].speed_kmh) {
      throw EnergyError("duplicate speed level " + std::to_string(levels_[i].speed_kmh));
    }
  }
}

std::size_t EnergyCoefficients::level_of(int speed_kmh) const {
  for (std::size_t i = 0; i < levels_.size(); ++i) {
    if (levels_[i].speed_kmh == speed_kmh) {
      return i;
    }
  }
  throw EnergyError("unknown speed level " + std::to_string(speed_kmh) + " km/h");
}

double energy(const EnergyCoefficients& coeffs, int speed_kmh, double distance_km,
              double load_kg) {
  if (distance_km < 0.0 || load_kg < 0.0) {
    throw EnergyError("distance and load must be nonnegative");
  }
  return coeffs.at_speed(speed_kmh)(distance_km, load_kg);
}

double equivalent_distance(const EnergyCoefficients& coeffs, int speed_kmh, double load_kg,
                           double energy_kwh) {
  return coeffs.at_speed(speed_kmh).equivalent_distance(load_kg, energy_kwh);
}

double leg_energy(const EnergyCoefficients& coeffs, int speed_kmh, double load_kg,
                  double prior_kwh, double leg_km) {
  return coeffs.at_speed(speed_kmh).leg_energy(load_kg, prior_kwh, leg_km);
}

double nedc_range(double economy_km_per_kwh, double capacity_kwh) {
  return economy_km_per_kwh * capacity_kwh;
}

double nedc_delta(double measured_km, double simulated_km) {
  return (measured_km - simulated_km) / measured_km * 100.0;
}

}  // namespace gvrp
