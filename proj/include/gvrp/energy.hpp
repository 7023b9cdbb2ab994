#pragma once

#include <array>
#include <stdexcept>
#include <vector>

namespace gvrp {

class EnergyError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Quadratic energy surface for a single speed level:
//   C(L, W) = p00 + p10*L + p01*W + p20*L^2 + p11*L*W
// with L in km, W in kg, C in kWh (cumulative since departure).
struct Surface {
  double p00 = 0.0;
  double p10 = 0.0;
  double p01 = 0.0;
  double p20 = 0.0;
  double p11 = 0.0;

  double operator()(double distance_km, double load_kg) const noexcept {
    const double l = distance_km;
    return p00 + p10 * l + p01 * load_kg + p20 * l * l + p11 * l * load_kg;
  }

  // dC/dL at (L, W).
  double slope(double distance_km, double load_kg) const noexcept {
    return p10 + 2.0 * p20 * distance_km + p11 * load_kg;
  }

  // Nonnegative L with C(L, W) = energy on the increasing branch.
  double equivalent_distance(double load_kg, double energy_kwh) const;

  // Energy of a leg of length d driven after `prior_kwh` has been accumulated.
  // The accumulated energy is mapped to an equivalent distance at this load,
  // and the leg is charged the increment of the surface over d.
  double leg_energy(double load_kg, double prior_kwh, double leg_km) const;
};

struct SpeedSurface {
  int speed_kmh = 0;
  Surface surface;
  double r_squared = 1.0;
  // Half-widths of the 95% confidence intervals of p00, p10, p01, p20, p11.
  std::array<double, 5> ci95{};
};

// Coefficient set for every configured speed level, sorted by increasing
// speed. Level indices used elsewhere index into this order.
class EnergyCoefficients {
public:
  EnergyCoefficients() = default;
  explicit EnergyCoefficients(std::vector<SpeedSurface> levels);

  const std::vector<SpeedSurface>& levels() const noexcept { return levels_; }
  std::size_t level_count() const noexcept { return levels_.size(); }
  int speed_kmh(std::size_t level) const { return levels_.at(level).speed_kmh; }
  const Surface& surface(std::size_t level) const { return levels_[level].surface; }

  // Level index of a speed in km/h; throws EnergyError for unknown speeds.
  std::size_t level_of(int speed_kmh) const;
  const Surface& at_speed(int speed_kmh) const { return surface(level_of(speed_kmh)); }

private:
  std::vector<SpeedSurface> levels_;
};

double energy(const EnergyCoefficients& coeffs, int speed_kmh, double distance_km,
              double load_kg);
double equivalent_distance(const EnergyCoefficients& coeffs, int speed_kmh, double load_kg,
                           double energy_kwh);
double leg_energy(const EnergyCoefficients& coeffs, int speed_kmh, double load_kg,
                  double prior_kwh, double leg_km);

// Range from economy and capacity, and the signed relative gap between a
// measured and a simulated range in percent.
double nedc_range(double economy_km_per_kwh, double capacity_kwh);
double nedc_delta(double measured_km, double simulated_km);

}  // namespace gvrp
