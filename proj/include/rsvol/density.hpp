#pragma once

#include <iosfwd>
#include <vector>

#include "rsvol/backward.hpp"

namespace rsvol {

enum class StrikeSpacing { kUniform, kLogUniform };

/// values[i][j][k] = d^2 C_ij / dK^2 at strikes[k]; the two end strikes of
/// the price surface are dropped.
struct DensitySurface {
  std::vector<double> strikes;
  int n = 1;
  std::vector<double> values;

  double at(int i, int j, std::size_t k) const {
    return values[(static_cast<std::size_t>(i) * n + j) * strikes.size() + k];
  }
  double& at(int i, int j, std::size_t k) {
    return values[(static_cast<std::size_t>(i) * n + j) * strikes.size() + k];
  }
  double min_value() const;
};

/// Throws Errc::kTooFewStrikes below 5 strikes.
DensitySurface extract_density(const PriceSurface& s,
                               StrikeSpacing spacing = StrikeSpacing::kLogUniform);

struct MassReport {
  std::vector<double> mass;  // integral of d_{i j*} dK per terminal regime i
  std::vector<double> bond;  // state-j* value of the payoff e_i(X_T)
  std::vector<double> gap;
  double max_gap = 0.0;
};

MassReport density_mass_check(const DensitySurface& d, const DiscreteModel& model,
                              const ObservationSpec& obs, double maturity, int time_steps,
                              const StepperConfig& stepper = {});

/// CSV with header K,i,j,density (regimes 1-based).
void write_density_csv(std::ostream& os, const DensitySurface& d);

}  // namespace rsvol
