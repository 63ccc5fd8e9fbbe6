#include "rsvol/density.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "rsvol/error.hpp"
#include "rsvol/format.hpp"

namespace rsvol {

double DensitySurface::min_value() const {
  return values.empty() ? 0.0 : *std::min_element(values.begin(), values.end());
}

DensitySurface extract_density(const PriceSurface& s, StrikeSpacing spacing) {
  const std::size_t count = s.strikes.size();
  if (count < 5) throw Error(Errc::kTooFewStrikes, "density needs at least 5 strikes");
  const double rel = 1e-6;
  double step = 0.0;
  if (spacing == StrikeSpacing::kLogUniform) {
    step = std::log(s.strikes[1] / s.strikes[0]);
    for (std::size_t k = 1; k < count; ++k) {
      if (std::abs(std::log(s.strikes[k] / s.strikes[k - 1]) - step) > rel * std::abs(step)) {
        throw Error(Errc::kConfigParse, "strikes are not uniform in log K");
      }
    }
  } else {
    step = s.strikes[1] - s.strikes[0];
    for (std::size_t k = 1; k < count; ++k) {
      if (std::abs(s.strikes[k] - s.strikes[k - 1] - step) > rel * std::abs(step)) {
        throw Error(Errc::kConfigParse, "strikes are not uniform in K");
      }
    }
  }
  if (!(step > 0.0)) throw Error(Errc::kConfigParse, "strikes must increase");

  DensitySurface d;
  d.n = s.n;
  d.strikes.assign(s.strikes.begin() + 1, s.strikes.end() - 1);
  d.values.assign(static_cast<std::size_t>(s.n) * s.n * d.strikes.size(), 0.0);
  for (int i = 0; i < s.n; ++i) {
    for (int j = 0; j < s.n; ++j) {
      for (std::size_t k = 1; k + 1 < count; ++k) {
        const double cm = s.at(i, j, k - 1), c0 = s.at(i, j, k), cp = s.at(i, j, k + 1);
        const double d2 = (cp - 2.0 * c0 + cm) / (step * step);
        double v = d2;
        if (spacing == StrikeSpacing::kLogUniform) {
          const double d1 = (cp - cm) / (2.0 * step);
          const double kk = s.strikes[k];
          v = (d2 - d1) / (kk * kk);
        }
        d.at(i, j, k - 1) = v;
      }
    }
  }
  return d;
}

MassReport density_mass_check(const DensitySurface& d, const DiscreteModel& model,
                              const ObservationSpec& obs, double maturity, int time_steps,
                              const StepperConfig& stepper) {
  obs.validate(model.n);
  if (d.n != model.n) throw Error(Errc::kDimensionMismatch, "density and model regimes differ");
  MassReport r;
  const double x = std::log(obs.s_star);
  for (int i = 0; i < d.n; ++i) {
    double mass = 0.0;
    for (std::size_t k = 1; k < d.strikes.size(); ++k) {
      mass += 0.5 * (d.at(i, obs.j_star, k) + d.at(i, obs.j_star, k - 1)) *
              (d.strikes[k] - d.strikes[k - 1]);
    }
    PayoffSpec bond = PayoffSpec::regime_call(model.n, i, 0.0, maturity);
    bond.kind = PayoffKind::kRegimeBond;
    const double b =
        price_at_spot(solve_backward(model, bond, time_steps, stepper), x)[static_cast<std::size_t>(obs.j_star)];
    r.mass.push_back(mass);
    r.bond.push_back(b);
    r.gap.push_back(std::abs(mass - b));
    r.max_gap = std::max(r.max_gap, r.gap.back());
  }
  return r;
}

void write_density_csv(std::ostream& os, const DensitySurface& d) {
  os << "K,i,j,density\n";
  for (std::size_t k = 0; k < d.strikes.size(); ++k) {
    for (int i = 0; i < d.n; ++i) {
      for (int j = 0; j < d.n; ++j) {
        os << format_double(d.strikes[k]) << ',' << i + 1 << ',' << j + 1 << ','
           << format_double(d.at(i, j, k)) << '\n';
      }
    }
  }
}

}  // namespace rsvol
