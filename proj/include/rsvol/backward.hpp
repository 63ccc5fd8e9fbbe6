#pragma once

#include <iosfwd>
#include <span>
#include <vector>

#include "rsvol/grid.hpp"
#include "rsvol/model.hpp"
#include "rsvol/theta_scheme.hpp"

namespace rsvol {

enum class PayoffKind {
  kCall,        // max(S - K, 0) pi(X_T)
  kRegimeBond,  // pi(X_T)
};

struct PayoffSpec {
  double strike = 1.0;
  std::vector<double> weights;  // pi(e_j), one per regime
  double maturity = 1.0;
  PayoffKind kind = PayoffKind::kCall;

  void validate(int regimes) const;

  /// pi = e_i
  static PayoffSpec regime_call(int regimes, int i, double strike, double maturity);
};

struct SolverGrids {
  SpaceGrid space = SpaceGrid::standard();
  int time_steps = 400;
  StepperConfig stepper{};
};

/// Value v_j(x, tau) of the payoff in state j at log-spot x = ln S and time to
/// maturity tau; the last level is tau = T.
SolutionField solve_backward(const DiscreteModel& model, const PayoffSpec& payoff,
                             int time_steps, const StepperConfig& stepper = {});

SolutionField solve_backward(const RegimeModel& model, const PayoffSpec& payoff,
                             const SolverGrids& grids = {});

/// Values of all states at log-spot x on the last level (linear interpolation).
std::vector<double> price_at_spot(const SolutionField& field, double x = 0.0);

/// prices[i][j][k] = C_ij(K_k): state-j price of the call paying e_i.
struct PriceSurface {
  std::vector<double> strikes;
  int n = 1;
  double maturity = 1.0;
  std::vector<double> prices;

  double at(int i, int j, std::size_t k) const { return prices[index(i, j, k)]; }
  double& at(int i, int j, std::size_t k) { return prices[index(i, j, k)]; }

  /// C*(K_k, e_i) for the observed state j.
  std::vector<double> column(int i, int j) const;

 private:
  std::size_t index(int i, int j, std::size_t k) const {
    return (static_cast<std::size_t>(i) * n + j) * strikes.size() + k;
  }
};

/// Strikes must lie inside (e^{y_min}, e^{y_max}) scaled by the spot.
PriceSurface price_surface(const RegimeModel& model, std::span<const double> strikes,
                           double maturity, const ObservationSpec& obs,
                           const SolverGrids& grids = {}, int threads = 1);

PriceSurface price_surface(const DiscreteModel& model, std::span<const double> strikes,
                           double maturity, const ObservationSpec& obs, int time_steps,
                           const StepperConfig& stepper = {}, int threads = 1);

/// K = e^{y_k} for every stride-th node with y_k in [lo, hi].
std::vector<double> node_strikes(const SpaceGrid& grid, double k_lo, double k_hi, int stride = 1);

/// CSV with header K,i,j,price (regimes 1-based).
void write_price_surface_csv(std::ostream& os, const PriceSurface& surface);

/// Closed-form Black-Scholes call with continuous dividend yield.
double black_scholes_call(double spot, double strike, double maturity, double rate,
                          double dividend, double sigma);

}  // namespace rsvol
