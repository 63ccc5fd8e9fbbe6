#include "rsvol/backward.hpp"

#include <cmath>
#include <ostream>

#include "rsvol/error.hpp"
#include "rsvol/format.hpp"
#include "rsvol/parallel.hpp"

namespace rsvol {

void PayoffSpec::validate(int regimes) const {
  if (static_cast<int>(weights.size()) != regimes) {
    throw Error(Errc::kDimensionMismatch, "payoff needs one weight per regime");
  }
  for (double w : weights) {
    if (!std::isfinite(w)) throw Error(Errc::kConfigParse, "payoff weights must be finite");
  }
  if (!std::isfinite(strike) || strike < 0.0) {
    throw Error(Errc::kConfigParse, "strike must be finite and nonnegative");
  }
  if (!std::isfinite(maturity) || !(maturity > 0.0)) {
    throw Error(Errc::kConfigParse, "maturity must be positive");
  }
}

PayoffSpec PayoffSpec::regime_call(int regimes, int i, double strike, double maturity) {
  PayoffSpec p;
  p.strike = strike;
  p.maturity = maturity;
  p.weights.assign(static_cast<std::size_t>(regimes), 0.0);
  p.weights[static_cast<std::size_t>(i)] = 1.0;
  return p;
}

namespace {

// Mean of max(e^x - K, 0) over [a, b].
double call_cell_average(double a, double b, double strike) {
  if (strike <= 0.0) return (std::exp(b) - std::exp(a)) / (b - a) - strike;
  const double k = std::log(strike);
  if (b <= k) return 0.0;
  const double lo = std::max(a, k);
  return (std::exp(b) - std::exp(lo) - strike * (b - lo)) / (b - a);
}

std::vector<double> payoff_samples(const SpaceGrid& grid, const PayoffSpec& payoff) {
  const int m = grid.size();
  const int n = static_cast<int>(payoff.weights.size());
  std::vector<double> base(static_cast<std::size_t>(m));
  const double h = grid.dy();
  for (int k = 0; k < m; ++k) {
    const double x = grid.node(k);
    base[static_cast<std::size_t>(k)] =
        payoff.kind == PayoffKind::kRegimeBond ? 1.0 : std::max(std::exp(x) - payoff.strike, 0.0);
  }
  if (payoff.kind == PayoffKind::kCall && payoff.strike > 0.0) {
    const double s = (std::log(payoff.strike) - grid.y_min()) / h;
    const double nearest = std::round(s);
    if (std::abs(s - nearest) > 1e-9 && nearest >= 0 && nearest < m) {
      const int k = static_cast<int>(nearest);
      const double x = grid.node(k);
      base[static_cast<std::size_t>(k)] = call_cell_average(x - 0.5 * h, x + 0.5 * h, payoff.strike);
    }
  }
  std::vector<double> u(static_cast<std::size_t>(n) * m);
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < m; ++k) {
      u[static_cast<std::size_t>(i) * m + k] = payoff.weights[static_cast<std::size_t>(i)] *
                                               base[static_cast<std::size_t>(k)];
    }
  }
  return u;
}

}  // namespace

SolutionField solve_backward(const DiscreteModel& model, const PayoffSpec& payoff,
                             int time_steps, const StepperConfig& stepper) {
  payoff.validate(model.n);
  const SpaceGrid& grid = model.grid;
  const int m = grid.size();
  const std::size_t total = static_cast<std::size_t>(model.n) * m;
  std::vector<double> c1(total);
  for (int i = 0; i < model.n; ++i) {
    const double drift = model.rates[static_cast<std::size_t>(i)] -
                         model.dividends[static_cast<std::size_t>(i)];
    for (int k = 0; k < m; ++k) {
      const std::size_t idx = static_cast<std::size_t>(i) * m + k;
      c1[idx] = drift - model.diffusion[idx];
    }
  }
  const Eigen::MatrixXd coupling = model.generator.transpose() - model.rate_matrix();
  const SpatialOperator op =
      nonconservative_operator(grid, model.diffusion, c1, coupling, BoundaryKind::kLinearInExp,
                               BoundaryKind::kLinearInExp);
  const std::vector<double> u0 = payoff_samples(grid, payoff);
  return evolve(op, grid, TimeGrid(payoff.maturity, time_steps), u0, stepper);
}

SolutionField solve_backward(const RegimeModel& model, const PayoffSpec& payoff,
                             const SolverGrids& grids) {
  return solve_backward(discretize(model, grids.space), payoff, grids.time_steps, grids.stepper);
}

std::vector<double> price_at_spot(const SolutionField& field, double x) {
  const SpaceGrid& g = field.space();
  if (x < g.y_min() || x > g.y_max()) {
    throw Error(Errc::kWindowOutOfRange, "spot lies outside the space grid");
  }
  const double s = (x - g.y_min()) / g.dy();
  const int k0 = std::min(static_cast<int>(std::floor(s)), g.size() - 2);
  const double w = s - k0;
  const int last = field.levels() - 1;
  std::vector<double> out(static_cast<std::size_t>(field.components()));
  for (int i = 0; i < field.components(); ++i) {
    out[static_cast<std::size_t>(i)] =
        (1.0 - w) * field(i, k0, last) + w * field(i, k0 + 1, last);
  }
  return out;
}

std::vector<double> PriceSurface::column(int i, int j) const {
  std::vector<double> out(strikes.size());
  for (std::size_t k = 0; k < strikes.size(); ++k) out[k] = at(i, j, k);
  return out;
}

PriceSurface price_surface(const DiscreteModel& model, std::span<const double> strikes,
                           double maturity, const ObservationSpec& obs, int time_steps,
                           const StepperConfig& stepper, int threads) {
  obs.validate(model.n);
  const double x = std::log(obs.s_star);
  for (double k : strikes) {
    if (!(k > 0.0) || std::log(k) <= model.grid.y_min() || std::log(k) >= model.grid.y_max()) {
      throw Error(Errc::kWindowOutOfRange, "strike " + format_double(k) + " outside the grid");
    }
  }
  PriceSurface s;
  s.strikes.assign(strikes.begin(), strikes.end());
  s.n = model.n;
  s.maturity = maturity;
  s.prices.assign(static_cast<std::size_t>(model.n) * model.n * strikes.size(), 0.0);
  const int jobs = static_cast<int>(strikes.size()) * model.n;
  parallel_for(jobs, threads, [&](int job) {
    const std::size_t k = static_cast<std::size_t>(job / model.n);
    const int i = job % model.n;
    const PayoffSpec p = PayoffSpec::regime_call(model.n, i, strikes[k], maturity);
    const std::vector<double> v = price_at_spot(solve_backward(model, p, time_steps, stepper), x);
    for (int j = 0; j < model.n; ++j) s.at(i, j, k) = v[static_cast<std::size_t>(j)];
  });
  return s;
}

PriceSurface price_surface(const RegimeModel& model, std::span<const double> strikes,
                           double maturity, const ObservationSpec& obs, const SolverGrids& grids,
                           int threads) {
  return price_surface(discretize(model, grids.space), strikes, maturity, obs, grids.time_steps,
                       grids.stepper, threads);
}

std::vector<double> node_strikes(const SpaceGrid& grid, double k_lo, double k_hi, int stride) {
  const auto [first, last] = grid.node_range({std::log(k_lo), std::log(k_hi)}, 1);
  std::vector<double> out;
  for (int k = first; k <= last; k += std::max(stride, 1)) out.push_back(std::exp(grid.node(k)));
  return out;
}

void write_price_surface_csv(std::ostream& os, const PriceSurface& surface) {
  os << "K,i,j,price\n";
  for (std::size_t k = 0; k < surface.strikes.size(); ++k) {
    for (int i = 0; i < surface.n; ++i) {
      for (int j = 0; j < surface.n; ++j) {
        os << format_double(surface.strikes[k]) << ',' << i + 1 << ',' << j + 1 << ','
           << format_double(surface.at(i, j, k)) << '\n';
      }
    }
  }
}

double black_scholes_call(double spot, double strike, double maturity, double rate,
                          double dividend, double sigma) {
  const double df = std::exp(-rate * maturity);
  const double fwd = spot * std::exp((rate - dividend) * maturity);
  if (strike <= 0.0) return df * (fwd - strike);
  const double sd = sigma * std::sqrt(maturity);
  if (sd <= 0.0) return df * std::max(fwd - strike, 0.0);
  const double d1 = (std::log(fwd / strike) + 0.5 * sd * sd) / sd;
  const double d2 = d1 - sd;
  auto ncdf = [](double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); };
  return df * (fwd * ncdf(d1) - strike * ncdf(d2));
}

}  // namespace rsvol
