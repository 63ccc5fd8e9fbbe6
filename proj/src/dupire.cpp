#include "rsvol/dupire.hpp"

#include <algorithm>
#include <cmath>

#include "rsvol/error.hpp"

namespace rsvol {

namespace {

SpatialOperator forward_operator(const DiscreteModel& model) {
  const int m = model.grid.size();
  std::vector<double> c1(model.diffusion.size());
  for (int i = 0; i < model.n; ++i) {
    const double drift = model.rates[static_cast<std::size_t>(i)] -
                         model.dividends[static_cast<std::size_t>(i)];
    for (int k = 0; k < m; ++k) {
      const std::size_t idx = static_cast<std::size_t>(i) * m + k;
      c1[idx] = -(model.diffusion[idx] + drift);
    }
  }
  return nonconservative_operator(model.grid, model.diffusion, c1,
                                  model.generator - model.dividend_matrix(),
                                  BoundaryKind::kLinearInExp, BoundaryKind::kLinearInExp);
}

}  // namespace

SolutionField solve_dupire(const ForwardProblem& p) {
  p.obs.validate(p.model.n);
  const SpaceGrid& grid = p.model.grid;
  const int m = grid.size();
  std::vector<double> u0(static_cast<std::size_t>(p.model.n) * m, 0.0);
  const std::size_t o = static_cast<std::size_t>(p.obs.j_star) * m;
  for (int k = 0; k < m; ++k) u0[o + k] = p.obs.s_star * std::max(1.0 - std::exp(grid.node(k)), 0.0);
  return evolve(forward_operator(p.model), grid, p.time(), u0, p.stepper);
}

SolutionField solve_aux_density(const ForwardProblem& p) {
  p.obs.validate(p.model.n);
  const DiscreteModel& model = p.model;
  const SpaceGrid& grid = model.grid;
  const int m = grid.size();
  std::vector<double> c1(model.diffusion.size());
  for (int i = 0; i < model.n; ++i) {
    const double drift = model.rates[static_cast<std::size_t>(i)] -
                         model.dividends[static_cast<std::size_t>(i)];
    std::fill_n(c1.begin() + static_cast<std::ptrdiff_t>(i) * m, m, -drift);
  }
  const SpatialOperator op =
      conservative_operator(grid, model.diffusion, c1, model.generator - model.dividend_matrix(),
                            BoundaryKind::kDirichletZero, BoundaryKind::kDirichletZero);
  std::vector<double> u0(model.diffusion.size(), 0.0);
  u0[static_cast<std::size_t>(p.obs.j_star) * m + grid.zero_index()] = p.obs.s_star / grid.dy();
  return evolve(op, grid, p.time(), u0, p.stepper);
}

SolutionField solve_linearized(const DiscreteModel& a1, std::span<const double> g,
                               const SolutionField& v, const StepperConfig& stepper) {
  if (!(v.space() == a1.grid) || v.components() != a1.n) {
    throw Error(Errc::kShapeMismatch, "aux field and model grids differ");
  }
  if (g.size() != a1.diffusion.size()) {
    throw Error(Errc::kShapeMismatch, "perturbation needs n * m values");
  }
  const std::size_t total = g.size();
  std::vector<double> gv(g.begin(), g.end());
  const bool zero = std::all_of(gv.begin(), gv.end(), [](double x) { return x == 0.0; });
  const SpatialOperator op = forward_operator(a1);
  std::vector<double> u0(total, 0.0);
  if (zero) return evolve(op, a1.grid, v.time(), u0, stepper);
  const SourceFn source = [&v, gv](double tau, std::span<double> out) {
    v.interpolate_level(tau, out);
    for (std::size_t k = 0; k < out.size(); ++k) out[k] *= gv[k];
  };
  return evolve(op, a1.grid, v.time(), u0, stepper, source);
}

SolutionField curvature_field(const SolutionField& w) {
  SolutionField out(w.space(), w.time(), w.components());
  const double h = w.space().dy();
  for (int l = 0; l < w.levels(); ++l) {
    for (int i = 0; i < w.components(); ++i) {
      const auto u = w.slice(i, l);
      const auto d2 = second_difference(u, h);
      const auto d1 = first_difference(u, h);
      auto dst = out.slice(i, l);
      for (std::size_t k = 0; k < u.size(); ++k) dst[k] = d2[k] - d1[k];
    }
  }
  return out;
}

void clip_negative(SolutionField& v) {
  for (int l = 0; l < v.levels(); ++l) {
    for (double& x : v.level(l)) x = std::max(x, 0.0);
  }
}

}  // namespace rsvol
