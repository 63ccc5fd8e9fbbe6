#pragma once

#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "rsvol/grid.hpp"
#include "rsvol/model.hpp"

namespace rsvol {

/// A RegimeModel sampled on a space grid: a_i(y_k) plus the constant
/// rate, dividend and generator data. This is what the solvers consume, so
/// perturbations G = A1 - A2 can be applied directly in A-space.
struct DiscreteModel {
  SpaceGrid grid;
  int n = 1;
  std::vector<double> diffusion;  // n * m, component-major
  std::vector<double> rates;
  std::vector<double> dividends;
  Eigen::MatrixXd generator;

  std::span<const double> diffusion_of(int i) const {
    return {diffusion.data() + static_cast<std::size_t>(i) * grid.size(),
            static_cast<std::size_t>(grid.size())};
  }
  std::span<double> diffusion_of(int i) {
    return {diffusion.data() + static_cast<std::size_t>(i) * grid.size(),
            static_cast<std::size_t>(grid.size())};
  }

  /// Same rates and generator with a_i replaced by a_i + g_i (n * m values).
  DiscreteModel perturbed(std::span<const double> g) const;

  Eigen::MatrixXd rate_matrix() const;      // R
  Eigen::MatrixXd dividend_matrix() const;  // Q
};

/// Samples a_i = sigma_i^2 / 2 on the grid. smoothing_cells > 0 applies a
/// Gaussian pre-smoothing pass of that width (in grid cells) to each a_i.
DiscreteModel discretize(const RegimeModel& model, const SpaceGrid& grid,
                         double smoothing_cells = 0.0);

enum class BoundaryKind {
  /// u_yy - u_y = 0 at the end node (prices linear in the strike/spot),
  /// realized through a ghost node so the stencil stays tridiagonal.
  kLinearInExp,
  /// u = 0 at the end node.
  kDirichletZero,
};

/// Semi-discrete operator (L u)_i,k = lower u_i,k-1 + diag u_i,k + upper u_i,k+1
/// + sum_l coupling(i,l) u_l,k. Coupling is not applied on Dirichlet nodes.
struct SpatialOperator {
  int n = 1;
  int m = 0;
  std::vector<double> lower, diag, upper;  // n * m each
  Eigen::MatrixXd coupling;
  BoundaryKind left = BoundaryKind::kLinearInExp;
  BoundaryKind right = BoundaryKind::kLinearInExp;

  void apply(std::span<const double> u, std::span<double> out) const;
  double max_diagonal_rate() const;
};

/// c2 u_yy + c1 u_y + coupling u, with c2, c1 given per component and node.
SpatialOperator nonconservative_operator(const SpaceGrid& grid, std::span<const double> c2,
                                         std::span<const double> c1,
                                         const Eigen::MatrixXd& coupling, BoundaryKind left,
                                         BoundaryKind right);

/// (d_yy - d_y)(a u) + c1 u_y + coupling u, differenced in conservative form.
SpatialOperator conservative_operator(const SpaceGrid& grid, std::span<const double> a,
                                      std::span<const double> c1,
                                      const Eigen::MatrixXd& coupling, BoundaryKind left,
                                      BoundaryKind right);

struct StepperConfig {
  double theta = 0.5;
  /// Fully implicit half steps replacing the first full steps (Rannacher).
  int rannacher_half_steps = 4;
  /// For theta < 1/2: largest admissible max_rate * dtau.
  double explicit_stability_cap = 1.0;
};

/// Writes the source term f(tau) (n * m values) into out.
using SourceFn = std::function<void(double tau, std::span<double> out)>;

/// Advances u_tau = L u + f from the initial data over the time grid.
/// Throws Errc::kNonfiniteSolution on blow-up and Errc::kGridTooCoarse when an
/// explicit-leaning scheme violates its stability cap.
SolutionField evolve(const SpatialOperator& op, const SpaceGrid& grid, const TimeGrid& time,
                     std::span<const double> initial, const StepperConfig& config = {},
                     const SourceFn& source = {});

}  // namespace rsvol
