#pragma once

#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "rsvol/grid.hpp"
#include "rsvol/theta_scheme.hpp"

namespace rsvol {

enum class KernelForm {
  kAdjoint,        // (d_yy - d_y)(A u) - (R - Q) u_y + (B - Q) u
  kForward,        // A u_yy - (A + R - Q) u_y + (B - Q) u
  kDiffusionOnly,  // A u_yy + (B - Q) u
};

/// Column j of the fundamental solution E(y, tau; 0, 0): discrete delta of
/// mass 1 at y = 0 in state j, evolved with zero Dirichlet data.
SolutionField numeric_fundamental_column(const DiscreteModel& model, int source_state,
                                         const TimeGrid& time, KernelForm form = KernelForm::kAdjoint,
                                         const StepperConfig& stepper = {});

struct LowerBoundParams {
  double delta0 = 1.0;
  double eps0 = 1.0;
  Eigen::MatrixXd b_star;  // off-diagonal infima, zero diagonal

  void validate() const;
};

/// B with its diagonal set to zero.
Eigen::MatrixXd off_diagonal_part(const Eigen::MatrixXd& b);

/// delta0 e^{c t B*} exp(-eps0 (y - z)^2 / t) / sqrt(t), c = delta0 sqrt(pi / eps0).
Eigen::MatrixXd lower_bound_matrix(const LowerBoundParams& p, double y, double z, double t);

/// n x n kernel E(y, tau; 0, 0).
using KernelFn = std::function<Eigen::MatrixXd(double y, double tau)>;

/// e^{-y^2 / (4 a tau)} / sqrt(4 pi a tau) on the diagonal of an n x n matrix.
KernelFn heat_kernel(double a, int n = 1);

/// Bilinear lookup into numeric columns (columns[j] is the column of state j).
KernelFn field_kernel(std::vector<SolutionField> columns);

struct PositivitySamples {
  std::vector<double> y;
  std::vector<double> tau;

  /// Grid of ny points on the window and nt points on [tau_lo, tau_hi].
  static PositivitySamples uniform(const Window& w, int ny, double tau_lo, double tau_hi, int nt);
};

struct PositivityReport {
  double min_gap = 0.0;      // at the supplied delta0
  double delta0_star = 0.0;  // largest feasible delta0 over the eps0 grid
  double eps0_star = 0.0;
  bool violated = false;
};

/// min over samples and entries of E - lower bound.
double positivity_gap(const KernelFn& kernel, const LowerBoundParams& p,
                      const PositivitySamples& s);

/// Largest delta0 (bisection in log delta0) with a nonnegative gap for
/// the given eps0; 0 when none above delta_floor exists.
double calibrate_delta0(const KernelFn& kernel, const Eigen::MatrixXd& b_star, double eps0,
                        const PositivitySamples& s, double delta_floor = 1e-8);

/// Gap at params, plus auto-calibration over eps0 in eps_grid.
PositivityReport verify_positivity_bound(const KernelFn& kernel, const LowerBoundParams& params,
                                         const PositivitySamples& s,
                                         std::span<const double> eps_grid = {});

/// Least-squares slope of ln u against y^2 over the window (positive samples).
double gaussian_decay_slope(std::span<const double> u, const SpaceGrid& grid, const Window& w);

/// |(p_t1 * p_t2)(y) - sqrt(pi / eps0) p_{t1+t2}(y)| with the convolution done
/// by quadrature, p_t(z) = t^{-1/2} exp(-eps0 z^2 / t).
double heat_semigroup_gap(double eps0, double t1, double t2, double y);

/// Low-order terms of the parametrix series for constant coefficients:
/// diagonal diffusion a_k, killing b_kk and off-diagonal coupling b_ik.
struct SeriesTerms {
  std::vector<Eigen::MatrixXd> e;    // e[p]: p-jump contribution, e[0] = E_diag
  std::vector<Eigen::MatrixXd> phi;  // phi[p-1] = Phi_p, p >= 1
};

SeriesTerms levy_series(std::span<const double> a, const Eigen::MatrixXd& b, double y, double tau,
                        int p_max = 3, int quadrature_nodes = 24);

struct SeriesCheck {
  bool monotone = true;         // every Phi_p >= 0, partial sums nondecreasing
  bool bound_holds = true;      // Phi_p >= Gaussian lower bound
  double min_bound_gap = 0.0;
};

SeriesCheck check_levy_series(const SeriesTerms& terms, const LowerBoundParams& p, double y,
                              double tau);

}  // namespace rsvol
