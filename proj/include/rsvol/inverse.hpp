#pragma once

#include <array>
#include <iosfwd>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "rsvol/grid.hpp"
#include "rsvol/theta_scheme.hpp"

namespace rsvol {

enum class SupportMode { kCompact, kFree };

/// Diagonal of G = A1 - A2 sampled on the space grid (n * m, component-major).
struct Perturbation {
  int n = 1;
  std::vector<double> values;
  Window support;

  /// Vector-convention L2 norm over the window (the whole grid when omitted).
  double l2_norm(const SpaceGrid& grid, const Window& w) const;
  double l2_norm(const SpaceGrid& grid) const;
};

/// Hat functions per regime with compact support inside a window.
class HatBasis {
 public:
  HatBasis(const SpaceGrid& grid, int regimes, const Window& window, int hats_per_regime);

  int size() const { return n_ * hats_; }
  int hats_per_regime() const { return hats_; }
  int regime_of(int index) const { return index / hats_; }
  double center(int index) const;
  double spacing() const { return spacing_; }

  /// Basis function `index` as an n * m vector.
  std::vector<double> element(int index) const;
  std::vector<double> combine(std::span<const double> coefficients) const;

  /// Gram matrix in L2 over the grid (trapezoid rule).
  Eigen::MatrixXd mass_matrix() const;

 private:
  SpaceGrid grid_;
  int n_;
  Window window_;
  int hats_;
  double spacing_;
};

/// Maps an n * m field at tau* to weighted (value, D1, D2) rows on Omega.
class FeatureMap {
 public:
  FeatureMap(const SpaceGrid& grid, int regimes, const Window& omega,
             std::array<double, 3> weights = {1.0, 1.0, 1.0}, int stride = 1);

  int size() const { return static_cast<int>(rows_per_component_ * 3 * n_); }
  Eigen::VectorXd apply(std::span<const double> field) const;

  /// sqrt(trace F F^T): norm of the features of unit white noise.
  double noise_gain() const;

 private:
  SpaceGrid grid_;
  int n_;
  std::array<double, 3> weights_;
  std::vector<int> nodes_;
  std::vector<double> sqrt_w_;
  std::size_t rows_per_component_;
};

/// Column k: features at tau* of solve_linearized with G = basis element k.
Eigen::MatrixXd assemble_sensitivity(const DiscreteModel& a1, const SolutionField& v,
                                     const HatBasis& basis, const FeatureMap& features,
                                     int threads = 1);

enum class AlphaRule { kFixed, kDiscrepancy };

struct ReconstructionConfig {
  int basis = 25;
  double alpha = 0.0;
  AlphaRule rule = AlphaRule::kFixed;
  SupportMode mode = SupportMode::kCompact;
  std::array<double, 3> weights{1.0, 1.0, 1.0};
  int feature_stride = 1;
  /// Relinearizations about A2 + G_hat after the first solve.
  int outer_iterations = 3;
  /// Standard deviation of the noise per data value (discrepancy rule).
  double noise_sigma = 0.0;
  double discrepancy_factor = 1.0;
  int threads = 1;
};

struct Reconstruction {
  Perturbation g;
  std::vector<double> coefficients;
  double alpha = 0.0;
  double misfit = 0.0;
};

/// Solves (M^T M + alpha Mass) c = M^T d. Throws Errc::kSingularNormalMatrix
/// when the system is numerically singular.
Eigen::VectorXd tikhonov_solve(const Eigen::MatrixXd& m, const Eigen::VectorXd& d,
                               const Eigen::MatrixXd& mass, double alpha);

/// data: observed w(., tau*) on the full grid (n * m). v: aux density of the
/// base model on [0, tau*]. The support is Omega_1 (compact) or Omega (free).
Reconstruction reconstruct(std::span<const double> data, const ReconstructionConfig& cfg,
                           const DiscreteModel& base, const SolutionField& v,
                           const DomainWindows& windows);

enum class BumpShape { kRaisedCosine, kGaussian };

struct Bump {
  int regime = 0;
  double center = 0.0;
  double width = 0.1;  // half-support (cosine) or standard deviation (Gaussian)
  BumpShape shape = BumpShape::kRaisedCosine;

  double operator()(double y) const;
};

struct StabilityRow {
  double amplitude = 0.0;
  double lhs = 0.0;
  double rhs = 0.0;
  double extra = 0.0;  // free mode: H1 outside Omega_1 plus L2 off Omega_1
  double ratio = 0.0;  // NaN when lhs = rhs = 0
  bool unstable = false;
};

struct StabilityReport {
  std::vector<StabilityRow> rows;
  bool unstable = false;
  /// max / min ratio over the finite rows.
  double ratio_spread() const;
};

struct StabilityConfig {
  DomainWindows windows = DomainWindows::standard();
  ObservationSpec obs{};
  int time_steps = 200;
  int strike_stride = 2;
  SupportMode mode = SupportMode::kCompact;
  double ratio_cap = 1e8;
  int threads = 1;
};

/// sigma_1 = sigma_2 + amplitude * bump; both models priced by the backward
/// solver at the observation, norms taken in y = ln K.
StabilityReport stability_scan(const DiscreteModel& a2, const Bump& bump,
                               std::span<const double> amplitudes, const StabilityConfig& cfg);

struct NormGrowthRow {
  double tau = 0.0;
  double w_ratio = 0.0;         // |w| / |G|
  double w_scaled = 0.0;        // |w| / (sqrt(tau) |G|)
  double wy_ratio = 0.0;        // |w_y| / |G|
};

struct NormGrowthReport {
  std::vector<NormGrowthRow> rows;
  double w_scaled_spread = 0.0;
  double wy_spread = 0.0;
};

NormGrowthReport norm_growth_check(const DiscreteModel& a1, std::span<const double> g,
                                   const SolutionField& v, std::span<const double> taus,
                                   const StepperConfig& stepper = {});

void write_stability_json(std::ostream& os, const StabilityReport& r);
void write_stability_csv(std::ostream& os, const StabilityReport& r);

}  // namespace rsvol
