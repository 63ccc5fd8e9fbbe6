#pragma once

#include <utility>
#include <vector>

#include "rsvol/markov.hpp"

namespace rsvol {

/// Piecewise-linear volatility curve in log-moneyness y = ln(S/S*), flat
/// beyond the end knots.
class VolCurve {
 public:
  VolCurve() = default;
  VolCurve(std::vector<double> knots, std::vector<double> values);

  static VolCurve flat(double sigma) { return VolCurve({0.0}, {sigma}); }

  double operator()(double y) const;

  const std::vector<double>& knots() const { return knots_; }
  const std::vector<double>& values() const { return values_; }
  double min_value() const;
  double max_value() const;

  /// Largest absolute slope between consecutive knots.
  double lipschitz_constant() const;

 private:
  std::vector<double> knots_;
  std::vector<double> values_;
};

/// Everything needed to build a RegimeModel; mirrors the model JSON.
struct ModelConfig {
  int regimes = 1;
  Eigen::MatrixXd generator;
  std::vector<double> rates;
  std::vector<double> dividends;
  std::vector<std::vector<std::pair<double, double>>> vol_curves;
  double sigma_min = 1e-3;
  double sigma_max = 5.0;
};

/// Regime-switching local volatility model. Immutable after build_model().
class RegimeModel {
 public:
  int regimes() const { return generator_.size(); }
  const GeneratorMatrix& generator() const { return generator_; }
  const std::vector<double>& rates() const { return rates_; }
  const std::vector<double>& dividends() const { return dividends_; }
  const VolCurve& vol(int regime) const { return vols_[static_cast<std::size_t>(regime)]; }
  const std::vector<VolCurve>& vols() const { return vols_; }
  double sigma_min() const { return sigma_min_; }
  double sigma_max() const { return sigma_max_; }

  /// Same model with different volatility curves (validated against the bounds).
  RegimeModel with_vols(std::vector<VolCurve> vols) const;

  friend RegimeModel build_model(const ModelConfig& config);
  friend RegimeModel make_model(GeneratorMatrix, std::vector<double>, std::vector<double>,
                                std::vector<VolCurve>, double, double);

 private:
  RegimeModel(GeneratorMatrix g, std::vector<double> r, std::vector<double> q,
              std::vector<VolCurve> vols, double sigma_min, double sigma_max);

  GeneratorMatrix generator_;
  std::vector<double> rates_;
  std::vector<double> dividends_;
  std::vector<VolCurve> vols_;
  double sigma_min_;
  double sigma_max_;
};

RegimeModel build_model(const ModelConfig& config);

RegimeModel make_model(GeneratorMatrix g, std::vector<double> rates,
                       std::vector<double> dividends, std::vector<VolCurve> vols,
                       double sigma_min = 1e-3, double sigma_max = 5.0);

/// a_j(y) = sigma_j(e^y)^2 / 2 with S* = 1, so the curve argument is y itself.
double diffusion_coefficient(const RegimeModel& m, int regime, double y);

/// Observation of the generalized call prices: state j* at t*, spot S* = 1,
/// time to maturity tau* = T - t*. Regime indices are zero-based in code.
struct ObservationSpec {
  int j_star = 0;
  double s_star = 1.0;
  double tau_star = 1.0;

  void validate(int regimes) const;
};

}  // namespace rsvol
