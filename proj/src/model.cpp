#include "rsvol/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "rsvol/error.hpp"

namespace rsvol {

VolCurve::VolCurve(std::vector<double> knots, std::vector<double> values)
    : knots_(std::move(knots)), values_(std::move(values)) {
  if (knots_.empty() || knots_.size() != values_.size()) {
    throw Error(Errc::kDimensionMismatch, "vol curve needs matching nonempty knots and values");
  }
  for (std::size_t k = 1; k < knots_.size(); ++k) {
    if (!(knots_[k] > knots_[k - 1])) {
      throw Error(Errc::kConfigParse, "vol curve knots must be strictly increasing");
    }
  }
  for (double v : values_) {
    if (!std::isfinite(v)) throw Error(Errc::kVolOutOfBounds, "vol curve value not finite");
  }
}

double VolCurve::operator()(double y) const {
  if (y <= knots_.front()) return values_.front();
  if (y >= knots_.back()) return values_.back();
  const auto it = std::upper_bound(knots_.begin(), knots_.end(), y);
  const auto hi = static_cast<std::size_t>(it - knots_.begin());
  const std::size_t lo = hi - 1;
  const double w = (y - knots_[lo]) / (knots_[hi] - knots_[lo]);
  return (1.0 - w) * values_[lo] + w * values_[hi];
}

double VolCurve::min_value() const { return *std::min_element(values_.begin(), values_.end()); }
double VolCurve::max_value() const { return *std::max_element(values_.begin(), values_.end()); }

double VolCurve::lipschitz_constant() const {
  double l = 0.0;
  for (std::size_t k = 1; k < knots_.size(); ++k) {
    l = std::max(l, std::abs(values_[k] - values_[k - 1]) / (knots_[k] - knots_[k - 1]));
  }
  return l;
}

RegimeModel::RegimeModel(GeneratorMatrix g, std::vector<double> r, std::vector<double> q,
                         std::vector<VolCurve> vols, double sigma_min, double sigma_max)
    : generator_(std::move(g)),
      rates_(std::move(r)),
      dividends_(std::move(q)),
      vols_(std::move(vols)),
      sigma_min_(sigma_min),
      sigma_max_(sigma_max) {
  const auto n = static_cast<std::size_t>(generator_.size());
  if (rates_.size() != n || dividends_.size() != n || vols_.size() != n) {
    std::ostringstream msg;
    msg << "regime count " << n << " but " << rates_.size() << " rates, " << dividends_.size()
        << " dividends, " << vols_.size() << " vol curves";
    throw Error(Errc::kDimensionMismatch, msg.str());
  }
  if (!(sigma_min_ > 0.0) || !(sigma_max_ >= sigma_min_) || !std::isfinite(sigma_max_)) {
    throw Error(Errc::kVolOutOfBounds, "need 0 < sigma_min <= sigma_max < inf");
  }
  for (std::size_t j = 0; j < n; ++j) {
    if (!std::isfinite(rates_[j]) || !std::isfinite(dividends_[j])) {
      throw Error(Errc::kConfigParse, "rates and dividends must be finite");
    }
    const VolCurve& c = vols_[j];
    if (c.min_value() <= 0.0 || c.min_value() < sigma_min_ || c.max_value() > sigma_max_) {
      std::ostringstream msg;
      msg << "vol curve " << j + 1 << " has values in [" << c.min_value() << ", "
          << c.max_value() << "], outside [" << sigma_min_ << ", " << sigma_max_ << "]";
      throw Error(Errc::kVolOutOfBounds, msg.str());
    }
  }
}

RegimeModel RegimeModel::with_vols(std::vector<VolCurve> vols) const {
  return RegimeModel(generator_, rates_, dividends_, std::move(vols), sigma_min_, sigma_max_);
}

RegimeModel build_model(const ModelConfig& config) {
  if (config.regimes < 1) throw Error(Errc::kDimensionMismatch, "regimes must be >= 1");
  if (config.generator.rows() != config.regimes) {
    throw Error(Errc::kDimensionMismatch, "generator dimension differs from regime count");
  }
  GeneratorMatrix g = GeneratorMatrix::validate(config.generator);
  std::vector<VolCurve> vols;
  vols.reserve(config.vol_curves.size());
  for (const auto& pairs : config.vol_curves) {
    std::vector<double> knots, values;
    for (const auto& [y, s] : pairs) {
      knots.push_back(y);
      values.push_back(s);
    }
    vols.emplace_back(std::move(knots), std::move(values));
  }
  return RegimeModel(std::move(g), config.rates, config.dividends, std::move(vols),
                     config.sigma_min, config.sigma_max);
}

RegimeModel make_model(GeneratorMatrix g, std::vector<double> rates,
                       std::vector<double> dividends, std::vector<VolCurve> vols,
                       double sigma_min, double sigma_max) {
  return RegimeModel(std::move(g), std::move(rates), std::move(dividends), std::move(vols),
                     sigma_min, sigma_max);
}

double diffusion_coefficient(const RegimeModel& m, int regime, double y) {
  const double s = m.vol(regime)(y);
  return 0.5 * s * s;
}

void ObservationSpec::validate(int regimes) const {
  if (j_star < 0 || j_star >= regimes) {
    throw Error(Errc::kDimensionMismatch, "observed state out of range");
  }
  if (!(tau_star > 0.0)) throw Error(Errc::kConfigParse, "tau_star must be positive");
  if (s_star != 1.0) throw Error(Errc::kConfigParse, "spot at observation is normalized to 1");
}

}  // namespace rsvol
