#include "rsvol/inverse.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>

#include "rsvol/backward.hpp"
#include "rsvol/dupire.hpp"
#include "rsvol/error.hpp"
#include "rsvol/format.hpp"
#include "rsvol/markov.hpp"
#include "rsvol/parallel.hpp"
#include "rsvol/simd/kernels.hpp"

namespace rsvol {

namespace {

// Squared L2 norm of u over the grid nodes inside w (trapezoid rule).
double l2_squared(std::span<const double> u, const SpaceGrid& grid, const Window& w) {
  const auto [first, last] = grid.node_range(w, 2);
  const std::size_t count = static_cast<std::size_t>(last - first + 1);
  const auto weights = trapezoid_weights(count, grid.dy());
  return simd::active_kernels().weighted_sum_squares(
      weights.data(), u.data() + first, count);
}

double spread(const std::vector<double>& x) {
  if (x.empty()) return 1.0;
  const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
  if (*hi == 0.0) return 1.0;
  if (!(*lo > 0.0)) return std::numeric_limits<double>::infinity();
  return *hi / *lo;
}

}  // namespace

double Perturbation::l2_norm(const SpaceGrid& grid, const Window& w) const {
  double total = 0.0;
  const std::size_t m = static_cast<std::size_t>(grid.size());
  for (int i = 0; i < n; ++i) {
    total += l2_squared(std::span<const double>(values).subspan(static_cast<std::size_t>(i) * m, m),
                        grid, w);
  }
  return std::sqrt(total);
}

double Perturbation::l2_norm(const SpaceGrid& grid) const {
  return l2_norm(grid, {grid.y_min(), grid.y_max()});
}

HatBasis::HatBasis(const SpaceGrid& grid, int regimes, const Window& window, int hats_per_regime)
    : grid_(grid), n_(regimes), window_(window), hats_(hats_per_regime), spacing_(0.0) {
  if (hats_per_regime < 2) throw Error(Errc::kConfigParse, "basis needs at least 2 hats");
  grid.node_range(window, 3);
  spacing_ = window.width() / (hats_per_regime + 1);
}

double HatBasis::center(int index) const {
  return window_.lo + (index % hats_ + 1) * spacing_;
}

std::vector<double> HatBasis::element(int index) const {
  const int m = grid_.size();
  std::vector<double> out(static_cast<std::size_t>(n_) * m, 0.0);
  const int r = regime_of(index);
  const double c = center(index);
  for (int k = 0; k < m; ++k) {
    const double v = 1.0 - std::abs(grid_.node(k) - c) / spacing_;
    if (v > 0.0) out[static_cast<std::size_t>(r) * m + k] = v;
  }
  return out;
}

std::vector<double> HatBasis::combine(std::span<const double> coefficients) const {
  if (static_cast<int>(coefficients.size()) != size()) {
    throw Error(Errc::kShapeMismatch, "coefficient count differs from basis size");
  }
  std::vector<double> out(static_cast<std::size_t>(n_) * grid_.size(), 0.0);
  for (int b = 0; b < size(); ++b) {
    const double c = coefficients[static_cast<std::size_t>(b)];
    if (c == 0.0) continue;
    const auto e = element(b);
    simd::active_kernels().axpy(c, e.data(), out.data(), out.size());
  }
  return out;
}

Eigen::MatrixXd HatBasis::mass_matrix() const {
  const int s = size();
  const auto w = trapezoid_weights(static_cast<std::size_t>(grid_.size()), grid_.dy());
  std::vector<std::vector<double>> e;
  for (int b = 0; b < s; ++b) e.push_back(element(b));
  const std::size_t m = static_cast<std::size_t>(grid_.size());
  Eigen::MatrixXd mass = Eigen::MatrixXd::Zero(s, s);
  for (int a = 0; a < s; ++a) {
    for (int b = a; b < s; ++b) {
      if (regime_of(a) != regime_of(b) || std::abs(center(a) - center(b)) > 2.5 * spacing_) continue;
      const std::size_t o = static_cast<std::size_t>(regime_of(a)) * m;
      double sum = 0.0;
      for (std::size_t k = 0; k < m; ++k) sum += w[k] * e[a][o + k] * e[b][o + k];
      mass(a, b) = mass(b, a) = sum;
    }
  }
  return mass;
}

FeatureMap::FeatureMap(const SpaceGrid& grid, int regimes, const Window& omega,
                       std::array<double, 3> weights, int stride)
    : grid_(grid), n_(regimes), weights_(weights) {
  const auto [first, last] = grid.node_range(omega, 4);
  if (first < 1 || last > grid.size() - 2) {
    throw Error(Errc::kWindowOutOfRange, "observation window touches the grid edge");
  }
  stride = std::max(stride, 1);
  for (int k = first; k <= last; k += stride) nodes_.push_back(k);
  const auto w = trapezoid_weights(nodes_.size(), stride * grid.dy());
  for (double x : w) sqrt_w_.push_back(std::sqrt(x));
  rows_per_component_ = nodes_.size();
}

Eigen::VectorXd FeatureMap::apply(std::span<const double> field) const {
  const std::size_t m = static_cast<std::size_t>(grid_.size());
  if (field.size() != static_cast<std::size_t>(n_) * m) {
    throw Error(Errc::kShapeMismatch, "field needs n * m values");
  }
  const double h = grid_.dy();
  Eigen::VectorXd out(size());
  Eigen::Index r = 0;
  for (int i = 0; i < n_; ++i) {
    const double* u = field.data() + static_cast<std::size_t>(i) * m;
    for (std::size_t q = 0; q < nodes_.size(); ++q) {
      const std::size_t k = static_cast<std::size_t>(nodes_[q]);
      const double s = sqrt_w_[q];
      out(r++) = weights_[0] * s * u[k];
      out(r++) = weights_[1] * s * (u[k + 1] - u[k - 1]) / (2.0 * h);
      out(r++) = weights_[2] * s * (u[k + 1] - 2.0 * u[k] + u[k - 1]) / (h * h);
    }
  }
  return out;
}

double FeatureMap::noise_gain() const {
  const double h = grid_.dy();
  double total = 0.0;
  for (double s : sqrt_w_) {
    const double s2 = s * s;
    total += s2 * (weights_[0] * weights_[0] + weights_[1] * weights_[1] * 2.0 / (4.0 * h * h) +
                   weights_[2] * weights_[2] * 6.0 / (h * h * h * h));
  }
  return std::sqrt(total * n_);
}

Eigen::MatrixXd assemble_sensitivity(const DiscreteModel& a1, const SolutionField& v,
                                     const HatBasis& basis, const FeatureMap& features,
                                     int threads) {
  Eigen::MatrixXd m(features.size(), basis.size());
  parallel_for(basis.size(), threads, [&](int b) {
    const auto g = basis.element(b);
    const SolutionField w = solve_linearized(a1, g, v);
    m.col(b) = features.apply(w.level(w.levels() - 1));
  });
  return m;
}

Eigen::VectorXd tikhonov_solve(const Eigen::MatrixXd& m, const Eigen::VectorXd& d,
                               const Eigen::MatrixXd& mass, double alpha) {
  if (alpha < 0.0 || !std::isfinite(alpha)) throw Error(Errc::kConfigParse, "alpha must be >= 0");
  const Eigen::MatrixXd normal = m.transpose() * m + alpha * mass;
  const Eigen::LDLT<Eigen::MatrixXd> ldlt(normal);
  const Eigen::VectorXd diag = ldlt.vectorD().cwiseAbs();
  const double hi = diag.size() > 0 ? diag.maxCoeff() : 0.0;
  if (ldlt.info() != Eigen::Success || !(hi > 0.0) || diag.minCoeff() < 1e-13 * hi) {
    throw Error(Errc::kSingularNormalMatrix, "normal matrix is numerically singular");
  }
  return ldlt.solve(m.transpose() * d);
}

namespace {

struct AlphaChoice {
  Eigen::VectorXd c;
  double alpha;
  double misfit;
};

AlphaChoice choose_alpha(const Eigen::MatrixXd& m, const Eigen::VectorXd& d,
                         const Eigen::MatrixXd& mass, const ReconstructionConfig& cfg,
                         double noise_norm) {
  auto fit = [&](double a) {
    AlphaChoice r{tikhonov_solve(m, d, mass, a), a, 0.0};
    r.misfit = (m * r.c - d).norm();
    return r;
  };
  if (cfg.rule == AlphaRule::kFixed) return fit(cfg.alpha);
  const double scale = m.squaredNorm() / std::max(mass.trace(), 1e-300);
  double lo = 1e-14 * scale, hi = 1e4 * scale;
  AlphaChoice best = fit(lo);
  if (best.misfit >= noise_norm) return best;
  AlphaChoice top = fit(hi);
  if (top.misfit <= noise_norm) return top;
  for (int it = 0; it < 60; ++it) {
    const double mid = std::sqrt(lo * hi);
    AlphaChoice r = fit(mid);
    if (r.misfit > noise_norm) {
      hi = mid;
    } else {
      lo = mid;
      best = r;
    }
  }
  return best;
}

}  // namespace

Reconstruction reconstruct(std::span<const double> data, const ReconstructionConfig& cfg,
                           const DiscreteModel& base, const SolutionField& v,
                           const DomainWindows& windows) {
  windows.validate(base.grid);
  if (data.size() != base.diffusion.size()) {
    throw Error(Errc::kShapeMismatch, "data needs n * m values");
  }
  if (std::any_of(data.begin(), data.end(), [](double x) { return !std::isfinite(x); })) {
    throw Error(Errc::kNonfiniteSolution, "data contain non-finite values");
  }
  if (cfg.alpha < 0.0) throw Error(Errc::kConfigParse, "alpha must be >= 0");
  const Window support = cfg.mode == SupportMode::kCompact ? windows.omega1 : windows.omega;
  const HatBasis basis(base.grid, base.n, support, cfg.basis);
  const FeatureMap features(base.grid, base.n, windows.omega, cfg.weights, cfg.feature_stride);
  const Eigen::MatrixXd mass = basis.mass_matrix();
  const Eigen::VectorXd d = features.apply(data);
  const double noise_norm = cfg.discrepancy_factor * cfg.noise_sigma * features.noise_gain();

  SolutionField vc = v;
  if (is_irreducible(GeneratorMatrix::validate(base.generator))) clip_negative(vc);

  DiscreteModel model = base;
  AlphaChoice choice{};
  for (int it = 0; it <= std::max(cfg.outer_iterations, 0); ++it) {
    const Eigen::MatrixXd m = assemble_sensitivity(model, vc, basis, features, cfg.threads);
    choice = choose_alpha(m, d, mass, cfg, noise_norm);
    if (it < cfg.outer_iterations) {
      std::vector<double> g = basis.combine({choice.c.data(), static_cast<std::size_t>(choice.c.size())});
      for (std::size_t k = 0; k < g.size(); ++k) {
        g[k] = std::max(g[k], 0.5 * 1e-6 - base.diffusion[k]);
      }
      model = base.perturbed(g);
    }
  }
  Reconstruction r;
  r.coefficients.assign(choice.c.data(), choice.c.data() + choice.c.size());
  r.g.n = base.n;
  r.g.values = basis.combine(r.coefficients);
  r.g.support = support;
  r.alpha = choice.alpha;
  r.misfit = choice.misfit;
  return r;
}

double Bump::operator()(double y) const {
  const double z = (y - center) / width;
  if (shape == BumpShape::kGaussian) return std::exp(-0.5 * z * z);
  return std::abs(z) < 1.0 ? 0.5 * (1.0 + std::cos(std::numbers::pi * z)) : 0.0;
}

double StabilityReport::ratio_spread() const {
  std::vector<double> r;
  for (const auto& row : rows) {
    if (std::isfinite(row.ratio)) r.push_back(row.ratio);
  }
  return spread(r);
}

StabilityReport stability_scan(const DiscreteModel& a2, const Bump& bump,
                               std::span<const double> amplitudes, const StabilityConfig& cfg) {
  const SpaceGrid& grid = a2.grid;
  cfg.windows.validate(grid);
  cfg.obs.validate(a2.n);
  if (bump.regime < 0 || bump.regime >= a2.n) {
    throw Error(Errc::kDimensionMismatch, "bump regime out of range");
  }
  if (cfg.mode == SupportMode::kCompact) {
    const double reach = bump.shape == BumpShape::kGaussian ? 4.0 * bump.width : bump.width;
    if (bump.center - reach < cfg.windows.omega1.lo || bump.center + reach > cfg.windows.omega1.hi) {
      throw Error(Errc::kWindowOutOfRange, "compact mode needs the bump inside Omega_1");
    }
  }
  const int stride = std::max(cfg.strike_stride, 1);
  const auto [first, last] = grid.node_range(cfg.windows.omega, 4 * stride);
  std::vector<double> strikes;
  for (int k = first; k <= last; k += stride) strikes.push_back(std::exp(grid.node(k)));
  const double hs = stride * grid.dy();
  const int m = grid.size();
  const double tau = cfg.obs.tau_star;
  const PriceSurface base = price_surface(a2, strikes, tau, cfg.obs, cfg.time_steps, {}, cfg.threads);

  StabilityReport report;
  for (double amp : amplitudes) {
    DiscreteModel a1 = a2;
    std::vector<double> dsig(static_cast<std::size_t>(m), 0.0);
    const std::size_t o = static_cast<std::size_t>(bump.regime) * m;
    for (int k = 0; k < m; ++k) {
      const double s2 = std::sqrt(2.0 * a2.diffusion[o + k]);
      dsig[static_cast<std::size_t>(k)] = amp * bump(grid.node(k));
      const double s1 = s2 + dsig[static_cast<std::size_t>(k)];
      if (!(s1 > 0.0)) throw Error(Errc::kVolOutOfBounds, "perturbed volatility is not positive");
      a1.diffusion[o + k] = 0.5 * s1 * s1;
    }
    StabilityRow row;
    row.amplitude = amp;
    row.lhs = l2_squared(dsig, grid, cfg.windows.omega1);
    if (cfg.mode == SupportMode::kFree) {
      const auto [f1, l1] = grid.node_range(cfg.windows.omega1, 2);
      const auto [f, l] = grid.node_range(cfg.windows.omega, 2);
      const std::span<const double> ds(dsig);
      if (f1 - f + 1 >= 3) row.extra += sobolev_norm_squared(ds.subspan(f, f1 - f + 1), grid.dy(), 1);
      if (l - l1 + 1 >= 3) row.extra += sobolev_norm_squared(ds.subspan(l1, l - l1 + 1), grid.dy(), 1);
      row.extra += l2_squared(dsig, grid, {grid.y_min(), grid.node(f1)});
      row.extra += l2_squared(dsig, grid, {grid.node(l1), grid.y_max()});
    }
    if (amp != 0.0) {
      const PriceSurface pert =
          price_surface(a1, strikes, tau, cfg.obs, cfg.time_steps, {}, cfg.threads);
      for (int i = 0; i < a2.n; ++i) {
        std::vector<double> dc(strikes.size());
        for (std::size_t k = 0; k < strikes.size(); ++k) {
          dc[k] = pert.at(i, cfg.obs.j_star, k) - base.at(i, cfg.obs.j_star, k);
        }
        row.rhs += sobolev_norm_squared(dc, hs, 2);
      }
    }
    const double denom = row.rhs + row.extra;
    if (row.lhs == 0.0 && denom == 0.0) {
      row.ratio = std::numeric_limits<double>::quiet_NaN();
    } else if (denom == 0.0) {
      row.ratio = std::numeric_limits<double>::infinity();
      row.unstable = true;
    } else {
      row.ratio = row.lhs / denom;
      row.unstable = row.ratio > cfg.ratio_cap;
    }
    report.unstable = report.unstable || row.unstable;
    report.rows.push_back(row);
  }
  return report;
}

NormGrowthReport norm_growth_check(const DiscreteModel& a1, std::span<const double> g,
                                   const SolutionField& v, std::span<const double> taus,
                                   const StepperConfig& stepper) {
  const SpaceGrid& grid = a1.grid;
  Perturbation p{a1.n, std::vector<double>(g.begin(), g.end()), {grid.y_min(), grid.y_max()}};
  const double gnorm = p.l2_norm(grid);
  NormGrowthReport r;
  std::vector<double> scaled, wy;
  if (gnorm == 0.0) {
    for (double t : taus) r.rows.push_back({t, 0.0, 0.0, 0.0});
    r.w_scaled_spread = r.wy_spread = 1.0;
    return r;
  }
  const SolutionField w = solve_linearized(a1, g, v, stepper);
  const std::size_t m = static_cast<std::size_t>(grid.size());
  const Window all{grid.y_min(), grid.y_max()};
  std::vector<double> buf(static_cast<std::size_t>(a1.n) * m);
  for (double t : taus) {
    if (!(t > 0.0)) throw Error(Errc::kConfigParse, "norm check times must be positive");
    w.interpolate_level(t, buf);
    double wn = 0.0, wyn = 0.0;
    for (int i = 0; i < a1.n; ++i) {
      const std::span<const double> u(buf.data() + static_cast<std::size_t>(i) * m, m);
      wn += l2_squared(u, grid, all);
      wyn += l2_squared(first_difference(u, grid.dy()), grid, all);
    }
    NormGrowthRow row{t, std::sqrt(wn) / gnorm, std::sqrt(wn) / (std::sqrt(t) * gnorm),
                      std::sqrt(wyn) / gnorm};
    scaled.push_back(row.w_scaled);
    wy.push_back(row.wy_ratio);
    r.rows.push_back(row);
  }
  r.w_scaled_spread = spread(scaled);
  r.wy_spread = spread(wy);
  return r;
}

namespace {

std::string json_number(double x) { return std::isfinite(x) ? format_double(x) : "null"; }

}  // namespace

void write_stability_json(std::ostream& os, const StabilityReport& r) {
  os << "[\n";
  for (std::size_t k = 0; k < r.rows.size(); ++k) {
    const auto& row = r.rows[k];
    os << "  {\"amplitude\": " << json_number(row.amplitude) << ", \"lhs\": " << json_number(row.lhs)
       << ", \"rhs\": " << json_number(row.rhs) << ", \"ratio\": " << json_number(row.ratio)
       << ", \"extra\": " << json_number(row.extra)
       << ", \"unstable\": " << (row.unstable ? "true" : "false") << '}'
       << (k + 1 < r.rows.size() ? ",\n" : "\n");
  }
  os << "]\n";
}

void write_stability_csv(std::ostream& os, const StabilityReport& r) {
  os << "amplitude,lhs,rhs,ratio,extra,unstable\n";
  for (const auto& row : r.rows) {
    os << format_double(row.amplitude) << ',' << format_double(row.lhs) << ','
       << format_double(row.rhs) << ',' << format_double(row.ratio) << ','
       << format_double(row.extra) << ',' << (row.unstable ? 1 : 0) << '\n';
  }
}

}  // namespace rsvol
