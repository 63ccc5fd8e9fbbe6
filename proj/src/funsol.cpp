#include "rsvol/funsol.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "rsvol/error.hpp"
#include "rsvol/markov.hpp"

namespace rsvol {

SolutionField numeric_fundamental_column(const DiscreteModel& model, int source_state,
                                         const TimeGrid& time, KernelForm form,
                                         const StepperConfig& stepper) {
  if (source_state < 0 || source_state >= model.n) {
    throw Error(Errc::kDimensionMismatch, "source state out of range");
  }
  const SpaceGrid& grid = model.grid;
  const int m = grid.size();
  const Eigen::MatrixXd coupling = model.generator - model.dividend_matrix();
  std::vector<double> c1(model.diffusion.size(), 0.0);
  for (int i = 0; i < model.n; ++i) {
    const double drift = model.rates[static_cast<std::size_t>(i)] -
                         model.dividends[static_cast<std::size_t>(i)];
    for (int k = 0; k < m; ++k) {
      const std::size_t idx = static_cast<std::size_t>(i) * m + k;
      switch (form) {
        case KernelForm::kAdjoint: c1[idx] = -drift; break;
        case KernelForm::kForward: c1[idx] = -(model.diffusion[idx] + drift); break;
        case KernelForm::kDiffusionOnly: c1[idx] = 0.0; break;
      }
    }
  }
  const auto d = BoundaryKind::kDirichletZero;
  const SpatialOperator op =
      form == KernelForm::kAdjoint
          ? conservative_operator(grid, model.diffusion, c1, coupling, d, d)
          : nonconservative_operator(grid, model.diffusion, c1, coupling, d, d);
  std::vector<double> u0(model.diffusion.size(), 0.0);
  u0[static_cast<std::size_t>(source_state) * m + grid.zero_index()] = 1.0 / grid.dy();
  return evolve(op, grid, time, u0, stepper);
}

void LowerBoundParams::validate() const {
  if (!(delta0 > 0.0) || !std::isfinite(delta0) || !(eps0 > 0.0) || !std::isfinite(eps0)) {
    throw Error(Errc::kConfigParse, "delta0 and eps0 must be finite and positive");
  }
  if (b_star.rows() != b_star.cols()) throw Error(Errc::kDimensionMismatch, "B* must be square");
  for (int i = 0; i < b_star.rows(); ++i) {
    for (int j = 0; j < b_star.cols(); ++j) {
      if (i != j && b_star(i, j) < 0.0) {
        throw Error(Errc::kNegativeOffDiagonal, "B* off-diagonal entries must be nonnegative");
      }
    }
  }
}

Eigen::MatrixXd off_diagonal_part(const Eigen::MatrixXd& b) {
  Eigen::MatrixXd out = b;
  out.diagonal().setZero();
  return out;
}

Eigen::MatrixXd lower_bound_matrix(const LowerBoundParams& p, double y, double z, double t) {
  if (!(t > 0.0)) throw Error(Errc::kConfigParse, "tau - s must be positive");
  const double c = p.delta0 * std::sqrt(std::numbers::pi / p.eps0);
  const double g = std::exp(-p.eps0 * (y - z) * (y - z) / t) / std::sqrt(t);
  return p.delta0 * g * matrix_exponential(c * t * p.b_star);
}

KernelFn heat_kernel(double a, int n) {
  return [a, n](double y, double tau) {
    const double v = std::exp(-y * y / (4.0 * a * tau)) / std::sqrt(4.0 * std::numbers::pi * a * tau);
    return Eigen::MatrixXd(v * Eigen::MatrixXd::Identity(n, n));
  };
}

KernelFn field_kernel(std::vector<SolutionField> columns) {
  if (columns.empty()) throw Error(Errc::kDimensionMismatch, "no kernel columns");
  return [cols = std::move(columns)](double y, double tau) {
    const int n = static_cast<int>(cols.size());
    Eigen::MatrixXd e(n, n);
    const SpaceGrid& g = cols.front().space();
    const TimeGrid& t = cols.front().time();
    const double s = std::clamp((y - g.y_min()) / g.dy(), 0.0, g.size() - 1.0);
    const int k0 = std::min(static_cast<int>(s), g.size() - 2);
    const double wy = s - k0;
    const double r = std::clamp(tau / t.dtau, 0.0, static_cast<double>(t.steps));
    const int l0 = std::min(static_cast<int>(r), t.steps - 1);
    const double wt = r - l0;
    for (int j = 0; j < n; ++j) {
      const SolutionField& f = cols[static_cast<std::size_t>(j)];
      for (int i = 0; i < n; ++i) {
        const double a = (1 - wy) * f(i, k0, l0) + wy * f(i, k0 + 1, l0);
        const double b = (1 - wy) * f(i, k0, l0 + 1) + wy * f(i, k0 + 1, l0 + 1);
        e(i, j) = (1 - wt) * a + wt * b;
      }
    }
    return e;
  };
}

PositivitySamples PositivitySamples::uniform(const Window& w, int ny, double tau_lo,
                                             double tau_hi, int nt) {
  PositivitySamples s;
  for (int k = 0; k < ny; ++k) s.y.push_back(w.lo + (w.hi - w.lo) * k / std::max(ny - 1, 1));
  for (int l = 0; l < nt; ++l) s.tau.push_back(tau_lo + (tau_hi - tau_lo) * l / std::max(nt - 1, 1));
  return s;
}

double positivity_gap(const KernelFn& kernel, const LowerBoundParams& p,
                      const PositivitySamples& s) {
  p.validate();
  const double c = p.delta0 * std::sqrt(std::numbers::pi / p.eps0);
  double gap = std::numeric_limits<double>::infinity();
  for (double tau : s.tau) {
    const Eigen::MatrixXd growth = p.delta0 * matrix_exponential(c * tau * p.b_star) / std::sqrt(tau);
    for (double y : s.y) {
      const Eigen::MatrixXd diff = kernel(y, tau) - std::exp(-p.eps0 * y * y / tau) * growth;
      gap = std::min(gap, diff.minCoeff());
    }
  }
  return gap;
}

double calibrate_delta0(const KernelFn& kernel, const Eigen::MatrixXd& b_star, double eps0,
                        const PositivitySamples& s, double delta_floor) {
  auto ok = [&](double d) { return positivity_gap(kernel, {d, eps0, b_star}, s) >= 0.0; };
  if (!ok(delta_floor)) return 0.0;
  double lo = delta_floor;
  double hi = 1.0;
  for (int i = 0; i < 80 && ok(hi); ++i) {
    lo = hi;
    hi *= 2.0;
  }
  for (int i = 0; i < 60; ++i) {
    const double mid = std::sqrt(lo * hi);
    (ok(mid) ? lo : hi) = mid;
  }
  return lo;
}

PositivityReport verify_positivity_bound(const KernelFn& kernel, const LowerBoundParams& params,
                                         const PositivitySamples& s,
                                         std::span<const double> eps_grid) {
  static constexpr double kDefaultEps[] = {0.25, 0.5, 1.0};
  if (eps_grid.empty()) eps_grid = kDefaultEps;
  PositivityReport r;
  r.min_gap = positivity_gap(kernel, params, s);
  r.violated = r.min_gap < 0.0;
  for (double eps : eps_grid) {
    const double d = calibrate_delta0(kernel, params.b_star, eps, s);
    if (d > r.delta0_star) {
      r.delta0_star = d;
      r.eps0_star = eps;
    }
  }
  return r;
}

double gaussian_decay_slope(std::span<const double> u, const SpaceGrid& grid, const Window& w) {
  const auto [first, last] = grid.node_range(w, 3);
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int count = 0;
  for (int k = first; k <= last; ++k) {
    const double val = u[static_cast<std::size_t>(k)];
    if (!(val > 0.0)) continue;
    const double x = grid.node(k) * grid.node(k);
    const double l = std::log(val);
    sx += x;
    sy += l;
    sxx += x * x;
    sxy += x * l;
    ++count;
  }
  if (count < 3) throw Error(Errc::kWindowOutOfRange, "too few positive samples for a fit");
  return (count * sxy - sx * sy) / (count * sxx - sx * sx);
}

double heat_semigroup_gap(double eps0, double t1, double t2, double y) {
  auto p = [eps0](double t, double z) { return std::exp(-eps0 * z * z / t) / std::sqrt(t); };
  const double sd = std::sqrt(std::max(t1, t2) / (2.0 * eps0));
  const double lo = std::min(0.0, y) - 14.0 * sd;
  const double hi = std::max(0.0, y) + 14.0 * sd;
  const int steps = 40000;
  const double h = (hi - lo) / steps;
  double sum = 0.0;
  for (int k = 0; k <= steps; ++k) {
    const double z = lo + k * h;
    const double w = (k == 0 || k == steps) ? 0.5 : 1.0;
    sum += w * p(t1, y - z) * p(t2, z);
  }
  sum *= h;
  return std::abs(sum - std::sqrt(std::numbers::pi / eps0) * p(t1 + t2, y));
}

namespace {

struct GaussLegendre {
  std::vector<double> x, w;  // on [0, 1]

  explicit GaussLegendre(int q) : x(static_cast<std::size_t>(q)), w(static_cast<std::size_t>(q)) {
    for (int i = 0; i < q; ++i) {
      double z = std::cos(std::numbers::pi * (i + 0.75) / (q + 0.5));
      double dp = 0.0;
      for (int it = 0; it < 100; ++it) {
        double p0 = 1.0, p1 = z;
        for (int k = 2; k <= q; ++k) {
          const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
          p0 = p1;
          p1 = p2;
        }
        dp = q * (z * p1 - p0) / (z * z - 1.0);
        const double dz = p1 / dp;
        z -= dz;
        if (std::abs(dz) < 1e-15) break;
      }
      x[static_cast<std::size_t>(i)] = 0.5 * (1.0 - z);
      w[static_cast<std::size_t>(i)] = 1.0 / ((1.0 - z * z) * dp * dp);
    }
  }
};

// Integral over durations d_0..d_p >= 0 summing to tau of
// exp(sum b_kk d_k) * gauss(y; sum 2 a_k d_k) along the state path.
double path_integral(const std::vector<int>& path, std::span<const double> a,
                     const Eigen::MatrixXd& b, double y, double tau, const GaussLegendre& gl) {
  const int p = static_cast<int>(path.size()) - 1;
  auto rec = [&](auto&& self, int level, double remaining, double kill, double var) -> double {
    const int s = path[static_cast<std::size_t>(level)];
    if (level == p) {
      const double k = kill + b(s, s) * remaining;
      const double v = var + 2.0 * a[static_cast<std::size_t>(s)] * remaining;
      return std::exp(k - y * y / (2.0 * v)) / std::sqrt(2.0 * std::numbers::pi * v);
    }
    double sum = 0.0;
    for (std::size_t q = 0; q < gl.x.size(); ++q) {
      const double d = remaining * gl.x[q];
      sum += gl.w[q] * remaining *
             self(self, level + 1, remaining - d, kill + b(s, s) * d,
                  var + 2.0 * a[static_cast<std::size_t>(s)] * d);
    }
    return sum;
  };
  return rec(rec, 0, tau, 0.0, 0.0);
}

}  // namespace

SeriesTerms levy_series(std::span<const double> a, const Eigen::MatrixXd& b, double y, double tau,
                        int p_max, int quadrature_nodes) {
  const int n = static_cast<int>(b.rows());
  if (static_cast<int>(a.size()) != n) throw Error(Errc::kDimensionMismatch, "need one a_k per state");
  if (p_max < 1 || p_max > 3) throw Error(Errc::kConfigParse, "series order must be 1..3");
  const GaussLegendre gl(quadrature_nodes);
  const Eigen::MatrixXd off = off_diagonal_part(b);
  SeriesTerms t;
  // e[p] needs p jumps; Phi_p = B_off e[p-1]
  for (int p = 0; p < p_max; ++p) {
    Eigen::MatrixXd e = Eigen::MatrixXd::Zero(n, n);
    std::vector<int> path(static_cast<std::size_t>(p + 1));
    auto walk = [&](auto&& self, int pos, double weight) -> void {
      if (pos == p) {
        for (int j = 0; j < n; ++j) {
          if (p > 0 && j == path[static_cast<std::size_t>(p - 1)]) continue;
          const double wj = p > 0 ? weight * off(path[static_cast<std::size_t>(p - 1)], j) : weight;
          if (wj == 0.0) continue;
          path[static_cast<std::size_t>(p)] = j;
          e(path[0], j) += wj * path_integral(path, a, b, y, tau, gl);
        }
        return;
      }
      for (int s = 0; s < n; ++s) {
        if (pos > 0 && s == path[static_cast<std::size_t>(pos - 1)]) continue;
        const double ws = pos > 0 ? weight * off(path[static_cast<std::size_t>(pos - 1)], s) : weight;
        if (ws == 0.0) continue;
        path[static_cast<std::size_t>(pos)] = s;
        self(self, pos + 1, ws);
      }
    };
    walk(walk, 0, 1.0);
    t.e.push_back(e);
    t.phi.push_back(off * e);
  }
  return t;
}

SeriesCheck check_levy_series(const SeriesTerms& terms, const LowerBoundParams& p, double y,
                              double tau) {
  SeriesCheck c;
  c.min_bound_gap = std::numeric_limits<double>::infinity();
  const double g = std::exp(-p.eps0 * y * y / tau) / std::sqrt(tau);
  Eigen::MatrixXd bp = Eigen::MatrixXd::Identity(p.b_star.rows(), p.b_star.cols());
  double fact = 1.0;
  for (std::size_t k = 0; k < terms.phi.size(); ++k) {
    const int order = static_cast<int>(k) + 1;
    const Eigen::MatrixXd& phi = terms.phi[k];
    if (phi.minCoeff() < 0.0) c.monotone = false;
    bp = p.b_star * bp;
    if (order > 1) fact *= order - 1;
    const Eigen::MatrixXd bound = std::pow(p.delta0, order) *
                                  std::pow(std::numbers::pi / p.eps0, 0.5 * (order - 1)) *
                                  std::pow(tau, order - 1) / fact * g * bp;
    const double gap = (phi - bound).minCoeff();
    c.min_bound_gap = std::min(c.min_bound_gap, gap);
    if (gap < 0.0) c.bound_holds = false;
  }
  return c;
}

}  // namespace rsvol
