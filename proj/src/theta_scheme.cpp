#include "rsvol/theta_scheme.hpp"

#include <algorithm>
#include <cmath>

#include "rsvol/error.hpp"
#include "rsvol/simd/kernels.hpp"

namespace rsvol {

DiscreteModel DiscreteModel::perturbed(std::span<const double> g) const {
  if (g.size() != diffusion.size()) {
    throw Error(Errc::kShapeMismatch, "perturbation size differs from n * m");
  }
  DiscreteModel out = *this;
  simd::active_kernels().axpy(1.0, g.data(), out.diffusion.data(), g.size());
  return out;
}

Eigen::MatrixXd DiscreteModel::rate_matrix() const {
  Eigen::MatrixXd r = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) r(i, i) = rates[static_cast<std::size_t>(i)];
  return r;
}

Eigen::MatrixXd DiscreteModel::dividend_matrix() const {
  Eigen::MatrixXd q = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) q(i, i) = dividends[static_cast<std::size_t>(i)];
  return q;
}

namespace {

std::vector<double> gaussian_smooth(const std::vector<double>& x, double width_cells) {
  const int m = static_cast<int>(x.size());
  const int reach = static_cast<int>(std::ceil(4.0 * width_cells));
  std::vector<double> kernel(static_cast<std::size_t>(2 * reach + 1));
  for (int d = -reach; d <= reach; ++d) {
    kernel[static_cast<std::size_t>(d + reach)] =
        std::exp(-0.5 * d * d / (width_cells * width_cells));
  }
  std::vector<double> out(x.size());
  for (int k = 0; k < m; ++k) {
    double sum = 0.0, wsum = 0.0;
    for (int d = -reach; d <= reach; ++d) {
      const int j = k + d;
      if (j < 0 || j >= m) continue;
      const double w = kernel[static_cast<std::size_t>(d + reach)];
      sum += w * x[static_cast<std::size_t>(j)];
      wsum += w;
    }
    out[static_cast<std::size_t>(k)] = sum / wsum;
  }
  return out;
}

}  // namespace

DiscreteModel discretize(const RegimeModel& model, const SpaceGrid& grid,
                         double smoothing_cells) {
  DiscreteModel d{grid, model.regimes(), {}, model.rates(), model.dividends(),
                  model.generator().matrix()};
  const int m = grid.size();
  d.diffusion.resize(static_cast<std::size_t>(d.n) * m);
  for (int i = 0; i < d.n; ++i) {
    std::vector<double> a(static_cast<std::size_t>(m));
    for (int k = 0; k < m; ++k) a[static_cast<std::size_t>(k)] = diffusion_coefficient(model, i, grid.node(k));
    if (smoothing_cells > 0.0) a = gaussian_smooth(a, smoothing_cells);
    std::copy(a.begin(), a.end(), d.diffusion_of(i).begin());
  }
  return d;
}

void SpatialOperator::apply(std::span<const double> u, std::span<double> out) const {
  const std::size_t mm = static_cast<std::size_t>(m);
  const auto& kern = simd::active_kernels();
  for (int i = 0; i < n; ++i) {
    const std::size_t o = static_cast<std::size_t>(i) * mm;
    kern.tridiag_apply(lower.data() + o, diag.data() + o, upper.data() + o, u.data() + o,
                       out.data() + o, mm);
  }
  for (int i = 0; i < n; ++i) {
    for (int l = 0; l < n; ++l) {
      const double c = coupling(i, l);
      if (c == 0.0) continue;
      kern.axpy(c, u.data() + static_cast<std::size_t>(l) * mm,
                out.data() + static_cast<std::size_t>(i) * mm, mm);
    }
  }
  for (int i = 0; i < n; ++i) {
    if (left == BoundaryKind::kDirichletZero) out[static_cast<std::size_t>(i) * mm] = 0.0;
    if (right == BoundaryKind::kDirichletZero) out[static_cast<std::size_t>(i) * mm + mm - 1] = 0.0;
  }
}

double SpatialOperator::max_diagonal_rate() const {
  double r = 0.0;
  for (double d : diag) r = std::max(r, std::abs(d));
  for (int i = 0; i < n; ++i) r = std::max(r, std::abs(coupling(i, i)));
  return r;
}

namespace {

void check_shape(const SpaceGrid& grid, std::span<const double> x, int n, const char* what) {
  if (x.size() != static_cast<std::size_t>(n) * grid.size()) {
    throw Error(Errc::kShapeMismatch, std::string(what) + " needs n * m values");
  }
}

// Rows 0 and m-1 for the linear condition: u_yy = u_y eliminates the ghost
// node, leaving (c2 + c1) times a one-sided first difference.
void linear_boundary(SpatialOperator& op, int i, double c2_plus_c1, double h, bool at_left) {
  const std::size_t m = static_cast<std::size_t>(op.m);
  const std::size_t o = static_cast<std::size_t>(i) * m;
  if (at_left) {
    const double s = c2_plus_c1 / (h * (1.0 + 0.5 * h));
    op.lower[o] = 0.0;
    op.diag[o] = -s;
    op.upper[o] = s;
  } else {
    const double s = c2_plus_c1 / (h * (1.0 - 0.5 * h));
    op.lower[o + m - 1] = -s;
    op.diag[o + m - 1] = s;
    op.upper[o + m - 1] = 0.0;
  }
}

void dirichlet_boundary(SpatialOperator& op, int i, bool at_left) {
  const std::size_t m = static_cast<std::size_t>(op.m);
  const std::size_t k = static_cast<std::size_t>(i) * m + (at_left ? 0 : m - 1);
  op.lower[k] = op.diag[k] = op.upper[k] = 0.0;
}

SpatialOperator blank_operator(const SpaceGrid& grid, int n, const Eigen::MatrixXd& coupling,
                               BoundaryKind left, BoundaryKind right) {
  if (coupling.rows() != n || coupling.cols() != n) {
    throw Error(Errc::kDimensionMismatch, "coupling matrix must be n x n");
  }
  SpatialOperator op;
  op.n = n;
  op.m = grid.size();
  const std::size_t total = static_cast<std::size_t>(n) * op.m;
  op.lower.assign(total, 0.0);
  op.diag.assign(total, 0.0);
  op.upper.assign(total, 0.0);
  op.coupling = coupling;
  op.left = left;
  op.right = right;
  return op;
}

}  // namespace

SpatialOperator nonconservative_operator(const SpaceGrid& grid, std::span<const double> c2,
                                         std::span<const double> c1,
                                         const Eigen::MatrixXd& coupling, BoundaryKind left,
                                         BoundaryKind right) {
  const int n = static_cast<int>(coupling.rows());
  check_shape(grid, c2, n, "c2");
  check_shape(grid, c1, n, "c1");
  SpatialOperator op = blank_operator(grid, n, coupling, left, right);
  const double h = grid.dy();
  const int m = grid.size();
  for (int i = 0; i < n; ++i) {
    const std::size_t o = static_cast<std::size_t>(i) * m;
    for (int k = 1; k < m - 1; ++k) {
      const double a = c2[o + k] / (h * h);
      const double b = c1[o + k] / (2.0 * h);
      op.lower[o + k] = a - b;
      op.diag[o + k] = -2.0 * a;
      op.upper[o + k] = a + b;
    }
    if (left == BoundaryKind::kLinearInExp) linear_boundary(op, i, c2[o] + c1[o], h, true);
    else dirichlet_boundary(op, i, true);
    const std::size_t e = o + m - 1;
    if (right == BoundaryKind::kLinearInExp) linear_boundary(op, i, c2[e] + c1[e], h, false);
    else dirichlet_boundary(op, i, false);
  }
  return op;
}

SpatialOperator conservative_operator(const SpaceGrid& grid, std::span<const double> a,
                                      std::span<const double> c1,
                                      const Eigen::MatrixXd& coupling, BoundaryKind left,
                                      BoundaryKind right) {
  const int n = static_cast<int>(coupling.rows());
  check_shape(grid, a, n, "a");
  check_shape(grid, c1, n, "c1");
  SpatialOperator op = blank_operator(grid, n, coupling, left, right);
  const double h = grid.dy();
  const int m = grid.size();
  const double ih2 = 1.0 / (h * h);
  const double i2h = 0.5 / h;
  for (int i = 0; i < n; ++i) {
    const std::size_t o = static_cast<std::size_t>(i) * m;
    for (int k = 1; k < m - 1; ++k) {
      op.lower[o + k] = a[o + k - 1] * (ih2 + i2h) - c1[o + k] * i2h;
      op.diag[o + k] = -2.0 * a[o + k] * ih2;
      op.upper[o + k] = a[o + k + 1] * (ih2 - i2h) + c1[o + k] * i2h;
    }
    // edge rows: ghost elimination with c2 = a
    if (left == BoundaryKind::kLinearInExp) linear_boundary(op, i, a[o] + c1[o], h, true);
    else dirichlet_boundary(op, i, true);
    const std::size_t e = o + m - 1;
    if (right == BoundaryKind::kLinearInExp) linear_boundary(op, i, a[e] + c1[e], h, false);
    else dirichlet_boundary(op, i, false);
  }
  return op;
}

namespace {

// LU-style factorization of I - c L for one value of c = theta * dtau.
class BlockThomas {
 public:
  BlockThomas(const SpatialOperator& op, double c) : n_(op.n), m_(op.m) {
    const std::size_t nn = static_cast<std::size_t>(n_) * n_;
    inv_.assign(nn * m_, 0.0);
    elim_.assign(nn * m_, 0.0);
    upper_.assign(static_cast<std::size_t>(n_) * m_, 0.0);
    Eigen::MatrixXd prev_inv(n_, n_);
    for (int k = 0; k < m_; ++k) {
      const bool fixed = (k == 0 && op.left == BoundaryKind::kDirichletZero) ||
                         (k == m_ - 1 && op.right == BoundaryKind::kDirichletZero);
      Eigen::MatrixXd d = Eigen::MatrixXd::Identity(n_, n_);
      Eigen::VectorXd lo = Eigen::VectorXd::Zero(n_);
      if (!fixed) {
        d -= c * op.coupling;
        for (int i = 0; i < n_; ++i) {
          const std::size_t idx = static_cast<std::size_t>(i) * m_ + k;
          d(i, i) -= c * op.diag[idx];
          lo(i) = -c * op.lower[idx];
          upper_[static_cast<std::size_t>(k) * n_ + i] = -c * op.upper[idx];
        }
      }
      if (k > 0) {
        // E_k = A_k inv(D'_{k-1}); D'_k = D_k - E_k U_{k-1}
        const Eigen::MatrixXd e = lo.asDiagonal() * prev_inv;
        Eigen::Map<Eigen::MatrixXd>(elim_.data() + nn * k, n_, n_) = e;
        for (int j = 0; j < n_; ++j) {
          d.col(j) -= e.col(j) * upper_[static_cast<std::size_t>(k - 1) * n_ + j];
        }
      }
      Eigen::PartialPivLU<Eigen::MatrixXd> lu(d);
      prev_inv = lu.inverse();
      if (!prev_inv.allFinite()) {
        throw Error(Errc::kNonfiniteSolution, "singular block in the implicit solve");
      }
      Eigen::Map<Eigen::MatrixXd>(inv_.data() + nn * k, n_, n_) = prev_inv;
    }
  }

  // Solves in place; u is component-major (i * m + k).
  void solve(std::span<double> u) const {
    const std::size_t nn = static_cast<std::size_t>(n_) * n_;
    const std::size_t m = static_cast<std::size_t>(m_);
    std::vector<double> r(static_cast<std::size_t>(n_) * m_);  // node-major r'
    Eigen::VectorXd cur(n_);
    for (int k = 0; k < m_; ++k) {
      for (int i = 0; i < n_; ++i) cur(i) = u[static_cast<std::size_t>(i) * m + k];
      if (k > 0) {
        const Eigen::Map<const Eigen::MatrixXd> e(elim_.data() + nn * k, n_, n_);
        const Eigen::Map<const Eigen::VectorXd> prev(r.data() + static_cast<std::size_t>(k - 1) * n_, n_);
        cur -= e * prev;
      }
      Eigen::Map<Eigen::VectorXd>(r.data() + static_cast<std::size_t>(k) * n_, n_) = cur;
    }
    Eigen::VectorXd next = Eigen::VectorXd::Zero(n_);
    for (int k = m_ - 1; k >= 0; --k) {
      Eigen::Map<Eigen::VectorXd> rk(r.data() + static_cast<std::size_t>(k) * n_, n_);
      if (k < m_ - 1) {
        for (int i = 0; i < n_; ++i) rk(i) -= upper_[static_cast<std::size_t>(k) * n_ + i] * next(i);
      }
      const Eigen::Map<const Eigen::MatrixXd> inv(inv_.data() + nn * k, n_, n_);
      next = inv * rk;
      for (int i = 0; i < n_; ++i) u[static_cast<std::size_t>(i) * m + k] = next(i);
    }
  }

 private:
  int n_;
  int m_;
  std::vector<double> inv_;
  std::vector<double> elim_;
  std::vector<double> upper_;
};

bool finite_span(std::span<const double> x) {
  return std::all_of(x.begin(), x.end(), [](double v) { return std::isfinite(v); });
}

}  // namespace

SolutionField evolve(const SpatialOperator& op, const SpaceGrid& grid, const TimeGrid& time,
                     std::span<const double> initial, const StepperConfig& config,
                     const SourceFn& source) {
  if (op.m != grid.size()) throw Error(Errc::kShapeMismatch, "operator and grid differ");
  check_shape(grid, initial, op.n, "initial data");
  const double theta = config.theta;
  if (!(theta >= 0.0 && theta <= 1.0)) throw Error(Errc::kConfigParse, "theta must lie in [0, 1]");
  if (theta < 0.5 && op.max_diagonal_rate() * time.dtau > config.explicit_stability_cap) {
    throw Error(Errc::kGridTooCoarse, "time step too large for an explicit-leaning scheme");
  }

  SolutionField field(grid, time, op.n);
  std::copy(initial.begin(), initial.end(), field.level(0).begin());

  const std::size_t total = initial.size();
  const auto& kern = simd::active_kernels();
  std::vector<double> u(initial.begin(), initial.end());
  std::vector<double> rhs(total), lu(total), f_old(total), f_new(total);

  std::vector<std::pair<double, BlockThomas>> cache;
  auto factor = [&](double c) -> const BlockThomas& {
    for (const auto& [key, f] : cache) {
      if (key == c) return f;
    }
    cache.emplace_back(c, BlockThomas(op, c));
    return cache.back().second;
  };

  auto zero_dirichlet = [&](std::span<double> x) {
    for (int i = 0; i < op.n; ++i) {
      const std::size_t o = static_cast<std::size_t>(i) * op.m;
      if (op.left == BoundaryKind::kDirichletZero) x[o] = 0.0;
      if (op.right == BoundaryKind::kDirichletZero) x[o + op.m - 1] = 0.0;
    }
  };

  // One theta step of size dt from tau0.
  auto step = [&](double tau0, double dt, double th) {
    std::copy(u.begin(), u.end(), rhs.begin());
    if (th < 1.0) {
      op.apply(u, lu);
      kern.axpy((1.0 - th) * dt, lu.data(), rhs.data(), total);
    }
    if (source) {
      source(tau0 + dt, f_new);
      kern.axpy(th * dt, f_new.data(), rhs.data(), total);
      if (th < 1.0) {
        source(tau0, f_old);
        kern.axpy((1.0 - th) * dt, f_old.data(), rhs.data(), total);
      }
    }
    zero_dirichlet(rhs);
    factor(th * dt).solve(rhs);
    std::swap(u, rhs);
  };

  const int half_steps = std::max(0, config.rannacher_half_steps);
  const int damped_full = std::min(time.steps, (half_steps + 1) / 2);
  double tau = 0.0;
  for (int l = 1; l <= time.steps; ++l) {
    if (l <= damped_full && theta < 1.0) {
      const int sub = (l < damped_full || half_steps % 2 == 0) ? 2 : 2 - half_steps % 2;
      for (int s = 0; s < sub; ++s) step(tau + s * 0.5 * time.dtau, 0.5 * time.dtau, 1.0);
      if (sub == 1) step(tau + 0.5 * time.dtau, 0.5 * time.dtau, theta);
    } else {
      step(tau, time.dtau, theta);
    }
    tau = time.tau(l);
    if (!finite_span(u)) {
      throw Error(Errc::kNonfiniteSolution,
                  "solution became non-finite at tau = " + std::to_string(tau));
    }
    std::copy(u.begin(), u.end(), field.level(l).begin());
  }
  return field;
}

}  // namespace rsvol
