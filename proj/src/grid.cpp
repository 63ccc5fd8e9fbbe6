#include "rsvol/grid.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>

#include "rsvol/error.hpp"
#include "rsvol/format.hpp"
#include "rsvol/simd/kernels.hpp"

namespace rsvol {

SpaceGrid::SpaceGrid(double y_min, double y_max, int nodes)
    : y_min_(y_min), y_max_(y_max), m_(nodes), dy_(0.0), zero_(0) {
  if (!(y_min < 0.0 && 0.0 < y_max) || !std::isfinite(y_min) || !std::isfinite(y_max)) {
    throw Error(Errc::kConfigParse, "space grid needs y_min < 0 < y_max");
  }
  if (nodes < 3) throw Error(Errc::kConfigParse, "space grid needs at least 3 nodes");
  dy_ = (y_max - y_min) / (nodes - 1);
  const double k0 = -y_min / dy_;
  zero_ = static_cast<int>(std::lround(k0));
  if (std::abs(k0 - zero_) > 1e-8) {
    std::ostringstream msg;
    msg << "y = 0 is not a node of [" << y_min << ", " << y_max << "] with " << nodes
        << " nodes";
    throw Error(Errc::kConfigParse, msg.str());
  }
}

SpaceGrid SpaceGrid::symmetric(double half_width, int nodes) {
  if (nodes % 2 == 0) throw Error(Errc::kConfigParse, "symmetric grid needs an odd node count");
  return SpaceGrid(-half_width, half_width, nodes);
}

int SpaceGrid::nearest(double y) const {
  const long k = std::lround((y - y_min_) / dy_);
  return static_cast<int>(std::clamp<long>(k, 0, m_ - 1));
}

std::pair<int, int> SpaceGrid::node_range(const Window& w, int min_nodes) const {
  const double tol = 1e-9 * dy_;
  if (!(w.lo < w.hi) || w.lo < y_min_ - tol || w.hi > y_max_ + tol) {
    std::ostringstream msg;
    msg << "window [" << w.lo << ", " << w.hi << "] not inside grid [" << y_min_ << ", "
        << y_max_ << "]";
    throw Error(Errc::kWindowOutOfRange, msg.str());
  }
  const int first = std::max(0, static_cast<int>(std::ceil((w.lo - y_min_) / dy_ - 1e-9)));
  const int last = std::min(m_ - 1, static_cast<int>(std::floor((w.hi - y_min_) / dy_ + 1e-9)));
  if (last - first + 1 < min_nodes) {
    throw Error(Errc::kWindowOutOfRange, "window holds too few grid nodes");
  }
  return {first, last};
}

std::vector<double> SpaceGrid::nodes() const {
  std::vector<double> y(static_cast<std::size_t>(m_));
  for (int k = 0; k < m_; ++k) y[static_cast<std::size_t>(k)] = node(k);
  return y;
}

TimeGrid::TimeGrid(double tau_max_in, int steps_in)
    : tau_max(tau_max_in), steps(steps_in), dtau(0.0) {
  if (!(tau_max > 0.0) || !std::isfinite(tau_max)) {
    throw Error(Errc::kConfigParse, "time horizon must be positive");
  }
  if (steps < 1) throw Error(Errc::kConfigParse, "time grid needs at least one step");
  dtau = tau_max / steps;
}

int TimeGrid::nearest_level(double tau) const {
  const long l = std::lround(tau / dtau);
  return static_cast<int>(std::clamp<long>(l, 0, steps));
}

SolutionField::SolutionField(SpaceGrid space, TimeGrid time, int components)
    : space_(space), time_(time), n_(components) {
  if (components < 1) throw Error(Errc::kDimensionMismatch, "field needs a component");
  data_.assign(static_cast<std::size_t>(levels()) * n_ * space_.size(), 0.0);
}

void SolutionField::interpolate_level(double tau, std::span<double> out) const {
  const std::size_t count = static_cast<std::size_t>(n_) * nodes();
  if (out.size() != count) throw Error(Errc::kShapeMismatch, "interpolation buffer size");
  const double s = std::clamp(tau / time_.dtau, 0.0, static_cast<double>(time_.steps));
  const int l0 = std::min(static_cast<int>(std::floor(s)), time_.steps);
  const double w = s - l0;
  const auto a = level(l0);
  if (w <= 0.0 || l0 == time_.steps) {
    std::copy(a.begin(), a.end(), out.begin());
    return;
  }
  const auto b = level(l0 + 1);
  for (std::size_t k = 0; k < count; ++k) out[k] = (1.0 - w) * a[k] + w * b[k];
}

bool SolutionField::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double x) { return std::isfinite(x); });
}

void DomainWindows::validate(const SpaceGrid& grid) const {
  const Window domain{grid.y_min(), grid.y_max()};
  if (!omega1.strictly_inside(omega)) {
    throw Error(Errc::kWindowOutOfRange, "Omega_1 must lie strictly inside Omega");
  }
  if (!omega.strictly_inside(domain)) {
    throw Error(Errc::kWindowOutOfRange, "Omega must lie strictly inside the grid");
  }
  for (const Window& w : omega_small) {
    if (!(w.lo < w.hi) || w.lo < omega.lo || w.hi > omega.hi) {
      throw Error(Errc::kWindowOutOfRange, "omega must lie inside Omega");
    }
    if (w.hi > omega1.lo && w.lo < omega1.hi) {
      throw Error(Errc::kWindowOutOfRange, "omega must avoid Omega_1");
    }
    if (w.contains(0.0)) throw Error(Errc::kWindowOutOfRange, "omega must avoid y = 0");
  }
}

DomainWindows DomainWindows::standard() {
  DomainWindows w;
  w.omega1 = {std::log(0.85), std::log(1.18)};
  w.omega = {std::log(0.7), std::log(1.43)};
  w.omega_small = {{-0.30, -0.25}, {0.25, 0.30}};
  return w;
}

std::vector<double> second_difference(std::span<const double> u, double dy) {
  const std::size_t m = u.size();
  std::vector<double> out(m, 0.0);
  if (m < 3) return out;
  simd::active_kernels().second_difference(u.data(), out.data(), m, 1.0 / (dy * dy));
  out[0] = out[1];
  out[m - 1] = out[m - 2];
  return out;
}

std::vector<double> first_difference(std::span<const double> u, double dy) {
  const std::size_t m = u.size();
  std::vector<double> out(m, 0.0);
  if (m < 3) return out;
  simd::active_kernels().first_difference(u.data(), out.data(), m, 0.5 / dy);
  out[0] = out[1];
  out[m - 1] = out[m - 2];
  return out;
}

std::vector<double> trapezoid_weights(std::size_t count, double h) {
  std::vector<double> w(count, h);
  if (count > 0) {
    w.front() = 0.5 * h;
    w.back() = 0.5 * h;
  }
  if (count == 1) w.front() = 0.0;
  return w;
}

double sobolev_norm_squared(std::span<const double> u, double h, int order) {
  const std::size_t m = u.size();
  if (order < 0 || order > 2) throw Error(Errc::kConfigParse, "Sobolev order must be 0, 1 or 2");
  if (m < static_cast<std::size_t>(order == 2 ? 4 : 3)) {
    throw Error(Errc::kWindowOutOfRange, "too few samples for the Sobolev norm");
  }
  const auto& kern = simd::active_kernels();
  const std::vector<double> w = trapezoid_weights(m, h);
  double total = kern.weighted_sum_squares(w.data(), u.data(), m);
  if (order >= 1) {
    std::vector<double> d(m);
    kern.first_difference(u.data(), d.data(), m, 0.5 / h);
    d[0] = (-3.0 * u[0] + 4.0 * u[1] - u[2]) / (2.0 * h);
    d[m - 1] = (3.0 * u[m - 1] - 4.0 * u[m - 2] + u[m - 3]) / (2.0 * h);
    total += kern.weighted_sum_squares(w.data(), d.data(), m);
  }
  if (order >= 2) {
    std::vector<double> d(m);
    kern.second_difference(u.data(), d.data(), m, 1.0 / (h * h));
    d[0] = (2.0 * u[0] - 5.0 * u[1] + 4.0 * u[2] - u[3]) / (h * h);
    d[m - 1] = (2.0 * u[m - 1] - 5.0 * u[m - 2] + 4.0 * u[m - 3] - u[m - 4]) / (h * h);
    total += kern.weighted_sum_squares(w.data(), d.data(), m);
  }
  return total;
}

double sobolev_norm(std::span<const double> u, const SpaceGrid& grid, const Window& w,
                    int order) {
  if (u.size() != static_cast<std::size_t>(grid.size())) {
    throw Error(Errc::kShapeMismatch, "slice length differs from grid size");
  }
  const auto [first, last] = grid.node_range(w, order == 2 ? 4 : 3);
  return std::sqrt(sobolev_norm_squared(
      u.subspan(static_cast<std::size_t>(first), static_cast<std::size_t>(last - first + 1)),
      grid.dy(), order));
}

double sobolev_norm(std::span<const std::span<const double>> components, const SpaceGrid& grid,
                    const Window& w, int order) {
  double total = 0.0;
  for (const auto& c : components) {
    const double v = sobolev_norm(c, grid, w, order);
    total += v * v;
  }
  return std::sqrt(total);
}

void write_field_csv(std::ostream& os, const SolutionField& field, int level_stride) {
  if (level_stride < 1) level_stride = 1;
  os << "y,tau";
  for (int i = 0; i < field.components(); ++i) os << ",component_" << i + 1;
  os << '\n';
  const int last = field.levels() - 1;
  for (int l = 0; l <= last; ++l) {
    if (l % level_stride != 0 && l != last) continue;
    const double tau = field.time().tau(l);
    for (int k = 0; k < field.nodes(); ++k) {
      os << format_double(field.space().node(k)) << ',' << format_double(tau);
      for (int i = 0; i < field.components(); ++i) os << ',' << format_double(field(i, k, l));
      os << '\n';
    }
  }
}

}  // namespace rsvol
