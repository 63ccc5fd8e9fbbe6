#pragma once

#include <iosfwd>
#include <span>
#include <utility>
#include <vector>

namespace rsvol {

/// Closed interval [lo, hi] in log-moneyness.
struct Window {
  double lo = 0.0;
  double hi = 0.0;

  double width() const { return hi - lo; }
  bool contains(double y) const { return y >= lo && y <= hi; }
  bool strictly_inside(const Window& outer) const { return lo > outer.lo && hi < outer.hi; }
};

/// Uniform grid in y with y = 0 on a node.
class SpaceGrid {
 public:
  SpaceGrid(double y_min, double y_max, int nodes);

  /// [-half_width, half_width] with an odd node count.
  static SpaceGrid symmetric(double half_width, int nodes);

  /// Default domain [-4, 4] with 401 nodes.
  static SpaceGrid standard() { return symmetric(4.0, 401); }

  double y_min() const { return y_min_; }
  double y_max() const { return y_max_; }
  int size() const { return m_; }
  double dy() const { return dy_; }
  double node(int k) const { return y_min_ + k * dy_; }
  int zero_index() const { return zero_; }

  /// Index of the node nearest to y, clamped to the grid.
  int nearest(double y) const;

  /// First and last node indices inside the window. Throws
  /// Errc::kWindowOutOfRange when the window leaves the grid or holds fewer
  /// than min_nodes nodes.
  std::pair<int, int> node_range(const Window& w, int min_nodes = 2) const;

  std::vector<double> nodes() const;

  friend bool operator==(const SpaceGrid& a, const SpaceGrid& b) {
    return a.y_min_ == b.y_min_ && a.y_max_ == b.y_max_ && a.m_ == b.m_;
  }

 private:
  double y_min_;
  double y_max_;
  int m_;
  double dy_;
  int zero_;
};

struct TimeGrid {
  TimeGrid(double tau_max, int steps);

  double tau_max;
  int steps;
  double dtau;

  double tau(int level) const { return level * dtau; }
  int nearest_level(double tau) const;

  friend bool operator==(const TimeGrid& a, const TimeGrid& b) {
    return a.tau_max == b.tau_max && a.steps == b.steps;
  }
};

/// Vector-valued field on a space-time grid: component i at node k and time
/// level l, stored with contiguous spatial slices.
class SolutionField {
 public:
  SolutionField(SpaceGrid space, TimeGrid time, int components);

  const SpaceGrid& space() const { return space_; }
  const TimeGrid& time() const { return time_; }
  int components() const { return n_; }
  int nodes() const { return space_.size(); }
  int levels() const { return time_.steps + 1; }

  double operator()(int i, int k, int l) const { return data_[index(i, k, l)]; }
  double& operator()(int i, int k, int l) { return data_[index(i, k, l)]; }

  std::span<const double> slice(int i, int l) const {
    return {data_.data() + index(i, 0, l), static_cast<std::size_t>(nodes())};
  }
  std::span<double> slice(int i, int l) {
    return {data_.data() + index(i, 0, l), static_cast<std::size_t>(nodes())};
  }

  /// All components at one level, component-major (n * m values).
  std::span<const double> level(int l) const {
    return {data_.data() + index(0, 0, l), static_cast<std::size_t>(n_) * nodes()};
  }
  std::span<double> level(int l) {
    return {data_.data() + index(0, 0, l), static_cast<std::size_t>(n_) * nodes()};
  }

  /// Linear interpolation between stored levels; tau is clamped to the grid.
  void interpolate_level(double tau, std::span<double> out) const;

  bool all_finite() const;

 private:
  std::size_t index(int i, int k, int l) const {
    return (static_cast<std::size_t>(l) * n_ + i) * static_cast<std::size_t>(space_.size()) + k;
  }

  SpaceGrid space_;
  TimeGrid time_;
  int n_;
  std::vector<double> data_;
};

/// Reconstruction window Omega_1, observation window Omega, and the two
/// small intervals omega inside Omega minus Omega_1 (avoiding y = 0).
struct DomainWindows {
  Window omega1;
  Window omega;
  std::vector<Window> omega_small;

  void validate(const SpaceGrid& grid) const;

  /// I = [0.85, 1.18] and J = [0.7, 1.43] in S, mapped through y = ln S.
  static DomainWindows standard();
};

/// Central second difference; boundary nodes copy their neighbour.
std::vector<double> second_difference(std::span<const double> u, double dy);

/// Central first difference; boundary nodes copy their neighbour.
std::vector<double> first_difference(std::span<const double> u, double dy);

/// Discrete H^order norm of uniformly spaced samples (trapezoid rule, central
/// differences inside, second-order one-sided stencils at the ends).
double sobolev_norm_squared(std::span<const double> u, double h, int order);

/// H^order norm of a slice restricted to a window of the grid.
double sobolev_norm(std::span<const double> u, const SpaceGrid& grid, const Window& w, int order);

/// Vector convention: root of the summed squared component norms.
double sobolev_norm(std::span<const std::span<const double>> components, const SpaceGrid& grid,
                    const Window& w, int order);

/// Trapezoid weights for uniformly spaced samples.
std::vector<double> trapezoid_weights(std::size_t count, double h);

/// CSV with header y,tau,component_1..n; one row per node and emitted level.
void write_field_csv(std::ostream& os, const SolutionField& field, int level_stride = 1);

}  // namespace rsvol
