#pragma once

#include <Eigen/Dense>

namespace rsvol {

/// Generator of a finite-state continuous-time Markov chain.
///
/// Column convention: entry (i, j) is the jump rate from state j to state i,
/// so every column sums to zero and off-diagonal entries are nonnegative.
/// Instances only exist in validated form; construct through validate().
class GeneratorMatrix {
 public:
  static constexpr double kColumnSumTolerance = 1e-12;

  /// Checks the generator rules. Columns whose sum lies within
  /// kColumnSumTolerance are re-projected onto zero sum through the diagonal.
  static GeneratorMatrix validate(const Eigen::MatrixXd& b);

  int size() const { return static_cast<int>(b_.rows()); }
  const Eigen::MatrixXd& matrix() const { return b_; }
  double rate(int to, int from) const { return b_(to, from); }

  /// Total exit rate of a state, i.e. -b[j][j].
  double exit_rate(int state) const { return -b_(state, state); }

 private:
  explicit GeneratorMatrix(Eigen::MatrixXd b) : b_(std::move(b)) {}

  Eigen::MatrixXd b_;
};

/// Matrix exponential by scaling and squaring with the (6,6) Pade approximant.
/// Throws Errc::kOverflow when the scaled norm cannot be brought into range.
Eigen::MatrixXd matrix_exponential(const Eigen::MatrixXd& x);

/// e^{tB}: column j is the distribution at time t of a chain started in j.
Eigen::MatrixXd transition_matrix(const GeneratorMatrix& g, double t);

/// Exact test: the jump graph (edge j -> i when b[i][j] > 0) is strongly connected.
bool is_irreducible(const GeneratorMatrix& g);

/// Numeric cross-check: every entry of e^{B} exceeds threshold.
bool is_irreducible_numeric(const GeneratorMatrix& g, double threshold = 1e-14);

}  // namespace rsvol
