#include "rsvol/markov.hpp"

#include <array>
#include <cmath>
#include <sstream>
#include <vector>

#include "rsvol/error.hpp"

namespace rsvol {

GeneratorMatrix GeneratorMatrix::validate(const Eigen::MatrixXd& b) {
  if (b.rows() != b.cols() || b.rows() == 0) {
    throw Error(Errc::kDimensionMismatch, "generator must be a nonempty square matrix");
  }
  if (!b.allFinite()) {
    throw Error(Errc::kDimensionMismatch, "generator has non-finite entries");
  }
  const Eigen::Index n = b.rows();
  Eigen::MatrixXd out = b;
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) {
      if (i != j && b(i, j) < 0.0) {
        std::ostringstream msg;
        msg << "b[" << i + 1 << "][" << j + 1 << "] = " << b(i, j) << " < 0";
        throw Error(Errc::kNegativeOffDiagonal, msg.str());
      }
    }
    const double sum = b.col(j).sum();
    if (std::abs(sum) > kColumnSumTolerance) {
      std::ostringstream msg;
      msg << "column " << j + 1 << " sums to " << sum;
      throw Error(Errc::kColumnSumNonzero, msg.str());
    }
    out(j, j) -= sum;
  }
  return GeneratorMatrix(std::move(out));
}

namespace {

constexpr int kPadeOrder = 6;

// c_k = c_{k-1} (q - k + 1) / (k (2q - k + 1)), c_0 = 1.
std::array<double, kPadeOrder + 1> pade_coefficients() {
  std::array<double, kPadeOrder + 1> c{};
  c[0] = 1.0;
  for (int k = 1; k <= kPadeOrder; ++k) {
    c[k] = c[k - 1] * (kPadeOrder - k + 1) /
           (static_cast<double>(k) * (2 * kPadeOrder - k + 1));
  }
  return c;
}

}  // namespace

Eigen::MatrixXd matrix_exponential(const Eigen::MatrixXd& x) {
  if (x.rows() != x.cols()) {
    throw Error(Errc::kDimensionMismatch, "matrix_exponential needs a square matrix");
  }
  if (!x.allFinite()) {
    throw Error(Errc::kOverflow, "matrix_exponential input is not finite");
  }
  const Eigen::Index n = x.rows();
  if (n == 0) return x;

  const double norm = x.cwiseAbs().rowwise().sum().maxCoeff();
  int squarings = 0;
  if (norm > 0.5) {
    squarings = static_cast<int>(std::ceil(std::log2(norm / 0.5)));
  }
  if (squarings > 60) {
    throw Error(Errc::kOverflow, "t * |B| too large for scaling and squaring");
  }
  const Eigen::MatrixXd a = x / std::ldexp(1.0, squarings);

  static const auto c = pade_coefficients();
  const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd power = id;
  Eigen::MatrixXd num = c[0] * id;
  Eigen::MatrixXd den = c[0] * id;
  for (int k = 1; k <= kPadeOrder; ++k) {
    power = power * a;
    num += c[k] * power;
    den += ((k % 2 == 0) ? c[k] : -c[k]) * power;
  }
  Eigen::MatrixXd result = den.partialPivLu().solve(num);
  for (int s = 0; s < squarings; ++s) {
    result = result * result;
  }
  if (!result.allFinite()) {
    throw Error(Errc::kOverflow, "matrix exponential overflowed");
  }
  return result;
}

Eigen::MatrixXd transition_matrix(const GeneratorMatrix& g, double t) {
  if (!std::isfinite(t) || t < 0.0) {
    throw Error(Errc::kOverflow, "transition time must be finite and nonnegative");
  }
  return matrix_exponential(t * g.matrix());
}

bool is_irreducible(const GeneratorMatrix& g) {
  const int n = g.size();
  // Reachability from every start state by depth-first search over j -> i edges.
  for (int start = 0; start < n; ++start) {
    std::vector<char> seen(static_cast<std::size_t>(n), 0);
    std::vector<int> stack{start};
    seen[static_cast<std::size_t>(start)] = 1;
    int count = 1;
    while (!stack.empty()) {
      const int j = stack.back();
      stack.pop_back();
      for (int i = 0; i < n; ++i) {
        if (i != j && !seen[static_cast<std::size_t>(i)] && g.rate(i, j) > 0.0) {
          seen[static_cast<std::size_t>(i)] = 1;
          ++count;
          stack.push_back(i);
        }
      }
    }
    if (count != n) return false;
  }
  return true;
}

bool is_irreducible_numeric(const GeneratorMatrix& g, double threshold) {
  return transition_matrix(g, 1.0).minCoeff() > threshold;
}

}  // namespace rsvol
