#include <doctest.h>

#include <cmath>
#include <random>

#include "rsvol/error.hpp"
#include "rsvol/markov.hpp"

using namespace rsvol;

namespace {

Eigen::MatrixXd m2(double a, double b, double c, double d) {
  Eigen::MatrixXd m(2, 2);
  m << a, b, c, d;
  return m;
}

Errc code_of(const Eigen::MatrixXd& b) {
  try {
    GeneratorMatrix::validate(b);
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected a validation error");
  return Errc::kUsage;
}

GeneratorMatrix random_generator(std::mt19937_64& rng, int n) {
  std::uniform_real_distribution<double> rate(0.05, 3.0);
  std::bernoulli_distribution edge(0.5);
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(n, n);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      if (i != j && edge(rng)) b(i, j) = rate(rng);
    }
    b(j, j) = -b.col(j).sum();
  }
  return GeneratorMatrix::validate(b);
}

}  // namespace

TEST_CASE("generator validation") {
  CHECK_NOTHROW(GeneratorMatrix::validate(m2(-1, 1, 1, -1)));
  CHECK_NOTHROW(GeneratorMatrix::validate(Eigen::MatrixXd::Zero(2, 2)));
  CHECK(code_of(m2(-1, -0.5, 1, 0.5)) == Errc::kNegativeOffDiagonal);
  CHECK(code_of(m2(-1, 1, 2, -1)) == Errc::kColumnSumNonzero);
  CHECK(code_of(Eigen::MatrixXd::Zero(2, 3)) == Errc::kDimensionMismatch);
}

TEST_CASE("tiny column drift is projected away") {
  const GeneratorMatrix g = GeneratorMatrix::validate(m2(-1, 1, 1 + 1e-14, -1));
  CHECK(std::abs(g.matrix().col(0).sum()) <= 1e-16);
  CHECK(g.exit_rate(1) == 1.0);
  CHECK(g.rate(1, 0) == doctest::Approx(1.0));
}

TEST_CASE("transition matrix closed forms") {
  const GeneratorMatrix zero = GeneratorMatrix::validate(Eigen::MatrixXd::Zero(3, 3));
  CHECK((transition_matrix(zero, 7.5) - Eigen::MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff() == 0.0);

  const GeneratorMatrix sym = GeneratorMatrix::validate(m2(-1, 1, 1, -1));
  const Eigen::MatrixXd p = transition_matrix(sym, std::log(2.0) / 2.0);
  CHECK(p(0, 0) == doctest::Approx(0.75).epsilon(1e-14));
  CHECK(p(1, 0) == doctest::Approx(0.25).epsilon(1e-14));
  CHECK(p(0, 1) == doctest::Approx(0.25).epsilon(1e-14));
  const Eigen::MatrixXd inf = transition_matrix(sym, 50.0);
  CHECK((inf.array() - 0.5).abs().maxCoeff() <= 1e-12);

  for (double t : {0.0, 0.3, 2.0, 9.0}) {
    const double e = std::exp(-2.0 * t);
    const Eigen::MatrixXd q = transition_matrix(sym, t);
    CHECK(std::abs(q(0, 0) - 0.5 * (1 + e)) < 1e-13);
    CHECK(std::abs(q(0, 1) - 0.5 * (1 - e)) < 1e-13);
  }
}

TEST_CASE("matrix exponential of a nilpotent and a diagonal matrix") {
  Eigen::MatrixXd n = Eigen::MatrixXd::Zero(3, 3);
  n(0, 1) = 2.0;
  n(1, 2) = 3.0;
  Eigen::MatrixXd expect = Eigen::MatrixXd::Identity(3, 3) + n + 0.5 * n * n;
  CHECK((matrix_exponential(n) - expect).cwiseAbs().maxCoeff() < 1e-13);

  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(2, 2);
  d(0, 0) = -30.0;
  d(1, 1) = 4.0;
  const Eigen::MatrixXd e = matrix_exponential(d);
  CHECK(e(0, 0) == doctest::Approx(std::exp(-30.0)).epsilon(1e-12));
  CHECK(e(1, 1) == doctest::Approx(std::exp(4.0)).epsilon(1e-12));
}

TEST_CASE("matrix exponential overflow is reported") {
  Eigen::MatrixXd big = Eigen::MatrixXd::Zero(1, 1);
  big(0, 0) = 1e300;
  try {
    matrix_exponential(big);
    FAIL("expected overflow");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::kOverflow);
  }
}

TEST_CASE("irreducibility") {
  CHECK(is_irreducible(GeneratorMatrix::validate(m2(-1, 1, 1, -1))));
  CHECK_FALSE(is_irreducible(GeneratorMatrix::validate(Eigen::MatrixXd::Zero(2, 2))));
  CHECK_FALSE(is_irreducible(GeneratorMatrix::validate(m2(0, 1, 0, -1))));
  CHECK(is_irreducible(GeneratorMatrix::validate(Eigen::MatrixXd::Zero(1, 1))));

  Eigen::MatrixXd cycle = Eigen::MatrixXd::Zero(3, 3);
  cycle(1, 0) = 1.0;
  cycle(2, 1) = 1.0;
  cycle(0, 2) = 1.0;
  cycle.diagonal().setConstant(-1.0);
  CHECK(is_irreducible(GeneratorMatrix::validate(cycle)));
  CHECK(is_irreducible_numeric(GeneratorMatrix::validate(cycle)));
}

TEST_CASE("semigroup, stochastic columns and irreducibility agreement on random generators") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> time(0.0, 4.0);
  for (int trial = 0; trial < 100; ++trial) {
    const GeneratorMatrix g = random_generator(rng, 2 + trial % 4);
    for (double t : {0.01, 0.1, 1.0, 10.0}) {
      const Eigen::MatrixXd p = transition_matrix(g, t);
      CHECK((p.colwise().sum().array() - 1.0).abs().maxCoeff() <= 1e-12);
      CHECK(p.minCoeff() >= -1e-15);
    }
    const double t1 = time(rng), t2 = time(rng);
    const Eigen::MatrixXd lhs = transition_matrix(g, t1) * transition_matrix(g, t2);
    CHECK((lhs - transition_matrix(g, t1 + t2)).cwiseAbs().maxCoeff() <= 1e-10);
    CHECK(is_irreducible(g) == is_irreducible_numeric(g));
  }
}
