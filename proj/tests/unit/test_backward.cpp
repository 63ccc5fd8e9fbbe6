#include <doctest.h>

#include <cmath>
#include <sstream>

#include "rsvol/backward.hpp"
#include "rsvol/error.hpp"

using namespace rsvol;

namespace {

Eigen::MatrixXd m2(double a, double b, double c, double d) {
  Eigen::MatrixXd m(2, 2);
  m << a, b, c, d;
  return m;
}

RegimeModel scalar_bs(double sigma, double r, double q = 0.0) {
  return make_model(GeneratorMatrix::validate(Eigen::MatrixXd::Zero(1, 1)), {r}, {q},
                    {VolCurve::flat(sigma)});
}

RegimeModel local2(const Eigen::MatrixXd& b) {
  return make_model(GeneratorMatrix::validate(b), {0.03, 0.05}, {0.0, 0.01},
                    {VolCurve({-1.0, 1.0}, {0.25, 0.15}), VolCurve::flat(0.35)});
}

}  // namespace

TEST_CASE("closed-form Black-Scholes") {
  CHECK(black_scholes_call(1.0, 1.0, 1.0, 0.05, 0.0, 0.2) == doctest::Approx(0.1045058357).epsilon(1e-9));
  CHECK(black_scholes_call(100.0, 95.0, 0.5, 0.03, 0.01, 0.25) ==
        doctest::Approx(10.161027671958372).epsilon(1e-12));
  CHECK(black_scholes_call(1.0, 0.0, 2.0, 0.05, 0.02, 0.3) == doctest::Approx(std::exp(-0.04)));
}

TEST_CASE("scalar ATM call") {
  const SolutionField v = solve_backward(scalar_bs(0.2, 0.05), PayoffSpec::regime_call(1, 0, 1.0, 1.0));
  CHECK(std::abs(price_at_spot(v)[0] - 0.104506) < 1e-3);
}

TEST_CASE("zero strike with unit weights returns the spot") {
  PayoffSpec p;
  p.strike = 0.0;
  p.weights = {1.0, 1.0};
  p.maturity = 1.0;
  const RegimeModel m = make_model(GeneratorMatrix::validate(m2(-1, 2, 1, -2)), {0.03, 0.05}, {0.0, 0.0},
                                   {VolCurve({-1.0, 1.0}, {0.25, 0.15}), VolCurve::flat(0.35)});
  const auto v = price_at_spot(solve_backward(m, p));
  CHECK(std::abs(v[0] - 1.0) < 2e-3);
  CHECK(std::abs(v[1] - 1.0) < 2e-3);
}

TEST_CASE("decoupled regimes") {
  const RegimeModel m = local2(Eigen::MatrixXd::Zero(2, 2));
  const auto v = price_at_spot(solve_backward(m, PayoffSpec::regime_call(2, 0, 1.0, 1.0)));
  CHECK(std::abs(v[1]) <= 1e-10);

  const SolverGrids grids{SpaceGrid::standard(), 200, {}};
  const std::vector<double> strikes = {0.7, 1.0, 1.3};
  const PriceSurface s = price_surface(m, strikes, 1.0, {0, 1.0, 1.0}, grids, 2);
  for (int j = 0; j < 2; ++j) {
    const RegimeModel one = make_model(GeneratorMatrix::validate(Eigen::MatrixXd::Zero(1, 1)),
                                       {m.rates()[j]}, {m.dividends()[j]}, {m.vol(j)});
    const PriceSurface ss = price_surface(one, strikes, 1.0, {0, 1.0, 1.0}, grids);
    for (std::size_t k = 0; k < strikes.size(); ++k) {
      CHECK(std::abs(s.at(1 - j, j, k)) <= 1e-10);
      CHECK(std::abs(s.at(j, j, k) - ss.at(0, 0, k)) <= 1e-10);
    }
  }
}

TEST_CASE("flat scalar surface is decreasing and convex") {
  const SpaceGrid g = SpaceGrid::standard();
  const std::vector<double> strikes = node_strikes(g, 0.5, 2.0, 4);
  const PriceSurface s = price_surface(scalar_bs(0.2, 0.02), strikes, 1.0, {0, 1.0, 1.0});
  const auto c = s.column(0, 0);
  for (std::size_t k = 1; k < c.size(); ++k) CHECK(c[k] <= c[k - 1] + 1e-12);
  for (std::size_t k = 1; k + 1 < c.size(); ++k) {
    const double left = (c[k] - c[k - 1]) / (strikes[k] - strikes[k - 1]);
    const double right = (c[k + 1] - c[k]) / (strikes[k + 1] - strikes[k]);
    CHECK(right >= left - 1e-12);
  }
}

TEST_CASE("irreducible surface: positive, bounded, monotone") {
  const SpaceGrid g = SpaceGrid::standard();
  const std::vector<double> strikes = node_strikes(g, 0.5, 2.0, 5);
  const RegimeModel m = local2(m2(-1, 2, 1, -2));
  for (int j = 0; j < 2; ++j) {
    const PriceSurface s = price_surface(m, strikes, 1.0, {j, 1.0, 1.0}, {SpaceGrid::standard(), 200, {}}, 2);
    for (int i = 0; i < 2; ++i) {
      for (std::size_t k = 0; k < strikes.size(); ++k) {
        CHECK(s.at(i, j, k) > 0.0);
        CHECK(s.at(i, j, k) <= 1.0);
        if (k > 0) CHECK(s.at(i, j, k) <= s.at(i, j, k - 1) + 1e-8);
      }
    }
  }
}

TEST_CASE("grid refinement reduces the ATM error at second order") {
  const RegimeModel m = scalar_bs(0.2, 0.05);
  const double exact = black_scholes_call(1.0, 1.0, 1.0, 0.05, 0.0, 0.2);
  auto err = [&](int nodes, int steps) {
    const SolverGrids g{SpaceGrid::symmetric(4.0, nodes), steps, {}};
    return std::abs(price_at_spot(solve_backward(m, PayoffSpec::regime_call(1, 0, 1.0, 1.0), g))[0] - exact);
  };
  const double coarse = err(201, 100), fine = err(401, 200);
  CHECK(coarse / fine >= 3.0);
}

TEST_CASE("off-node strikes and dividends") {
  const RegimeModel m = scalar_bs(0.3, 0.04, 0.02);
  for (double k : {0.83, 1.07, 1.5}) {
    const auto v = price_at_spot(solve_backward(m, PayoffSpec::regime_call(1, 0, k, 0.75)));
    CHECK(std::abs(v[0] - black_scholes_call(1.0, k, 0.75, 0.04, 0.02, 0.3)) < 1e-3);
  }
}

TEST_CASE("payoff validation") {
  CHECK_THROWS_AS(PayoffSpec::regime_call(2, 0, 1.0, 1.0).validate(3), Error);
  PayoffSpec p = PayoffSpec::regime_call(1, 0, -1.0, 1.0);
  CHECK_THROWS_AS(p.validate(1), Error);
  p = PayoffSpec::regime_call(1, 0, 1.0, 0.0);
  CHECK_THROWS_AS(p.validate(1), Error);
  CHECK_THROWS_AS(price_surface(scalar_bs(0.2, 0.0), std::vector<double>{1e3}, 1.0, {0, 1.0, 1.0}), Error);
}

TEST_CASE("price surface csv") {
  PriceSurface s;
  s.strikes = {0.9, 1.1};
  s.n = 2;
  s.prices.assign(8, 0.25);
  s.at(1, 0, 1) = 0.125;
  std::ostringstream os;
  write_price_surface_csv(os, s);
  const std::string out = os.str();
  CHECK(out.rfind("K,i,j,price\n0.90000000000000002,1,1,0.25\n", 0) == 0);
  CHECK(out.find("1.1000000000000001,2,1,0.125\n") != std::string::npos);
}
