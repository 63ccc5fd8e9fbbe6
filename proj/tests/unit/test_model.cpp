#include <doctest.h>

#include <cmath>
#include <random>

#include "rsvol/error.hpp"
#include "rsvol/model.hpp"

using namespace rsvol;

namespace {

GeneratorMatrix sym2() {
  Eigen::MatrixXd b(2, 2);
  b << -1, 1, 1, -1;
  return GeneratorMatrix::validate(b);
}

Errc build_error(const ModelConfig& c) {
  try {
    build_model(c);
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return Errc::kUsage;
}

ModelConfig two_regime_config() {
  ModelConfig c;
  c.regimes = 2;
  c.generator = sym2().matrix();
  c.rates = {0.01, 0.02};
  c.dividends = {0.0, 0.0};
  c.vol_curves = {{{0.0, 0.15}}, {{0.0, 0.35}}};
  return c;
}

}  // namespace

TEST_CASE("valid models") {
  const RegimeModel bs = make_model(GeneratorMatrix::validate(Eigen::MatrixXd::Zero(1, 1)), {0.05},
                                    {0.0}, {VolCurve::flat(0.2)});
  CHECK(bs.regimes() == 1);
  const RegimeModel two = build_model(two_regime_config());
  CHECK(two.regimes() == 2);
  CHECK(two.vol(1)(3.0) == 0.35);
}

TEST_CASE("invalid models") {
  ModelConfig c = two_regime_config();
  c.vol_curves[1] = {{-1.0, 0.3}, {1.0, 0.0}};
  CHECK(build_error(c) == Errc::kVolOutOfBounds);

  c = two_regime_config();
  c.rates = {0.01};
  CHECK(build_error(c) == Errc::kDimensionMismatch);

  c = two_regime_config();
  c.generator = Eigen::MatrixXd::Zero(3, 3);
  CHECK(build_error(c) == Errc::kDimensionMismatch);

  c = two_regime_config();
  c.vol_curves[0] = {{0.5, 0.2}, {0.1, 0.3}};
  CHECK_THROWS_AS(build_model(c), Error);

  c = two_regime_config();
  c.sigma_max = 0.3;
  CHECK(build_error(c) == Errc::kVolOutOfBounds);
}

TEST_CASE("diffusion coefficient examples") {
  const RegimeModel flat = make_model(GeneratorMatrix::validate(Eigen::MatrixXd::Zero(1, 1)), {0.0},
                                      {0.0}, {VolCurve::flat(0.2)});
  for (double y : {-3.0, 0.0, 1.7}) CHECK(diffusion_coefficient(flat, 0, y) == doctest::Approx(0.02));

  const RegimeModel knot = make_model(GeneratorMatrix::validate(Eigen::MatrixXd::Zero(1, 1)), {0.0},
                                      {0.0}, {VolCurve({-0.5, 0.5, 2.0}, {0.2, 0.3, 0.25})});
  CHECK(diffusion_coefficient(knot, 0, 0.5) == doctest::Approx(0.045));
  CHECK(diffusion_coefficient(knot, 0, 5.0) == doctest::Approx(0.03125));
  CHECK(diffusion_coefficient(knot, 0, -9.0) == doctest::Approx(0.02));
  CHECK(knot.vol(0)(0.0) == doctest::Approx(0.25));
}

TEST_CASE("vol curve bounds and continuity on a dense grid") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> sig(0.05, 0.9);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> knots, vals;
    for (int k = 0; k < 6; ++k) {
      knots.push_back(-2.0 + 0.8 * k);
      vals.push_back(sig(rng));
    }
    const VolCurve c(knots, vals);
    const RegimeModel m = make_model(GeneratorMatrix::validate(Eigen::MatrixXd::Zero(1, 1)), {0.0},
                                     {0.0}, {c}, 0.05, 0.9);
    const double lip = c.lipschitz_constant();
    const double h = 1e-3;
    for (double y = -4.0; y <= 4.0; y += h) {
      const double a = diffusion_coefficient(m, 0, y);
      CHECK(a >= 0.5 * 0.05 * 0.05 - 1e-15);
      CHECK(a <= 0.5 * 0.9 * 0.9 + 1e-15);
      CHECK(std::abs(c(y + h) - c(y)) <= lip * h * (1 + 1e-9) + 1e-15);
    }
  }
}

TEST_CASE("with_vols keeps the other data") {
  const RegimeModel m = build_model(two_regime_config());
  const RegimeModel w = m.with_vols({VolCurve::flat(0.1), VolCurve::flat(0.4)});
  CHECK(w.rates() == m.rates());
  CHECK(w.vol(0)(0.0) == 0.1);
  CHECK_THROWS_AS(m.with_vols({VolCurve::flat(0.1)}), Error);
}

TEST_CASE("observation validation") {
  const ObservationSpec ok{1, 1.0, 0.5}, bad_state{2, 1.0, 0.5}, bad_tau{0, 1.0, 0.0};
  CHECK_NOTHROW(ok.validate(2));
  CHECK_THROWS_AS(bad_state.validate(2), Error);
  CHECK_THROWS_AS(bad_tau.validate(2), Error);
}
