#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "rsvol/dupire.hpp"
#include "rsvol/error.hpp"
#include "rsvol/inverse.hpp"
#include "rsvol/mc.hpp"

using namespace rsvol;

namespace {

Eigen::MatrixXd m2(double a, double b, double c, double d) {
  Eigen::MatrixXd m(2, 2);
  m << a, b, c, d;
  return m;
}

DiscreteModel flat2(double s1, double s2, const Eigen::MatrixXd& b) {
  return discretize(make_model(GeneratorMatrix::validate(b), {0.0, 0.0}, {0.0, 0.0},
                               {VolCurve::flat(s1), VolCurve::flat(s2)}),
                    SpaceGrid::standard());
}

const Eigen::MatrixXd kSym = m2(-1, 1, 1, -1);

DomainWindows twin_windows() {
  DomainWindows w;
  w.omega1 = {-0.2, 0.6};
  w.omega = {-0.5, 0.9};
  w.omega_small = {{-0.45, -0.4}, {0.7, 0.75}};
  return w;
}

SolutionField aux(const DiscreteModel& m, bool clip) {
  SolutionField v = solve_aux_density({m, {0, 1.0, 0.5}, 100});
  if (clip) clip_negative(v);
  return v;
}

}  // namespace

TEST_CASE("hat basis") {
  const SpaceGrid g = SpaceGrid::standard();
  const HatBasis b(g, 2, {-0.2, 0.6}, 7);
  CHECK(b.size() == 14);
  CHECK(b.spacing() == doctest::Approx(0.1));
  CHECK(b.center(0) == doctest::Approx(-0.1));
  CHECK(b.center(13) == doctest::Approx(0.5));
  CHECK(b.regime_of(7) == 1);
  const auto e = b.element(8);
  CHECK(e[static_cast<std::size_t>(g.size() + g.zero_index())] == doctest::Approx(1.0));
  CHECK(e[static_cast<std::size_t>(g.zero_index())] == 0.0);
  for (int k = 0; k < g.size(); ++k) {
    if (g.node(k) < -0.2 || g.node(k) > 0.6) CHECK(e[static_cast<std::size_t>(g.size() + k)] == 0.0);
  }
  const Eigen::MatrixXd mass = b.mass_matrix();
  CHECK((mass - mass.transpose()).norm() == 0.0);
  CHECK(mass.llt().info() == Eigen::Success);
  CHECK(mass(0, 0) == doctest::Approx(2.0 * 0.1 / 3.0).epsilon(0.03));
  CHECK(mass(0, 7) == 0.0);
  std::vector<double> c(14, 1.0);
  const auto sum = b.combine(c);
  CHECK(sum[static_cast<std::size_t>(g.nearest(0.25))] == doctest::Approx(1.0));
  CHECK_THROWS_AS(b.combine(std::vector<double>(3, 0.0)), Error);
  CHECK_THROWS_AS(HatBasis(g, 1, {-0.2, 0.6}, 1), Error);
}

TEST_CASE("feature map") {
  const SpaceGrid g = SpaceGrid::standard();
  CHECK_THROWS_AS(FeatureMap(g, 1, {-4.0, 0.5}), Error);
  const FeatureMap f(g, 1, {-0.5, 0.5});
  CHECK(f.size() == 51 * 3);
  std::vector<double> u;
  for (double y : g.nodes()) u.push_back(y * y);
  const Eigen::VectorXd x = f.apply(u);
  const double s = std::sqrt(g.dy());
  CHECK(x(3 * 25 + 0) == doctest::Approx(0.0).scale(1e-12));
  CHECK(x(3 * 25 + 2) == doctest::Approx(2.0 * s));
  CHECK(x(3 * 30 + 1) == doctest::Approx(2.0 * 0.1 * s));
  CHECK(x(2) == doctest::Approx(2.0 * s / std::sqrt(2.0)));
  CHECK_THROWS_AS(f.apply(std::vector<double>(5, 0.0)), Error);

  std::mt19937_64 rng(4);
  std::normal_distribution<double> n01;
  double mean_sq = 0.0;
  const int draws = 400;
  for (int d = 0; d < draws; ++d) {
    std::vector<double> z(401);
    for (double& v : z) v = n01(rng);
    mean_sq += f.apply(z).squaredNorm() / draws;
  }
  CHECK(std::sqrt(mean_sq) == doctest::Approx(f.noise_gain()).epsilon(0.05));
}

TEST_CASE("sensitivity columns") {
  const DiscreteModel a2 = flat2(0.2, 0.3, kSym);
  const SolutionField v = aux(a2, true);
  const DomainWindows w = twin_windows();
  const FeatureMap f(a2.grid, 2, w.omega);

  const SolutionField zero = solve_linearized(a2, std::vector<double>(a2.diffusion.size(), 0.0), v);
  CHECK(f.apply(zero.level(zero.levels() - 1)).norm() == 0.0);

  const HatBasis b(a2.grid, 2, w.omega1, 7);
  const Eigen::MatrixXd m = assemble_sensitivity(a2, v, b, f, 3);
  CHECK(m.cols() == 14);
  for (int c = 0; c < m.cols(); ++c) CHECK(m.col(c).norm() > 0.0);

  std::vector<double> pair(a2.diffusion.size());
  const auto e0 = b.element(0), e5 = b.element(5);
  for (std::size_t k = 0; k < pair.size(); ++k) pair[k] = e0[k] + e5[k];
  const SolutionField ws = solve_linearized(a2, pair, v);
  CHECK((f.apply(ws.level(ws.levels() - 1)) - m.col(0) - m.col(5)).cwiseAbs().maxCoeff() <= 1e-12);

  CHECK((assemble_sensitivity(a2, v, b, f, 1) - m).norm() == 0.0);
}

TEST_CASE("decoupled regimes are invisible to the data map") {
  const DiscreteModel a2 = flat2(0.2, 0.3, Eigen::MatrixXd::Zero(2, 2));
  const SolutionField v = aux(a2, false);
  const DomainWindows w = twin_windows();
  const HatBasis b(a2.grid, 2, w.omega1, 5);
  const Eigen::MatrixXd m = assemble_sensitivity(a2, v, b, FeatureMap(a2.grid, 2, w.omega));
  for (int c = 0; c < 5; ++c) CHECK(m.col(c).norm() > 1e-6);
  for (int c = 5; c < 10; ++c) CHECK(m.col(c).norm() < 1e-8);
}

TEST_CASE("tikhonov solve") {
  Eigen::MatrixXd m(3, 2);
  m << 1, 0, 0, 1, 1, 1;
  const Eigen::VectorXd d = m * Eigen::Vector2d(2.0, -1.0);
  const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(2, 2);
  CHECK((tikhonov_solve(m, d, id, 0.0) - Eigen::Vector2d(2.0, -1.0)).norm() < 1e-14);
  const Eigen::VectorXd shrunk = tikhonov_solve(m, d, id, 1.0);
  CHECK(shrunk.norm() < Eigen::Vector2d(2.0, -1.0).norm());

  Eigen::MatrixXd rank1(3, 2);
  rank1 << 1, 1, 2, 2, 3, 3;
  try {
    tikhonov_solve(rank1, d, id, 0.0);
    FAIL("expected SingularNormalMatrix");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::kSingularNormalMatrix);
  }
  CHECK_NOTHROW(tikhonov_solve(rank1, d, id, 1e-3));
  CHECK_THROWS_AS(tikhonov_solve(m, d, id, -1.0), Error);
}

TEST_CASE("reconstruction") {
  const DiscreteModel a2 = flat2(0.2, 0.2, kSym);
  const SolutionField v = aux(a2, false);
  const DomainWindows w = twin_windows();

  SUBCASE("zero data") {
    ReconstructionConfig cfg;
    cfg.basis = 6;
    cfg.alpha = 1e-6;
    const Reconstruction r = reconstruct(std::vector<double>(a2.diffusion.size(), 0.0), cfg, a2, v, w);
    for (double x : r.g.values) CHECK(x == 0.0);
  }

  SUBCASE("inverse crime") {
    ReconstructionConfig cfg;
    cfg.basis = 6;
    cfg.outer_iterations = 0;
    const HatBasis b(a2.grid, 2, w.omega1, cfg.basis);
    std::vector<double> truth(static_cast<std::size_t>(b.size()));
    for (std::size_t k = 0; k < truth.size(); ++k) truth[k] = 1e-3 * std::sin(1.0 + static_cast<double>(k));
    SolutionField vc = v;
    clip_negative(vc);
    const SolutionField data = solve_linearized(a2, b.combine(truth), vc);
    const Reconstruction r = reconstruct(data.level(data.levels() - 1), cfg, a2, v, w);
    double gap = 0.0;
    for (std::size_t k = 0; k < truth.size(); ++k) gap = std::max(gap, std::abs(r.coefficients[k] - truth[k]));
    CHECK(gap <= 1e-8 * 1e-3);
  }

  SUBCASE("noiseless twin") {
    std::vector<double> g(a2.diffusion.size(), 0.0);
    for (int k = 0; k < a2.grid.size(); ++k) {
      const double y = a2.grid.node(k);
      g[static_cast<std::size_t>(k)] = 0.002 * std::exp(-0.5 * (y - 0.2) * (y - 0.2) / 0.01);
    }
    const ObservationSpec obs{0, 1.0, 0.5};
    const SolutionField w1 = solve_dupire({a2.perturbed(g), obs, 100});
    const SolutionField w2 = solve_dupire({a2, obs, 100});
    std::vector<double> d(g.size());
    for (std::size_t k = 0; k < d.size(); ++k) d[k] = w1.level(100)[k] - w2.level(100)[k];
    ReconstructionConfig cfg;
    cfg.alpha = 1e-12;
    cfg.threads = 2;
    const Reconstruction r = reconstruct(d, cfg, a2, v, w);
    std::vector<double> diff(g.size());
    for (std::size_t k = 0; k < g.size(); ++k) diff[k] = r.g.values[k] - g[k];
    const double err = Perturbation{2, diff, w.omega1}.l2_norm(a2.grid, w.omega1) /
                       Perturbation{2, g, w.omega1}.l2_norm(a2.grid, w.omega1);
    CHECK(err <= 0.10);
    CHECK(r.misfit >= 0.0);
  }

  SUBCASE("free mode support") {
    ReconstructionConfig cfg;
    cfg.basis = 6;
    cfg.alpha = 1e-6;
    cfg.mode = SupportMode::kFree;
    cfg.outer_iterations = 0;
    const Reconstruction r = reconstruct(std::vector<double>(a2.diffusion.size(), 0.0), cfg, a2, v, w);
    CHECK(r.g.support.lo == w.omega.lo);
  }

  SUBCASE("input validation") {
    ReconstructionConfig cfg;
    CHECK_THROWS_AS(reconstruct(std::vector<double>(3, 0.0), cfg, a2, v, w), Error);
    std::vector<double> bad(a2.diffusion.size(), 0.0);
    bad[3] = NAN;
    CHECK_THROWS_AS(reconstruct(bad, cfg, a2, v, w), Error);
  }
}

TEST_CASE("bumps") {
  const Bump c{0, 0.1, 0.2, BumpShape::kRaisedCosine};
  CHECK(c(0.1) == 1.0);
  CHECK(c(0.2) == doctest::Approx(0.5));
  CHECK(c(0.31) == 0.0);
  const Bump g{0, 0.0, 0.1, BumpShape::kGaussian};
  CHECK(g(0.1) == doctest::Approx(std::exp(-0.5)));
}

TEST_CASE("stability scan") {
  StabilityConfig cfg;
  cfg.obs = {0, 1.0, 0.5};
  cfg.time_steps = 100;
  cfg.threads = 2;
  const Bump bump{0, 0.0, 0.12, BumpShape::kRaisedCosine};

  SUBCASE("zero amplitude row") {
    const std::vector<double> amps = {0.0, 0.02};
    const StabilityReport r = stability_scan(flat2(0.2, 0.3, kSym), bump, amps, cfg);
    CHECK(r.rows[0].lhs == 0.0);
    CHECK(r.rows[0].rhs == 0.0);
    CHECK(std::isnan(r.rows[0].ratio));
    CHECK_FALSE(r.rows[0].unstable);
    CHECK(r.rows[1].ratio > 0.0);
    CHECK(r.ratio_spread() == 1.0);
  }

  SUBCASE("decoupled regime is flagged") {
    const std::vector<double> amps = {0.02};
    const Bump other{1, 0.0, 0.12, BumpShape::kRaisedCosine};
    const StabilityReport r = stability_scan(flat2(0.2, 0.3, Eigen::MatrixXd::Zero(2, 2)), other, amps, cfg);
    CHECK(r.unstable);
    CHECK(r.rows[0].lhs > 0.0);
    CHECK(r.rows[0].rhs < 1e-20);
  }

  SUBCASE("compact mode needs the bump inside the window") {
    const std::vector<double> amps = {0.02};
    const Bump outside{0, 0.5, 0.1, BumpShape::kRaisedCosine};
    CHECK_THROWS_AS(stability_scan(flat2(0.2, 0.3, kSym), outside, amps, cfg), Error);
    cfg.mode = SupportMode::kFree;
    const StabilityReport r = stability_scan(flat2(0.2, 0.3, kSym), outside, amps, cfg);
    CHECK(r.rows[0].extra > 0.0);
    CHECK(std::isfinite(r.rows[0].ratio));
  }

  SUBCASE("ratios of random bumps stay within an order of magnitude") {
    std::mt19937_64 rng(21);
    const Window i = cfg.windows.omega1;
    std::uniform_real_distribution<double> width(0.04, 0.5 * i.width());
    const DiscreteModel a2 = flat2(0.2, 0.3, kSym);
    const std::vector<double> amps = {0.002};
    // The observed and the hidden regime have different constants; each family is checked on its own.
    for (int regime = 0; regime < 2; ++regime) {
      CAPTURE(regime);
      std::vector<double> ratios;
      for (int t = 0; t < 10; ++t) {
        const double wd = width(rng);
        std::uniform_real_distribution<double> centre(i.lo + wd + 1e-3, i.hi - wd - 1e-3);
        const Bump b{regime, centre(rng), wd, BumpShape::kRaisedCosine};
        ratios.push_back(stability_scan(a2, b, amps, cfg).rows[0].ratio);
      }
      std::vector<double> sorted = ratios;
      std::sort(sorted.begin(), sorted.end());
      const double median = 0.5 * (sorted[4] + sorted[5]);
      for (double r : ratios) {
        CHECK(r <= 10.0 * median);
        CHECK(r >= 0.1 * median);
      }
    }
  }
}

TEST_CASE("norm growth") {
  const DiscreteModel a = flat2(0.2, 0.3, kSym);
  const SolutionField v = solve_aux_density({a, {0, 1.0, 1.0}, 200});
  const std::vector<double> taus = {0.1, 0.2, 0.4, 0.6, 0.8, 1.0};
  const NormGrowthReport z = norm_growth_check(a, std::vector<double>(a.diffusion.size(), 0.0), v, taus);
  for (const auto& row : z.rows) {
    CHECK(row.w_ratio == 0.0);
    CHECK(row.wy_ratio == 0.0);
  }
  std::vector<double> g(a.diffusion.size(), 0.0);
  const Bump b{0, 0.0, 0.12, BumpShape::kRaisedCosine};
  for (int k = 0; k < a.grid.size(); ++k) g[static_cast<std::size_t>(k)] = 0.002 * b(a.grid.node(k));
  const NormGrowthReport r = norm_growth_check(a, g, v, taus);
  CHECK(r.w_scaled_spread <= 5.0);
  CHECK(r.wy_spread <= 5.0);
  for (const auto& row : r.rows) CHECK(std::isfinite(row.wy_ratio));
  const std::vector<double> bad = {0.0};
  CHECK_THROWS_AS(norm_growth_check(a, g, v, bad), Error);
}

TEST_CASE("stability writers") {
  StabilityReport r;
  r.rows.push_back({0.0, 0.0, 0.0, 0.0, std::nan(""), false});
  r.rows.push_back({0.5, 2.0, 4.0, 0.0, 0.5, true});
  std::ostringstream j, c;
  write_stability_json(j, r);
  write_stability_csv(c, r);
  CHECK(j.str() ==
        "[\n  {\"amplitude\": 0, \"lhs\": 0, \"rhs\": 0, \"ratio\": null, \"extra\": 0, \"unstable\": false},\n"
        "  {\"amplitude\": 0.5, \"lhs\": 2, \"rhs\": 4, \"ratio\": 0.5, \"extra\": 0, \"unstable\": true}\n]\n");
  CHECK(c.str() == "amplitude,lhs,rhs,ratio,extra,unstable\n0,0,0,nan,0,0\n0.5,2,4,0.5,0,1\n");
}
