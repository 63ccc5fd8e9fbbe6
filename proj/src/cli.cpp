#include "rsvol/cli.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <sstream>

#include <CLI11.hpp>

#include "rsvol/backward.hpp"
#include "rsvol/density.hpp"
#include "rsvol/dupire.hpp"
#include "rsvol/error.hpp"
#include "rsvol/format.hpp"
#include "rsvol/funsol.hpp"
#include "rsvol/inverse.hpp"
#include "rsvol/io.hpp"
#include "rsvol/mc.hpp"
#include "rsvol/parallel.hpp"

namespace rsvol::cli {

namespace {

struct Common {
  std::string model;
  std::string out;
  int threads = 0;
  int nodes = 401;
  double y_max = 4.0;
  int steps = 400;
  int state = 1;

  SpaceGrid grid() const { return SpaceGrid::symmetric(y_max, nodes); }
  ObservationSpec obs(double tau) const { return {state - 1, 1.0, tau}; }
};

void add_common(CLI::App* app, Common& c, bool with_state = true) {
  app->add_option("--model", c.model, "model JSON")->required();
  app->add_option("--out", c.out, "output file (stdout when omitted)");
  app->add_option("--threads", c.threads, "worker threads (overrides RSVOL_THREADS)");
  app->add_option("--nodes", c.nodes, "space nodes (odd)");
  app->add_option("--y-max", c.y_max, "half-width of the log grid");
  app->add_option("--steps", c.steps, "time steps");
  if (with_state) app->add_option("--state", c.state, "observed regime (1-based)");
}

// Writes to --out, or to `out` when no path was given.
void emit(const std::string& path, std::ostream& out, const std::function<void(std::ostream&)>& fn) {
  if (path.empty()) {
    fn(out);
    return;
  }
  std::ostringstream buf;
  fn(buf);
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(Errc::kIoError, "cannot write " + path);
  f << buf.str();
  if (!f) throw Error(Errc::kIoError, "write failed for " + path);
}

Bump parse_bump(const std::string& text) {
  std::vector<std::string> parts;
  std::stringstream ss(text);
  std::string p;
  while (std::getline(ss, p, ':')) parts.push_back(p);
  if (parts.size() < 3 || parts.size() > 4) {
    throw Error(Errc::kConfigParse, "bump is regime:center:width[:cosine|gaussian]");
  }
  Bump b;
  b.regime = static_cast<int>(parse_list(parts[0]).at(0)) - 1;
  b.center = parse_list(parts[1]).at(0);
  b.width = parse_list(parts[2]).at(0);
  if (parts.size() == 4) {
    if (parts[3] == "gaussian") b.shape = BumpShape::kGaussian;
    else if (parts[3] == "cosine") b.shape = BumpShape::kRaisedCosine;
    else throw Error(Errc::kConfigParse, "bump shape is cosine or gaussian");
  }
  if (!(b.width > 0.0)) throw Error(Errc::kConfigParse, "bump width must be positive");
  return b;
}

std::vector<std::string> split_semicolon(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string p;
  while (std::getline(ss, p, ';')) {
    if (!p.empty()) out.push_back(p);
  }
  return out;
}

SupportMode parse_mode(const std::string& s) {
  if (s == "compact") return SupportMode::kCompact;
  if (s == "free") return SupportMode::kFree;
  throw Error(Errc::kConfigParse, "mode is compact or free");
}

Window parse_window(const std::string& s) {
  const auto v = parse_list(s);
  if (v.size() != 2 || !(v[0] < v[1])) throw Error(Errc::kConfigParse, "window is lo,hi");
  return {v[0], v[1]};
}

struct WindowOptions {
  std::string omega1, omega, omega_small;

  void add(CLI::App* app) {
    app->add_option("--omega1", omega1, "inner window lo,hi in y");
    app->add_option("--omega", omega, "outer window lo,hi in y");
    app->add_option("--omega-small", omega_small, "data windows lo,hi;lo,hi in y");
  }

  DomainWindows resolve() const {
    DomainWindows w = DomainWindows::standard();
    if (!omega1.empty()) w.omega1 = parse_window(omega1);
    if (!omega.empty()) w.omega = parse_window(omega);
    if (!omega_small.empty()) {
      w.omega_small.clear();
      for (const auto& s : split_semicolon(omega_small)) w.omega_small.push_back(parse_window(s));
    }
    return w;
  }
};

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Regime-switching local volatility toolkit", "rsvol"};
  app.require_subcommand(1);
  app.failure_message(CLI::FailureMessage::help);

  WindowOptions cal_w, scan_w;
  Common price_c, dupire_c, aux_c, density_c, funsol_c, mc_c, cal_c, scan_c, norm_c;
  std::function<void()> action;

  // price
  std::string strikes_text;
  double maturity = 1.0;
  auto* price = app.add_subcommand("price", "generalized call prices C_ij(K)");
  add_common(price, price_c);
  price->add_option("--strikes", strikes_text, "K list or lo:hi:count")->required();
  price->add_option("--maturity", maturity, "T - t*");
  price->callback([&] {
    action = [&] {
      const RegimeModel m = load_model(price_c.model);
      const auto strikes = parse_strikes(strikes_text);
      const PriceSurface s = price_surface(m, strikes, maturity, price_c.obs(maturity),
                                           {price_c.grid(), price_c.steps, {}},
                                           resolve_thread_count(price_c.threads));
      emit(price_c.out, out, [&](std::ostream& os) { write_price_surface_csv(os, s); });
    };
  });

  // dupire / density-aux
  double tau_max = 1.0;
  int level_stride = 1;
  auto* dupire = app.add_subcommand("dupire", "forward system w(y, tau)");
  add_common(dupire, dupire_c);
  dupire->add_option("--tau-max", tau_max, "horizon");
  dupire->add_option("--level-stride", level_stride, "emit every k-th time level");
  dupire->callback([&] {
    action = [&] {
      const RegimeModel m = load_model(dupire_c.model);
      const ForwardProblem p{discretize(m, dupire_c.grid()), dupire_c.obs(tau_max), dupire_c.steps};
      const SolutionField w = solve_dupire(p);
      emit(dupire_c.out, out, [&](std::ostream& os) { write_field_csv(os, w, level_stride); });
    };
  });
  auto* aux = app.add_subcommand("density-aux", "auxiliary density v(y, tau)");
  add_common(aux, aux_c);
  aux->add_option("--tau-max", tau_max, "horizon");
  aux->add_option("--level-stride", level_stride, "emit every k-th time level");
  aux->callback([&] {
    action = [&] {
      const RegimeModel m = load_model(aux_c.model);
      const ForwardProblem p{discretize(m, aux_c.grid()), aux_c.obs(tau_max), aux_c.steps};
      const SolutionField v = solve_aux_density(p);
      emit(aux_c.out, out, [&](std::ostream& os) { write_field_csv(os, v, level_stride); });
    };
  });

  // density
  double k_min = 0.4, k_max = 2.5;
  auto* density = app.add_subcommand("density", "state-price densities d2C/dK2");
  add_common(density, density_c);
  density->add_option("--maturity", maturity, "T - t*");
  density->add_option("--k-min", k_min, "smallest strike");
  density->add_option("--k-max", k_max, "largest strike");
  density->callback([&] {
    action = [&] {
      const RegimeModel m = load_model(density_c.model);
      const DiscreteModel dm = discretize(m, density_c.grid());
      const auto strikes = node_strikes(dm.grid, k_min, k_max);
      const PriceSurface s = price_surface(dm, strikes, maturity, density_c.obs(maturity),
                                           density_c.steps, {},
                                           resolve_thread_count(density_c.threads));
      const DensitySurface d = extract_density(s);
      emit(density_c.out, out, [&](std::ostream& os) { write_density_csv(os, d); });
    };
  });

  // funsol-check
  double tau_hi = 1.0, tau_lo = 0.1;
  std::string window_text = "-2,2";
  double delta0 = 0.0, eps0 = 0.5;
  auto* funsol = app.add_subcommand("funsol-check", "Gaussian lower bound of the fundamental solution");
  add_common(funsol, funsol_c, false);
  funsol->add_option("--tau", tau_hi, "largest tau checked");
  funsol->add_option("--tau-min", tau_lo, "smallest tau checked");
  funsol->add_option("--window", window_text, "y window lo,hi");
  funsol->add_option("--delta0", delta0, "delta0 to test (default: calibrated)");
  funsol->add_option("--eps0", eps0, "eps0 used with --delta0");
  funsol->callback([&] {
    action = [&] {
      const RegimeModel m = load_model(funsol_c.model);
      if (!(tau_lo > 0.0 && tau_hi > tau_lo)) {
        throw Error(Errc::kConfigParse, "need 0 < tau-min < tau");
      }
      const DiscreteModel dm = discretize(m, funsol_c.grid());
      const TimeGrid tg(tau_hi, funsol_c.steps);
      std::vector<SolutionField> cols(static_cast<std::size_t>(dm.n), SolutionField(dm.grid, tg, dm.n));
      parallel_for(dm.n, resolve_thread_count(funsol_c.threads), [&](int j) {
        cols[static_cast<std::size_t>(j)] = numeric_fundamental_column(dm, j, tg);
      });
      const KernelFn kernel = field_kernel(std::move(cols));
      const Window w = parse_window(window_text);
      dm.grid.node_range(w, 2);
      const auto samples = PositivitySamples::uniform(w, 81, tau_lo, tau_hi, 19);
      LowerBoundParams p{delta0 > 0.0 ? delta0 : 1.0, eps0, off_diagonal_part(dm.generator)};
      PositivityReport r = verify_positivity_bound(kernel, p, samples);
      if (!(delta0 > 0.0)) {
        r.min_gap = r.delta0_star > 0.0
                        ? positivity_gap(kernel, {r.delta0_star, r.eps0_star, p.b_star}, samples)
                        : -1.0;
        r.violated = !(r.delta0_star > 0.0) || r.min_gap < 0.0;
      }
      emit(funsol_c.out, out, [&](std::ostream& os) {
        os << "{\"min_gap\": " << format_double(r.min_gap)
           << ", \"delta0_star\": " << format_double(r.delta0_star)
           << ", \"eps0_star\": " << format_double(r.eps0_star)
           << ", \"violated\": " << (r.violated ? "true" : "false") << "}\n";
      });
    };
  });

  // mc
  double strike = 1.0;
  McConfig mcc;
  auto* mc = app.add_subcommand("mc", "Monte Carlo generalized call prices");
  add_common(mc, mc_c);
  mc->add_option("--strike", strike, "K");
  mc->add_option("--maturity", maturity, "T - t*");
  mc->add_option("--paths", mcc.paths, "path count");
  mc->add_option("--seed", mcc.seed, "generator seed")->required();
  mc->add_flag("--antithetic", mcc.antithetic, "antithetic pairs");
  mc->callback([&] {
    action = [&] {
      const RegimeModel m = load_model(mc_c.model);
      McConfig c = mcc;
      c.steps = mc_c.steps;
      c.threads = resolve_thread_count(mc_c.threads);
      const PathSample sample = simulate_paths(m, mc_c.obs(maturity), maturity, c);
      emit(mc_c.out, out, [&](std::ostream& os) {
        os << "{\"strike\": " << format_double(strike) << ", \"maturity\": " << format_double(maturity)
           << ", \"paths\": " << c.paths << ", \"rows\": [";
        for (int i = 0; i <= m.regimes(); ++i) {
          PayoffSpec p = PayoffSpec::regime_call(m.regimes(), 0, strike, maturity);
          if (i < m.regimes()) p = PayoffSpec::regime_call(m.regimes(), i, strike, maturity);
          else std::fill(p.weights.begin(), p.weights.end(), 1.0);
          const McEstimate e = mc_price(sample, p);
          os << (i ? ", " : "") << "{\"i\": " << (i < m.regimes() ? std::to_string(i + 1) : "\"all\"")
             << ", \"price\": " << format_double(e.price)
             << ", \"std_error\": " << format_double(e.std_error) << '}';
        }
        os << "]}\n";
      });
    };
  });

  // calibrate
  std::string data_path, mode_text = "compact", rule_text = "fixed";
  ReconstructionConfig rc;
  double tau_star = 0.5;
  auto* cal = app.add_subcommand("calibrate", "linearized reconstruction of G = A1 - A2");
  cal->add_option("--model-base", cal_c.model, "base (A2) model JSON")->required();
  cal->add_option("--out", cal_c.out, "output CSV of G");
  cal->add_option("--threads", cal_c.threads, "worker threads");
  cal->add_option("--nodes", cal_c.nodes, "space nodes (odd)");
  cal->add_option("--y-max", cal_c.y_max, "half-width of the log grid");
  cal->add_option("--steps", cal_c.steps, "time steps");
  cal->add_option("--state", cal_c.state, "observed regime (1-based)");
  cal->add_option("--data", data_path, "CSV of w(y, tau*) or of C*(K)")->required();
  cal->add_option("--alpha", rc.alpha, "Tikhonov weight");
  cal->add_option("--alpha-rule", rule_text, "fixed or discrepancy");
  cal->add_option("--noise", rc.noise_sigma, "noise level per datum");
  cal->add_option("--mode", mode_text, "compact or free");
  cal->add_option("--basis", rc.basis, "hats per regime");
  cal->add_option("--tau", tau_star, "tau*");
  cal->add_option("--outer", rc.outer_iterations, "relinearizations");
  cal_w.add(cal);
  std::string weights_text = "1,1,1";
  cal->add_option("--weights", weights_text, "weights of the value, D1, D2 rows");
  cal->add_option("--feature-stride", rc.feature_stride, "node stride of the data rows");
  cal->add_option("--discrepancy-factor", rc.discrepancy_factor, "target misfit / noise norm");
  cal->callback([&] {
    action = [&] {
      const RegimeModel m = load_model(cal_c.model);
      rc.mode = parse_mode(mode_text);
      if (rule_text == "fixed") rc.rule = AlphaRule::kFixed;
      else if (rule_text == "discrepancy") rc.rule = AlphaRule::kDiscrepancy;
      else throw Error(Errc::kConfigParse, "alpha rule is fixed or discrepancy");
      rc.threads = resolve_thread_count(cal_c.threads);
      const auto wts = parse_list(weights_text);
      if (wts.size() != 3) throw Error(Errc::kConfigParse, "weights are three numbers");
      rc.weights = {wts[0], wts[1], wts[2]};
      const DiscreteModel dm = discretize(m, cal_c.grid());
      std::ifstream in(data_path);
      if (!in) throw Error(Errc::kFileNotFound, "cannot open " + data_path);
      const GridData gd = read_grid_csv(in);
      std::vector<double> data = to_grid(gd, dm.grid, dm.n);
      const ForwardProblem fp{dm, cal_c.obs(tau_star), cal_c.steps};
      if (gd.is_price) {
        const SolutionField w2 = solve_dupire(fp);
        const auto last = w2.level(w2.levels() - 1);
        GridData ones = gd;
        for (auto& c : ones.components) std::fill(c.begin(), c.end(), 1.0);
        const std::vector<double> given = to_grid(ones, dm.grid, dm.n);
        for (std::size_t k = 0; k < data.size(); ++k) {
          if (given[k] != 0.0) data[k] -= last[k];
        }
      }
      const SolutionField v = solve_aux_density(fp);
      const Reconstruction r = reconstruct(data, rc, dm, v, cal_w.resolve());
      emit(cal_c.out, out, [&](std::ostream& os) { write_profile_csv(os, dm.grid, r.g.values, dm.n); });
    };
  });

  // stability-scan
  std::string bumps_text, amps_text = "0.02,0.04,0.08";
  double ratio_cap = 1e8;
  int strike_stride = 2;
  auto* scan = app.add_subcommand("stability-scan", "empirical Lipschitz-stability ratios");
  add_common(scan, scan_c);
  scan->add_option("--bumps", bumps_text, "regime:center:width[:shape], ';'-separated")->required();
  scan->add_option("--amplitudes", amps_text, "sigma amplitudes");
  scan->add_option("--tau", tau_star, "tau*");
  scan->add_option("--mode", mode_text, "compact or free");
  scan->add_option("--ratio-cap", ratio_cap, "ratio flagged as unstable");
  scan->add_option("--strike-stride", strike_stride, "node stride of the strike grid");
  scan_w.add(scan);
  scan->callback([&] {
    action = [&] {
      const RegimeModel m = load_model(scan_c.model);
      const DiscreteModel dm = discretize(m, scan_c.grid());
      StabilityConfig sc;
      sc.windows = scan_w.resolve();
      sc.obs = scan_c.obs(tau_star);
      sc.time_steps = scan_c.steps;
      sc.mode = parse_mode(mode_text);
      sc.ratio_cap = ratio_cap;
      sc.strike_stride = strike_stride;
      sc.threads = resolve_thread_count(scan_c.threads);
      const auto amps = parse_list(amps_text);
      StabilityReport all;
      for (const auto& b : split_semicolon(bumps_text)) {
        const StabilityReport r = stability_scan(dm, parse_bump(b), amps, sc);
        all.rows.insert(all.rows.end(), r.rows.begin(), r.rows.end());
        all.unstable = all.unstable || r.unstable;
      }
      const bool csv = scan_c.out.size() > 4 && scan_c.out.substr(scan_c.out.size() - 4) == ".csv";
      emit(scan_c.out, out, [&](std::ostream& os) {
        if (csv) write_stability_csv(os, all);
        else write_stability_json(os, all);
      });
    };
  });

  // norm-check
  std::string bump_text, taus_text = "0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,1";
  double amplitude = 0.002;
  auto* norm = app.add_subcommand("norm-check", "growth of |w| and |w_y| in tau");
  add_common(norm, norm_c);
  norm->add_option("--bump", bump_text, "regime:center:width[:shape]")->required();
  norm->add_option("--amplitude", amplitude, "amplitude of G (units of A)");
  norm->add_option("--taus", taus_text, "tau values");
  norm->callback([&] {
    action = [&] {
      const RegimeModel m = load_model(norm_c.model);
      const DiscreteModel dm = discretize(m, norm_c.grid());
      const auto taus = parse_list(taus_text);
      const double tmax = *std::max_element(taus.begin(), taus.end());
      const Bump b = parse_bump(bump_text);
      if (b.regime < 0 || b.regime >= dm.n) throw Error(Errc::kDimensionMismatch, "bump regime out of range");
      std::vector<double> g(dm.diffusion.size(), 0.0);
      const int mm = dm.grid.size();
      for (int k = 0; k < mm; ++k) g[static_cast<std::size_t>(b.regime) * mm + k] = amplitude * b(dm.grid.node(k));
      const SolutionField v = solve_aux_density({dm, norm_c.obs(tmax), norm_c.steps});
      const NormGrowthReport r = norm_growth_check(dm, g, v, taus);
      emit(norm_c.out, out, [&](std::ostream& os) {
        os << "{\"w_scaled_spread\": " << format_double(r.w_scaled_spread)
           << ", \"wy_spread\": " << format_double(r.wy_spread) << ", \"rows\": [";
        for (std::size_t k = 0; k < r.rows.size(); ++k) {
          const auto& row = r.rows[k];
          os << (k ? ", " : "") << "{\"tau\": " << format_double(row.tau)
             << ", \"w_ratio\": " << format_double(row.w_ratio)
             << ", \"w_scaled\": " << format_double(row.w_scaled)
             << ", \"wy_ratio\": " << format_double(row.wy_ratio) << '}';
        }
        os << "]}\n";
      });
    };
  });

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "rsvol: " << e.what() << '\n' << app.help();
    return 2;
  }
  try {
    if (action) action();
    return 0;
  } catch (const Error& e) {
    err << "rsvol: " << e.what() << '\n';
    return is_numeric_failure(e.code()) ? 3 : 2;
  } catch (const std::exception& e) {
    err << "rsvol: " << e.what() << '\n';
    return 2;
  }
}

int run(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args, std::cout, std::cerr);
}

}  // namespace rsvol::cli
