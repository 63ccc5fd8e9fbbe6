#include "rsvol/mc.hpp"

#include <cmath>
#include <random>

#include "rsvol/error.hpp"
#include "rsvol/parallel.hpp"

namespace rsvol {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

}  // namespace

std::array<std::uint32_t, 4> Philox4x32::block(std::array<std::uint32_t, 4> c,
                                               std::array<std::uint32_t, 2> k) {
  for (int round = 0; round < 10; ++round) {
    const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * c[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * c[2];
    const std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32), lo0 = static_cast<std::uint32_t>(p0);
    const std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32), lo1 = static_cast<std::uint32_t>(p1);
    c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
    k[0] += kWeyl0;
    k[1] += kWeyl1;
  }
  return c;
}

Philox4x32::Philox4x32(std::uint64_t seed, std::uint64_t stream)
    : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
      counter_{0, 0, static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)} {}

Philox4x32::result_type Philox4x32::operator()() {
  if (used_ == 4) {
    buffer_ = block(counter_, key_);
    if (++counter_[0] == 0) ++counter_[1];
    used_ = 0;
  }
  return buffer_[static_cast<std::size_t>(used_++)];
}

namespace {

struct PairResult {
  double s[2];
  int x;
  double rate_integral;
};

// One regime path shared by `copies` asset paths with normals z and -z.
PairResult simulate(const RegimeModel& model, const ObservationSpec& obs, double maturity,
                    int steps, Philox4x32& rng, int copies) {
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> uniform;
  const GeneratorMatrix& g = model.generator();
  const int n = model.regimes();
  const double dt_grid = maturity / steps;
  double ln_s[2] = {std::log(obs.s_star), std::log(obs.s_star)};
  int x = obs.j_star;
  double t = 0.0;
  double rate_integral = 0.0;
  auto next_jump = [&](int state) {
    const double rate = g.exit_rate(state);
    if (!(rate > 0.0)) return std::numeric_limits<double>::infinity();
    return std::exponential_distribution<double>(rate)(rng);
  };
  double jump_at = next_jump(x);
  int grid_index = 1;
  while (t < maturity) {
    const double grid_next = grid_index >= steps ? maturity : grid_index * dt_grid;
    const bool jump = jump_at < grid_next;
    const double t_next = jump ? jump_at : grid_next;
    const double dt = t_next - t;
    if (dt > 0.0) {
      const double r = model.rates()[static_cast<std::size_t>(x)];
      const double q = model.dividends()[static_cast<std::size_t>(x)];
      const double z = normal(rng);
      for (int c = 0; c < copies; ++c) {
        const double sigma = model.vol(x)(ln_s[c] - std::log(obs.s_star));
        const double zc = c == 0 ? z : -z;
        ln_s[c] += (r - q - 0.5 * sigma * sigma) * dt + sigma * std::sqrt(dt) * zc;
      }
      rate_integral += r * dt;
    }
    t = t_next;
    if (jump) {
      const double u = uniform(rng) * g.exit_rate(x);
      double acc = 0.0;
      int target = x;
      for (int i = 0; i < n; ++i) {
        if (i == x) continue;
        acc += g.rate(i, x);
        target = i;
        if (u < acc) break;
      }
      x = target;
      jump_at = t + next_jump(x);
    } else {
      ++grid_index;
    }
  }
  return {{std::exp(ln_s[0]), std::exp(ln_s[1])}, x, rate_integral};
}

}  // namespace

PathSample simulate_paths(const RegimeModel& model, const ObservationSpec& obs, double maturity,
                          const McConfig& config) {
  obs.validate(model.regimes());
  if (config.paths < 1) throw Error(Errc::kConfigParse, "need at least one path");
  if (config.steps < 1) throw Error(Errc::kConfigParse, "need at least one time step");
  if (!(maturity > 0.0)) throw Error(Errc::kConfigParse, "maturity must be positive");
  if (config.antithetic && config.paths % 2 != 0) {
    throw Error(Errc::kConfigParse, "antithetic sampling needs an even path count");
  }
  const int copies = config.antithetic ? 2 : 1;
  const int streams = config.paths / copies;
  PathSample out;
  out.antithetic = config.antithetic;
  out.spot.resize(static_cast<std::size_t>(config.paths));
  out.regime.resize(static_cast<std::size_t>(config.paths));
  out.integrated_rate.resize(static_cast<std::size_t>(config.paths));
  constexpr int kChunk = 1024;
  const int chunks = (streams + kChunk - 1) / kChunk;
  parallel_for(chunks, config.threads, [&](int chunk) {
    const int end = std::min(streams, (chunk + 1) * kChunk);
    for (int p = chunk * kChunk; p < end; ++p) {
      Philox4x32 rng(config.seed, static_cast<std::uint64_t>(p));
      const PairResult r = simulate(model, obs, maturity, config.steps, rng, copies);
      for (int c = 0; c < copies; ++c) {
        const std::size_t idx = static_cast<std::size_t>(p) * copies + c;
        out.spot[idx] = r.s[c];
        out.regime[idx] = r.x;
        out.integrated_rate[idx] = r.rate_integral;
      }
    }
  });
  return out;
}

McEstimate mc_price(const PathSample& sample, const PayoffSpec& payoff) {
  const std::size_t count = sample.spot.size();
  if (count == 0) throw Error(Errc::kConfigParse, "empty path sample");
  auto value = [&](std::size_t p) {
    const double w = payoff.weights.at(static_cast<std::size_t>(sample.regime[p]));
    if (w == 0.0) return 0.0;
    const double pay =
        payoff.kind == PayoffKind::kRegimeBond ? 1.0 : std::max(sample.spot[p] - payoff.strike, 0.0);
    return std::exp(-sample.integrated_rate[p]) * w * pay;
  };
  const std::size_t group = sample.antithetic ? 2 : 1;
  const std::size_t units = count / group;
  double mean = 0.0, m2 = 0.0;
  for (std::size_t u = 0; u < units; ++u) {
    double x = 0.0;
    for (std::size_t c = 0; c < group; ++c) x += value(u * group + c);
    x /= static_cast<double>(group);
    const double delta = x - mean;
    mean += delta / static_cast<double>(u + 1);
    m2 += delta * (x - mean);
  }
  McEstimate e;
  e.price = mean;
  e.std_error = units > 1 ? std::sqrt(m2 / static_cast<double>(units - 1) / static_cast<double>(units)) : 0.0;
  return e;
}

}  // namespace rsvol
