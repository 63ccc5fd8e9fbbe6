#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <vector>

#include "rsvol/backward.hpp"
#include "rsvol/model.hpp"

namespace rsvol {

/// Philox4x32-10 counter-based generator. Stream (seed, stream) is
/// independent of every other stream, so path p can be simulated in isolation.
class Philox4x32 {
 public:
  using result_type = std::uint32_t;

  Philox4x32(std::uint64_t seed, std::uint64_t stream);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
  result_type operator()();

  /// Raw block function, exposed for known-answer tests.
  static std::array<std::uint32_t, 4> block(std::array<std::uint32_t, 4> counter,
                                            std::array<std::uint32_t, 2> key);

 private:
  std::array<std::uint32_t, 2> key_;
  std::array<std::uint32_t, 4> counter_;
  std::array<std::uint32_t, 4> buffer_{};
  int used_ = 4;
};

struct McConfig {
  int paths = 100000;
  int steps = 250;
  std::uint64_t seed = 1;
  bool antithetic = false;  // paths 2p and 2p+1 share regime paths, normals negated
  int threads = 1;
};

/// Terminal sample of (S_T, X_T, int_0^T r(X_u) du).
struct PathSample {
  std::vector<double> spot;
  std::vector<int> regime;
  std::vector<double> integrated_rate;
  bool antithetic = false;
};

PathSample simulate_paths(const RegimeModel& model, const ObservationSpec& obs, double maturity,
                          const McConfig& config);

struct McEstimate {
  double price = 0.0;
  double std_error = 0.0;
};

/// Discounted mean of pi(X_T) (S_T - K)^+ (or pi(X_T) for regime bonds);
/// antithetic samples are averaged in pairs before the error estimate.
McEstimate mc_price(const PathSample& sample, const PayoffSpec& payoff);

}  // namespace rsvol
