#pragma once

// Trial kernels. Each trial i draws from its own derived stream, so the
// parallel and serial drivers produce identical counts for the same seed.

#include <cmath>
#include <cstdint>
#include <string_view>

#include "qmoney/rng.hpp"

namespace qmoney::mc {

struct Estimate {
  std::uint64_t successes = 0;
  std::uint64_t trials = 0;

  double rate() const { return trials == 0 ? 0.0 : static_cast<double>(successes) / trials; }
  /// Binomial standard error of rate().
  double std_error() const {
    if (trials == 0) return 0.0;
    const double p = rate();
    return std::sqrt(p * (1.0 - p) / static_cast<double>(trials));
  }
};

/// Serial reference driver.
template <class Trial>
Estimate count_successes_serial(std::uint64_t trials, std::uint64_t seed, std::string_view tag,
                                Trial&& trial) {
  Estimate e{0, trials};
  for (std::uint64_t i = 0; i < trials; ++i) {
    Rng rng = derive_stream(seed, tag, i);
    if (trial(i, rng)) ++e.successes;
  }
  return e;
}

/// OpenMP driver. `trial(index, rng)` must only touch state it owns.
template <class Trial>
Estimate count_successes(std::uint64_t trials, std::uint64_t seed, std::string_view tag,
                         Trial&& trial) {
  std::uint64_t hits = 0;
  const auto n = static_cast<std::int64_t>(trials);
#pragma omp parallel for schedule(static) reduction(+ : hits)
  for (std::int64_t i = 0; i < n; ++i) {
    Rng rng = derive_stream(seed, tag, static_cast<std::uint64_t>(i));
    if (trial(static_cast<std::uint64_t>(i), rng)) ++hits;
  }
  return Estimate{hits, trials};
}

/// Upper confidence allowance used by the statistical checks: p + z * sigma,
/// with sigma the binomial standard deviation of a rate at true probability p.
inline double upper_allowance(double p, std::uint64_t trials, double z = 3.0) {
  return p + z * std::sqrt(p * (1.0 - p) / static_cast<double>(trials));
}

}  // namespace qmoney::mc
