#pragma once

#include <cstdint>
#include <vector>

namespace dmpp {

struct BenchRow {
  int K = 0;
  double mean_ms = 0.0;
  double p99_ms = 0.0;
  double max_ms = 0.0;
};

struct BenchReport {
  std::vector<BenchRow> rows;
  // Least-squares slope of log(mean) vs log(K); near 2 for the covariance
  // recursion.
  double fit_exponent = 0.0;
};

// Drives a fully engaged adaptation loop (state block, goal replacement,
// one active via-point per tick) and times each step.
BenchReport bench_adaptation(const std::vector<int>& basis_sizes, int steps, int dims,
                             std::uint64_t seed);

}  // namespace dmpp
