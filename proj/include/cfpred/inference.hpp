#pragma once

// Nonparametric bootstrap and Monte Carlo summaries.

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cfpred/core.hpp"

namespace cfpred {

// Runs body(i) for i in [0, count) on up to `threads` workers. Each index is
// handled exactly once; callers write results into per-index slots. The
// first exception thrown by any body is rethrown after all workers join.
void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& body);

// Hardware concurrency, at least 1.
unsigned default_threads();

// Type-7 quantile of unsorted values.
double quantile7(std::vector<double> values, double p);

double sample_sd(std::span<const double> v);

struct BootstrapOptions {
  int replicates = 1000;
  std::uint64_t seed = 1;
  bool wald = false;  // point +/- 1.96 se instead of percentiles
  double max_drop_fraction = 0.10;
  unsigned threads = 1;
};

struct BootstrapResult {
  double point = 0.0;
  double se = 0.0;
  int replicates = 0;  // successful replicates
  int dropped = 0;
  std::pair<double, double> ci_95{0.0, 0.0};
  std::uint64_t seed = 0;
  std::vector<double> values;  // successful replicate values, in replicate order
};

// Resample indices 0..n-1 with replacement for replicate b.
std::vector<std::size_t> bootstrap_indices(std::size_t n, std::uint64_t seed, std::uint64_t replicate);

// Generic engine: `point` is the full-sample estimate, `replicate(rows)`
// re-estimates on resampled unit indices. A replicate throwing cfpred::Error
// is dropped; more than max_drop_fraction drops raises ReplicateFailure.
BootstrapResult bootstrap_indices_run(std::size_t n_units, double point,
                                      const std::function<double(const std::vector<std::size_t>&)>& replicate,
                                      const BootstrapOptions& options);

BootstrapResult bootstrap(const Dataset& test, const std::function<double(const Dataset&)>& estimator,
                          const BootstrapOptions& options);

// Subject-level resampling of whole trajectories.
BootstrapResult bootstrap(const SequentialDataset& test,
                          const std::function<double(const SequentialDataset&)>& estimator,
                          const BootstrapOptions& options);

struct McSummary {
  double mean = 0.0;
  double sd = 0.0;
  double bias = 0.0;
  double rel_bias = 0.0;
  double sqrt_n_sd = 0.0;
  double sqrt_n_bias = 0.0;
  double truth = 0.0;
  int reps = 0;
};

// Throws Undefined when truth == 0 (relative bias).
McSummary mc_summarize(std::span<const double> estimates, double truth, std::size_t n_test);

}  // namespace cfpred
