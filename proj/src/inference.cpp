#include "cfpred/inference.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <numeric>
#include <optional>
#include <thread>

#include "cfpred/rng.hpp"

namespace cfpred {

void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& body) {
  if (count == 0) return;
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::min<std::size_t>(count, 1u << 16))));
  if (threads == 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= count) return;
        try {
          body(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
          next.store(count);
          return;
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

unsigned default_threads() {
  const unsigned h = std::thread::hardware_concurrency();
  return h == 0 ? 1u : h;
}

double quantile7(std::vector<double> values, double p) {
  if (values.empty()) fail(ErrorCode::InvalidArgument, "quantile of an empty sample");
  if (!(p >= 0.0 && p <= 1.0)) fail(ErrorCode::InvalidArgument, "quantile level outside [0, 1]");
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

double sample_sd(std::span<const double> v) {
  if (v.size() < 2) return 0.0;
  const double m = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

std::vector<std::size_t> bootstrap_indices(std::size_t n, std::uint64_t seed, std::uint64_t replicate) {
  Rng rng(seed, replicate);
  std::vector<std::size_t> rows(n);
  for (auto& r : rows) r = static_cast<std::size_t>(rng.below(n));
  return rows;
}

BootstrapResult bootstrap_indices_run(std::size_t n_units, double point,
                                      const std::function<double(const std::vector<std::size_t>&)>& replicate,
                                      const BootstrapOptions& options) {
  if (options.replicates < 2) fail(ErrorCode::InvalidArgument, "bootstrap needs at least 2 replicates");
  if (n_units == 0) fail(ErrorCode::InvalidArgument, "bootstrap of an empty sample");
  const auto b_total = static_cast<std::size_t>(options.replicates);
  std::vector<std::optional<double>> slots(b_total);
  parallel_for(b_total, options.threads, [&](std::size_t b) {
    const auto rows = bootstrap_indices(n_units, options.seed, b);
    try {
      slots[b] = replicate(rows);
    } catch (const Error&) {
      slots[b].reset();
    }
  });

  BootstrapResult out;
  out.point = point;
  out.seed = options.seed;
  for (const auto& s : slots) {
    if (s && std::isfinite(*s)) {
      out.values.push_back(*s);
    } else {
      ++out.dropped;
    }
  }
  out.replicates = static_cast<int>(out.values.size());
  if (static_cast<double>(out.dropped) > options.max_drop_fraction * static_cast<double>(b_total) ||
      out.values.size() < 2) {
    fail(ErrorCode::ReplicateFailure, std::to_string(out.dropped) + " of " + std::to_string(b_total) +
                                          " bootstrap replicates failed");
  }
  out.se = sample_sd(out.values);
  if (options.wald) {
    out.ci_95 = {point - 1.96 * out.se, point + 1.96 * out.se};
  } else {
    out.ci_95 = {quantile7(out.values, 0.025), quantile7(out.values, 0.975)};
  }
  return out;
}

BootstrapResult bootstrap(const Dataset& test, const std::function<double(const Dataset&)>& estimator,
                          const BootstrapOptions& options) {
  const double point = estimator(test);
  return bootstrap_indices_run(
      test.size(), point, [&](const std::vector<std::size_t>& rows) { return estimator(test.subset(rows)); },
      options);
}

BootstrapResult bootstrap(const SequentialDataset& test,
                          const std::function<double(const SequentialDataset&)>& estimator,
                          const BootstrapOptions& options) {
  const double point = estimator(test);
  return bootstrap_indices_run(
      test.size(), point, [&](const std::vector<std::size_t>& rows) { return estimator(test.subset(rows)); },
      options);
}

McSummary mc_summarize(std::span<const double> estimates, double truth, std::size_t n_test) {
  if (estimates.empty()) fail(ErrorCode::InvalidArgument, "no estimates to summarize");
  if (truth == 0.0) fail(ErrorCode::Undefined, "relative bias is undefined when the truth is zero");
  // Sorted copy so the result does not depend on input order.
  std::vector<double> v(estimates.begin(), estimates.end());
  std::sort(v.begin(), v.end());
  McSummary s;
  s.reps = static_cast<int>(v.size());
  s.truth = truth;
  s.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  s.sd = sample_sd(v);
  s.bias = s.mean - truth;
  s.rel_bias = s.bias / truth;
  const double root_n = std::sqrt(static_cast<double>(n_test));
  s.sqrt_n_sd = root_n * s.sd;
  s.sqrt_n_bias = root_n * s.bias;
  return s;
}

}  // namespace cfpred
