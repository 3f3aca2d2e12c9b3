#include <doctest.h>

#include <algorithm>
#include <mutex>
#include <cmath>
#include <numeric>

#include "cfpred/inference.hpp"
#include "cfpred/rng.hpp"

using namespace cfpred;

TEST_CASE("parallel_for visits every index once") {
  std::vector<int> hits(1000, 0);
  parallel_for(hits.size(), 4, [&](std::size_t i) { hits[i] += 1; });
  CHECK(std::all_of(hits.begin(), hits.end(), [](int h) { return h == 1; }));
  CHECK_THROWS_AS(parallel_for(10, 3,
                               [](std::size_t i) {
                                 if (i == 7) fail(ErrorCode::Data, "boom");
                               }),
                  Error);
  CHECK(default_threads() >= 1);
}

TEST_CASE("quantiles and sd") {
  CHECK(quantile7({1, 2, 3, 4}, 0.5) == 2.5);
  CHECK(quantile7({4, 1, 3, 2}, 0.0) == 1);
  CHECK(quantile7({4, 1, 3, 2}, 1.0) == 4);
  CHECK(quantile7({1, 2, 3, 4, 5}, 0.25) == 2);
  // R: quantile(1:10, 0.975) = 9.775
  std::vector<double> v(10);
  std::iota(v.begin(), v.end(), 1.0);
  CHECK(quantile7(v, 0.975) == doctest::Approx(9.775));
  const std::vector<double> s{2, 4, 4, 4, 5, 5, 7, 9};
  CHECK(sample_sd(s) == doctest::Approx(std::sqrt(32.0 / 7.0)));
}

TEST_CASE("bootstrap indices are reproducible per replicate") {
  const auto a = bootstrap_indices(50, 3, 7);
  const auto b = bootstrap_indices(50, 3, 7);
  const auto c = bootstrap_indices(50, 3, 8);
  CHECK(a == b);
  CHECK(a != c);
  CHECK(a.size() == 50);
  for (auto i : a) CHECK(i < 50);
}

TEST_CASE("bootstrap of a mean has the textbook standard error") {
  Rng rng(5);
  const std::size_t n = 400;
  std::vector<double> x(n);
  for (auto& v : x) v = rng.normal();
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / n;
  auto rep = [&](const std::vector<std::size_t>& idx) {
    double s = 0;
    for (auto i : idx) s += x[i];
    return s / static_cast<double>(idx.size());
  };
  BootstrapOptions o;
  o.replicates = 2000;
  o.seed = 11;
  const BootstrapResult r = bootstrap_indices_run(n, mean, rep, o);
  const double se = sample_sd(x) / std::sqrt(static_cast<double>(n));
  CHECK(std::abs(r.se / se - 1.0) < 0.1);
  CHECK(r.ci_95.first < mean);
  CHECK(r.ci_95.second > mean);
  CHECK(r.replicates == 2000);
  CHECK(r.dropped == 0);

  o.threads = 3;
  const BootstrapResult r3 = bootstrap_indices_run(n, mean, rep, o);
  CHECK(r3.values == r.values);
  CHECK(r3.se == r.se);

  o.wald = true;
  const BootstrapResult w = bootstrap_indices_run(n, mean, rep, o);
  CHECK(w.ci_95.first == doctest::Approx(mean - 1.96 * w.se));
}

TEST_CASE("failed replicates are dropped up to a limit") {
  BootstrapOptions o;
  o.replicates = 100;
  int calls = 0;
  std::mutex mu;
  auto flaky = [&](const std::vector<std::size_t>&) {
    std::lock_guard lock(mu);
    if (++calls % 20 == 0) fail(ErrorCode::Positivity, "empty arm");
    return 1.0;
  };
  const BootstrapResult r = bootstrap_indices_run(10, 1.0, flaky, o);
  CHECK(r.dropped == 5);
  CHECK(r.replicates == 95);
  auto bad = [](const std::vector<std::size_t>& idx) -> double {
    if (idx[0] % 2 == 0) fail(ErrorCode::Positivity, "empty arm");
    return 1.0;
  };
  try {
    bootstrap_indices_run(10, 1.0, bad, o);
    FAIL("expected replicate failure");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ReplicateFailure);
  }
}

TEST_CASE("dataset bootstrap resamples rows") {
  Eigen::MatrixXd x(6, 1);
  x << 1, 2, 3, 4, 5, 6;
  const Dataset d(x, {0, 1, 0, 1, 0, 1}, Eigen::VectorXd::LinSpaced(6, 0, 5), std::vector<Split>(6, Split::Test),
                  OutcomeType::Continuous);
  BootstrapOptions o;
  o.replicates = 50;
  const BootstrapResult r = bootstrap(d, [](const Dataset& t) { return t.y().mean(); }, o);
  CHECK(r.point == 2.5);
  CHECK(r.values.size() == 50);
  for (double v : r.values) CHECK((v >= 0.0 && v <= 5.0));
}

TEST_CASE("Monte Carlo summary") {
  const std::vector<double> est{1.0, 2.0, 3.0};
  const McSummary s = mc_summarize(est, 2.5, 100);
  CHECK(s.mean == 2.0);
  CHECK(s.bias == -0.5);
  CHECK(s.rel_bias == doctest::Approx(-0.2));
  CHECK(s.sd == doctest::Approx(1.0));
  CHECK(s.sqrt_n_sd == doctest::Approx(10.0));
  CHECK(s.sqrt_n_bias == doctest::Approx(-5.0));
  CHECK(s.reps == 3);
  CHECK_THROWS_AS(mc_summarize(est, 0.0, 100), Error);
}
