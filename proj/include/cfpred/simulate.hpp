#pragma once

// Data-generating processes for the two simulation experiments, truth by
// forced-treatment simulation, and the Monte Carlo driver.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cfpred/core.hpp"
#include "cfpred/inference.hpp"
#include "cfpred/tailor.hpp"

namespace cfpred {

// Experiment 1 (one covariate, continuous outcome):
//   X ~ U(0, 10); A ~ Bernoulli(expit(-1.5 + 0.3 X));
//   Y = 1 + X + 0.5 X^2 - 3 A + eps, eps ~ N(0, variance X).
// Experiment 2 (three covariates, binary outcome):
//   X ~ N((0.2, 0, 0.5), diag(0.2)); A ~ Bernoulli(expit(0.5 - 2X1 + 3X1^2 + 2X2 - X3));
//   Y ~ Bernoulli(expit(0.2 + 3X1 - 2X1^2 + 2X2 + X3 - 2A)).
struct DgpOptions {
  // Experiment 1 only: A ~ Bernoulli(expit(1.5 - 0.3 X)).
  bool decreasing_treatment = false;
  // Experiment 1 only: eps has standard deviation X instead of variance X.
  bool noise_sd = false;
};

struct Dgp {
  int experiment = 2;
  std::size_t n = 1000;
  std::uint64_t seed = 1;
  std::uint64_t stream = 0;
  DgpOptions options;
};

struct Generated {
  Dataset data;        // observed (X, A, Y), all rows marked Train
  Eigen::VectorXd y0;  // potential outcomes, same per-row noise
  Eigen::VectorXd y1;
};

// Row draws are X, then the treatment uniform, then the outcome noise, so
// forcing A changes nothing but the outcome mean.
Generated generate_full(const Dgp& dgp);

// Observed data, or data with A forced to `force_a` for every row.
Dataset generate(const Dgp& dgp, std::optional<int> force_a = std::nullopt);

enum class TruthMeasure { Mse, Auc };

// Performance of a fixed model on fresh data with A forced to target_a.
double truth_oracle(const Dgp& dgp, const FittedModel& model, TruthMeasure measure, int target_a);

struct ExperimentOptions {
  unsigned threads = 1;
  DgpOptions dgp;
  double max_failure_fraction = 0.01;
};

struct MeasureColumn {
  McSummary summary;
  std::vector<double> values;  // per successful replicate
};

struct ExperimentRow {
  std::string model;
  std::string scenario;
  std::string estimator;
  std::optional<MeasureColumn> mse;
  std::optional<MeasureColumn> auc;
};

struct ExperimentTable {
  int experiment = 0;
  int reps = 0;
  std::size_t n = 0;
  std::uint64_t seed = 0;
  std::size_t n_test = 0;  // mean test-set size, used for sqrt(n) scaling
  int failures = 0;
  std::vector<ExperimentRow> rows;

  // Row lookup by (model, scenario, estimator); throws InvalidArgument.
  const ExperimentRow& row(const std::string& model, const std::string& scenario,
                           const std::string& estimator) const;
};

ExperimentTable run_experiment(int which, int reps, std::size_t n, std::uint64_t seed,
                               const ExperimentOptions& options = {});

}  // namespace cfpred
