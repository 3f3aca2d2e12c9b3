#pragma once

// Shared data model: observations, datasets, treatment regimes, losses and
// predictor-subset declarations.

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "cfpred/error.hpp"

namespace cfpred {

enum class OutcomeType { Binary, Continuous };
enum class Split { Train, Test };

// One row of a time-fixed dataset.
struct Observation {
  Eigen::VectorXd x;
  int a = 0;
  double y = 0.0;
  Split split = Split::Train;
};

// Column-major storage of (X, A, Y, split). Immutable by convention once
// built; all transformations return new datasets.
class Dataset {
 public:
  Dataset() = default;

  // Validates dimensions, treatment coding, and binary outcomes.
  Dataset(Eigen::MatrixXd x, std::vector<int> a, Eigen::VectorXd y,
          std::vector<Split> split, OutcomeType outcome,
          std::vector<std::string> covariate_names = {});

  static Dataset from_rows(const std::vector<Observation>& rows, OutcomeType outcome);

  std::size_t size() const { return a_.size(); }
  bool empty() const { return a_.empty(); }
  Eigen::Index dim() const { return x_.cols(); }

  const Eigen::MatrixXd& x() const { return x_; }
  const std::vector<int>& a() const { return a_; }
  const Eigen::VectorXd& y() const { return y_; }
  const std::vector<Split>& split() const { return split_; }
  OutcomeType outcome() const { return outcome_; }
  const std::vector<std::string>& covariate_names() const { return names_; }

  Observation row(std::size_t i) const;

  // Rows at the given positions, in order; duplicates allowed (bootstrap).
  Dataset subset(std::span<const std::size_t> rows) const;
  Dataset train() const { return where(Split::Train); }
  Dataset test() const { return where(Split::Test); }
  Dataset arm(int a) const;
  Dataset with_split(std::vector<Split> split) const;

  std::size_t count(Split s) const;
  std::size_t count_arm(int a) const;

 private:
  Dataset where(Split s) const;

  Eigen::MatrixXd x_;
  std::vector<int> a_;
  Eigen::VectorXd y_;
  std::vector<Split> split_;
  OutcomeType outcome_ = OutcomeType::Continuous;
  std::vector<std::string> names_;
};

struct SplitOptions {
  // Exactly round(fraction * n) training rows instead of per-row Bernoulli.
  bool exact_count = false;
};

// Assigns each row to Train with probability `fraction_train`.
Dataset split_dataset(const Dataset& data, double fraction_train, std::uint64_t seed,
                      SplitOptions options = {});

// Ordered selection X* of covariate columns.
class PredictorSubset {
 public:
  PredictorSubset() = default;
  explicit PredictorSubset(std::vector<int> indices);

  static PredictorSubset all(Eigen::Index dim);

  const std::vector<int>& indices() const { return indices_; }
  std::size_t size() const { return indices_.size(); }
  bool empty() const { return indices_.empty(); }

  // Throws InvalidArgument if any index is outside [0, dim).
  void validate(Eigen::Index dim) const;
  bool is_identity(Eigen::Index dim) const;

  friend bool operator==(const PredictorSubset&, const PredictorSubset&) = default;

 private:
  std::vector<int> indices_;
};

Eigen::VectorXd subset_columns(const Eigen::VectorXd& x,
                               const PredictorSubset& sel);
Eigen::MatrixXd subset_columns(const Eigen::MatrixXd& x, const PredictorSubset& sel);

// Probability bounds applied to fitted propensities before they are used as
// inverse-probability denominators.
struct ClipBounds {
  double lo = 0.01;
  double hi = 0.99;

  double apply(double p) const { return p < lo ? lo : (p > hi ? hi : p); }
  void validate() const;

  static ClipBounds real_data() { return {0.01, 0.99}; }
  static ClipBounds simulation() { return {1e-6, 1.0 - 1e-6}; }
};

enum class Loss { Squared, Absolute };

inline double evaluate_loss(Loss loss, double y, double prediction) {
  const double r = y - prediction;
  return loss == Loss::Squared ? r * r : (r < 0 ? -r : r);
}

std::string loss_name(Loss loss);
Loss parse_loss(const std::string& name);

// Treatment strategies.
struct StaticRegime {
  int a = 0;
};

// f*(A|X): probability that the strategy assigns A = 1 given covariates.
struct StochasticRegime {
  std::function<double(const Eigen::VectorXd&)> pi_star;
  std::string label = "stochastic";

  // Checked evaluation: throws InvalidRegime outside [0, 1].
  double prob_treated(const Eigen::VectorXd& x) const;

  static StochasticRegime constant(double p);
};

// Per-time decision rule g_k(a_0..a_{k-1}, x_0..x_k) -> {0, 1}.
using SequentialRule =
    std::function<int(std::span<const int> a_before, std::span<const Eigen::VectorXd> x_through)>;

struct SequentialRegime {
  std::vector<SequentialRule> rules;
  std::string label = "sequential";

  std::size_t horizon() const { return rules.empty() ? 0 : rules.size() - 1; }

  // "Always a_k at time k".
  static SequentialRegime constant(std::vector<int> per_time);
  // Treat at time k when covariate `col` of X_k exceeds `threshold`.
  static SequentialRegime threshold(std::size_t n_times, int col, double threshold);
};

using Regime = std::variant<StaticRegime, StochasticRegime, SequentialRegime>;

std::string regime_label(const Regime& regime);

// Longitudinal data O = (X_0..X_K, A_0..A_K, Y_{K+1}), one entry per subject.
class SequentialDataset {
 public:
  SequentialDataset() = default;
  SequentialDataset(std::vector<Eigen::MatrixXd> x, std::vector<std::vector<int>> a,
                    Eigen::VectorXd y, OutcomeType outcome, std::vector<std::string> ids = {});

  std::size_t size() const { return static_cast<std::size_t>(y_.size()); }
  std::size_t times() const { return x_.size(); }
  std::size_t horizon() const { return x_.size() - 1; }

  const Eigen::MatrixXd& x(std::size_t k) const { return x_[k]; }
  const std::vector<int>& a(std::size_t k) const { return a_[k]; }
  const Eigen::VectorXd& y() const { return y_; }
  OutcomeType outcome() const { return outcome_; }
  const std::vector<std::string>& ids() const { return ids_; }

  // Covariate history X_0..X_k of subject i.
  std::vector<Eigen::VectorXd> x_history(std::size_t i, std::size_t k) const;
  // Treatment history A_0..A_{k-1} of subject i.
  std::vector<int> a_history(std::size_t i, std::size_t k) const;
  // Concatenation of X_0..X_k for subject i.
  Eigen::VectorXd history_features(std::size_t i, std::size_t k) const;
  Eigen::MatrixXd history_features(std::size_t k) const;

  // Subjects at the given positions (resampling unit is the subject).
  SequentialDataset subset(std::span<const std::size_t> rows) const;

 private:
  std::vector<Eigen::MatrixXd> x_;
  std::vector<std::vector<int>> a_;
  Eigen::VectorXd y_;
  OutcomeType outcome_ = OutcomeType::Continuous;
  std::vector<std::string> ids_;
};

}  // namespace cfpred
