#pragma once

// Counterfactual performance estimators. Every function here treats the
// dataset it receives as the test set; pass `data.test()` when the split
// lives in the same table.

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cfpred/core.hpp"
#include "cfpred/nuisance.hpp"
#include "cfpred/tailor.hpp"

namespace cfpred {

enum class EstimatorKind { Naive, CL, IPW, DR, OM };
enum class MeasureKind { Loss, Auc, Calibration };

std::string estimator_name(EstimatorKind k);
EstimatorKind parse_estimator(const std::string& name);
std::string measure_name(MeasureKind m, Loss loss);

struct CalibrationPoint {
  double predicted = 0.0;
  // NaN when a bin carries no weight under the chosen estimator.
  double observed = 0.0;
  std::size_t count = 0;
};

struct PerfEstimate {
  EstimatorKind kind = EstimatorKind::Naive;
  MeasureKind measure = MeasureKind::Loss;
  Loss loss = Loss::Squared;
  double value = 0.0;
  std::vector<CalibrationPoint> curve;
  std::size_t n_test = 0;
  std::string regime;
  std::optional<double> se;
  std::optional<std::pair<double, double>> ci;
};

// Plug-in formulas on precomputed per-row quantities. `e` is the
// probability of the target arm, `h` the conditional loss.
namespace formulas {

double mean(std::span<const double> v);
double ipw(std::span<const int> a, int target_a, std::span<const double> e, std::span<const double> losses);
double dr(std::span<const int> a, int target_a, std::span<const double> e, std::span<const double> h,
          std::span<const double> losses);
// Mixture over arms with Pr*[A = 1 | X_i] = pi1[i].
double stochastic_cl(std::span<const double> pi1, std::span<const double> h0, std::span<const double> h1);
// e0[i] = Pr[A = 0 | X_i], e1[i] = Pr[A = 1 | X_i].
double stochastic_ipw(std::span<const int> a, std::span<const double> pi1, std::span<const double> e0,
                      std::span<const double> e1, std::span<const double> losses);

// Sum_{i != j} wc_i wn_j [I(s_i > s_j) + 1/2 I(s_i = s_j)] / Sum_{i != j} wc_i wn_j,
// computed by sorting. Throws NoComparablePairs when the denominator is zero.
double weighted_auc(std::span<const double> score, std::span<const double> case_w,
                    std::span<const double> control_w);

}  // namespace formulas

Eigen::VectorXd model_losses(const Dataset& test, const FittedModel& model, Loss loss);

PerfEstimate loss_naive(const Dataset& test, const FittedModel& model, Loss loss);
PerfEstimate loss_cl(const Dataset& test, const FittedModel& model, const NuisanceSet& nuis);
PerfEstimate loss_ipw(const Dataset& test, const NuisanceSet& nuis, const FittedModel& model);
PerfEstimate loss_dr(const Dataset& test, const NuisanceSet& nuis, const FittedModel& model);

// Stochastic regime f*(A|X): CL needs conditional losses for both arms,
// IPW needs propensities for both arms.
PerfEstimate loss_stochastic(const Dataset& test, const StochasticRegime& regime,
                             const NuisanceSet& arm0, const NuisanceSet& arm1,
                             const FittedModel& model, Loss loss, EstimatorKind kind);

// Naive, OM (outcome model q_a from the conditional-loss nuisance) or IPW.
PerfEstimate auc_estimate(const Dataset& test, const FittedModel& model, EstimatorKind kind,
                          const NuisanceSet* nuis = nullptr);

struct CalibrationMethod {
  enum class Kind { Binned, LocalLinear } kind = Kind::Binned;
  int bins = 10;
  // Fraction of the prediction range; the default kernel half-width.
  double bandwidth_fraction = 0.3;
  int grid_points = 100;

  static CalibrationMethod binned(int k) { return {Kind::Binned, k, 0.3, 100}; }
  static CalibrationMethod local_linear(double fraction = 0.3) { return {Kind::LocalLinear, 10, fraction, 100}; }
};

PerfEstimate calibration_curve(const Dataset& test, const FittedModel& model, const NuisanceSet* nuis,
                               CalibrationMethod method, EstimatorKind kind);

// Loss estimate of the requested kind from fitted nuisances.
PerfEstimate estimate_loss(const Dataset& test, const FittedModel& model, const NuisanceSet& nuis,
                           EstimatorKind kind);

// Counterfactual cross-validation.
struct ModelRecipe {
  std::string name;
  std::function<FittedModel(const Dataset& train)> fit;
};

struct CvOptions {
  int folds = 5;
  std::uint64_t seed = 1;
  EstimatorKind kind = EstimatorKind::DR;
  int target_a = 0;
  Loss loss = Loss::Squared;
  NuisanceSpecs nuisance;
  // Fit nuisances on all training rows instead of each held-out fold.
  bool nuisances_on_full_train = false;
  GlmOptions glm;
};

struct CvResult {
  std::size_t selected = 0;
  std::vector<double> scores;                  // mean over folds, per candidate
  std::vector<std::vector<double>> fold_scores;  // [candidate][fold]
};

CvResult cv_select(const Dataset& train, const std::vector<ModelRecipe>& candidates,
                   const CvOptions& options);

}  // namespace cfpred
