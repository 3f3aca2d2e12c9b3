#include <algorithm>
#include <numeric>

#include "cfpred/perf.hpp"

namespace cfpred {

double formulas::weighted_auc(std::span<const double> score, std::span<const double> case_w,
                              std::span<const double> control_w) {
  const std::size_t n = score.size();
  if (case_w.size() != n || control_w.size() != n) {
    fail(ErrorCode::InvalidArgument, "AUC inputs have different lengths");
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t l, std::size_t r) { return score[l] < score[r]; });

  // Walk tie groups in increasing score; `below` holds the control weight
  // of strictly lower scores. The i == j self-pair is a tie and is removed.
  double numerator = 0.0;
  double below = 0.0;
  double case_total = 0.0;
  double control_total = 0.0;
  double self_pairs = 0.0;
  for (std::size_t g = 0; g < n;) {
    std::size_t end = g;
    double tie_control = 0.0;
    while (end < n && score[order[end]] == score[order[g]]) tie_control += control_w[order[end++]];
    for (std::size_t k = g; k < end; ++k) {
      const std::size_t i = order[k];
      numerator += case_w[i] * (below + 0.5 * (tie_control - control_w[i]));
      case_total += case_w[i];
      self_pairs += case_w[i] * control_w[i];
    }
    below += tie_control;
    control_total += tie_control;
    g = end;
  }
  const double denominator = case_total * control_total - self_pairs;
  if (!(denominator > 0.0)) fail(ErrorCode::NoComparablePairs, "no comparable case/non-case pairs");
  return numerator / denominator;
}

PerfEstimate auc_estimate(const Dataset& test, const FittedModel& model, EstimatorKind kind,
                          const NuisanceSet* nuis) {
  if (test.outcome() != OutcomeType::Binary) fail(ErrorCode::InvalidArgument, "AUC requires a binary outcome");
  if (test.empty()) fail(ErrorCode::InvalidArgument, "empty test set");
  const Eigen::VectorXd mu = model.predict(test.x());
  const auto n = mu.size();
  Eigen::VectorXd wc(n), wn(n);
  std::string regime = "natural";

  switch (kind) {
    case EstimatorKind::Naive:
      wc = test.y();
      wn = Eigen::VectorXd::Ones(n) - test.y();
      break;
    case EstimatorKind::OM:
    case EstimatorKind::CL: {
      if (!nuis) fail(ErrorCode::InvalidArgument, "OM AUC needs an outcome model");
      const Eigen::VectorXd q = nuis->require_cond_loss().outcome_prob(test.x());
      wc = q;
      wn = Eigen::VectorXd::Ones(n) - q;
      kind = EstimatorKind::OM;
      regime = regime_label(Regime{StaticRegime{nuis->target_a}});
      break;
    }
    case EstimatorKind::IPW: {
      if (!nuis) fail(ErrorCode::InvalidArgument, "IPW AUC needs a propensity model");
      const Eigen::VectorXd e = nuis->require_propensity().evaluate(test.x());
      for (Eigen::Index i = 0; i < n; ++i) {
        const bool at_target = test.a()[static_cast<std::size_t>(i)] == nuis->target_a;
        const double w = at_target ? 1.0 / e[i] : 0.0;
        wc[i] = w * test.y()[i];
        wn[i] = w * (1.0 - test.y()[i]);
      }
      regime = regime_label(Regime{StaticRegime{nuis->target_a}});
      break;
    }
    case EstimatorKind::DR:
      fail(ErrorCode::InvalidArgument, "no doubly robust AUC estimator is provided");
  }

  PerfEstimate est;
  est.kind = kind;
  est.measure = MeasureKind::Auc;
  est.value = formulas::weighted_auc({mu.data(), static_cast<std::size_t>(n)},
                                     {wc.data(), static_cast<std::size_t>(n)},
                                     {wn.data(), static_cast<std::size_t>(n)});
  est.n_test = test.size();
  est.regime = regime;
  return est;
}

}  // namespace cfpred
