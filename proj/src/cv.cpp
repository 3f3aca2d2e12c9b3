#include <algorithm>
#include <numeric>

#include "cfpred/perf.hpp"
#include "cfpred/rng.hpp"

namespace cfpred {

CvResult cv_select(const Dataset& train, const std::vector<ModelRecipe>& candidates,
                   const CvOptions& options) {
  if (options.folds < 2) fail(ErrorCode::InvalidArgument, "cross-validation needs at least 2 folds");
  if (candidates.empty()) fail(ErrorCode::InvalidArgument, "no candidate models");
  const auto k = static_cast<std::size_t>(options.folds);
  if (train.size() < k) fail(ErrorCode::InvalidArgument, "fewer training rows than folds");

  // Balanced random fold labels.
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(options.seed, 0xF01D);
  for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
  std::vector<std::size_t> fold_of(train.size());
  for (std::size_t t = 0; t < order.size(); ++t) fold_of[order[t]] = t % k;

  std::vector<std::vector<std::size_t>> held(k), kept(k);
  for (std::size_t i = 0; i < train.size(); ++i) {
    for (std::size_t f = 0; f < k; ++f) (fold_of[i] == f ? held[f] : kept[f]).push_back(i);
  }

  const bool needs_nuisance = options.kind != EstimatorKind::Naive;
  if (needs_nuisance && !options.nuisances_on_full_train) {
    std::string failing;
    for (std::size_t f = 0; f < k; ++f) {
      const Dataset fold = train.subset(held[f]);
      if (fold.count_arm(0) == 0 || fold.count_arm(1) == 0) {
        failing += (failing.empty() ? "" : ",") + std::to_string(f);
      }
    }
    if (!failing.empty()) {
      fail(ErrorCode::Positivity, "folds missing a treatment level: " + failing);
    }
  }

  CvResult result;
  result.fold_scores.assign(candidates.size(), std::vector<double>(k, 0.0));
  for (std::size_t f = 0; f < k; ++f) {
    const Dataset fit_rows = train.subset(kept[f]);
    const Dataset eval_rows = train.subset(held[f]);
    const Dataset& nuisance_rows = options.nuisances_on_full_train ? train : eval_rows;
    for (std::size_t c = 0; c < candidates.size(); ++c) {
      const FittedModel model = candidates[c].fit(fit_rows);
      NuisanceSet nuis;
      nuis.target_a = options.target_a;
      nuis.loss = options.loss;
      if (needs_nuisance) {
        nuis = fit_nuisances(nuisance_rows, model, options.nuisance, options.target_a, options.loss, options.glm);
      }
      result.fold_scores[c][f] = estimate_loss(eval_rows, model, nuis, options.kind).value;
    }
  }
  for (const auto& per_fold : result.fold_scores) {
    result.scores.push_back(std::accumulate(per_fold.begin(), per_fold.end(), 0.0) / static_cast<double>(k));
  }
  // First minimum wins ties.
  result.selected = static_cast<std::size_t>(
      std::min_element(result.scores.begin(), result.scores.end()) - result.scores.begin());
  return result;
}

}  // namespace cfpred
