#pragma once

// Performance under time-varying treatment regimes: product-weight IPW and
// iterated conditional expectation (ICE) plug-ins.

#include <vector>

#include "cfpred/core.hpp"
#include "cfpred/glm.hpp"
#include "cfpred/perf.hpp"
#include "cfpred/tailor.hpp"

namespace cfpred {

// a^g_k for every subject and time, evaluated on observed histories.
std::vector<std::vector<int>> regime_treatments(const SequentialDataset& data, const SequentialRegime& regime);

// Number of subjects with A_0..A_k equal to the regime, for each k.
std::vector<std::size_t> follower_counts(const SequentialDataset& data, const SequentialRegime& regime);

// Default per-time design: intercept plus linear terms in X_0..X_k.
std::vector<DesignSpec> default_history_specs(const SequentialDataset& data);

struct SequentialWeightOptions {
  // Per-time designs over the concatenated history X_0..X_k; empty means
  // default_history_specs.
  std::vector<DesignSpec> propensity_specs;
  bool stabilize = false;
  // Per-time numerator designs over baseline X_0; empty means linear in X_0.
  std::vector<DesignSpec> numerator_specs;
  ClipBounds clip = ClipBounds::real_data();
  GlmOptions glm;
};

struct SequentialWeights {
  Eigen::VectorXd weights;
  std::vector<std::size_t> followers;  // followers through k, per k
  bool stabilized = false;
};

SequentialWeights sequential_weights(const SequentialDataset& data, const SequentialRegime& regime,
                                     const SequentialWeightOptions& options = {});

// Mean over all rows of weight * loss. Requires unstabilized weights: with a
// numerator the mean targets a numerator-weighted loss instead.
PerfEstimate loss_ipw_sequential(const SequentialDataset& data, const SequentialRegime& regime,
                                 const SequentialWeights& weights, const FittedModel& model, Loss loss);

// Weighted fit of Y on baseline predictors X*_0 (columns of X_0). Stabilized
// weights are appropriate here since the numerator depends on X_0 only.
FittedModel fit_tailored_sequential(const SequentialDataset& train, const SequentialWeights& weights,
                                    const PredictorSubset& predictors, const DesignSpec& model_spec,
                                    Family family, GlmOptions options = {});

struct IceOptions {
  // Per-time pseudo-outcome regressions over X_0..X_t; empty means defaults.
  std::vector<DesignSpec> outcome_specs;
  GlmOptions glm;
};

PerfEstimate loss_ice_sequential(const SequentialDataset& data, const SequentialRegime& regime,
                                 const FittedModel& model, Loss loss, const IceOptions& options = {});

}  // namespace cfpred
