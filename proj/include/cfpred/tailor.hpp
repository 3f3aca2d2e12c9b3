#pragma once

// Prediction models for E[Y^a | X*], fit on training rows either by
// standardization (outcome regression then projection onto X*) or by
// inverse-probability weighting.

#include <optional>
#include <string>
#include <vector>

#include "cfpred/core.hpp"
#include "cfpred/glm.hpp"

namespace cfpred {

enum class TailorMethod { Plain, Standardized, IpwWeighted };

std::string method_name(TailorMethod m);

class FittedModel {
 public:
  FittedModel() = default;
  FittedModel(GlmModel inner, PredictorSubset predictors, std::optional<int> target_a,
              TailorMethod method, bool clip_unit = false);

  const GlmModel& inner() const { return inner_; }
  const PredictorSubset& predictors() const { return predictors_; }
  // nullopt for the natural course (untailored model).
  const std::optional<int>& target_a() const { return target_a_; }
  TailorMethod method() const { return method_; }
  bool clip_unit() const { return clip_unit_; }

  std::vector<std::string> warnings;

  // Prediction from the full covariate vector X (projected onto X*).
  double predict(const Eigen::VectorXd& x) const;
  Eigen::VectorXd predict(const Eigen::MatrixXd& x) const;

 private:
  GlmModel inner_;
  PredictorSubset predictors_;
  std::optional<int> target_a_;
  TailorMethod method_ = TailorMethod::Plain;
  bool clip_unit_ = false;
};

struct TailorOptions {
  ClipBounds clip = ClipBounds::real_data();
  // Cap IP weights at this quantile of the nonzero weights; nullopt disables.
  std::optional<double> truncate_quantile = 0.995;
  GlmOptions glm;

  static TailorOptions simulation() {
    TailorOptions o;
    o.clip = ClipBounds::simulation();
    o.truncate_quantile.reset();
    return o;
  }
};

// Untailored fit of Y on X* over all training rows.
FittedModel fit_plain(const Dataset& train, const PredictorSubset& predictors,
                      const DesignSpec& model_spec, Family family, GlmOptions options = {});

// Inverse-probability weights I(A = a) / Pr[A = a | X] from a propensity
// model fit on `train`, optionally truncated.
Eigen::VectorXd tailoring_weights(const Dataset& train, int target_a, const DesignSpec& propensity_spec,
                                  const TailorOptions& options, bool* converged = nullptr);

FittedModel fit_tailored_ipw(const Dataset& train, int target_a, const DesignSpec& propensity_spec,
                             const PredictorSubset& predictors, const DesignSpec& model_spec,
                             Family family, const TailorOptions& options = {});

enum class StageTwoTarget { FittedMeans, SimulatedDraws };

struct StandardizeOptions {
  StageTwoTarget target = StageTwoTarget::FittedMeans;
  std::uint64_t seed = 0;  // used for SimulatedDraws
  GlmOptions glm;
};

// Stage 1: E[Y | X, A = a] on the A = a training rows. Stage 2: regress the
// stage-1 predictions (or draws from them) on X* over all training rows.
// When X* = X the stage-1 model is returned.
FittedModel fit_tailored_standardized(const Dataset& train, int target_a, const DesignSpec& outcome_spec,
                                      const PredictorSubset& predictors,
                                      const DesignSpec& second_stage_spec, Family family,
                                      const StandardizeOptions& options = {});

}  // namespace cfpred
