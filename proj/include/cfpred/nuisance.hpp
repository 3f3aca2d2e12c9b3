#pragma once

// Nuisance functions for counterfactual performance estimation: the
// propensity e_a(X) = Pr[A = a | X] and the conditional loss
// h_a(X) = E[L(Y, mu(X*)) | X, A = a]. Both are fit on test rows only.

#include <functional>
#include <optional>

#include "cfpred/core.hpp"
#include "cfpred/glm.hpp"

namespace cfpred {

class FittedModel;

class PropensityModel {
 public:
  using Function = std::function<double(const Eigen::VectorXd&)>;

  // Logistic regression of A on `spec`; evaluates Pr[A = target_a | x]
  // clipped to `clip`. When every row already has A = target_a the
  // propensity is exactly 1 and no model is fit.
  static PropensityModel fit(const Eigen::MatrixXd& x, std::span<const int> a, const DesignSpec& spec,
                             int target_a, ClipBounds clip, GlmOptions options = {});
  static PropensityModel fit(const Dataset& data, const DesignSpec& spec, int target_a,
                             ClipBounds clip, GlmOptions options = {});

  // Wraps a known Pr[A = target_a | x]; values are used unclipped.
  static PropensityModel known(Function prob_target, int target_a);

  int target_a() const { return target_a_; }
  bool converged() const { return converged_; }
  const std::optional<GlmModel>& glm() const { return glm_; }

  double operator()(const Eigen::VectorXd& x) const { return prob_(x); }
  Eigen::VectorXd evaluate(const Eigen::MatrixXd& x) const;

 private:
  Function prob_;
  std::optional<GlmModel> glm_;
  int target_a_ = 0;
  bool converged_ = true;
};

class CondLossModel {
 public:
  // h(x, mu): expected loss given covariates x and the model prediction mu.
  using Function = std::function<double(const Eigen::VectorXd&, double)>;
  using ProbFunction = std::function<double(const Eigen::VectorXd&)>;

  // Binary outcomes: q(x) = Pr[Y = 1 | X, A = a] by logistic regression and
  // h = q L(1, mu) + (1 - q) L(0, mu). Continuous outcomes: Gaussian
  // regression of observed losses on `spec`, floored at zero.
  static CondLossModel fit(const Dataset& test, const FittedModel& model, const DesignSpec& spec,
                           int target_a, Loss loss, GlmOptions options = {});

  static CondLossModel known(Function h);
  // Binary-outcome model from a known q(x).
  static CondLossModel from_outcome_prob(ProbFunction q, Loss loss);

  double operator()(const Eigen::VectorXd& x, double mu) const { return h_(x, mu); }
  Eigen::VectorXd evaluate(const Eigen::MatrixXd& x, const Eigen::VectorXd& mu) const;

  bool has_outcome_prob() const { return static_cast<bool>(q_); }
  // q_a(x); throws InvalidArgument unless built from an outcome-probability model.
  double outcome_prob(const Eigen::VectorXd& x) const;
  Eigen::VectorXd outcome_prob(const Eigen::MatrixXd& x) const;

  bool converged() const { return converged_; }

 private:
  Function h_;
  ProbFunction q_;
  bool converged_ = true;
};

// Expected loss of prediction p when Y ~ Bernoulli(q).
inline double expected_binary_loss(Loss loss, double q, double p) {
  return q * evaluate_loss(loss, 1.0, p) + (1.0 - q) * evaluate_loss(loss, 0.0, p);
}

struct NuisanceSet {
  int target_a = 0;
  Loss loss = Loss::Squared;
  std::optional<PropensityModel> propensity;
  std::optional<CondLossModel> cond_loss;

  const PropensityModel& require_propensity() const;
  const CondLossModel& require_cond_loss() const;
};

struct NuisanceSpecs {
  std::optional<DesignSpec> propensity;
  std::optional<DesignSpec> cond_loss;
  ClipBounds clip = ClipBounds::real_data();
};

// Fits whichever nuisances have specs, on the given test rows.
NuisanceSet fit_nuisances(const Dataset& test, const FittedModel& model, const NuisanceSpecs& specs,
                          int target_a, Loss loss, GlmOptions options = {});

}  // namespace cfpred
