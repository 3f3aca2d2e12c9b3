#include "cfpred/nuisance.hpp"

#include <algorithm>

#include "cfpred/tailor.hpp"

namespace cfpred {

PropensityModel PropensityModel::fit(const Eigen::MatrixXd& x, std::span<const int> a,
                                     const DesignSpec& spec, int target_a, ClipBounds clip,
                                     GlmOptions options) {
  if (target_a != 0 && target_a != 1) fail(ErrorCode::InvalidArgument, "target treatment must be 0 or 1");
  clip.validate();
  if (static_cast<std::size_t>(x.rows()) != a.size()) {
    fail(ErrorCode::InvalidArgument, "propensity inputs have different lengths");
  }
  const auto at_target = static_cast<std::size_t>(std::count(a.begin(), a.end(), target_a));
  if (at_target == 0) {
    fail(ErrorCode::Positivity, "no rows with A=" + std::to_string(target_a));
  }
  PropensityModel model;
  model.target_a_ = target_a;
  if (at_target == a.size()) {
    model.prob_ = [](const Eigen::VectorXd&) { return 1.0; };
    return model;
  }
  Eigen::VectorXd treated(static_cast<Eigen::Index>(a.size()));
  for (std::size_t i = 0; i < a.size(); ++i) treated[static_cast<Eigen::Index>(i)] = a[i];
  GlmModel glm = fit_glm_model(x, treated, Eigen::VectorXd::Ones(treated.size()), spec,
                               Family::BinomialLogit, options);
  model.converged_ = glm.fit().converged;
  model.glm_ = glm;
  model.prob_ = [glm = std::move(glm), target_a, clip](const Eigen::VectorXd& v) {
    const double p1 = glm.predict(v);
    return clip.apply(target_a == 1 ? p1 : 1.0 - p1);
  };
  return model;
}

PropensityModel PropensityModel::fit(const Dataset& data, const DesignSpec& spec, int target_a,
                                     ClipBounds clip, GlmOptions options) {
  return fit(data.x(), data.a(), spec, target_a, clip, options);
}

PropensityModel PropensityModel::known(Function prob_target, int target_a) {
  PropensityModel model;
  model.prob_ = std::move(prob_target);
  model.target_a_ = target_a;
  return model;
}

Eigen::VectorXd PropensityModel::evaluate(const Eigen::MatrixXd& x) const {
  Eigen::VectorXd out(x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) out[i] = prob_(x.row(i).transpose());
  return out;
}

CondLossModel CondLossModel::fit(const Dataset& test, const FittedModel& model, const DesignSpec& spec,
                                 int target_a, Loss loss, GlmOptions options) {
  const Dataset arm = test.arm(target_a);
  if (arm.empty()) fail(ErrorCode::Positivity, "no test rows with A=" + std::to_string(target_a));
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(arm.size()));

  if (test.outcome() == OutcomeType::Binary) {
    GlmModel q = fit_glm_model(arm.x(), arm.y(), ones, spec, Family::BinomialLogit, options);
    CondLossModel out = from_outcome_prob([q](const Eigen::VectorXd& x) { return q.predict(x); }, loss);
    out.converged_ = q.fit().converged;
    return out;
  }

  const Eigen::VectorXd mu = model.predict(arm.x());
  Eigen::VectorXd losses(mu.size());
  for (Eigen::Index i = 0; i < mu.size(); ++i) losses[i] = evaluate_loss(loss, arm.y()[i], mu[i]);
  GlmModel reg = fit_glm_model(arm.x(), losses, ones, spec, Family::Gaussian, options);
  CondLossModel out;
  out.h_ = [reg = std::move(reg)](const Eigen::VectorXd& x, double) {
    return std::max(0.0, reg.predict(x));
  };
  return out;
}

CondLossModel CondLossModel::known(Function h) {
  CondLossModel out;
  out.h_ = std::move(h);
  return out;
}

CondLossModel CondLossModel::from_outcome_prob(ProbFunction q, Loss loss) {
  CondLossModel out;
  out.q_ = q;
  out.h_ = [q = std::move(q), loss](const Eigen::VectorXd& x, double mu) {
    return expected_binary_loss(loss, q(x), mu);
  };
  return out;
}

Eigen::VectorXd CondLossModel::evaluate(const Eigen::MatrixXd& x, const Eigen::VectorXd& mu) const {
  Eigen::VectorXd out(x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) out[i] = h_(x.row(i).transpose(), mu[i]);
  return out;
}

double CondLossModel::outcome_prob(const Eigen::VectorXd& x) const {
  if (!q_) fail(ErrorCode::InvalidArgument, "conditional-loss model has no outcome-probability component");
  return q_(x);
}

Eigen::VectorXd CondLossModel::outcome_prob(const Eigen::MatrixXd& x) const {
  Eigen::VectorXd out(x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) out[i] = outcome_prob(Eigen::VectorXd(x.row(i).transpose()));
  return out;
}

const PropensityModel& NuisanceSet::require_propensity() const {
  if (!propensity) fail(ErrorCode::InvalidArgument, "estimator needs a propensity model");
  return *propensity;
}

const CondLossModel& NuisanceSet::require_cond_loss() const {
  if (!cond_loss) fail(ErrorCode::InvalidArgument, "estimator needs a conditional-loss model");
  return *cond_loss;
}

NuisanceSet fit_nuisances(const Dataset& test, const FittedModel& model, const NuisanceSpecs& specs,
                          int target_a, Loss loss, GlmOptions options) {
  NuisanceSet set;
  set.target_a = target_a;
  set.loss = loss;
  if (specs.propensity) {
    set.propensity = PropensityModel::fit(test, *specs.propensity, target_a, specs.clip, options);
  }
  if (specs.cond_loss) {
    set.cond_loss = CondLossModel::fit(test, model, *specs.cond_loss, target_a, loss, options);
  }
  return set;
}

}  // namespace cfpred
