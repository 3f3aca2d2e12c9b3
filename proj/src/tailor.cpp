#include "cfpred/tailor.hpp"

#include <algorithm>
#include <cmath>

#include "cfpred/nuisance.hpp"
#include "cfpred/rng.hpp"

namespace cfpred {

std::string method_name(TailorMethod m) {
  switch (m) {
    case TailorMethod::Plain: return "plain";
    case TailorMethod::Standardized: return "standardized";
    case TailorMethod::IpwWeighted: return "ipw";
  }
  return "unknown";
}

FittedModel::FittedModel(GlmModel inner, PredictorSubset predictors, std::optional<int> target_a,
                         TailorMethod method, bool clip_unit)
    : inner_(std::move(inner)),
      predictors_(std::move(predictors)),
      target_a_(target_a),
      method_(method),
      clip_unit_(clip_unit) {
  if (inner_.basis().spec().max_column() >= static_cast<int>(predictors_.size())) {
    fail(ErrorCode::InvalidArgument, "model design references a column outside the predictor subset");
  }
}

double FittedModel::predict(const Eigen::VectorXd& x) const {
  double p = inner_.predict(subset_columns(x, predictors_));
  if (clip_unit_) p = std::clamp(p, 0.0, 1.0);
  return p;
}

Eigen::VectorXd FittedModel::predict(const Eigen::MatrixXd& x) const {
  Eigen::VectorXd p = inner_.predict(subset_columns(x, predictors_));
  if (clip_unit_) p = p.cwiseMax(0.0).cwiseMin(1.0);
  return p;
}

namespace {

Family check_family(const Dataset& data, Family family) {
  if (family == Family::BinomialLogit && data.outcome() != OutcomeType::Binary) {
    fail(ErrorCode::InvalidArgument, "binomial family requires a binary outcome");
  }
  return family;
}

void note_convergence(FittedModel& model, const GlmFit& fit, const std::string& what) {
  if (!fit.converged) model.warnings.push_back(what + " did not converge");
}

}  // namespace

FittedModel fit_plain(const Dataset& train, const PredictorSubset& predictors,
                      const DesignSpec& model_spec, Family family, GlmOptions options) {
  if (train.empty()) fail(ErrorCode::InvalidArgument, "no training rows");
  check_family(train, family);
  predictors.validate(train.dim());
  const Eigen::MatrixXd xs = subset_columns(train.x(), predictors);
  GlmModel glm = fit_glm_model(xs, train.y(), Eigen::VectorXd::Ones(xs.rows()), model_spec, family, options);
  FittedModel model(std::move(glm), predictors, std::nullopt, TailorMethod::Plain);
  note_convergence(model, model.inner().fit(), "prediction model");
  return model;
}

Eigen::VectorXd tailoring_weights(const Dataset& train, int target_a, const DesignSpec& propensity_spec,
                                  const TailorOptions& options, bool* converged) {
  const PropensityModel e = PropensityModel::fit(train, propensity_spec, target_a, options.clip, options.glm);
  if (converged) *converged = e.converged();
  Eigen::VectorXd w = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(train.size()));
  for (std::size_t i = 0; i < train.size(); ++i) {
    if (train.a()[i] == target_a) {
      const auto r = static_cast<Eigen::Index>(i);
      w[r] = 1.0 / e(train.x().row(r).transpose());
    }
  }
  if (options.truncate_quantile) {
    const double q = *options.truncate_quantile;
    if (!(q > 0.0 && q <= 1.0)) fail(ErrorCode::InvalidArgument, "truncation quantile must lie in (0, 1]");
    std::vector<double> positive;
    for (Eigen::Index i = 0; i < w.size(); ++i) {
      if (w[i] > 0) positive.push_back(w[i]);
    }
    std::sort(positive.begin(), positive.end());
    const double h = q * static_cast<double>(positive.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, positive.size() - 1);
    const double cap = positive[lo] + (h - static_cast<double>(lo)) * (positive[hi] - positive[lo]);
    w = w.cwiseMin(cap);
  }
  return w;
}

FittedModel fit_tailored_ipw(const Dataset& train, int target_a, const DesignSpec& propensity_spec,
                             const PredictorSubset& predictors, const DesignSpec& model_spec,
                             Family family, const TailorOptions& options) {
  if (train.empty()) fail(ErrorCode::InvalidArgument, "no training rows");
  check_family(train, family);
  predictors.validate(train.dim());
  bool propensity_converged = true;
  const Eigen::VectorXd w = tailoring_weights(train, target_a, propensity_spec, options, &propensity_converged);
  const Eigen::MatrixXd xs = subset_columns(train.x(), predictors);
  GlmModel glm = fit_glm_model(xs, train.y(), w, model_spec, family, options.glm);
  FittedModel model(std::move(glm), predictors, target_a, TailorMethod::IpwWeighted);
  if (!propensity_converged) model.warnings.push_back("propensity model did not converge");
  note_convergence(model, model.inner().fit(), "weighted prediction model");
  return model;
}

FittedModel fit_tailored_standardized(const Dataset& train, int target_a, const DesignSpec& outcome_spec,
                                      const PredictorSubset& predictors,
                                      const DesignSpec& second_stage_spec, Family family,
                                      const StandardizeOptions& options) {
  check_family(train, family);
  predictors.validate(train.dim());
  const Dataset arm = train.arm(target_a);
  if (arm.empty()) fail(ErrorCode::Positivity, "no training rows with A=" + std::to_string(target_a));

  GlmModel stage1 = fit_glm_model(arm.x(), arm.y(), Eigen::VectorXd::Ones(static_cast<Eigen::Index>(arm.size())),
                                  outcome_spec, family, options.glm);
  if (predictors.is_identity(train.dim())) {
    FittedModel model(std::move(stage1), predictors, target_a, TailorMethod::Standardized);
    note_convergence(model, model.inner().fit(), "outcome model");
    return model;
  }

  Eigen::VectorXd targets = stage1.predict(train.x());
  Family stage2_family = Family::Gaussian;
  bool clip_unit = train.outcome() == OutcomeType::Binary;
  if (options.target == StageTwoTarget::SimulatedDraws) {
    Rng rng(options.seed, 0xD4A3);
    if (train.outcome() == OutcomeType::Binary) {
      for (Eigen::Index i = 0; i < targets.size(); ++i) targets[i] = rng.bernoulli(targets[i]) ? 1.0 : 0.0;
      stage2_family = Family::BinomialLogit;
      clip_unit = false;
    } else {
      const Eigen::MatrixXd d = stage1.basis().apply(arm.x());
      const Eigen::VectorXd resid = arm.y() - d * stage1.fit().coefficients;
      const double dof = std::max<double>(1.0, static_cast<double>(d.rows() - d.cols()));
      const double sigma = std::sqrt(resid.squaredNorm() / dof);
      for (Eigen::Index i = 0; i < targets.size(); ++i) targets[i] += sigma * rng.normal();
    }
  }
  const Eigen::MatrixXd xs = subset_columns(train.x(), predictors);
  GlmModel stage2 = fit_glm_model(xs, targets, Eigen::VectorXd::Ones(xs.rows()), second_stage_spec,
                                  stage2_family, options.glm);
  FittedModel model(std::move(stage2), predictors, target_a, TailorMethod::Standardized, clip_unit);
  if (!stage1.fit().converged) model.warnings.push_back("outcome model did not converge");
  note_convergence(model, model.inner().fit(), "second-stage model");
  return model;
}

}  // namespace cfpred
