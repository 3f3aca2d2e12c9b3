#include "cfpred/longitudinal.hpp"

#include <algorithm>

namespace cfpred {

namespace {

void check_regime(const SequentialDataset& data, const SequentialRegime& regime) {
  if (regime.rules.size() != data.times()) {
    fail(ErrorCode::InvalidRegime, "regime has " + std::to_string(regime.rules.size()) +
                                       " rules but the data has " + std::to_string(data.times()) +
                                       " time points");
  }
}

Eigen::MatrixXd rows_of(const Eigen::MatrixXd& m, const std::vector<std::size_t>& rows) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), m.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    out.row(static_cast<Eigen::Index>(r)) = m.row(static_cast<Eigen::Index>(rows[r]));
  }
  return out;
}

const DesignSpec& spec_at(const std::vector<DesignSpec>& specs, const std::vector<DesignSpec>& defaults,
                          std::size_t k) {
  if (specs.empty()) return defaults[k];
  if (specs.size() != defaults.size()) {
    fail(ErrorCode::InvalidArgument, "need one design per time point");
  }
  return specs[k];
}

}  // namespace

std::vector<std::vector<int>> regime_treatments(const SequentialDataset& data, const SequentialRegime& regime) {
  check_regime(data, regime);
  std::vector<std::vector<int>> out(data.times(), std::vector<int>(data.size()));
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (std::size_t k = 0; k < data.times(); ++k) {
      const auto a_hist = data.a_history(i, k);
      const auto x_hist = data.x_history(i, k);
      const int a = regime.rules[k](a_hist, x_hist);
      if (a != 0 && a != 1) fail(ErrorCode::InvalidRegime, "regime rule returned a non-binary treatment");
      out[k][i] = a;
    }
  }
  return out;
}

std::vector<std::size_t> follower_counts(const SequentialDataset& data, const SequentialRegime& regime) {
  const auto g = regime_treatments(data, regime);
  std::vector<bool> following(data.size(), true);
  std::vector<std::size_t> counts;
  for (std::size_t k = 0; k < data.times(); ++k) {
    std::size_t c = 0;
    for (std::size_t i = 0; i < data.size(); ++i) {
      following[i] = following[i] && data.a(k)[i] == g[k][i];
      c += following[i] ? 1 : 0;
    }
    counts.push_back(c);
  }
  return counts;
}

std::vector<DesignSpec> default_history_specs(const SequentialDataset& data) {
  std::vector<DesignSpec> specs;
  int width = 0;
  for (std::size_t k = 0; k < data.times(); ++k) {
    width += static_cast<int>(data.x(k).cols());
    specs.push_back(DesignSpec::linear(width));
  }
  return specs;
}

SequentialWeights sequential_weights(const SequentialDataset& data, const SequentialRegime& regime,
                                     const SequentialWeightOptions& options) {
  options.clip.validate();
  const auto g = regime_treatments(data, regime);
  const auto defaults = default_history_specs(data);
  std::vector<DesignSpec> numerator_defaults(data.times(), DesignSpec::linear(static_cast<int>(data.x(0).cols())));

  const auto n = data.size();
  Eigen::VectorXd denominator = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(n));
  Eigen::VectorXd numerator = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(n));
  std::vector<std::size_t> followers(n);
  for (std::size_t i = 0; i < n; ++i) followers[i] = i;

  SequentialWeights out;
  out.stabilized = options.stabilize;
  for (std::size_t k = 0; k < data.times(); ++k) {
    if (followers.empty()) fail(ErrorCode::Positivity, "no subjects follow the regime before time " + std::to_string(k));
    std::vector<int> a_k;
    Eigen::VectorXd treated(static_cast<Eigen::Index>(followers.size()));
    for (std::size_t r = 0; r < followers.size(); ++r) {
      a_k.push_back(data.a(k)[followers[r]]);
      treated[static_cast<Eigen::Index>(r)] = a_k.back();
    }
    if (std::count(a_k.begin(), a_k.end(), 0) == 0 || std::count(a_k.begin(), a_k.end(), 1) == 0) {
      fail(ErrorCode::Positivity, "positivity failure at time " + std::to_string(k) +
                                      ": only one treatment level among regime followers");
    }
    const Eigen::MatrixXd hist = rows_of(data.history_features(k), followers);
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(hist.rows());
    const GlmModel den = fit_glm_model(hist, treated, ones, spec_at(options.propensity_specs, defaults, k),
                                       Family::BinomialLogit, options.glm);
    std::optional<GlmModel> num;
    if (options.stabilize) {
      const Eigen::MatrixXd base = rows_of(data.x(0), followers);
      num = fit_glm_model(base, treated, ones, spec_at(options.numerator_specs, numerator_defaults, k),
                          Family::BinomialLogit, options.glm);
    }

    std::vector<std::size_t> next;
    for (std::size_t r = 0; r < followers.size(); ++r) {
      const std::size_t i = followers[r];
      const int target = g[k][i];
      if (a_k[r] != target) continue;
      const double p1 = den.predict(Eigen::VectorXd(hist.row(static_cast<Eigen::Index>(r)).transpose()));
      denominator[static_cast<Eigen::Index>(i)] *= options.clip.apply(target == 1 ? p1 : 1.0 - p1);
      if (num) {
        const double q1 = num->predict(Eigen::VectorXd(data.x(0).row(static_cast<Eigen::Index>(i)).transpose()));
        numerator[static_cast<Eigen::Index>(i)] *= options.clip.apply(target == 1 ? q1 : 1.0 - q1);
      }
      next.push_back(i);
    }
    followers = std::move(next);
    out.followers.push_back(followers.size());
  }
  if (followers.empty()) fail(ErrorCode::Positivity, "no subjects follow the regime through the horizon");

  out.weights = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  for (std::size_t i : followers) {
    const auto r = static_cast<Eigen::Index>(i);
    out.weights[r] = numerator[r] / denominator[r];
  }
  return out;
}

PerfEstimate loss_ipw_sequential(const SequentialDataset& data, const SequentialRegime& regime,
                                 const SequentialWeights& weights, const FittedModel& model, Loss loss) {
  if (weights.weights.size() != static_cast<Eigen::Index>(data.size())) {
    fail(ErrorCode::InvalidArgument, "weights were computed on different rows");
  }
  if (data.size() == 0) fail(ErrorCode::InvalidArgument, "empty test set");
  if (weights.stabilized) {
    fail(ErrorCode::InvalidArgument, "performance estimation needs unstabilized weights");
  }
  const Eigen::VectorXd mu = model.predict(data.x(0));
  double s = 0.0;
  for (Eigen::Index i = 0; i < mu.size(); ++i) {
    const double w = weights.weights[i];
    if (w != 0.0) s += w * evaluate_loss(loss, data.y()[i], mu[i]);
  }
  PerfEstimate est;
  est.kind = EstimatorKind::IPW;
  est.loss = loss;
  est.value = s / static_cast<double>(data.size());
  est.n_test = data.size();
  est.regime = regime.label;
  return est;
}

FittedModel fit_tailored_sequential(const SequentialDataset& train, const SequentialWeights& weights,
                                    const PredictorSubset& predictors, const DesignSpec& model_spec,
                                    Family family, GlmOptions options) {
  if (weights.weights.size() != static_cast<Eigen::Index>(train.size())) {
    fail(ErrorCode::InvalidArgument, "weights were computed on different rows");
  }
  if (family == Family::BinomialLogit && train.outcome() != OutcomeType::Binary) {
    fail(ErrorCode::InvalidArgument, "binomial family requires a binary outcome");
  }
  predictors.validate(train.x(0).cols());
  const Eigen::MatrixXd xs = subset_columns(train.x(0), predictors);
  GlmModel glm = fit_glm_model(xs, train.y(), weights.weights, model_spec, family, options);
  const bool ok = glm.fit().converged;
  FittedModel model(std::move(glm), predictors, std::nullopt, TailorMethod::IpwWeighted);
  if (!ok) model.warnings.push_back("weighted prediction model did not converge");
  return model;
}

PerfEstimate loss_ice_sequential(const SequentialDataset& data, const SequentialRegime& regime,
                                 const FittedModel& model, Loss loss, const IceOptions& options) {
  if (data.size() == 0) fail(ErrorCode::InvalidArgument, "empty test set");
  const auto g = regime_treatments(data, regime);
  const auto defaults = default_history_specs(data);
  const auto n = data.size();

  // follows[k][i]: A_0..A_k of subject i match the regime.
  std::vector<std::vector<bool>> follows(data.times(), std::vector<bool>(n));
  for (std::size_t i = 0; i < n; ++i) {
    bool f = true;
    for (std::size_t k = 0; k < data.times(); ++k) {
      f = f && data.a(k)[i] == g[k][i];
      follows[k][i] = f;
    }
  }

  const Eigen::VectorXd mu = model.predict(data.x(0));
  Eigen::VectorXd pseudo(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    pseudo[r] = evaluate_loss(loss, data.y()[r], mu[r]);
  }

  for (std::size_t step = 0; step < data.times(); ++step) {
    const std::size_t t = data.horizon() - step;
    std::vector<std::size_t> fit_rows, scope_rows;
    for (std::size_t i = 0; i < n; ++i) {
      if (follows[t][i]) fit_rows.push_back(i);
      if (t == 0 || follows[t - 1][i]) scope_rows.push_back(i);
    }
    if (fit_rows.empty()) {
      fail(ErrorCode::Positivity, "no subjects follow the regime through time " + std::to_string(t));
    }
    const Eigen::MatrixXd hist = data.history_features(t);
    const Eigen::MatrixXd fit_x = rows_of(hist, fit_rows);
    Eigen::VectorXd fit_y(static_cast<Eigen::Index>(fit_rows.size()));
    for (std::size_t r = 0; r < fit_rows.size(); ++r) {
      fit_y[static_cast<Eigen::Index>(r)] = pseudo[static_cast<Eigen::Index>(fit_rows[r])];
    }
    const GlmModel reg = fit_glm_model(fit_x, fit_y, Eigen::VectorXd::Ones(fit_y.size()),
                                       spec_at(options.outcome_specs, defaults, t), Family::Gaussian,
                                       options.glm);
    Eigen::VectorXd next = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
    for (std::size_t i : scope_rows) {
      const auto r = static_cast<Eigen::Index>(i);
      next[r] = std::max(0.0, reg.predict(Eigen::VectorXd(hist.row(r).transpose())));
    }
    pseudo = next;
  }

  PerfEstimate est;
  est.kind = EstimatorKind::CL;
  est.loss = loss;
  est.value = pseudo.mean();
  est.n_test = n;
  est.regime = regime.label;
  return est;
}

}  // namespace cfpred
