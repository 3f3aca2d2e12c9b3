#include "cfpred/perf.hpp"

#include <cmath>

namespace cfpred {

std::string estimator_name(EstimatorKind k) {
  switch (k) {
    case EstimatorKind::Naive: return "naive";
    case EstimatorKind::CL: return "cl";
    case EstimatorKind::IPW: return "ipw";
    case EstimatorKind::DR: return "dr";
    case EstimatorKind::OM: return "om";
  }
  return "unknown";
}

EstimatorKind parse_estimator(const std::string& name) {
  if (name == "naive") return EstimatorKind::Naive;
  if (name == "cl") return EstimatorKind::CL;
  if (name == "ipw") return EstimatorKind::IPW;
  if (name == "dr") return EstimatorKind::DR;
  if (name == "om") return EstimatorKind::OM;
  fail(ErrorCode::InvalidArgument, "unknown estimator '" + name + "'");
}

std::string measure_name(MeasureKind m, Loss loss) {
  switch (m) {
    case MeasureKind::Loss: return loss == Loss::Squared ? "mse" : "mae";
    case MeasureKind::Auc: return "auc";
    case MeasureKind::Calibration: return "calibration";
  }
  return "unknown";
}

namespace formulas {

namespace {

void same_length(std::size_t n, std::initializer_list<std::size_t> others) {
  for (auto m : others) {
    if (m != n) fail(ErrorCode::InvalidArgument, "estimator inputs have different lengths");
  }
  if (n == 0) fail(ErrorCode::InvalidArgument, "empty test set");
}

}  // namespace

double mean(std::span<const double> v) {
  if (v.empty()) fail(ErrorCode::InvalidArgument, "empty test set");
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double ipw(std::span<const int> a, int target_a, std::span<const double> e, std::span<const double> losses) {
  same_length(a.size(), {e.size(), losses.size()});
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] == target_a) s += losses[i] / e[i];
  }
  return s / static_cast<double>(a.size());
}

double dr(std::span<const int> a, int target_a, std::span<const double> e, std::span<const double> h,
          std::span<const double> losses) {
  same_length(a.size(), {e.size(), h.size(), losses.size()});
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    s += h[i];
    if (a[i] == target_a) s += (losses[i] - h[i]) / e[i];
  }
  return s / static_cast<double>(a.size());
}

double stochastic_cl(std::span<const double> pi1, std::span<const double> h0, std::span<const double> h1) {
  same_length(pi1.size(), {h0.size(), h1.size()});
  double s = 0.0;
  for (std::size_t i = 0; i < pi1.size(); ++i) s += pi1[i] * h1[i] + (1.0 - pi1[i]) * h0[i];
  return s / static_cast<double>(pi1.size());
}

double stochastic_ipw(std::span<const int> a, std::span<const double> pi1, std::span<const double> e0,
                      std::span<const double> e1, std::span<const double> losses) {
  same_length(a.size(), {pi1.size(), e0.size(), e1.size(), losses.size()});
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    // (L * pi) / e: with pi = 1 this is L / e bit for bit, as in the static form.
    s += a[i] == 1 ? losses[i] * pi1[i] / e1[i] : losses[i] * (1.0 - pi1[i]) / e0[i];
  }
  return s / static_cast<double>(a.size());
}

}  // namespace formulas

namespace {

std::span<const double> as_span(const Eigen::VectorXd& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}

PerfEstimate make_estimate(EstimatorKind kind, const Dataset& test, Loss loss, double value,
                           std::string regime) {
  PerfEstimate est;
  est.kind = kind;
  est.measure = MeasureKind::Loss;
  est.loss = loss;
  est.value = value;
  est.n_test = test.size();
  est.regime = std::move(regime);
  return est;
}

std::string static_label(int a) { return regime_label(Regime{StaticRegime{a}}); }

}  // namespace

Eigen::VectorXd model_losses(const Dataset& test, const FittedModel& model, Loss loss) {
  const Eigen::VectorXd mu = model.predict(test.x());
  Eigen::VectorXd out(mu.size());
  for (Eigen::Index i = 0; i < mu.size(); ++i) out[i] = evaluate_loss(loss, test.y()[i], mu[i]);
  return out;
}

PerfEstimate loss_naive(const Dataset& test, const FittedModel& model, Loss loss) {
  if (test.empty()) fail(ErrorCode::InvalidArgument, "empty test set");
  const Eigen::VectorXd losses = model_losses(test, model, loss);
  return make_estimate(EstimatorKind::Naive, test, loss, formulas::mean(as_span(losses)), "natural");
}

PerfEstimate loss_cl(const Dataset& test, const FittedModel& model, const NuisanceSet& nuis) {
  if (test.empty()) fail(ErrorCode::InvalidArgument, "empty test set");
  const Eigen::VectorXd mu = model.predict(test.x());
  const Eigen::VectorXd h = nuis.require_cond_loss().evaluate(test.x(), mu);
  return make_estimate(EstimatorKind::CL, test, nuis.loss, formulas::mean(as_span(h)),
                       static_label(nuis.target_a));
}

PerfEstimate loss_ipw(const Dataset& test, const NuisanceSet& nuis, const FittedModel& model) {
  if (test.empty()) fail(ErrorCode::InvalidArgument, "empty test set");
  const Eigen::VectorXd losses = model_losses(test, model, nuis.loss);
  const Eigen::VectorXd e = nuis.require_propensity().evaluate(test.x());
  return make_estimate(EstimatorKind::IPW, test, nuis.loss,
                       formulas::ipw(test.a(), nuis.target_a, as_span(e), as_span(losses)),
                       static_label(nuis.target_a));
}

PerfEstimate loss_dr(const Dataset& test, const NuisanceSet& nuis, const FittedModel& model) {
  if (test.empty()) fail(ErrorCode::InvalidArgument, "empty test set");
  const Eigen::VectorXd mu = model.predict(test.x());
  Eigen::VectorXd losses(mu.size());
  for (Eigen::Index i = 0; i < mu.size(); ++i) losses[i] = evaluate_loss(nuis.loss, test.y()[i], mu[i]);
  const Eigen::VectorXd e = nuis.require_propensity().evaluate(test.x());
  const Eigen::VectorXd h = nuis.require_cond_loss().evaluate(test.x(), mu);
  return make_estimate(EstimatorKind::DR, test, nuis.loss,
                       formulas::dr(test.a(), nuis.target_a, as_span(e), as_span(h), as_span(losses)),
                       static_label(nuis.target_a));
}

PerfEstimate loss_stochastic(const Dataset& test, const StochasticRegime& regime,
                             const NuisanceSet& arm0, const NuisanceSet& arm1,
                             const FittedModel& model, Loss loss, EstimatorKind kind) {
  if (test.empty()) fail(ErrorCode::InvalidArgument, "empty test set");
  if (arm0.target_a != 0 || arm1.target_a != 1) {
    fail(ErrorCode::InvalidArgument, "stochastic estimators need nuisances for arm 0 and arm 1, in order");
  }
  const auto n = static_cast<Eigen::Index>(test.size());
  Eigen::VectorXd pi1(n);
  for (Eigen::Index i = 0; i < n; ++i) pi1[i] = regime.prob_treated(test.x().row(i).transpose());
  const Eigen::VectorXd mu = model.predict(test.x());

  double value = 0.0;
  if (kind == EstimatorKind::CL) {
    const Eigen::VectorXd h0 = arm0.require_cond_loss().evaluate(test.x(), mu);
    const Eigen::VectorXd h1 = arm1.require_cond_loss().evaluate(test.x(), mu);
    value = formulas::stochastic_cl(as_span(pi1), as_span(h0), as_span(h1));
  } else if (kind == EstimatorKind::IPW) {
    Eigen::VectorXd losses(n);
    for (Eigen::Index i = 0; i < n; ++i) losses[i] = evaluate_loss(loss, test.y()[i], mu[i]);
    const Eigen::VectorXd e0 = arm0.require_propensity().evaluate(test.x());
    const Eigen::VectorXd e1 = arm1.require_propensity().evaluate(test.x());
    value = formulas::stochastic_ipw(test.a(), as_span(pi1), as_span(e0), as_span(e1), as_span(losses));
  } else {
    fail(ErrorCode::InvalidArgument, "stochastic regimes support the CL and IPW estimators only");
  }
  return make_estimate(kind, test, loss, value, regime.label);
}

PerfEstimate estimate_loss(const Dataset& test, const FittedModel& model, const NuisanceSet& nuis,
                           EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::Naive: return loss_naive(test, model, nuis.loss);
    case EstimatorKind::CL:
    case EstimatorKind::OM: return loss_cl(test, model, nuis);
    case EstimatorKind::IPW: return loss_ipw(test, nuis, model);
    case EstimatorKind::DR: return loss_dr(test, nuis, model);
  }
  fail(ErrorCode::InvalidArgument, "unknown estimator");
}

}  // namespace cfpred
