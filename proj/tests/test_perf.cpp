#include <doctest.h>

#include <cmath>
#include <vector>

#include "cfpred/perf.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace cfpred;

namespace {

std::vector<double> to_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

FittedModel binary_model(const Dataset& d) {
  Eigen::VectorXd coef(3);
  coef << -0.4, 0.9, -0.6;
  return fixture::fixed_model(coef, DesignSpec::linear(2), PredictorSubset({0, 1}), Family::BinomialLogit, d.x());
}

NuisanceSet saturated(const Dataset& test, const FittedModel& m, int a) {
  NuisanceSpecs specs;
  specs.propensity = DesignSpec::linear(3);
  specs.cond_loss = DesignSpec::linear(3);
  specs.clip = ClipBounds::simulation();
  return fit_nuisances(test, m, specs, a, Loss::Squared, GlmOptions{100, 1e-12});
}

}  // namespace

TEST_CASE("plug-in formulas on hand values") {
  const std::vector<int> a{1, 0, 1, 0};
  const std::vector<double> e{0.5, 0.25, 0.25, 0.5};
  const std::vector<double> l{1.0, 2.0, 3.0, 4.0};
  const std::vector<double> h{0.5, 0.5, 0.5, 0.5};
  CHECK(formulas::mean(l) == 2.5);
  CHECK(formulas::ipw(a, 1, e, l) == doctest::Approx((2.0 + 12.0) / 4.0));
  CHECK(formulas::ipw(a, 0, e, l) == doctest::Approx((8.0 + 8.0) / 4.0));
  // mean of h + I/e (L - h)
  CHECK(formulas::dr(a, 1, e, h, l) == doctest::Approx((0.5 + 1.0 + 0.5 + 0.5 + 10.0 + 0.5) / 4.0));
  const std::vector<double> pi1{1.0, 0.0, 0.5, 0.5};
  const std::vector<double> h0{1, 2, 3, 4}, h1{5, 6, 7, 8};
  CHECK(formulas::stochastic_cl(pi1, h0, h1) == doctest::Approx((5 + 2 + 5 + 6) / 4.0));
  CHECK_THROWS_AS(formulas::ipw(a, 1, std::vector<double>{0.5}, l), Error);
}

TEST_CASE("weighted AUC matches the pair loop, ties counted half") {
  const std::vector<double> s{0.1, 0.4, 0.4, 0.8, 0.8, 0.2};
  const std::vector<double> wc{0, 1, 0, 1, 1, 0};
  std::vector<double> wn(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) wn[i] = 1 - wc[i];
  // cases {0.4, 0.8, 0.8} vs controls {0.1, 0.4, 0.2}: 3*3 pairs, one tie.
  CHECK(formulas::weighted_auc(s, wc, wn) == doctest::Approx(8.5 / 9.0).epsilon(1e-15));
  CHECK(formulas::weighted_auc(s, wc, wn) == oracle::pairwise_auc(s, wc, wn));
  const std::vector<double> all(s.size(), 1.0), none(s.size(), 0.0);
  CHECK_THROWS_AS(formulas::weighted_auc(s, all, none), Error);
  // Fractional weights on the same unit: the self-pair is excluded.
  const std::vector<double> one{0.3}, half{0.5};
  CHECK_THROWS_AS(formulas::weighted_auc(one, half, half), Error);
}

TEST_CASE("estimators with known nuisances") {
  Rng rng(8);
  const Dataset d = fixture::continuous_instance(rng, 300, 2, true);
  const FittedModel m = binary_model(d);
  const Eigen::VectorXd losses = model_losses(d, m, Loss::Squared);

  NuisanceSet n;
  n.target_a = 0;
  n.propensity = PropensityModel::known([](const Eigen::VectorXd& x) { return 1.0 - expit(0.3 + 0.8 * x[0]); }, 0);
  n.cond_loss = CondLossModel::known([](const Eigen::VectorXd& x, double mu) { return 0.1 * x[0] * x[0] + mu; });

  double cl = 0, ipw = 0, dr = 0;
  const auto nn = static_cast<double>(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    const Eigen::VectorXd x = d.x().row(static_cast<Eigen::Index>(i)).transpose();
    const double mu = m.predict(x);
    const double h = 0.1 * x[0] * x[0] + mu;
    const double e = 1.0 - expit(0.3 + 0.8 * x[0]);
    const double ind = d.a()[i] == 0 ? 1.0 : 0.0;
    cl += h / nn;
    ipw += ind / e * losses[static_cast<Eigen::Index>(i)] / nn;
    dr += (h + ind / e * (losses[static_cast<Eigen::Index>(i)] - h)) / nn;
  }
  CHECK(loss_cl(d, m, n).value == doctest::Approx(cl).epsilon(1e-12));
  CHECK(loss_ipw(d, n, m).value == doctest::Approx(ipw).epsilon(1e-12));
  CHECK(loss_dr(d, n, m).value == doctest::Approx(dr).epsilon(1e-12));
  CHECK(estimate_loss(d, m, n, EstimatorKind::DR).value == loss_dr(d, n, m).value);
  CHECK(loss_naive(d, m, Loss::Squared).value == doctest::Approx(losses.mean()).epsilon(1e-14));
  CHECK(loss_dr(d, n, m).regime == "static(a=0)");

  NuisanceSet empty;
  CHECK_THROWS_AS(loss_cl(d, m, empty), Error);
  CHECK_THROWS_AS(loss_ipw(d, empty, m), Error);
}

TEST_CASE("saturated nuisances reproduce the g-formula on a discrete instance") {
  Rng rng(31);
  const Dataset d = fixture::discrete_instance(rng, 48, 64);
  const FittedModel m = binary_model(d);
  const std::vector<double> losses = to_std(model_losses(d, m, Loss::Squared));
  for (int a = 0; a <= 1; ++a) {
    const NuisanceSet n = saturated(d, m, a);
    const double truth = oracle::gformula_fixed(d.x(), d.a(), losses, [a](const Eigen::VectorXd&) { return a; });
    CHECK(std::abs(loss_cl(d, m, n).value - truth) < 1e-10);
    CHECK(std::abs(loss_ipw(d, n, m).value - truth) < 1e-10);
    CHECK(std::abs(loss_dr(d, n, m).value - truth) < 1e-10);
  }
}

TEST_CASE("stochastic regimes") {
  Rng rng(41);
  const Dataset d = fixture::discrete_instance(rng, 48, 64);
  const FittedModel m = binary_model(d);
  const NuisanceSet n0 = saturated(d, m, 0), n1 = saturated(d, m, 1);
  for (auto kind : {EstimatorKind::CL, EstimatorKind::IPW}) {
    const double s1 = loss_stochastic(d, StochasticRegime::constant(1.0), n0, n1, m, Loss::Squared, kind).value;
    const double st = estimate_loss(d, m, n1, kind).value;
    CHECK(s1 == doctest::Approx(st).epsilon(1e-12));
  }
  StochasticRegime g;
  g.pi_star = [](const Eigen::VectorXd& x) { return 0.2 + 0.6 * x[0]; };
  const std::vector<double> losses = to_std(model_losses(d, m, Loss::Squared));
  const double truth = oracle::gformula_fixed(d.x(), d.a(), losses, g.pi_star);
  CHECK(std::abs(loss_stochastic(d, g, n0, n1, m, Loss::Squared, EstimatorKind::CL).value - truth) < 1e-10);
  CHECK(std::abs(loss_stochastic(d, g, n0, n1, m, Loss::Squared, EstimatorKind::IPW).value - truth) < 1e-10);
  CHECK_THROWS_AS(loss_stochastic(d, g, n0, n1, m, Loss::Squared, EstimatorKind::DR), Error);
  CHECK_THROWS_AS(loss_stochastic(d, g, n1, n0, m, Loss::Squared, EstimatorKind::CL), Error);
}

TEST_CASE("AUC estimators use the documented weights") {
  Rng rng(5);
  const Dataset d = fixture::continuous_instance(rng, 150, 2, true);
  const FittedModel m = binary_model(d);
  const std::vector<double> s = to_std(m.predict(d.x()));
  const std::vector<double> y = to_std(d.y());
  std::vector<double> ny(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) ny[i] = 1 - y[i];
  CHECK(auc_estimate(d, m, EstimatorKind::Naive).value == doctest::Approx(oracle::pairwise_auc(s, y, ny)).epsilon(1e-14));

  NuisanceSet n;
  n.target_a = 1;
  n.propensity = PropensityModel::known([](const Eigen::VectorXd& x) { return expit(0.3 + 0.8 * x[0]); }, 1);
  n.cond_loss = CondLossModel::from_outcome_prob([](const Eigen::VectorXd& x) { return expit(x[0] - x[1]); },
                                                 Loss::Squared);
  std::vector<double> wc(s.size()), wn(s.size()), qc(s.size()), qn(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    const Eigen::VectorXd x = d.x().row(static_cast<Eigen::Index>(i)).transpose();
    const double w = d.a()[i] == 1 ? 1.0 / expit(0.3 + 0.8 * x[0]) : 0.0;
    wc[i] = w * y[i];
    wn[i] = w * ny[i];
    qc[i] = expit(x[0] - x[1]);
    qn[i] = 1 - qc[i];
  }
  CHECK(auc_estimate(d, m, EstimatorKind::IPW, &n).value == doctest::Approx(oracle::pairwise_auc(s, wc, wn)).epsilon(1e-12));
  const PerfEstimate om = auc_estimate(d, m, EstimatorKind::OM, &n);
  CHECK(om.value == doctest::Approx(oracle::pairwise_auc(s, qc, qn)).epsilon(1e-12));
  CHECK(om.kind == EstimatorKind::OM);
  CHECK_THROWS_AS(auc_estimate(d, m, EstimatorKind::DR, &n), Error);
  CHECK_THROWS_AS(auc_estimate(d, m, EstimatorKind::IPW), Error);
}

TEST_CASE("binned calibration") {
  Rng rng(12);
  const Dataset d = fixture::continuous_instance(rng, 1003, 2, true);
  const FittedModel m = binary_model(d);
  const PerfEstimate c = calibration_curve(d, m, nullptr, CalibrationMethod::binned(10), EstimatorKind::Naive);
  REQUIRE(c.curve.size() == 10);
  std::size_t total = 0;
  for (std::size_t b = 0; b < c.curve.size(); ++b) {
    total += c.curve[b].count;
    CHECK(c.curve[b].count >= 100);
    CHECK(c.curve[b].count <= 101);
    if (b > 0) CHECK(c.curve[b].predicted >= c.curve[b - 1].predicted);
    CHECK(c.curve[b].observed >= 0.0);
    CHECK(c.curve[b].observed <= 1.0);
  }
  CHECK(total == d.size());
  // One bin: the overall event rate.
  const PerfEstimate one = calibration_curve(d, m, nullptr, CalibrationMethod::binned(1), EstimatorKind::Naive);
  CHECK(one.curve[0].observed == doctest::Approx(d.y().mean()).epsilon(1e-14));
  CHECK_THROWS_AS(calibration_curve(d, m, nullptr, CalibrationMethod::binned(0), EstimatorKind::Naive), Error);
}

TEST_CASE("local-linear calibration recovers a calibrated model") {
  Rng rng(99);
  const int n = 20000;
  Eigen::MatrixXd x(n, 1);
  std::vector<int> a(n, 0);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) {
    x(i, 0) = rng.normal();
    y[i] = rng.bernoulli(expit(x(i, 0)));
  }
  const Dataset d(x, a, y, std::vector<Split>(n, Split::Test), OutcomeType::Binary);
  Eigen::VectorXd coef(2);
  coef << 0, 1;
  const FittedModel m =
      fixture::fixed_model(coef, DesignSpec::linear(1), PredictorSubset({0}), Family::BinomialLogit, x);
  const PerfEstimate c =
      calibration_curve(d, m, nullptr, CalibrationMethod::local_linear(0.3), EstimatorKind::Naive);
  REQUIRE(c.curve.size() == 100);
  for (const auto& p : c.curve) {
    if (p.predicted > 0.15 && p.predicted < 0.85) CHECK(std::abs(p.observed - p.predicted) < 0.05);
  }
}

TEST_CASE("counterfactual cross-validation prefers the better model") {
  Rng rng(2024);
  const int n = 2000;
  Eigen::MatrixXd x(n, 1);
  std::vector<int> a(n);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) {
    x(i, 0) = rng.uniform(-2, 2);
    a[i] = rng.bernoulli(expit(x(i, 0)));
    y[i] = 1 + x(i, 0) * x(i, 0) - a[i] + 0.5 * rng.normal();
  }
  const Dataset d(x, a, y, std::vector<Split>(n, Split::Train), OutcomeType::Continuous);
  auto recipe = [](const std::string& name, DesignSpec spec) {
    return ModelRecipe{name, [spec](const Dataset& t) {
                         return fit_tailored_ipw(t, 0, DesignSpec::linear(1), PredictorSubset({0}), spec,
                                                 Family::Gaussian);
                       }};
  };
  CvOptions opt;
  opt.nuisance.propensity = DesignSpec::linear(1);
  opt.nuisance.cond_loss = DesignSpec::quadratic(1);
  const CvResult r = cv_select(d, {recipe("linear", DesignSpec::linear(1)), recipe("quadratic", DesignSpec::quadratic(1))},
                               opt);
  CHECK(r.selected == 1);
  REQUIRE(r.fold_scores.size() == 2);
  CHECK(r.fold_scores[0].size() == 5);
  CHECK(r.scores[1] < r.scores[0]);
  const CvResult again = cv_select(d, {recipe("linear", DesignSpec::linear(1)), recipe("quadratic", DesignSpec::quadratic(1))},
                                   opt);
  CHECK(again.scores == r.scores);
  opt.folds = 1;
  CHECK_THROWS_AS(cv_select(d, {recipe("linear", DesignSpec::linear(1))}, opt), Error);
}

TEST_CASE("estimator names round-trip") {
  for (auto k : {EstimatorKind::Naive, EstimatorKind::CL, EstimatorKind::IPW, EstimatorKind::DR, EstimatorKind::OM}) {
    CHECK(parse_estimator(estimator_name(k)) == k);
  }
  CHECK_THROWS_AS(parse_estimator("tmle"), Error);
}
