#include <doctest.h>

#include <cmath>

#include "cfpred/nuisance.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace cfpred;

TEST_CASE("propensity fit, complement and clipping") {
  Rng rng(10);
  const Dataset d = fixture::continuous_instance(rng, 2000, 2, true);
  const PropensityModel e1 = PropensityModel::fit(d, DesignSpec::linear(2), 1, ClipBounds::simulation());
  const PropensityModel e0 = PropensityModel::fit(d, DesignSpec::linear(2), 0, ClipBounds::simulation());
  CHECK(e1.converged());
  REQUIRE(e1.glm().has_value());
  for (int i = 0; i < 20; ++i) {
    const Eigen::VectorXd x = d.x().row(i).transpose();
    CHECK(e1(x) + e0(x) == doctest::Approx(1.0).epsilon(1e-12));
  }
  // Generating coefficients 0.3 + 0.8 x1.
  const Eigen::VectorXd b = e1.glm()->fit().coefficients;
  CHECK(std::abs(b[0] - 0.3) < 0.2);
  CHECK(std::abs(b[1] - 0.8) < 0.2);
  CHECK(std::abs(b[2]) < 0.2);

  const PropensityModel clipped = PropensityModel::fit(d, DesignSpec::linear(2), 1, ClipBounds{0.4, 0.6});
  const Eigen::VectorXd v = clipped.evaluate(d.x());
  CHECK(v.minCoeff() >= 0.4);
  CHECK(v.maxCoeff() <= 0.6);
  CHECK_THROWS_AS(PropensityModel::fit(d, DesignSpec::linear(2), 1, ClipBounds{0.6, 0.4}), Error);
  CHECK_THROWS_AS(PropensityModel::fit(d, DesignSpec::linear(2), 2, ClipBounds{}), Error);
}

TEST_CASE("propensity positivity edge cases") {
  Rng rng(11);
  const Dataset d = fixture::continuous_instance(rng, 200, 1, true);
  const Dataset arm1 = d.arm(1);
  try {
    PropensityModel::fit(arm1, DesignSpec::linear(1), 0, ClipBounds{});
    FAIL("expected a positivity error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Positivity);
  }
  const PropensityModel all = PropensityModel::fit(arm1, DesignSpec::linear(1), 1, ClipBounds{});
  CHECK(all(Eigen::VectorXd::Zero(1)) == 1.0);
}

TEST_CASE("conditional loss for binary outcomes is the expected loss under q") {
  Rng rng(12);
  const Dataset d = fixture::continuous_instance(rng, 1000, 2, true);
  Eigen::VectorXd coef(2);
  coef << 0.1, 0.5;
  const FittedModel m =
      fixture::fixed_model(coef, DesignSpec::linear(1), PredictorSubset({0}), Family::BinomialLogit, d.x());
  const CondLossModel h = CondLossModel::fit(d, m, DesignSpec::linear(2), 0, Loss::Squared);
  REQUIRE(h.has_outcome_prob());
  const Dataset arm = d.arm(0);
  const GlmFit q = fit_glm(build_design(arm.x(), DesignSpec::linear(2)), arm.y(),
                           Eigen::VectorXd::Ones(static_cast<Eigen::Index>(arm.size())), Family::BinomialLogit);
  for (int i = 0; i < 10; ++i) {
    const Eigen::VectorXd x = d.x().row(i).transpose();
    const double mu = m.predict(x);
    Eigen::RowVectorXd row(3);
    row << 1, x[0], x[1];
    const double qi = predict_glm(q, row);
    CHECK(h.outcome_prob(x) == doctest::Approx(qi).epsilon(1e-10));
    CHECK(h(x, mu) == doctest::Approx(qi * (1 - mu) * (1 - mu) + (1 - qi) * mu * mu).epsilon(1e-10));
  }
  CHECK(expected_binary_loss(Loss::Absolute, 0.3, 0.4) == doctest::Approx(0.3 * 0.6 + 0.7 * 0.4));
}

TEST_CASE("conditional loss for continuous outcomes is a floored loss regression") {
  Rng rng(13);
  const Dataset d = fixture::continuous_instance(rng, 500, 2, false);
  Eigen::VectorXd coef(2);
  coef << 0.0, 1.0;
  const FittedModel m =
      fixture::fixed_model(coef, DesignSpec::linear(1), PredictorSubset({0}), Family::Gaussian, d.x());
  const CondLossModel h = CondLossModel::fit(d, m, DesignSpec::quadratic(2), 1, Loss::Squared);
  CHECK(!h.has_outcome_prob());
  CHECK_THROWS_AS(h.outcome_prob(Eigen::VectorXd(Eigen::VectorXd::Zero(2))), Error);
  const Dataset arm = d.arm(1);
  Eigen::VectorXd losses(static_cast<Eigen::Index>(arm.size()));
  for (std::size_t i = 0; i < arm.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    losses[r] = std::pow(arm.y()[r] - arm.x()(r, 0), 2);
  }
  const Eigen::MatrixXd design = build_design(arm.x(), DesignSpec::quadratic(2));
  const Eigen::VectorXd b = oracle::normal_equations(design, losses, Eigen::VectorXd::Ones(losses.size()));
  for (Eigen::Index i = 0; i < 10; ++i) {
    const Eigen::VectorXd x = arm.x().row(i).transpose();
    const double ref = std::max(0.0, design.row(i).dot(b));
    CHECK(h(x, 0.0) == doctest::Approx(ref).epsilon(1e-9));
    CHECK(h(x, 0.0) >= 0.0);
  }
}

TEST_CASE("fit_nuisances fits only what is requested") {
  Rng rng(14);
  const Dataset d = fixture::continuous_instance(rng, 300, 2, true);
  Eigen::VectorXd coef(2);
  coef << 0.1, 0.5;
  const FittedModel m =
      fixture::fixed_model(coef, DesignSpec::linear(1), PredictorSubset({0}), Family::BinomialLogit, d.x());
  NuisanceSpecs specs;
  specs.propensity = DesignSpec::linear(2);
  const NuisanceSet only_e = fit_nuisances(d, m, specs, 1, Loss::Squared);
  CHECK(only_e.propensity.has_value());
  CHECK(!only_e.cond_loss.has_value());
  CHECK_THROWS_AS(only_e.require_cond_loss(), Error);
  specs.cond_loss = DesignSpec::linear(2);
  const NuisanceSet both = fit_nuisances(d, m, specs, 1, Loss::Squared);
  CHECK(both.target_a == 1);
  CHECK(both.cond_loss.has_value());
}
