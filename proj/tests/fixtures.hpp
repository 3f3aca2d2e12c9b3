#pragma once

// Random instance generators shared by the unit and acceptance tests.

#include <cstdint>
#include <vector>

#include "cfpred/core.hpp"
#include "cfpred/glm.hpp"
#include "cfpred/rng.hpp"
#include "cfpred/tailor.hpp"

namespace fixture {

// A model with fixed coefficients over a design on X*, independent of any data.
cfpred::FittedModel fixed_model(const Eigen::VectorXd& coefficients, const cfpred::DesignSpec& spec,
                                const cfpred::PredictorSubset& predictors, cfpred::Family family,
                                const Eigen::MatrixXd& basis_rows);

// Discrete instance: columns (x1, x2, x1*x2) with x in {0,1}^2, binary A and
// Y, all rows Test. Every stratum has both treatment levels and, within each
// (stratum, arm), both outcome values, so saturated logistic fits have finite
// solutions.
cfpred::Dataset discrete_instance(cfpred::Rng& rng, std::size_t n_min, std::size_t n_max);

// Two-period discrete instance: X_0 = (x0), X_1 = (x1, x0*x1), binary A_0,
// A_1 and Y. Guarantees the strata needed by saturated fits for regime
// (g0, g1).
cfpred::SequentialDataset two_period_instance(cfpred::Rng& rng, std::size_t n_min, std::size_t n_max, int g0,
                                              int g1);

// Continuous-covariate dataset with p columns, binary or continuous Y,
// treatment confounded by the first column. All rows Test.
cfpred::Dataset continuous_instance(cfpred::Rng& rng, std::size_t n, int p, bool binary_outcome);

}  // namespace fixture
