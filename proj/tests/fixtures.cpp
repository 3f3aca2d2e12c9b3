#include "fixtures.hpp"

#include <array>

namespace fixture {

using namespace cfpred;

FittedModel fixed_model(const Eigen::VectorXd& coefficients, const DesignSpec& spec,
                        const PredictorSubset& predictors, Family family, const Eigen::MatrixXd& basis_rows) {
  DesignBasis basis = DesignBasis::learn(subset_columns(basis_rows, predictors), spec);
  GlmFit fit;
  fit.coefficients = coefficients;
  fit.family = family;
  fit.design = spec;
  fit.converged = true;
  return FittedModel(GlmModel(std::move(basis), std::move(fit)), predictors, std::nullopt, TailorMethod::Plain);
}

Dataset discrete_instance(Rng& rng, std::size_t n_min, std::size_t n_max) {
  for (;;) {
    const std::size_t n = n_min + static_cast<std::size_t>(rng.below(n_max - n_min + 1));
    std::array<double, 4> pa{}, py{};
    for (int s = 0; s < 4; ++s) {
      pa[s] = rng.uniform(0.2, 0.8);
      py[s] = rng.uniform(0.2, 0.8);
    }
    Eigen::MatrixXd x(static_cast<Eigen::Index>(n), 3);
    std::vector<int> a(n);
    Eigen::VectorXd y(static_cast<Eigen::Index>(n));
    int count[4][2][2] = {};
    for (std::size_t i = 0; i < n; ++i) {
      const auto r = static_cast<Eigen::Index>(i);
      const int x1 = rng.bernoulli(0.5), x2 = rng.bernoulli(0.5);
      const int s = 2 * x1 + x2;
      x(r, 0) = x1;
      x(r, 1) = x2;
      x(r, 2) = x1 * x2;
      a[i] = rng.bernoulli(pa[s]);
      const int yi = rng.bernoulli(py[s] * (a[i] ? 0.7 : 1.0));
      y[r] = yi;
      ++count[s][a[i]][yi];
    }
    bool ok = true;
    for (auto& s : count) {
      for (auto& arm : s) ok = ok && arm[0] > 0 && arm[1] > 0;
    }
    if (ok) return Dataset(x, a, y, std::vector<Split>(n, Split::Test), OutcomeType::Binary, {"x1", "x2", "x12"});
  }
}

SequentialDataset two_period_instance(Rng& rng, std::size_t n_min, std::size_t n_max, int g0, int g1) {
  for (;;) {
    const std::size_t n = n_min + static_cast<std::size_t>(rng.below(n_max - n_min + 1));
    Eigen::MatrixXd x0(static_cast<Eigen::Index>(n), 1), x1(static_cast<Eigen::Index>(n), 2);
    std::vector<int> a0(n), a1(n);
    Eigen::VectorXd y(static_cast<Eigen::Index>(n));
    int arm0[2][2] = {};     // [x0][a0]
    int arm1[2][2][2] = {};  // [x0][x1][a1] among A0 = g0
    for (std::size_t i = 0; i < n; ++i) {
      const auto r = static_cast<Eigen::Index>(i);
      const int v0 = rng.bernoulli(0.5);
      a0[i] = rng.bernoulli(v0 ? 0.6 : 0.4);
      const int v1 = rng.bernoulli(0.3 + 0.4 * v0 - 0.1 * a0[i]);
      a1[i] = rng.bernoulli(0.35 + 0.3 * v1);
      y[r] = rng.bernoulli(0.2 + 0.2 * v0 + 0.3 * v1 - 0.1 * a0[i] - 0.1 * a1[i] + 0.05);
      x0(r, 0) = v0;
      x1(r, 0) = v1;
      x1(r, 1) = v0 * v1;
      ++arm0[v0][a0[i]];
      if (a0[i] == g0) ++arm1[v0][v1][a1[i]];
    }
    bool ok = true;
    for (auto& s : arm0) ok = ok && s[0] > 0 && s[1] > 0;
    for (auto& s0 : arm1) {
      for (auto& s1 : s0) ok = ok && s1[0] > 0 && s1[1] > 0 && s1[g1] > 0;
    }
    if (ok) return SequentialDataset({x0, x1}, {a0, a1}, y, OutcomeType::Binary);
  }
}

Dataset continuous_instance(Rng& rng, std::size_t n, int p, bool binary_outcome) {
  Eigen::MatrixXd x(static_cast<Eigen::Index>(n), p);
  std::vector<int> a(n);
  Eigen::VectorXd y(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    for (int j = 0; j < p; ++j) x(r, j) = rng.normal();
    a[i] = rng.bernoulli(expit(0.3 + 0.8 * x(r, 0)));
    const double eta = 0.2 + x(r, 0) - 0.5 * (p > 1 ? x(r, 1) : 0.0) - 0.7 * a[i];
    y[r] = binary_outcome ? (rng.bernoulli(expit(eta)) ? 1.0 : 0.0) : eta + rng.normal();
  }
  return Dataset(x, a, y, std::vector<Split>(n, Split::Test),
                 binary_outcome ? OutcomeType::Binary : OutcomeType::Continuous);
}

}  // namespace fixture
