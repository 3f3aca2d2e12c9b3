#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "cfpred/perf.hpp"

namespace cfpred {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double tricube(double u) {
  u = std::abs(u);
  if (u >= 1.0) return 0.0;
  const double t = 1.0 - u * u * u;
  return t * t * t;
}

// Weighted local-linear fit of r on s evaluated at g.
double local_linear_at(double g, const Eigen::VectorXd& s, const Eigen::VectorXd& r,
                       const Eigen::VectorXd& c) {
  double sw = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (c[i] == 0.0) continue;
    const double d = s[i] - g;
    sw += c[i];
    sx += c[i] * d;
    sy += c[i] * r[i];
    sxx += c[i] * d * d;
    sxy += c[i] * d * r[i];
  }
  if (!(sw > 0.0)) return kNaN;
  const double det = sw * sxx - sx * sx;
  if (std::abs(det) <= 1e-12 * sw * sxx || sxx == 0.0) return sy / sw;
  return (sxx * sy - sx * sxy) / det;
}

}  // namespace

PerfEstimate calibration_curve(const Dataset& test, const FittedModel& model, const NuisanceSet* nuis,
                               CalibrationMethod method, EstimatorKind kind) {
  if (test.outcome() != OutcomeType::Binary) {
    fail(ErrorCode::InvalidArgument, "calibration curves require a binary outcome");
  }
  if (test.empty()) fail(ErrorCode::InvalidArgument, "empty test set");
  const Eigen::VectorXd mu = model.predict(test.x());
  const auto n = mu.size();

  // Per-row weight and response; the curve is sum(w r) / sum(w) locally.
  Eigen::VectorXd weight = Eigen::VectorXd::Ones(n);
  Eigen::VectorXd response = test.y();
  std::string regime = "natural";
  switch (kind) {
    case EstimatorKind::Naive:
      break;
    case EstimatorKind::IPW: {
      if (!nuis) fail(ErrorCode::InvalidArgument, "IPW calibration needs a propensity model");
      const Eigen::VectorXd e = nuis->require_propensity().evaluate(test.x());
      for (Eigen::Index i = 0; i < n; ++i) {
        weight[i] = test.a()[static_cast<std::size_t>(i)] == nuis->target_a ? 1.0 / e[i] : 0.0;
      }
      regime = regime_label(Regime{StaticRegime{nuis->target_a}});
      break;
    }
    case EstimatorKind::OM:
    case EstimatorKind::CL:
      if (!nuis) fail(ErrorCode::InvalidArgument, "OM calibration needs an outcome model");
      response = nuis->require_cond_loss().outcome_prob(test.x());
      kind = EstimatorKind::OM;
      regime = regime_label(Regime{StaticRegime{nuis->target_a}});
      break;
    case EstimatorKind::DR:
      fail(ErrorCode::InvalidArgument, "no doubly robust calibration estimator is provided");
  }

  PerfEstimate est;
  est.kind = kind;
  est.measure = MeasureKind::Calibration;
  est.n_test = test.size();
  est.regime = regime;

  if (method.kind == CalibrationMethod::Kind::Binned) {
    const auto k = static_cast<std::size_t>(method.bins);
    if (method.bins < 1 || k > test.size()) {
      fail(ErrorCode::InvalidArgument, "bin count must lie in [1, n_test]");
    }
    std::vector<std::size_t> order(test.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t l, std::size_t r) { return mu[l] < mu[r]; });
    for (std::size_t b = 0; b < k; ++b) {
      const std::size_t lo = b * test.size() / k;
      const std::size_t hi = (b + 1) * test.size() / k;
      double sum_mu = 0, sum_w = 0, sum_wr = 0;
      for (std::size_t t = lo; t < hi; ++t) {
        const auto i = static_cast<Eigen::Index>(order[t]);
        sum_mu += mu[i];
        sum_w += weight[i];
        sum_wr += weight[i] * response[i];
      }
      CalibrationPoint p;
      p.count = hi - lo;
      p.predicted = sum_mu / static_cast<double>(p.count);
      p.observed = sum_w > 0.0 ? sum_wr / sum_w : kNaN;
      est.curve.push_back(p);
    }
  } else {
    if (!(method.bandwidth_fraction > 0.0)) fail(ErrorCode::InvalidArgument, "bandwidth must be positive");
    if (method.grid_points < 2) fail(ErrorCode::InvalidArgument, "grid needs at least two points");
    const double lo = mu.minCoeff();
    const double hi = mu.maxCoeff();
    const double range = hi - lo;
    if (range == 0.0) {
      const double sum_w = weight.sum();
      est.curve.push_back({lo, sum_w > 0 ? weight.dot(response) / sum_w : kNaN, test.size()});
    } else {
      const double bandwidth = method.bandwidth_fraction * range;
      for (int gi = 0; gi < method.grid_points; ++gi) {
        const double g = lo + range * gi / (method.grid_points - 1);
        Eigen::VectorXd c(n);
        std::size_t count = 0;
        for (Eigen::Index i = 0; i < n; ++i) {
          const double kern = tricube((mu[i] - g) / bandwidth);
          c[i] = kern * weight[i];
          if (kern > 0) ++count;
        }
        est.curve.push_back({g, local_linear_at(g, mu, response, c), count});
      }
    }
  }
  return est;
}

}  // namespace cfpred
