#include "cfpred/glm.hpp"

#include <algorithm>
#include <cmath>

namespace cfpred {

namespace {

constexpr double kProbFloor = 1e-12;

void check_inputs(const Eigen::MatrixXd& design, const Eigen::VectorXd& y,
                  const Eigen::VectorXd& weights) {
  if (design.rows() != y.size() || design.rows() != weights.size()) {
    fail(ErrorCode::InvalidArgument, "design, outcome and weights have different lengths");
  }
  Eigen::Index positive = 0;
  for (Eigen::Index i = 0; i < weights.size(); ++i) {
    if (!(weights[i] >= 0.0) || !std::isfinite(weights[i])) {
      fail(ErrorCode::InvalidArgument, "weights must be finite and nonnegative");
    }
    if (weights[i] > 0.0) ++positive;
  }
  if (!design.allFinite() || !y.allFinite()) fail(ErrorCode::Data, "non-finite value in GLM inputs");
  if (positive < design.cols()) {
    fail(ErrorCode::RankDeficient, "fewer positively weighted rows (" + std::to_string(positive) +
                                       ") than design columns (" + std::to_string(design.cols()) + ")");
  }
}

// Solves min ||diag(sqrt_w) (X b - z)|| and reports rank deficiency.
Eigen::VectorXd weighted_solve(const Eigen::MatrixXd& design, const Eigen::VectorXd& z,
                               const Eigen::VectorXd& sqrt_w) {
  const Eigen::MatrixXd wx = sqrt_w.asDiagonal() * design;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(wx);
  qr.setThreshold(1e-10);
  if (qr.rank() < design.cols()) {
    fail(ErrorCode::RankDeficient, "weighted normal equations are singular (rank " +
                                       std::to_string(qr.rank()) + " < " +
                                       std::to_string(design.cols()) + " columns)");
  }
  return qr.solve(sqrt_w.cwiseProduct(z));
}

double binomial_deviance(const Eigen::VectorXd& eta, const Eigen::VectorXd& y,
                         const Eigen::VectorXd& w) {
  double ll = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    if (w[i] == 0.0) continue;
    const double p = std::clamp(expit(eta[i]), kProbFloor, 1.0 - kProbFloor);
    ll += w[i] * (y[i] * std::log(p) + (1.0 - y[i]) * std::log1p(-p));
  }
  return -2.0 * ll;
}

}  // namespace

std::string family_name(Family f) { return f == Family::Gaussian ? "gaussian" : "binomial"; }

Family parse_family(const std::string& name) {
  if (name == "gaussian") return Family::Gaussian;
  if (name == "binomial" || name == "logit") return Family::BinomialLogit;
  fail(ErrorCode::InvalidArgument, "unknown family '" + name + "'");
}

GlmFit fit_glm(const Eigen::MatrixXd& design, const Eigen::VectorXd& y,
               const Eigen::VectorXd& weights, Family family, GlmOptions options) {
  check_inputs(design, y, weights);
  GlmFit fit;
  fit.family = family;
  const Eigen::VectorXd sqrt_w = weights.cwiseSqrt();

  if (family == Family::Gaussian) {
    fit.coefficients = weighted_solve(design, y, sqrt_w);
    fit.converged = true;
    fit.iterations = 1;
    return fit;
  }

  for (Eigen::Index i = 0; i < y.size(); ++i) {
    if (weights[i] > 0.0 && y[i] != 0.0 && y[i] != 1.0) {
      fail(ErrorCode::Data, "binomial response must be 0 or 1");
    }
  }

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(design.cols());
  Eigen::VectorXd eta = design * beta;
  double deviance = binomial_deviance(eta, y, weights);
  for (int iter = 1; iter <= options.max_iterations; ++iter) {
    fit.iterations = iter;
    Eigen::VectorXd mu(y.size()), irls_w(y.size()), z(y.size());
    for (Eigen::Index i = 0; i < y.size(); ++i) {
      mu[i] = expit(eta[i]);
      const double v = std::max(mu[i] * (1.0 - mu[i]), kProbFloor);
      irls_w[i] = weights[i] * v;
      z[i] = (y[i] - mu[i]) / v;
    }
    const Eigen::VectorXd score = design.transpose() * (weights.cwiseProduct(y - mu));
    if (score.lpNorm<Eigen::Infinity>() < options.tolerance) {
      fit.converged = true;
      break;
    }
    // Newton step: (X'WX) delta = X'w(y - mu).
    Eigen::VectorXd step = weighted_solve(design, z, irls_w.cwiseSqrt());

    // Halve the step while the deviance increases.
    Eigen::VectorXd next = beta + step;
    Eigen::VectorXd next_eta = design * next;
    double next_dev = binomial_deviance(next_eta, y, weights);
    for (int h = 0; h < 30 && next_dev > deviance + 1e-12 * (1.0 + std::abs(deviance)); ++h) {
      step *= 0.5;
      next = beta + step;
      next_eta = design * next;
      next_dev = binomial_deviance(next_eta, y, weights);
    }
    beta = next;
    eta = next_eta;
    deviance = next_dev;
    if (step.lpNorm<Eigen::Infinity>() < options.tolerance) {
      fit.converged = true;
      break;
    }
  }
  fit.coefficients = beta;
  return fit;
}

double predict_glm(const GlmFit& fit, const Eigen::Ref<const Eigen::RowVectorXd>& design_row) {
  if (design_row.size() != fit.coefficients.size()) {
    fail(ErrorCode::InvalidArgument, "design row has " + std::to_string(design_row.size()) +
                                         " columns, model has " +
                                         std::to_string(fit.coefficients.size()));
  }
  const double eta = design_row.dot(fit.coefficients);
  return fit.family == Family::Gaussian ? eta : expit(eta);
}

double glm_log_likelihood(const Eigen::MatrixXd& design, const Eigen::VectorXd& y,
                          const Eigen::VectorXd& weights, const Eigen::VectorXd& beta, Family family) {
  const Eigen::VectorXd eta = design * beta;
  if (family == Family::Gaussian) {
    return -0.5 * weights.dot((y - eta).cwiseAbs2());
  }
  double ll = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    // y*eta - log(1 + e^eta), computed stably.
    const double softplus = eta[i] > 0 ? eta[i] + std::log1p(std::exp(-eta[i])) : std::log1p(std::exp(eta[i]));
    ll += weights[i] * (y[i] * eta[i] - softplus);
  }
  return ll;
}

Eigen::VectorXd glm_score(const Eigen::MatrixXd& design, const Eigen::VectorXd& y,
                          const Eigen::VectorXd& weights, const Eigen::VectorXd& beta, Family family) {
  const Eigen::VectorXd eta = design * beta;
  Eigen::VectorXd mu = eta;
  if (family == Family::BinomialLogit) {
    for (Eigen::Index i = 0; i < mu.size(); ++i) mu[i] = expit(eta[i]);
  }
  return design.transpose() * weights.cwiseProduct(y - mu);
}

double GlmModel::predict(const Eigen::VectorXd& x) const {
  return predict_glm(fit_, basis_.apply_row(x));
}

Eigen::VectorXd GlmModel::predict(const Eigen::MatrixXd& x) const {
  const Eigen::VectorXd eta = basis_.apply(x) * fit_.coefficients;
  if (fit_.family == Family::Gaussian) return eta;
  return eta.unaryExpr([](double e) { return expit(e); });
}

GlmModel fit_glm_model(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                       const Eigen::VectorXd& weights, const DesignSpec& spec, Family family,
                       GlmOptions options) {
  DesignBasis basis = DesignBasis::learn(x, spec);
  GlmFit fit = fit_glm(basis.apply(x), y, weights, family, options);
  fit.design = spec;
  return GlmModel(std::move(basis), std::move(fit));
}

}  // namespace cfpred
