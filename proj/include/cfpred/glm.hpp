#pragma once

// Weighted generalized linear models: design construction (polynomial and
// natural-spline terms) plus Gaussian-identity and binomial-logit fitting.

#include <Eigen/Dense>

#include <cmath>
#include <string>
#include <vector>

#include "cfpred/error.hpp"

namespace cfpred {

enum class Family { Gaussian, BinomialLogit };

std::string family_name(Family f);
Family parse_family(const std::string& name);

enum class Transform { Linear, Power, Spline };

struct Term {
  int col = 0;
  Transform transform = Transform::Linear;
  // Exponent for Power, basis dimension for Spline; unused for Linear.
  int param = 1;

  static Term linear(int col) { return {col, Transform::Linear, 1}; }
  static Term power(int col, int k) { return {col, Transform::Power, k}; }
  static Term spline(int col, int df) { return {col, Transform::Spline, df}; }

  friend bool operator==(const Term&, const Term&) = default;
};

struct DesignSpec {
  std::vector<Term> terms;
  bool intercept = true;

  void validate() const;
  // Highest covariate column referenced, or -1.
  int max_column() const;

  static DesignSpec intercept_only() { return DesignSpec{{}, true}; }
  // Linear terms in columns [0, dim).
  static DesignSpec linear(int dim);
  // Linear plus squared terms in columns [0, dim).
  static DesignSpec quadratic(int dim);
  // Additive natural-spline terms in columns [0, dim).
  static DesignSpec splines(int dim, int df);

  friend bool operator==(const DesignSpec&, const DesignSpec&) = default;
};

// Natural cubic spline with boundary knots at the ends of the training
// range and df-1 interior knots at training quantiles. Linear beyond the
// boundary knots.
class NaturalSpline {
 public:
  NaturalSpline() = default;
  NaturalSpline(const Eigen::Ref<const Eigen::VectorXd>& training_column, int df);
  // Construct from explicit knots (boundary knots first and last).
  explicit NaturalSpline(std::vector<double> knots);

  int df() const { return static_cast<int>(knots_.size()) - 1; }
  const std::vector<double>& knots() const { return knots_; }

  // Writes df basis values for x into out.
  void evaluate(double x, double* out) const;

 private:
  std::vector<double> knots_;
};

// A DesignSpec with spline knots learned from training rows. Maps raw
// covariate rows to design rows.
class DesignBasis {
 public:
  DesignBasis() = default;
  static DesignBasis learn(const Eigen::MatrixXd& x, const DesignSpec& spec);
  static DesignBasis from_parts(DesignSpec spec, std::vector<NaturalSpline> splines);

  Eigen::Index columns() const { return columns_; }
  const DesignSpec& spec() const { return spec_; }
  const std::vector<NaturalSpline>& splines() const { return splines_; }

  Eigen::MatrixXd apply(const Eigen::MatrixXd& x) const;
  Eigen::RowVectorXd apply_row(const Eigen::Ref<const Eigen::VectorXd>& x) const;

 private:
  DesignSpec spec_;
  std::vector<NaturalSpline> splines_;  // one per Spline term, in term order
  Eigen::Index columns_ = 0;
};

// Learns knots from x and returns the design matrix for the same rows.
Eigen::MatrixXd build_design(const Eigen::MatrixXd& x, const DesignSpec& spec);

struct GlmOptions {
  int max_iterations = 100;
  double tolerance = 1e-8;
};

struct GlmFit {
  Eigen::VectorXd coefficients;
  Family family = Family::Gaussian;
  DesignSpec design;
  bool converged = false;
  int iterations = 0;
};

// Weighted least squares (Gaussian) or weighted maximum likelihood by IRLS
// (binomial logit). Throws RankDeficient on singular weighted normal
// equations; a logit fit that does not converge is returned with
// converged = false.
GlmFit fit_glm(const Eigen::MatrixXd& design, const Eigen::VectorXd& y,
               const Eigen::VectorXd& weights, Family family, GlmOptions options = {});

// Prediction for one design row (already expanded).
double predict_glm(const GlmFit& fit, const Eigen::Ref<const Eigen::RowVectorXd>& design_row);

inline double expit(double eta) {
  if (eta >= 0) return 1.0 / (1.0 + std::exp(-eta));
  const double e = std::exp(eta);
  return e / (1.0 + e);
}

// Weighted log-likelihood (Gaussian: -1/2 sum w r^2) and its gradient.
double glm_log_likelihood(const Eigen::MatrixXd& design, const Eigen::VectorXd& y,
                          const Eigen::VectorXd& weights, const Eigen::VectorXd& beta, Family family);
Eigen::VectorXd glm_score(const Eigen::MatrixXd& design, const Eigen::VectorXd& y,
                          const Eigen::VectorXd& weights, const Eigen::VectorXd& beta, Family family);

// A fitted GLM together with the basis that maps raw covariates to its design.
class GlmModel {
 public:
  GlmModel() = default;
  GlmModel(DesignBasis basis, GlmFit fit) : basis_(std::move(basis)), fit_(std::move(fit)) {}

  const DesignBasis& basis() const { return basis_; }
  const GlmFit& fit() const { return fit_; }

  double predict(const Eigen::VectorXd& x) const;
  Eigen::VectorXd predict(const Eigen::MatrixXd& x) const;

 private:
  DesignBasis basis_;
  GlmFit fit_;
};

// Learns the basis on x, fits, and packages the model.
GlmModel fit_glm_model(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                       const Eigen::VectorXd& weights, const DesignSpec& spec, Family family,
                       GlmOptions options = {});

}  // namespace cfpred
