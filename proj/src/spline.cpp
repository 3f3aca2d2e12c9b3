#include <algorithm>
#include <cmath>

#include "cfpred/glm.hpp"

namespace cfpred {

namespace {

// Type-7 sample quantile of sorted values.
double quantile_sorted(const std::vector<double>& sorted, double q) {
  const double h = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

double cube_plus(double v) { return v > 0 ? v * v * v : 0.0; }

}  // namespace

NaturalSpline::NaturalSpline(const Eigen::Ref<const Eigen::VectorXd>& training_column, int df) {
  if (df < 3) fail(ErrorCode::InvalidArgument, "spline df must be at least 3");
  std::vector<double> sorted(training_column.data(), training_column.data() + training_column.size());
  if (sorted.size() < 2) fail(ErrorCode::Data, "spline needs at least two training values");
  for (double v : sorted) {
    if (!std::isfinite(v)) fail(ErrorCode::Data, "non-finite covariate value in spline column");
  }
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> knots;
  for (int j = 0; j <= df; ++j) knots.push_back(quantile_sorted(sorted, static_cast<double>(j) / df));
  *this = NaturalSpline(std::move(knots));
}

NaturalSpline::NaturalSpline(std::vector<double> knots) : knots_(std::move(knots)) {
  if (knots_.size() < 4) fail(ErrorCode::InvalidArgument, "spline df must be at least 3");
  for (std::size_t k = 1; k < knots_.size(); ++k) {
    if (!(knots_[k] > knots_[k - 1])) {
      fail(ErrorCode::Data, "spline knots are not distinct; column has too few unique values");
    }
  }
}

void NaturalSpline::evaluate(double x, double* out) const {
  // Truncated-power natural spline basis on the knot-range-scaled variable:
  //   N_1 = t, N_{k+1} = d_k - d_{K-1},  d_k = ((t - s_k)^3_+ - (t - s_K)^3_+) / (s_K - s_k)
  const std::size_t nk = knots_.size();
  const double lo = knots_.front();
  const double range = knots_.back() - lo;
  const double t = (x - lo) / range;
  auto scaled = [&](std::size_t k) { return (knots_[k] - lo) / range; };
  const double s_last = 1.0;
  auto d = [&](std::size_t k) {
    const double s = scaled(k);
    return (cube_plus(t - s) - cube_plus(t - s_last)) / (s_last - s);
  };
  out[0] = t;
  const double d_penultimate = d(nk - 2);
  for (std::size_t k = 0; k + 2 < nk; ++k) out[k + 1] = d(k) - d_penultimate;
}

void DesignSpec::validate() const {
  if (terms.empty() && !intercept) {
    fail(ErrorCode::InvalidArgument, "design needs at least one term or an intercept");
  }
  for (const auto& t : terms) {
    if (t.col < 0) fail(ErrorCode::InvalidArgument, "design term has a negative column");
    if (t.transform == Transform::Power && t.param < 2) {
      fail(ErrorCode::InvalidArgument, "power term exponent must be at least 2");
    }
    if (t.transform == Transform::Spline && t.param < 3) {
      fail(ErrorCode::InvalidArgument, "spline df must be at least 3");
    }
  }
}

int DesignSpec::max_column() const {
  int m = -1;
  for (const auto& t : terms) m = std::max(m, t.col);
  return m;
}

DesignSpec DesignSpec::linear(int dim) {
  DesignSpec spec;
  for (int c = 0; c < dim; ++c) spec.terms.push_back(Term::linear(c));
  return spec;
}

DesignSpec DesignSpec::quadratic(int dim) {
  DesignSpec spec = linear(dim);
  for (int c = 0; c < dim; ++c) spec.terms.push_back(Term::power(c, 2));
  return spec;
}

DesignSpec DesignSpec::splines(int dim, int df) {
  DesignSpec spec;
  for (int c = 0; c < dim; ++c) spec.terms.push_back(Term::spline(c, df));
  return spec;
}

DesignBasis DesignBasis::learn(const Eigen::MatrixXd& x, const DesignSpec& spec) {
  spec.validate();
  if (spec.max_column() >= x.cols()) {
    fail(ErrorCode::InvalidArgument, "design term column " + std::to_string(spec.max_column()) +
                                         " out of range for " + std::to_string(x.cols()) + " covariates");
  }
  std::vector<NaturalSpline> splines;
  for (const auto& t : spec.terms) {
    if (t.transform == Transform::Spline) splines.emplace_back(x.col(t.col), t.param);
  }
  return from_parts(spec, std::move(splines));
}

DesignBasis DesignBasis::from_parts(DesignSpec spec, std::vector<NaturalSpline> splines) {
  spec.validate();
  DesignBasis basis;
  basis.columns_ = spec.intercept ? 1 : 0;
  std::size_t s = 0;
  for (const auto& t : spec.terms) {
    if (t.transform == Transform::Spline) {
      if (s >= splines.size() || splines[s].df() != t.param) {
        fail(ErrorCode::InvalidArgument, "spline knots do not match the design terms");
      }
      basis.columns_ += t.param;
      ++s;
    } else {
      basis.columns_ += 1;
    }
  }
  if (s != splines.size()) fail(ErrorCode::InvalidArgument, "too many spline knot sets");
  basis.spec_ = std::move(spec);
  basis.splines_ = std::move(splines);
  return basis;
}

Eigen::RowVectorXd DesignBasis::apply_row(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  if (spec_.max_column() >= x.size()) {
    fail(ErrorCode::InvalidArgument, "covariate vector too short for design");
  }
  Eigen::RowVectorXd row(columns_);
  Eigen::Index at = 0;
  if (spec_.intercept) row[at++] = 1.0;
  std::size_t s = 0;
  for (const auto& t : spec_.terms) {
    const double v = x[t.col];
    if (!std::isfinite(v)) fail(ErrorCode::Data, "non-finite covariate value");
    switch (t.transform) {
      case Transform::Linear:
        row[at++] = v;
        break;
      case Transform::Power:
        row[at++] = std::pow(v, t.param);
        break;
      case Transform::Spline:
        splines_[s++].evaluate(v, row.data() + at);
        at += t.param;
        break;
    }
  }
  return row;
}

Eigen::MatrixXd DesignBasis::apply(const Eigen::MatrixXd& x) const {
  Eigen::MatrixXd out(x.rows(), columns_);
  for (Eigen::Index i = 0; i < x.rows(); ++i) out.row(i) = apply_row(x.row(i).transpose());
  return out;
}

Eigen::MatrixXd build_design(const Eigen::MatrixXd& x, const DesignSpec& spec) {
  return DesignBasis::learn(x, spec).apply(x);
}

}  // namespace cfpred
