#include "cfpred/core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "cfpred/rng.hpp"

namespace cfpred {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "invalid_argument";
    case ErrorCode::Data: return "data_error";
    case ErrorCode::Schema: return "schema_error";
    case ErrorCode::Positivity: return "positivity_error";
    case ErrorCode::RankDeficient: return "rank_deficient";
    case ErrorCode::NoComparablePairs: return "no_comparable_pairs";
    case ErrorCode::InvalidRegime: return "invalid_regime";
    case ErrorCode::ReplicateFailure: return "replicate_failure";
    case ErrorCode::Undefined: return "undefined";
  }
  return "unknown";
}

Dataset::Dataset(Eigen::MatrixXd x, std::vector<int> a, Eigen::VectorXd y,
                 std::vector<Split> split, OutcomeType outcome,
                 std::vector<std::string> covariate_names)
    : x_(std::move(x)),
      a_(std::move(a)),
      y_(std::move(y)),
      split_(std::move(split)),
      outcome_(outcome),
      names_(std::move(covariate_names)) {
  const auto n = a_.size();
  if (static_cast<std::size_t>(x_.rows()) != n || static_cast<std::size_t>(y_.size()) != n ||
      split_.size() != n) {
    fail(ErrorCode::InvalidArgument, "dataset columns have inconsistent lengths");
  }
  if (!names_.empty() && static_cast<Eigen::Index>(names_.size()) != x_.cols()) {
    fail(ErrorCode::InvalidArgument, "covariate name count does not match dimension");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (a_[i] != 0 && a_[i] != 1) {
      fail(ErrorCode::Data, "treatment must be 0 or 1 (row " + std::to_string(i) + ")");
    }
    if (outcome_ == OutcomeType::Binary && y_[i] != 0.0 && y_[i] != 1.0) {
      fail(ErrorCode::Data, "binary outcome must be 0 or 1 (row " + std::to_string(i) + ")");
    }
    if (!std::isfinite(y_[i])) {
      fail(ErrorCode::Data, "non-finite outcome (row " + std::to_string(i) + ")");
    }
  }
}

Dataset Dataset::from_rows(const std::vector<Observation>& rows, OutcomeType outcome) {
  const Eigen::Index p = rows.empty() ? 0 : rows.front().x.size();
  Eigen::MatrixXd x(static_cast<Eigen::Index>(rows.size()), p);
  std::vector<int> a(rows.size());
  Eigen::VectorXd y(static_cast<Eigen::Index>(rows.size()));
  std::vector<Split> split(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].x.size() != p) {
      fail(ErrorCode::InvalidArgument, "row " + std::to_string(i) + " has wrong dimension");
    }
    x.row(static_cast<Eigen::Index>(i)) = rows[i].x.transpose();
    a[i] = rows[i].a;
    y[static_cast<Eigen::Index>(i)] = rows[i].y;
    split[i] = rows[i].split;
  }
  return Dataset(std::move(x), std::move(a), std::move(y), std::move(split), outcome);
}

Observation Dataset::row(std::size_t i) const {
  const auto r = static_cast<Eigen::Index>(i);
  return Observation{x_.row(r).transpose(), a_[i], y_[r], split_[i]};
}

Dataset Dataset::subset(std::span<const std::size_t> rows) const {
  Eigen::MatrixXd x(static_cast<Eigen::Index>(rows.size()), x_.cols());
  std::vector<int> a(rows.size());
  Eigen::VectorXd y(static_cast<Eigen::Index>(rows.size()));
  std::vector<Split> split(rows.size());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const auto i = rows[k];
    if (i >= size()) fail(ErrorCode::InvalidArgument, "row index out of range");
    x.row(static_cast<Eigen::Index>(k)) = x_.row(static_cast<Eigen::Index>(i));
    a[k] = a_[i];
    y[static_cast<Eigen::Index>(k)] = y_[static_cast<Eigen::Index>(i)];
    split[k] = split_[i];
  }
  Dataset out;
  out.x_ = std::move(x);
  out.a_ = std::move(a);
  out.y_ = std::move(y);
  out.split_ = std::move(split);
  out.outcome_ = outcome_;
  out.names_ = names_;
  return out;
}

Dataset Dataset::where(Split s) const {
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < size(); ++i) {
    if (split_[i] == s) rows.push_back(i);
  }
  return subset(rows);
}

Dataset Dataset::arm(int a) const {
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < size(); ++i) {
    if (a_[i] == a) rows.push_back(i);
  }
  return subset(rows);
}

Dataset Dataset::with_split(std::vector<Split> split) const {
  if (split.size() != size()) fail(ErrorCode::InvalidArgument, "split length mismatch");
  Dataset out = *this;
  out.split_ = std::move(split);
  return out;
}

std::size_t Dataset::count(Split s) const {
  return static_cast<std::size_t>(std::count(split_.begin(), split_.end(), s));
}

std::size_t Dataset::count_arm(int a) const {
  return static_cast<std::size_t>(std::count(a_.begin(), a_.end(), a));
}

Dataset split_dataset(const Dataset& data, double fraction_train, std::uint64_t seed,
                      SplitOptions options) {
  if (!(fraction_train > 0.0 && fraction_train < 1.0)) {
    fail(ErrorCode::InvalidArgument, "training fraction must lie in (0, 1)");
  }
  if (data.empty()) fail(ErrorCode::InvalidArgument, "cannot split an empty dataset");
  Rng rng(seed, 0x5B117);
  std::vector<Split> split(data.size(), Split::Test);
  if (options.exact_count) {
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[rng.below(i)]);
    }
    const auto n_train =
        static_cast<std::size_t>(std::llround(fraction_train * static_cast<double>(data.size())));
    for (std::size_t k = 0; k < n_train; ++k) split[order[k]] = Split::Train;
  } else {
    for (auto& s : split) s = rng.bernoulli(fraction_train) ? Split::Train : Split::Test;
  }
  return data.with_split(std::move(split));
}

PredictorSubset::PredictorSubset(std::vector<int> indices) : indices_(std::move(indices)) {
  auto sorted = indices_;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    fail(ErrorCode::InvalidArgument, "predictor subset has duplicate indices");
  }
  if (!sorted.empty() && sorted.front() < 0) {
    fail(ErrorCode::InvalidArgument, "predictor subset has a negative index");
  }
}

PredictorSubset PredictorSubset::all(Eigen::Index dim) {
  std::vector<int> idx(static_cast<std::size_t>(dim));
  std::iota(idx.begin(), idx.end(), 0);
  return PredictorSubset(std::move(idx));
}

void PredictorSubset::validate(Eigen::Index dim) const {
  for (int i : indices_) {
    if (i < 0 || i >= dim) {
      fail(ErrorCode::InvalidArgument, "predictor index " + std::to_string(i) +
                                           " out of range for dimension " + std::to_string(dim));
    }
  }
}

bool PredictorSubset::is_identity(Eigen::Index dim) const {
  if (static_cast<Eigen::Index>(indices_.size()) != dim) return false;
  for (std::size_t k = 0; k < indices_.size(); ++k) {
    if (indices_[k] != static_cast<int>(k)) return false;
  }
  return true;
}

Eigen::VectorXd subset_columns(const Eigen::VectorXd& x,
                               const PredictorSubset& sel) {
  sel.validate(x.size());
  Eigen::VectorXd out(static_cast<Eigen::Index>(sel.size()));
  for (std::size_t k = 0; k < sel.size(); ++k) out[static_cast<Eigen::Index>(k)] = x[sel.indices()[k]];
  return out;
}

Eigen::MatrixXd subset_columns(const Eigen::MatrixXd& x, const PredictorSubset& sel) {
  sel.validate(x.cols());
  Eigen::MatrixXd out(x.rows(), static_cast<Eigen::Index>(sel.size()));
  for (std::size_t k = 0; k < sel.size(); ++k) {
    out.col(static_cast<Eigen::Index>(k)) = x.col(sel.indices()[k]);
  }
  return out;
}

void ClipBounds::validate() const {
  if (!(lo > 0.0 && lo < hi && hi < 1.0)) {
    fail(ErrorCode::InvalidArgument, "clip bounds must satisfy 0 < lo < hi < 1");
  }
}

std::string loss_name(Loss loss) { return loss == Loss::Squared ? "squared" : "absolute"; }

Loss parse_loss(const std::string& name) {
  if (name == "squared" || name == "mse" || name == "brier") return Loss::Squared;
  if (name == "absolute" || name == "mae") return Loss::Absolute;
  fail(ErrorCode::InvalidArgument, "unknown loss '" + name + "'");
}

double StochasticRegime::prob_treated(const Eigen::VectorXd& x) const {
  const double p = pi_star(x);
  if (!(p >= 0.0 && p <= 1.0)) {
    fail(ErrorCode::InvalidRegime, "stochastic regime returned probability outside [0, 1]");
  }
  return p;
}

StochasticRegime StochasticRegime::constant(double p) {
  std::ostringstream label;
  label << "stochastic(p=" << p << ")";
  return StochasticRegime{[p](const Eigen::VectorXd&) { return p; }, label.str()};
}

SequentialRegime SequentialRegime::constant(std::vector<int> per_time) {
  SequentialRegime regime;
  std::ostringstream label;
  label << "always(";
  for (std::size_t k = 0; k < per_time.size(); ++k) {
    const int a = per_time[k];
    if (a != 0 && a != 1) fail(ErrorCode::InvalidRegime, "regime treatment must be 0 or 1");
    regime.rules.push_back([a](std::span<const int>, std::span<const Eigen::VectorXd>) { return a; });
    label << (k ? "," : "") << a;
  }
  label << ")";
  regime.label = label.str();
  return regime;
}

SequentialRegime SequentialRegime::threshold(std::size_t n_times, int col, double threshold) {
  SequentialRegime regime;
  for (std::size_t k = 0; k < n_times; ++k) {
    regime.rules.push_back([col, threshold](std::span<const int>, std::span<const Eigen::VectorXd> x) {
      return x.back()[col] > threshold ? 1 : 0;
    });
  }
  std::ostringstream label;
  label << "threshold(col=" << col << ",t=" << threshold << ")";
  regime.label = label.str();
  return regime;
}

std::string regime_label(const Regime& regime) {
  struct Visitor {
    std::string operator()(const StaticRegime& r) const { return "static(a=" + std::to_string(r.a) + ")"; }
    std::string operator()(const StochasticRegime& r) const { return r.label; }
    std::string operator()(const SequentialRegime& r) const { return r.label; }
  };
  return std::visit(Visitor{}, regime);
}

SequentialDataset::SequentialDataset(std::vector<Eigen::MatrixXd> x, std::vector<std::vector<int>> a,
                                     Eigen::VectorXd y, OutcomeType outcome,
                                     std::vector<std::string> ids)
    : x_(std::move(x)), a_(std::move(a)), y_(std::move(y)), outcome_(outcome), ids_(std::move(ids)) {
  if (x_.empty() || x_.size() != a_.size()) {
    fail(ErrorCode::InvalidArgument, "covariate and treatment histories must both have K+1 entries");
  }
  const auto n = static_cast<std::size_t>(y_.size());
  for (std::size_t k = 0; k < x_.size(); ++k) {
    if (static_cast<std::size_t>(x_[k].rows()) != n || a_[k].size() != n) {
      fail(ErrorCode::InvalidArgument, "time " + std::to_string(k) + " has the wrong number of subjects");
    }
    for (int v : a_[k]) {
      if (v != 0 && v != 1) fail(ErrorCode::Data, "treatment must be 0 or 1");
    }
  }
  if (outcome_ == OutcomeType::Binary) {
    for (Eigen::Index i = 0; i < y_.size(); ++i) {
      if (y_[i] != 0.0 && y_[i] != 1.0) fail(ErrorCode::Data, "binary outcome must be 0 or 1");
    }
  }
  if (!ids_.empty() && ids_.size() != n) fail(ErrorCode::InvalidArgument, "id count mismatch");
}

std::vector<Eigen::VectorXd> SequentialDataset::x_history(std::size_t i, std::size_t k) const {
  std::vector<Eigen::VectorXd> out;
  for (std::size_t t = 0; t <= k; ++t) out.emplace_back(x_[t].row(static_cast<Eigen::Index>(i)).transpose());
  return out;
}

std::vector<int> SequentialDataset::a_history(std::size_t i, std::size_t k) const {
  std::vector<int> out;
  for (std::size_t t = 0; t < k; ++t) out.push_back(a_[t][i]);
  return out;
}

Eigen::VectorXd SequentialDataset::history_features(std::size_t i, std::size_t k) const {
  Eigen::Index width = 0;
  for (std::size_t t = 0; t <= k; ++t) width += x_[t].cols();
  Eigen::VectorXd out(width);
  Eigen::Index at = 0;
  for (std::size_t t = 0; t <= k; ++t) {
    out.segment(at, x_[t].cols()) = x_[t].row(static_cast<Eigen::Index>(i)).transpose();
    at += x_[t].cols();
  }
  return out;
}

Eigen::MatrixXd SequentialDataset::history_features(std::size_t k) const {
  Eigen::Index width = 0;
  for (std::size_t t = 0; t <= k; ++t) width += x_[t].cols();
  Eigen::MatrixXd out(y_.size(), width);
  Eigen::Index at = 0;
  for (std::size_t t = 0; t <= k; ++t) {
    out.middleCols(at, x_[t].cols()) = x_[t];
    at += x_[t].cols();
  }
  return out;
}

SequentialDataset SequentialDataset::subset(std::span<const std::size_t> rows) const {
  std::vector<Eigen::MatrixXd> x(x_.size());
  std::vector<std::vector<int>> a(a_.size());
  Eigen::VectorXd y(static_cast<Eigen::Index>(rows.size()));
  std::vector<std::string> ids;
  for (std::size_t k = 0; k < x_.size(); ++k) {
    x[k].resize(static_cast<Eigen::Index>(rows.size()), x_[k].cols());
    a[k].resize(rows.size());
  }
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto i = rows[r];
    if (i >= size()) fail(ErrorCode::InvalidArgument, "subject index out of range");
    for (std::size_t k = 0; k < x_.size(); ++k) {
      x[k].row(static_cast<Eigen::Index>(r)) = x_[k].row(static_cast<Eigen::Index>(i));
      a[k][r] = a_[k][i];
    }
    y[static_cast<Eigen::Index>(r)] = y_[static_cast<Eigen::Index>(i)];
    if (!ids_.empty()) ids.push_back(ids_[i]);
  }
  return SequentialDataset(std::move(x), std::move(a), std::move(y), outcome_, std::move(ids));
}

}  // namespace cfpred
