#include "cfpred/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cfpred/perf.hpp"
#include "cfpred/rng.hpp"

namespace cfpred {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double exp1_outcome_mean(double x, int a) { return 1.0 + x + 0.5 * x * x - 3.0 * a; }

double exp2_outcome_prob(const Eigen::VectorXd& x, int a) {
  return expit(0.2 + 3.0 * x[0] - 2.0 * x[0] * x[0] + 2.0 * x[1] + x[2] - 2.0 * a);
}

}  // namespace

Generated generate_full(const Dgp& dgp) {
  if (dgp.n < 1) fail(ErrorCode::InvalidArgument, "n must be at least 1");
  if (dgp.experiment != 1 && dgp.experiment != 2) {
    fail(ErrorCode::InvalidArgument, "experiment must be 1 or 2");
  }
  Rng rng(dgp.seed, dgp.stream);
  const auto n = static_cast<Eigen::Index>(dgp.n);
  const Eigen::Index p = dgp.experiment == 1 ? 1 : 3;
  Eigen::MatrixXd x(n, p);
  std::vector<int> a(dgp.n);
  Eigen::VectorXd y(n), y0(n), y1(n);

  for (Eigen::Index i = 0; i < n; ++i) {
    if (dgp.experiment == 1) {
      const double xi = rng.uniform(0.0, 10.0);
      x(i, 0) = xi;
      const double eta = dgp.options.decreasing_treatment ? 1.5 - 0.3 * xi : -1.5 + 0.3 * xi;
      a[static_cast<std::size_t>(i)] = rng.uniform() < expit(eta) ? 1 : 0;
      const double scale = dgp.options.noise_sd ? xi : std::sqrt(xi);
      const double eps = scale * rng.normal();
      y0[i] = exp1_outcome_mean(xi, 0) + eps;
      y1[i] = exp1_outcome_mean(xi, 1) + eps;
    } else {
      const double sd = std::sqrt(0.2);
      x(i, 0) = 0.2 + sd * rng.normal();
      x(i, 1) = sd * rng.normal();
      x(i, 2) = 0.5 + sd * rng.normal();
      const double x1 = x(i, 0);
      const double eta = 0.5 - 2.0 * x1 + 3.0 * x1 * x1 + 2.0 * x(i, 1) - x(i, 2);
      a[static_cast<std::size_t>(i)] = rng.uniform() < expit(eta) ? 1 : 0;
      const double u = rng.uniform();
      const Eigen::VectorXd xi = x.row(i).transpose();
      y0[i] = u < exp2_outcome_prob(xi, 0) ? 1.0 : 0.0;
      y1[i] = u < exp2_outcome_prob(xi, 1) ? 1.0 : 0.0;
    }
    y[i] = a[static_cast<std::size_t>(i)] == 1 ? y1[i] : y0[i];
  }

  const OutcomeType outcome = dgp.experiment == 1 ? OutcomeType::Continuous : OutcomeType::Binary;
  std::vector<std::string> names =
      dgp.experiment == 1 ? std::vector<std::string>{"x"} : std::vector<std::string>{"x1", "x2", "x3"};
  Generated g{Dataset(std::move(x), std::move(a), y, std::vector<Split>(dgp.n, Split::Train), outcome,
                      std::move(names)),
              y0, y1};
  return g;
}

Dataset generate(const Dgp& dgp, std::optional<int> force_a) {
  Generated g = generate_full(dgp);
  if (!force_a) return std::move(g.data);
  if (*force_a != 0 && *force_a != 1) fail(ErrorCode::InvalidArgument, "forced treatment must be 0 or 1");
  return Dataset(g.data.x(), std::vector<int>(dgp.n, *force_a), *force_a == 1 ? g.y1 : g.y0, g.data.split(),
                 g.data.outcome(), g.data.covariate_names());
}

double truth_oracle(const Dgp& dgp, const FittedModel& model, TruthMeasure measure, int target_a) {
  const Dataset forced = generate(dgp, target_a);
  if (measure == TruthMeasure::Mse) return loss_naive(forced, model, Loss::Squared).value;
  return auc_estimate(forced, model, EstimatorKind::Naive).value;
}

const ExperimentRow& ExperimentTable::row(const std::string& model, const std::string& scenario,
                                          const std::string& estimator) const {
  for (const auto& r : rows) {
    if (r.model == model && r.scenario == scenario && r.estimator == estimator) return r;
  }
  fail(ErrorCode::InvalidArgument, "no row " + model + "/" + scenario + "/" + estimator);
}

namespace {

struct Slot {
  std::string model, scenario, estimator;
  bool mse = true;
  bool auc = false;
};

struct ReplicateOutput {
  bool ok = false;
  std::size_t n_test = 0;
  std::vector<double> mse, auc;  // per slot, NaN when absent
};

std::vector<Slot> experiment1_layout() {
  std::vector<Slot> slots;
  for (const char* model : {"OLS-correct", "WLS-correct", "OLS-misspecified", "WLS-misspecified"}) {
    for (const char* est : {"Naive", "IPW", "Truth"}) slots.push_back({model, "-", est, true, false});
  }
  return slots;
}

const std::vector<std::string>& experiment2_scenarios() {
  static const std::vector<std::string> s{"correct", "ps-misspecified", "om-misspecified",
                                          "both-misspecified", "flexible"};
  return s;
}

std::vector<Slot> experiment2_layout() {
  const std::string model = "logistic-linear";
  std::vector<Slot> slots;
  slots.push_back({model, "-", "Truth", true, true});
  slots.push_back({model, "-", "Naive", true, true});
  for (const auto& sc : experiment2_scenarios()) {
    slots.push_back({model, sc, "CL", true, true});
    slots.push_back({model, sc, "IPW", true, true});
    slots.push_back({model, sc, "DR", true, false});
  }
  return slots;
}

Dgp replicate_dgp(int which, std::size_t n, std::uint64_t seed, std::uint64_t stream, const DgpOptions& o) {
  Dgp d;
  d.experiment = which;
  d.n = n;
  d.seed = seed;
  d.stream = stream;
  d.options = o;
  return d;
}

ReplicateOutput run_replicate1(std::size_t n, std::uint64_t seed, std::size_t r, const ExperimentOptions& opt,
                               std::size_t slots) {
  ReplicateOutput out;
  out.mse.assign(slots, kNaN);
  out.auc.assign(slots, kNaN);
  const Dgp obs = replicate_dgp(1, n, seed, 2 * r, opt.dgp);
  const Dgp truth = replicate_dgp(1, n, seed, 2 * r + 1, opt.dgp);
  const Dataset data = split_dataset(generate(obs), 0.5, splitmix64(seed ^ (0xE1ULL + r)));
  const Dataset train = data.train();
  const Dataset test = data.test();
  out.n_test = test.size();

  const DesignSpec propensity = DesignSpec::linear(1);
  const TailorOptions tailor = TailorOptions::simulation();
  NuisanceSpecs specs;
  specs.propensity = propensity;
  specs.clip = ClipBounds::simulation();

  std::size_t s = 0;
  for (const DesignSpec& model_spec : {DesignSpec::quadratic(1), DesignSpec::linear(1)}) {
    const FittedModel ols = fit_plain(train, PredictorSubset::all(1), model_spec, Family::Gaussian, tailor.glm);
    const FittedModel wls = fit_tailored_ipw(train, 0, propensity, PredictorSubset::all(1), model_spec,
                                             Family::Gaussian, tailor);
    for (const FittedModel* m : {&ols, &wls}) {
      const NuisanceSet nuis = fit_nuisances(test, *m, specs, 0, Loss::Squared);
      out.mse[s++] = loss_naive(test, *m, Loss::Squared).value;
      out.mse[s++] = loss_ipw(test, nuis, *m).value;
      out.mse[s++] = truth_oracle(truth, *m, TruthMeasure::Mse, 0);
    }
  }
  out.ok = true;
  return out;
}

ReplicateOutput run_replicate2(std::size_t n, std::uint64_t seed, std::size_t r, const ExperimentOptions& opt,
                               std::size_t slots) {
  ReplicateOutput out;
  out.mse.assign(slots, kNaN);
  out.auc.assign(slots, kNaN);
  const Dgp obs = replicate_dgp(2, n, seed, 2 * r, opt.dgp);
  const Dgp truth = replicate_dgp(2, n, seed, 2 * r + 1, opt.dgp);
  const Dataset data = split_dataset(generate(obs), 0.5, splitmix64(seed ^ (0xE2ULL + r)));
  const Dataset train = data.train();
  const Dataset test = data.test();
  out.n_test = test.size();

  const FittedModel model =
      fit_plain(train, PredictorSubset::all(3), DesignSpec::linear(3), Family::BinomialLogit);

  std::size_t s = 0;
  out.mse[s] = truth_oracle(truth, model, TruthMeasure::Mse, 0);
  out.auc[s++] = truth_oracle(truth, model, TruthMeasure::Auc, 0);
  out.mse[s] = loss_naive(test, model, Loss::Squared).value;
  out.auc[s++] = auc_estimate(test, model, EstimatorKind::Naive).value;

  const DesignSpec correct = DesignSpec::quadratic(3);
  const DesignSpec linear = DesignSpec::linear(3);
  const DesignSpec flexible = DesignSpec::splines(3, 4);
  for (const auto& sc : experiment2_scenarios()) {
    NuisanceSpecs specs;
    specs.clip = ClipBounds::simulation();
    if (sc == "correct") {
      specs.propensity = correct;
      specs.cond_loss = correct;
    } else if (sc == "ps-misspecified") {
      specs.propensity = linear;
      specs.cond_loss = correct;
    } else if (sc == "om-misspecified") {
      specs.propensity = correct;
      specs.cond_loss = linear;
    } else if (sc == "both-misspecified") {
      specs.propensity = linear;
      specs.cond_loss = linear;
    } else {
      specs.propensity = flexible;
      specs.cond_loss = flexible;
    }
    const NuisanceSet nuis = fit_nuisances(test, model, specs, 0, Loss::Squared);
    out.mse[s] = loss_cl(test, model, nuis).value;
    out.auc[s++] = auc_estimate(test, model, EstimatorKind::OM, &nuis).value;
    out.mse[s] = loss_ipw(test, nuis, model).value;
    out.auc[s++] = auc_estimate(test, model, EstimatorKind::IPW, &nuis).value;
    out.mse[s++] = loss_dr(test, nuis, model).value;
  }
  out.ok = true;
  return out;
}

}  // namespace

ExperimentTable run_experiment(int which, int reps, std::size_t n, std::uint64_t seed,
                               const ExperimentOptions& options) {
  if (which != 1 && which != 2) fail(ErrorCode::InvalidArgument, "experiment must be 1 or 2");
  if (reps < 1) fail(ErrorCode::InvalidArgument, "reps must be at least 1");
  if (n < 4) fail(ErrorCode::InvalidArgument, "n must be at least 4");

  const std::vector<Slot> layout = which == 1 ? experiment1_layout() : experiment2_layout();
  std::vector<ReplicateOutput> results(static_cast<std::size_t>(reps));
  parallel_for(results.size(), options.threads, [&](std::size_t r) {
    try {
      results[r] = which == 1 ? run_replicate1(n, seed, r, options, layout.size())
                              : run_replicate2(n, seed, r, options, layout.size());
    } catch (const Error&) {
      results[r].ok = false;
    }
  });

  ExperimentTable table;
  table.experiment = which;
  table.reps = reps;
  table.n = n;
  table.seed = seed;
  double test_total = 0.0;
  int ok = 0;
  for (const auto& res : results) {
    if (res.ok) {
      ++ok;
      test_total += static_cast<double>(res.n_test);
    } else {
      ++table.failures;
    }
  }
  if (ok == 0 || static_cast<double>(table.failures) > options.max_failure_fraction * reps) {
    fail(ErrorCode::ReplicateFailure, std::to_string(table.failures) + " of " + std::to_string(reps) +
                                          " replicates failed");
  }
  table.n_test = static_cast<std::size_t>(std::llround(test_total / ok));

  auto collect = [&](std::size_t s, bool auc) {
    std::vector<double> v;
    for (const auto& res : results) {
      if (res.ok) v.push_back(auc ? res.auc[s] : res.mse[s]);
    }
    return v;
  };
  auto truth_slot = [&](const Slot& slot) {
    for (std::size_t t = 0; t < layout.size(); ++t) {
      if (layout[t].model == slot.model && layout[t].estimator == "Truth") return t;
    }
    fail(ErrorCode::InvalidArgument, "layout has no truth row");
  };
  auto mean_of = [](const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
  };

  for (std::size_t s = 0; s < layout.size(); ++s) {
    const Slot& slot = layout[s];
    ExperimentRow row{slot.model, slot.scenario, slot.estimator, std::nullopt, std::nullopt};
    const std::size_t t = truth_slot(slot);
    if (slot.mse) {
      MeasureColumn c;
      c.values = collect(s, false);
      c.summary = mc_summarize(c.values, mean_of(collect(t, false)), table.n_test);
      row.mse = std::move(c);
    }
    if (slot.auc) {
      MeasureColumn c;
      c.values = collect(s, true);
      c.summary = mc_summarize(c.values, mean_of(collect(t, true)), table.n_test);
      row.auc = std::move(c);
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

}  // namespace cfpred
