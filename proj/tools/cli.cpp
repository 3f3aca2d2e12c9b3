#include "cli.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include "cfpred/core.hpp"
#include "cfpred/csv.hpp"
#include "cfpred/inference.hpp"
#include "cfpred/longitudinal.hpp"
#include "cfpred/perf.hpp"
#include "cfpred/rng.hpp"
#include "cfpred/serialize.hpp"
#include "cfpred/simulate.hpp"
#include "cfpred/tailor.hpp"

namespace cfpred::cli {

namespace {

// Every run-time default in one place; each is overridable in the config.
struct Defaults {
  static constexpr double clip_lo = 0.01;
  static constexpr double clip_hi = 0.99;
  static constexpr double truncate_quantile = 0.995;
  static constexpr int spline_df = 4;
  static constexpr int bins = 10;
  static constexpr double bandwidth = 0.3;
  static constexpr int grid_points = 100;
  static constexpr int bootstrap_b = 1000;
  static constexpr std::uint64_t bootstrap_seed = 1;
  static constexpr double train_fraction = 0.5;
  static constexpr std::uint64_t split_seed = 1;
  static constexpr int folds = 5;
  static constexpr std::uint64_t cv_seed = 1;
};

int exit_code_for(ErrorCode c) {
  switch (c) {
    case ErrorCode::InvalidArgument:
    case ErrorCode::Data:
    case ErrorCode::Schema:
    case ErrorCode::InvalidRegime:
      return 2;
    default:
      return 1;
  }
}

Json read_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::Data, "cannot read " + path);
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    fail(ErrorCode::Schema, path + ": " + e.what());
  }
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::Data, "cannot write " + path);
  out << text;
  if (!out) fail(ErrorCode::Data, "write failed for " + path);
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

template <class T>
T opt(const Json& j, const char* key, T fallback) {
  if (!j.is_object() || !j.contains(key) || j[key].is_null()) return fallback;
  try {
    return j[key].get<T>();
  } catch (const Json::exception&) {
    fail(ErrorCode::Schema, std::string("config field '") + key + "' has the wrong type");
  }
}

const Json& section(const Json& j, const char* key) {
  static const Json empty = Json::object();
  if (!j.contains(key)) return empty;
  if (!j[key].is_object()) fail(ErrorCode::Schema, std::string("config field '") + key + "' must be an object");
  return j[key];
}

// Paths in a config are relative to the config file.
std::string resolve_path(const std::string& config_path, const std::string& p) {
  if (p.empty() || p[0] == '/') return p;
  const auto slash = config_path.find_last_of('/');
  return slash == std::string::npos ? p : config_path.substr(0, slash + 1) + p;
}

CsvLoadOptions load_options(const Json& cfg) {
  CsvLoadOptions o;
  const auto outcome = opt<std::string>(cfg, "outcome", "");
  if (outcome == "binary") o.outcome = OutcomeType::Binary;
  else if (outcome == "continuous") o.outcome = OutcomeType::Continuous;
  else if (!outcome.empty()) fail(ErrorCode::Schema, "outcome must be 'binary' or 'continuous'");
  o.covariates = opt<std::vector<std::string>>(cfg, "covariates", {});
  const Json& split = section(cfg, "split");
  o.train_fraction = opt<double>(split, "train_fraction", Defaults::train_fraction);
  o.split_seed = opt<std::uint64_t>(split, "seed", Defaults::split_seed);
  o.exact_count = opt<bool>(split, "exact_count", false);
  return o;
}

std::string require_input(const Json& cfg, const std::string& config_path) {
  const auto input = opt<std::string>(cfg, "input", "");
  if (input.empty()) fail(ErrorCode::Schema, "config needs an 'input' CSV path");
  return resolve_path(config_path, input);
}

PredictorSubset predictors_from(const Json& cfg, const std::vector<std::string>& names) {
  const auto wanted = opt<std::vector<std::string>>(cfg, "predictors", {});
  if (wanted.empty()) return PredictorSubset::all(static_cast<Eigen::Index>(names.size()));
  std::vector<int> idx;
  for (const auto& w : wanted) {
    const auto it = std::find(names.begin(), names.end(), w);
    if (it == names.end()) fail(ErrorCode::Schema, "unknown predictor column '" + w + "'");
    idx.push_back(static_cast<int>(it - names.begin()));
  }
  return PredictorSubset(idx);
}

std::vector<std::string> subset_names(const std::vector<std::string>& names, const PredictorSubset& p) {
  std::vector<std::string> out;
  for (int i : p.indices()) out.push_back(names[static_cast<std::size_t>(i)]);
  return out;
}

ClipBounds clip_from(const Json& cfg) {
  ClipBounds c{Defaults::clip_lo, Defaults::clip_hi};
  if (cfg.contains("clip")) {
    const auto v = opt<std::vector<double>>(cfg, "clip", {});
    if (v.size() != 2) fail(ErrorCode::Schema, "clip must be [lo, hi]");
    c = {v[0], v[1]};
  }
  c.validate();
  return c;
}

TailorOptions tailor_options(const Json& cfg) {
  TailorOptions o;
  o.clip = clip_from(cfg);
  if (cfg.contains("truncate_quantile") && cfg["truncate_quantile"].is_null()) {
    o.truncate_quantile.reset();
  } else {
    o.truncate_quantile = opt<double>(cfg, "truncate_quantile", Defaults::truncate_quantile);
  }
  return o;
}

Family family_for(const Json& mcfg, OutcomeType outcome) {
  const auto f = opt<std::string>(mcfg, "family", "");
  if (!f.empty()) return parse_family(f);
  return outcome == OutcomeType::Binary ? Family::BinomialLogit : Family::Gaussian;
}

DesignSpec design_or(const Json& j, const char* key, const std::string& fallback, int dim,
                     const std::vector<std::string>& names) {
  if (!j.contains(key) || j[key].is_null()) return design_spec_shorthand(fallback, dim);
  return design_spec_from_config(j[key], dim, &names);
}

// Fits a model from a model section. Designs over X* for the model itself,
// over all covariates for propensity and stage-one outcome models.
FittedModel fit_model(const Dataset& train, const Json& mcfg, const PredictorSubset& preds,
                      const std::vector<std::string>& names, const TailorOptions& topts) {
  const auto method = parse_method(opt<std::string>(mcfg, "method", "plain"));
  const auto pnames = subset_names(names, preds);
  const int pdim = static_cast<int>(preds.size());
  const int dim = static_cast<int>(names.size());
  const DesignSpec design = design_or(mcfg, "design", "linear", pdim, pnames);
  const Family family = family_for(mcfg, train.outcome());
  const int target = opt<int>(mcfg, "target_a", 0);
  if (target != 0 && target != 1) fail(ErrorCode::Schema, "target_a must be 0 or 1");
  switch (method) {
    case TailorMethod::Plain:
      return fit_plain(train, preds, design, family, topts.glm);
    case TailorMethod::IpwWeighted:
      return fit_tailored_ipw(train, target, design_or(mcfg, "propensity", "linear", dim, names), preds, design,
                              family, topts);
    case TailorMethod::Standardized: {
      StandardizeOptions so;
      const auto stage2 = opt<std::string>(mcfg, "stage_two", "means");
      if (stage2 == "draws") so.target = StageTwoTarget::SimulatedDraws;
      else if (stage2 != "means") fail(ErrorCode::Schema, "stage_two must be 'means' or 'draws'");
      so.seed = opt<std::uint64_t>(mcfg, "seed", 1);
      return fit_tailored_standardized(train, target, design_or(mcfg, "outcome_design", "linear", dim, names),
                                       preds, design, family, so);
    }
  }
  fail(ErrorCode::Schema, "unknown method");
}

FittedModel obtain_model(const Dataset& train, const Json& cfg, const std::string& config_path,
                         const std::vector<std::string>& names, const TailorOptions& topts) {
  const Json& mcfg = section(cfg, "model");
  if (mcfg.contains("load")) {
    FittedModel m = fitted_model_from_json(read_json_file(resolve_path(config_path, opt<std::string>(mcfg, "load", ""))));
    m.predictors().validate(static_cast<Eigen::Index>(names.size()));
    return m;
  }
  return fit_model(train, mcfg, predictors_from(cfg, names), names, topts);
}

// Time-fixed regime: static or stochastic.
Regime regime_from(const Json& cfg, const std::vector<std::string>& names) {
  const Json& r = section(cfg, "regime");
  const auto type = opt<std::string>(r, "type", "static");
  if (type == "static") {
    const int a = opt<int>(r, "a", 0);
    if (a != 0 && a != 1) fail(ErrorCode::InvalidRegime, "static regime needs a in {0, 1}");
    return StaticRegime{a};
  }
  if (type == "stochastic") {
    if (r.contains("p")) {
      const double p = opt<double>(r, "p", 0.0);
      if (!(p >= 0.0 && p <= 1.0)) fail(ErrorCode::InvalidRegime, "stochastic p outside [0, 1]");
      return StochasticRegime::constant(p);
    }
    const double b0 = opt<double>(r, "intercept", 0.0);
    std::vector<std::pair<int, double>> coef;
    if (r.contains("coefficients")) {
      if (!r["coefficients"].is_object()) fail(ErrorCode::Schema, "regime coefficients must be an object");
      for (const auto& [name, v] : r["coefficients"].items()) {
        const auto it = std::find(names.begin(), names.end(), name);
        if (it == names.end()) fail(ErrorCode::Schema, "unknown regime column '" + name + "'");
        if (!v.is_number()) fail(ErrorCode::Schema, "regime coefficient must be a number");
        coef.emplace_back(static_cast<int>(it - names.begin()), v.get<double>());
      }
    }
    StochasticRegime reg;
    reg.pi_star = [b0, coef](const Eigen::VectorXd& x) {
      double eta = b0;
      for (const auto& [c, b] : coef) eta += b * x[c];
      return expit(eta);
    };
    reg.label = "stochastic(logistic)";
    return reg;
  }
  fail(ErrorCode::InvalidRegime, "unknown regime type '" + type + "'");
}

struct MeasureRequest {
  MeasureKind kind;
  Loss loss;
};

MeasureRequest parse_measure(const std::string& s) {
  if (s == "mse" || s == "brier") return {MeasureKind::Loss, Loss::Squared};
  if (s == "mae") return {MeasureKind::Loss, Loss::Absolute};
  if (s == "auc") return {MeasureKind::Auc, Loss::Squared};
  if (s == "calibration") return {MeasureKind::Calibration, Loss::Squared};
  fail(ErrorCode::Schema, "unknown measure '" + s + "'");
}

CalibrationMethod calibration_from(const Json& cfg) {
  const Json& c = section(cfg, "calibration");
  const auto method = opt<std::string>(c, "method", "binned");
  CalibrationMethod m;
  m.bins = opt<int>(c, "bins", Defaults::bins);
  m.bandwidth_fraction = opt<double>(c, "bandwidth", Defaults::bandwidth);
  m.grid_points = opt<int>(c, "grid_points", Defaults::grid_points);
  if (method == "binned") m.kind = CalibrationMethod::Kind::Binned;
  else if (method == "local_linear") m.kind = CalibrationMethod::Kind::LocalLinear;
  else fail(ErrorCode::Schema, "calibration method must be 'binned' or 'local_linear'");
  return m;
}

BootstrapOptions bootstrap_from(const Json& cfg, unsigned threads) {
  const Json& b = section(cfg, "bootstrap");
  BootstrapOptions o;
  o.replicates = opt<int>(b, "B", Defaults::bootstrap_b);
  o.seed = opt<std::uint64_t>(b, "seed", Defaults::bootstrap_seed);
  o.wald = opt<std::string>(b, "interval", "percentile") == "wald";
  o.threads = threads;
  return o;
}

void attach(PerfEstimate& est, const BootstrapResult& b) {
  est.se = b.se;
  est.ci = b.ci_95;
}

// ---------------------------------------------------------------- evaluate

int evaluate_fixed(const Json& cfg, const std::string& config_path, unsigned threads, std::ostream& out) {
  const Dataset data = load_dataset(require_input(cfg, config_path), load_options(cfg));
  const auto& names = data.covariate_names();
  const Dataset train = data.train();
  const Dataset test = data.test();
  if (test.empty()) fail(ErrorCode::Data, "no test rows (D = 0)");
  const TailorOptions topts = tailor_options(cfg);
  const Json& mcfg = section(cfg, "model");
  if (!mcfg.contains("load") && train.empty()) fail(ErrorCode::Data, "no training rows (D = 1)");
  const FittedModel model = obtain_model(train, cfg, config_path, names, topts);
  const Regime regime = regime_from(cfg, names);

  const Json& ncfg = section(cfg, "nuisance");
  const int dim = static_cast<int>(names.size());
  NuisanceSpecs specs;
  specs.propensity = design_or(ncfg, "propensity", "linear", dim, names);
  specs.cond_loss = design_or(ncfg, "cond_loss", "linear", dim, names);
  specs.clip = clip_from(ncfg);

  const auto estimators = opt<std::vector<std::string>>(cfg, "estimators", {"naive", "dr"});
  const auto measures = opt<std::vector<std::string>>(cfg, "measures", {"mse"});
  const CalibrationMethod cal = calibration_from(cfg);
  const BootstrapOptions bopts = bootstrap_from(cfg, threads);

  Json estimates = Json::array();
  Json skipped = Json::array();
  std::vector<PerfEstimate> curves;
  for (const auto& mname : measures) {
    const MeasureRequest m = parse_measure(mname);
    for (const auto& ename : estimators) {
      const EstimatorKind kind = parse_estimator(ename);
      if (kind == EstimatorKind::DR && m.kind != MeasureKind::Loss) {
        skipped.push_back(Json{{"estimator", ename}, {"measure", mname}, {"reason", "no doubly robust form"}});
        continue;
      }
      const bool need_prop = kind == EstimatorKind::IPW || kind == EstimatorKind::DR;
      const bool need_h = kind == EstimatorKind::CL || kind == EstimatorKind::DR || kind == EstimatorKind::OM;
      auto nuisances_for = [&](const Dataset& t, int a) {
        NuisanceSpecs s = specs;
        if (!need_prop) s.propensity.reset();
        if (!need_h) s.cond_loss.reset();
        if (kind == EstimatorKind::Naive) return NuisanceSet{a, m.loss, std::nullopt, std::nullopt};
        return fit_nuisances(t, model, s, a, m.loss, topts.glm);
      };

      std::function<PerfEstimate(const Dataset&)> compute;
      if (const auto* st = std::get_if<StaticRegime>(&regime)) {
        const int a = st->a;
        compute = [&, a](const Dataset& t) {
          const NuisanceSet nuis = nuisances_for(t, a);
          PerfEstimate e;
          switch (m.kind) {
            case MeasureKind::Loss:
              if (kind == EstimatorKind::OM) fail(ErrorCode::Schema, "use 'cl' for the loss outcome-model estimator");
              e = estimate_loss(t, model, nuis, kind);
              break;
            case MeasureKind::Auc:
              e = auc_estimate(t, model, kind, &nuis);
              break;
            case MeasureKind::Calibration:
              e = calibration_curve(t, model, &nuis, cal, kind);
              break;
          }
          if (kind != EstimatorKind::Naive) e.regime = regime_label(regime);
          return e;
        };
      } else {
        const auto& sr = std::get<StochasticRegime>(regime);
        if (m.kind != MeasureKind::Loss) fail(ErrorCode::Schema, "stochastic regimes support loss measures only");
        compute = [&](const Dataset& t) {
          if (kind == EstimatorKind::Naive) return loss_naive(t, model, m.loss);
          const NuisanceSet n0 = nuisances_for(t, 0);
          const NuisanceSet n1 = nuisances_for(t, 1);
          return loss_stochastic(t, sr, n0, n1, model, m.loss, kind);
        };
      }

      PerfEstimate est = compute(test);
      if (m.kind != MeasureKind::Calibration && bopts.replicates > 0) {
        attach(est, bootstrap(test, [&](const Dataset& d) { return compute(d).value; }, bopts));
      }
      estimates.push_back(estimate_to_json(est));
      if (m.kind == MeasureKind::Calibration) curves.push_back(est);
    }
  }

  Json result{{"schema_version", kSchemaVersion},
              {"command", "evaluate"},
              {"n_train", train.size()},
              {"n_test", test.size()},
              {"regime", regime_label(regime)},
              {"model", fitted_model_to_json(model, subset_names(names, model.predictors()))},
              {"bootstrap", Json{{"B", bopts.replicates}, {"seed", bopts.seed}, {"interval", bopts.wald ? "wald" : "percentile"}}},
              {"estimates", estimates}};
  if (!skipped.empty()) result["skipped"] = skipped;
  const Json& ocfg = section(cfg, "output");
  const auto results_path = opt<std::string>(ocfg, "results", "");
  if (results_path.empty()) {
    out << dump(result);
  } else {
    write_text(resolve_path(config_path, results_path), dump(result));
  }
  const auto cal_path = opt<std::string>(ocfg, "calibration_csv", "");
  if (!cal_path.empty()) {
    if (curves.empty()) fail(ErrorCode::Schema, "calibration_csv requested without a calibration measure");
    // One file per curve when several estimators were requested.
    for (std::size_t c = 0; c < curves.size(); ++c) {
      std::string p = resolve_path(config_path, cal_path);
      if (curves.size() > 1) {
        const auto dot = p.find_last_of('.');
        const std::string tag = "_" + estimator_name(curves[c].kind);
        p = dot == std::string::npos ? p + tag : p.substr(0, dot) + tag + p.substr(dot);
      }
      write_text(p, calibration_csv(curves[c]));
    }
  }
  return 0;
}

SequentialRegime sequential_regime_from(const Json& cfg, const SequentialDataset& data,
                                        const std::vector<std::string>& names) {
  const Json& r = section(cfg, "regime");
  const auto type = opt<std::string>(r, "type", "sequence");
  if (type == "sequence") {
    const auto a = opt<std::vector<int>>(r, "treatments", {});
    if (a.size() != data.times()) fail(ErrorCode::InvalidRegime, "regime needs one treatment per time point");
    for (int v : a) {
      if (v != 0 && v != 1) fail(ErrorCode::InvalidRegime, "treatments must be 0 or 1");
    }
    return SequentialRegime::constant(a);
  }
  if (type == "threshold") {
    const auto col = opt<std::string>(r, "column", "");
    const auto it = std::find(names.begin(), names.end(), col);
    if (it == names.end()) fail(ErrorCode::Schema, "unknown regime column '" + col + "'");
    if (!r.contains("threshold")) fail(ErrorCode::Schema, "threshold regime needs 'threshold'");
    return SequentialRegime::threshold(data.times(), static_cast<int>(it - names.begin()),
                                       opt<double>(r, "threshold", 0.0));
  }
  fail(ErrorCode::InvalidRegime, "unknown sequential regime type '" + type + "'");
}

std::vector<DesignSpec> per_time_specs(const Json& j, const char* key, const SequentialDataset& data,
                                       bool baseline_only) {
  std::vector<DesignSpec> out;
  if (!j.contains(key) || j[key].is_null()) return out;
  const Json& v = j[key];
  int width = 0;
  for (std::size_t k = 0; k < data.times(); ++k) {
    width = baseline_only ? static_cast<int>(data.x(0).cols()) : width + static_cast<int>(data.x(k).cols());
    if (v.is_string()) {
      out.push_back(design_spec_shorthand(v.get<std::string>(), width));
    } else if (v.is_array() && v.size() == data.times()) {
      out.push_back(design_spec_from_config(v[k], width));
    } else {
      fail(ErrorCode::Schema, std::string("'") + key + "' must be a shorthand or one design per time point");
    }
  }
  return out;
}

int evaluate_sequential(const Json& cfg, const std::string& config_path, unsigned threads, std::ostream& out) {
  const CsvLoadOptions lopts = load_options(cfg);
  const CsvTable table = read_csv(require_input(cfg, config_path));
  const SequentialDataset data = sequential_from_csv(table, lopts);
  std::vector<std::string> names = lopts.covariates;
  if (names.empty()) {
    for (const auto& h : table.header) {
      if (h != "id" && h != "t" && h != "A" && h != "Y") names.push_back(h);
    }
  }

  // Subject-level split unless the model is loaded.
  const Json& mcfg = section(cfg, "model");
  std::vector<std::size_t> train_ids, test_ids;
  if (mcfg.contains("load")) {
    for (std::size_t i = 0; i < data.size(); ++i) test_ids.push_back(i);
  } else {
    Rng rng(lopts.split_seed, 0x5B117);
    for (std::size_t i = 0; i < data.size(); ++i) {
      (rng.uniform() < lopts.train_fraction ? train_ids : test_ids).push_back(i);
    }
  }
  if (test_ids.empty()) fail(ErrorCode::Data, "no test subjects");
  const SequentialDataset test = data.subset(test_ids);
  const TailorOptions topts = tailor_options(cfg);
  FittedModel model;
  if (mcfg.contains("load")) {
    model = obtain_model(Dataset(), cfg, config_path, names, topts);
  } else {
    if (train_ids.empty()) fail(ErrorCode::Data, "no training subjects");
    const SequentialDataset tr = data.subset(train_ids);
    const Dataset baseline(tr.x(0), tr.a(0), tr.y(), std::vector<Split>(tr.size(), Split::Train), tr.outcome(), names);
    if (parse_method(opt<std::string>(mcfg, "method", "plain")) != TailorMethod::Plain) {
      fail(ErrorCode::Schema, "sequential evaluation fits plain baseline models only; load a tailored model instead");
    }
    model = fit_model(baseline, mcfg, predictors_from(cfg, names), names, topts);
  }

  const SequentialRegime regime = sequential_regime_from(cfg, test, names);
  const Loss loss = parse_measure(opt<std::string>(cfg, "measure", "mse")).loss;
  const Json& ncfg = section(cfg, "nuisance");
  SequentialWeightOptions wopts;
  wopts.clip = clip_from(ncfg);
  if (opt<bool>(ncfg, "stabilize", false)) {
    fail(ErrorCode::Schema, "stabilized weights apply to model fitting, not performance estimation");
  }
  IceOptions iopts;
  const auto estimators = opt<std::vector<std::string>>(cfg, "estimators", {"naive", "ipw", "ice"});
  const BootstrapOptions bopts = bootstrap_from(cfg, threads);

  Json estimates = Json::array();
  for (const auto& ename : estimators) {
    std::function<PerfEstimate(const SequentialDataset&)> compute;
    if (ename == "naive") {
      compute = [&](const SequentialDataset& t) {
        const Eigen::VectorXd mu = model.predict(t.x(0));
        PerfEstimate e;
        e.loss = loss;
        double s = 0.0;
        for (Eigen::Index i = 0; i < mu.size(); ++i) s += evaluate_loss(loss, t.y()[i], mu[i]);
        e.value = s / static_cast<double>(mu.size());
        e.n_test = t.size();
        e.regime = "natural";
        return e;
      };
    } else if (ename == "ipw") {
      compute = [&](const SequentialDataset& t) {
        SequentialWeightOptions w = wopts;
        w.propensity_specs = per_time_specs(ncfg, "propensity", t, false);
        w.numerator_specs = per_time_specs(ncfg, "numerator", t, true);
        return loss_ipw_sequential(t, regime, sequential_weights(t, regime, w), model, loss);
      };
    } else if (ename == "ice") {
      compute = [&](const SequentialDataset& t) {
        IceOptions o = iopts;
        o.outcome_specs = per_time_specs(ncfg, "outcome", t, false);
        return loss_ice_sequential(t, regime, model, loss, o);
      };
    } else {
      fail(ErrorCode::Schema, "sequential estimators are naive, ipw and ice; got '" + ename + "'");
    }
    PerfEstimate est = compute(test);
    if (bopts.replicates > 0) {
      attach(est, bootstrap(test, [&](const SequentialDataset& d) { return compute(d).value; }, bopts));
    }
    Json j = estimate_to_json(est);
    if (ename == "ice") j["estimator"] = "ICE";
    estimates.push_back(j);
  }

  Json followers = Json::array();
  for (auto c : follower_counts(test, regime)) followers.push_back(c);
  Json result{{"schema_version", kSchemaVersion},
              {"command", "evaluate"},
              {"format", "long"},
              {"n_train", train_ids.size()},
              {"n_test", test_ids.size()},
              {"regime", regime.label},
              {"followers", followers},
              {"model", fitted_model_to_json(model, subset_names(names, model.predictors()))},
              {"bootstrap", Json{{"B", bopts.replicates}, {"seed", bopts.seed}}},
              {"estimates", estimates}};
  const auto results_path = opt<std::string>(section(cfg, "output"), "results", "");
  if (results_path.empty()) out << dump(result);
  else write_text(resolve_path(config_path, results_path), dump(result));
  return 0;
}

int cmd_evaluate(const std::string& config_path, unsigned threads, std::ostream& out) {
  const Json cfg = read_json_file(config_path);
  if (!cfg.is_object()) fail(ErrorCode::Schema, "config must be a JSON object");
  if (opt<std::string>(cfg, "format", "wide") == "long") return evaluate_sequential(cfg, config_path, threads, out);
  return evaluate_fixed(cfg, config_path, threads, out);
}

// ---------------------------------------------------------------- tailor

int cmd_tailor(const std::string& config_path, std::ostream& out) {
  const Json cfg = read_json_file(config_path);
  const Dataset data = load_dataset(require_input(cfg, config_path), load_options(cfg));
  const auto& names = data.covariate_names();
  const Dataset train = data.train();
  if (train.empty()) fail(ErrorCode::Data, "no training rows (D = 1)");
  const FittedModel model = fit_model(train, section(cfg, "model"), predictors_from(cfg, names), names,
                                      tailor_options(cfg));
  const Json doc = fitted_model_to_json(model, subset_names(names, model.predictors()));
  const auto path = opt<std::string>(section(cfg, "output"), "model", "");
  if (path.empty()) out << dump(doc);
  else write_text(resolve_path(config_path, path), dump(doc));
  return 0;
}

// ---------------------------------------------------------------- cv

int cmd_cv(const std::string& config_path, std::ostream& out) {
  const Json cfg = read_json_file(config_path);
  const Dataset data = load_dataset(require_input(cfg, config_path), load_options(cfg));
  const auto& names = data.covariate_names();
  const Dataset train = data.train();
  if (train.empty()) fail(ErrorCode::Data, "no training rows (D = 1)");
  if (!cfg.contains("candidates") || !cfg["candidates"].is_array() || cfg["candidates"].empty()) {
    fail(ErrorCode::Schema, "cv config needs a nonempty 'candidates' array");
  }
  const TailorOptions topts = tailor_options(cfg);
  std::vector<ModelRecipe> recipes;
  for (const auto& c : cfg["candidates"]) {
    const std::string name = opt<std::string>(c, "name", "candidate" + std::to_string(recipes.size()));
    const PredictorSubset preds = predictors_from(c.contains("predictors") ? c : cfg, names);
    // Validate eagerly so schema errors surface before any fitting.
    design_or(c, "design", "linear", static_cast<int>(preds.size()), subset_names(names, preds));
    recipes.push_back({name, [c, preds, &names, topts](const Dataset& d) { return fit_model(d, c, preds, names, topts); }});
  }
  const Json& ccfg = section(cfg, "cv");
  CvOptions o;
  o.folds = opt<int>(ccfg, "folds", Defaults::folds);
  o.seed = opt<std::uint64_t>(ccfg, "seed", Defaults::cv_seed);
  o.kind = parse_estimator(opt<std::string>(ccfg, "estimator", "dr"));
  o.target_a = opt<int>(ccfg, "target_a", 0);
  o.loss = parse_measure(opt<std::string>(ccfg, "measure", "mse")).loss;
  o.nuisances_on_full_train = opt<bool>(ccfg, "nuisances_on_full_train", false);
  const int dim = static_cast<int>(names.size());
  const Json& ncfg = section(cfg, "nuisance");
  o.nuisance.propensity = design_or(ncfg, "propensity", "linear", dim, names);
  o.nuisance.cond_loss = design_or(ncfg, "cond_loss", "linear", dim, names);
  o.nuisance.clip = clip_from(ncfg);

  const CvResult r = cv_select(train, recipes, o);
  Json cands = Json::array();
  for (std::size_t c = 0; c < recipes.size(); ++c) {
    cands.push_back(Json{{"name", recipes[c].name}, {"score", r.scores[c]}, {"fold_scores", r.fold_scores[c]}});
  }
  Json doc{{"schema_version", kSchemaVersion},
           {"command", "cv"},
           {"estimator", estimator_name(o.kind)},
           {"measure", loss_name(o.loss)},
           {"folds", o.folds},
           {"seed", o.seed},
           {"selected", recipes[r.selected].name},
           {"candidates", cands}};
  const auto path = opt<std::string>(section(cfg, "output"), "results", "");
  if (path.empty()) out << dump(doc);
  else write_text(resolve_path(config_path, path), dump(doc));
  return 0;
}

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
  int experiment = 2;
  int reps = 100;
  std::size_t n = 1000;
  std::uint64_t seed = 1;
  std::string out;
  std::string write_dataset;
  bool decreasing_treatment = false;
  bool noise_sd = false;
};

int cmd_simulate(const SimulateArgs& a, unsigned threads, std::ostream& out) {
  DgpOptions dgp;
  dgp.decreasing_treatment = a.decreasing_treatment;
  dgp.noise_sd = a.noise_sd;
  if (!a.write_dataset.empty()) {
    Dgp d{a.experiment, a.n, a.seed, 0, dgp};
    write_text(a.write_dataset, dataset_to_csv(split_dataset(generate(d), 0.5, a.seed)));
    return 0;
  }
  ExperimentOptions o;
  o.threads = threads;
  o.dgp = dgp;
  const ExperimentTable t = run_experiment(a.experiment, a.reps, a.n, a.seed, o);
  const std::string csv = experiment_table_to_csv(t);
  if (!a.out.empty()) {
    write_text(a.out + ".csv", csv);
    write_text(a.out + ".json", dump(experiment_table_to_json(t)));
  }
  out << csv;
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Counterfactual prediction model evaluation"};
  app.require_subcommand(1);
  unsigned threads = default_threads();
  app.add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);

  SimulateArgs sa;
  auto* sim = app.add_subcommand("simulate", "Monte Carlo experiment tables");
  sim->add_option("--experiment", sa.experiment, "1 or 2")->required()->check(CLI::IsMember({1, 2}));
  sim->add_option("--reps", sa.reps)->check(CLI::PositiveNumber);
  sim->add_option("--n", sa.n)->check(CLI::Range(std::size_t{4}, std::size_t{100000000}));
  sim->add_option("--seed", sa.seed);
  sim->add_option("--out", sa.out, "output prefix; writes <out>.csv and <out>.json");
  sim->add_option("--threads", threads)->check(CLI::PositiveNumber);
  sim->add_option("--write-dataset", sa.write_dataset, "write one generated dataset as CSV and exit");
  sim->add_flag("--decreasing-treatment", sa.decreasing_treatment, "experiment 1: A ~ expit(1.5 - 0.3X)");
  sim->add_flag("--noise-sd", sa.noise_sd, "experiment 1: noise SD = X instead of variance X");

  std::string eval_config, tailor_config, cv_config;
  auto* ev = app.add_subcommand("evaluate", "estimate counterfactual performance from a JSON config");
  ev->add_option("config", eval_config)->required();
  ev->add_option("--threads", threads)->check(CLI::PositiveNumber);
  auto* ta = app.add_subcommand("tailor", "fit a model and write it as JSON");
  ta->add_option("config", tailor_config)->required();
  auto* cv = app.add_subcommand("cv", "counterfactual cross-validation");
  cv->add_option("config", cv_config)->required();

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: usage\n" << e.what() << "\n";
    return 2;
  }

  try {
    if (sim->parsed()) return cmd_simulate(sa, threads, out);
    if (ev->parsed()) return cmd_evaluate(eval_config, threads, out);
    if (ta->parsed()) return cmd_tailor(tailor_config, out);
    if (cv->parsed()) return cmd_cv(cv_config, out);
  } catch (const Error& e) {
    err << "error: " << error_code_name(e.code()) << "\n" << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    err << "error: internal\n" << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace cfpred::cli
