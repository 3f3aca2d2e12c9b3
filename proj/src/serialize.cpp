#include "cfpred/serialize.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

namespace cfpred {

namespace {

std::string transform_name(Transform t) {
  switch (t) {
    case Transform::Linear: return "linear";
    case Transform::Power: return "power";
    case Transform::Spline: return "spline";
  }
  return "linear";
}

Transform parse_transform(const std::string& s) {
  if (s == "linear") return Transform::Linear;
  if (s == "power") return Transform::Power;
  if (s == "spline") return Transform::Spline;
  fail(ErrorCode::Schema, "unknown transform '" + s + "'");
}

int resolve_column(const Json& c, const std::vector<std::string>* names) {
  if (c.is_number_integer()) return c.get<int>();
  if (c.is_string() && names) {
    const auto name = c.get<std::string>();
    for (std::size_t i = 0; i < names->size(); ++i) {
      if ((*names)[i] == name) return static_cast<int>(i);
    }
    fail(ErrorCode::Schema, "unknown column '" + name + "' in design");
  }
  fail(ErrorCode::Schema, "design term needs an integer \"col\"");
}

Json number_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

Json summary_to_json(const McSummary& s) {
  return Json{{"mean", s.mean},           {"sd", s.sd},
              {"bias", s.bias},           {"rel_bias", s.rel_bias},
              {"sqrt_n_sd", s.sqrt_n_sd}, {"sqrt_n_bias", s.sqrt_n_bias},
              {"percent_bias", 100.0 * s.rel_bias}, {"truth", s.truth},
              {"reps", s.reps}};
}

}  // namespace

Json design_spec_to_json(const DesignSpec& spec) {
  Json terms = Json::array();
  for (const auto& t : spec.terms) {
    Json jt{{"col", t.col}, {"transform", transform_name(t.transform)}};
    if (t.transform == Transform::Power) jt["power"] = t.param;
    if (t.transform == Transform::Spline) jt["df"] = t.param;
    terms.push_back(jt);
  }
  return Json{{"intercept", spec.intercept}, {"terms", terms}};
}

DesignSpec design_spec_from_json(const Json& j, const std::vector<std::string>* names) {
  if (!j.is_object()) fail(ErrorCode::Schema, "design must be an object");
  DesignSpec spec;
  spec.intercept = j.value("intercept", true);
  if (j.contains("terms")) {
    if (!j["terms"].is_array()) fail(ErrorCode::Schema, "design \"terms\" must be an array");
    for (const auto& jt : j["terms"]) {
      if (!jt.is_object() || !jt.contains("col")) fail(ErrorCode::Schema, "design term needs \"col\"");
      Term t;
      t.col = resolve_column(jt["col"], names);
      t.transform = parse_transform(jt.value("transform", std::string("linear")));
      if (t.transform == Transform::Power) t.param = jt.value("power", 2);
      if (t.transform == Transform::Spline) t.param = jt.value("df", 4);
      spec.terms.push_back(t);
    }
  }
  spec.validate();
  return spec;
}

DesignSpec design_spec_shorthand(const std::string& s, int dim) {
  if (s == "intercept") return DesignSpec::intercept_only();
  if (s == "linear") return DesignSpec::linear(dim);
  if (s == "quadratic") return DesignSpec::quadratic(dim);
  if (s == "spline") return DesignSpec::splines(dim, 4);
  if (s.rfind("spline:", 0) == 0) {
    try {
      return DesignSpec::splines(dim, std::stoi(s.substr(7)));
    } catch (const std::logic_error&) {
      fail(ErrorCode::Schema, "bad spline df in '" + s + "'");
    }
  }
  fail(ErrorCode::Schema, "unknown design '" + s + "'");
}

DesignSpec design_spec_from_config(const Json& j, int dim, const std::vector<std::string>* names) {
  DesignSpec spec = j.is_string() ? design_spec_shorthand(j.get<std::string>(), dim) : design_spec_from_json(j, names);
  if (spec.max_column() >= dim) fail(ErrorCode::Schema, "design references a column beyond the covariates");
  spec.validate();
  return spec;
}

TailorMethod parse_method(const std::string& name) {
  if (name == "plain") return TailorMethod::Plain;
  if (name == "standardized") return TailorMethod::Standardized;
  if (name == "ipw") return TailorMethod::IpwWeighted;
  fail(ErrorCode::Schema, "unknown tailoring method '" + name + "'");
}

Json fitted_model_to_json(const FittedModel& model, const std::vector<std::string>& predictor_names) {
  const GlmModel& g = model.inner();
  Json knots = Json::array();
  for (const auto& s : g.basis().splines()) knots.push_back(s.knots());
  Json coef = Json::array();
  for (Eigen::Index i = 0; i < g.fit().coefficients.size(); ++i) coef.push_back(g.fit().coefficients[i]);
  Json j{{"schema_version", kSchemaVersion},
         {"family", family_name(g.fit().family)},
         {"design", design_spec_to_json(g.basis().spec())},
         {"spline_knots", knots},
         {"coefficients", coef},
         {"converged", g.fit().converged},
         {"predictors", model.predictors().indices()},
         {"method", method_name(model.method())},
         {"clip_unit", model.clip_unit()}};
  j["target_a"] = model.target_a() ? Json(*model.target_a()) : Json(nullptr);
  if (!predictor_names.empty()) j["predictor_names"] = predictor_names;
  if (!model.warnings.empty()) j["warnings"] = model.warnings;
  return j;
}

FittedModel fitted_model_from_json(const Json& j) {
  try {
    const DesignSpec spec = design_spec_from_json(j.at("design"));
    std::vector<NaturalSpline> splines;
    for (const auto& k : j.at("spline_knots")) splines.emplace_back(k.get<std::vector<double>>());
    DesignBasis basis = DesignBasis::from_parts(spec, std::move(splines));
    GlmFit fit;
    fit.family = parse_family(j.at("family").get<std::string>());
    fit.design = spec;
    const auto coef = j.at("coefficients").get<std::vector<double>>();
    if (static_cast<Eigen::Index>(coef.size()) != basis.columns()) {
      fail(ErrorCode::Schema, "coefficient count does not match the design");
    }
    fit.coefficients = Eigen::Map<const Eigen::VectorXd>(coef.data(), static_cast<Eigen::Index>(coef.size()));
    fit.converged = j.value("converged", true);
    std::optional<int> target;
    if (j.contains("target_a") && !j["target_a"].is_null()) target = j["target_a"].get<int>();
    FittedModel m(GlmModel(std::move(basis), std::move(fit)),
                  PredictorSubset(j.at("predictors").get<std::vector<int>>()), target,
                  parse_method(j.value("method", std::string("plain"))), j.value("clip_unit", false));
    if (j.contains("warnings")) m.warnings = j["warnings"].get<std::vector<std::string>>();
    return m;
  } catch (const Json::exception& e) {
    fail(ErrorCode::Schema, std::string("malformed model document: ") + e.what());
  }
}

Json estimate_to_json(const PerfEstimate& est) {
  Json j{{"estimator", estimator_name(est.kind)},
         {"measure", measure_name(est.measure, est.loss)},
         {"regime", est.regime},
         {"n_test", est.n_test}};
  if (est.measure == MeasureKind::Calibration) {
    Json curve = Json::array();
    for (const auto& p : est.curve) {
      curve.push_back(Json{{"predicted", p.predicted}, {"observed", number_or_null(p.observed)}, {"count", p.count}});
    }
    j["curve"] = curve;
  } else {
    j["value"] = est.value;
  }
  if (est.se) j["se"] = *est.se;
  if (est.ci) j["ci_95"] = Json::array({est.ci->first, est.ci->second});
  return j;
}

std::string calibration_csv(const PerfEstimate& est) {
  std::ostringstream os;
  os.precision(17);
  os << "predicted,observed\n";
  for (const auto& p : est.curve) {
    os << p.predicted << ',';
    if (std::isfinite(p.observed)) os << p.observed;
    else os << "NA";
    os << '\n';
  }
  return os.str();
}

Json experiment_table_to_json(const ExperimentTable& table) {
  Json rows = Json::array();
  for (const auto& r : table.rows) {
    Json jr{{"model", r.model}, {"scenario", r.scenario}, {"estimator", r.estimator}};
    jr["mse"] = r.mse ? summary_to_json(r.mse->summary) : Json(nullptr);
    jr["auc"] = r.auc ? summary_to_json(r.auc->summary) : Json(nullptr);
    rows.push_back(jr);
  }
  return Json{{"schema_version", kSchemaVersion},
              {"experiment", table.experiment},
              {"reps", table.reps},
              {"n", table.n},
              {"seed", table.seed},
              {"n_test", table.n_test},
              {"failures", table.failures},
              {"rows", rows}};
}

std::string format_fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  std::string s(buf);
  // Avoid "-0.000".
  if (s.find_first_not_of("-0.") == std::string::npos && s[0] == '-') s.erase(0, 1);
  return s;
}

std::string experiment_table_to_csv(const ExperimentTable& table) {
  std::ostringstream os;
  os << "model,scenario,estimator,"
        "mse_mean,mse_sqrt_n_sd,mse_sqrt_n_bias,mse_percent,"
        "auc_mean,auc_sqrt_n_sd,auc_sqrt_n_bias,auc_percent\n";
  auto cols = [&](const std::optional<MeasureColumn>& c) {
    if (!c) return std::string(",,,");
    const auto& s = c->summary;
    return format_fixed(s.mean, 4) + ',' + format_fixed(s.sqrt_n_sd, 4) + ',' + format_fixed(s.sqrt_n_bias, 4) +
           ',' + format_fixed(100.0 * s.rel_bias, 2);
  };
  for (const auto& r : table.rows) {
    os << r.model << ',' << r.scenario << ',' << r.estimator << ',' << cols(r.mse) << ',' << cols(r.auc) << '\n';
  }
  return os.str();
}

}  // namespace cfpred
