#pragma once

// JSON and CSV output: fitted models, design specs, estimates and
// simulation tables.

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cfpred/glm.hpp"
#include "cfpred/inference.hpp"
#include "cfpred/perf.hpp"
#include "cfpred/simulate.hpp"
#include "cfpred/tailor.hpp"

namespace cfpred {

inline constexpr int kSchemaVersion = 1;

using Json = nlohmann::json;

// {"intercept": bool, "terms": [{"col": c, "transform": "linear"|"power"|"spline", "power"?: k, "df"?: d}]}
// When `names` is given, "col" may also be a column name.
Json design_spec_to_json(const DesignSpec& spec);
DesignSpec design_spec_from_json(const Json& j, const std::vector<std::string>* names = nullptr);

// Shorthand strings accepted where a design is expected:
// "intercept", "linear", "quadratic", "spline" / "spline:<df>".
DesignSpec design_spec_shorthand(const std::string& s, int dim);
// Object or shorthand string.
DesignSpec design_spec_from_config(const Json& j, int dim, const std::vector<std::string>* names = nullptr);

Json fitted_model_to_json(const FittedModel& model, const std::vector<std::string>& predictor_names = {});
FittedModel fitted_model_from_json(const Json& j);

TailorMethod parse_method(const std::string& name);

Json estimate_to_json(const PerfEstimate& est);

// Two columns: predicted, observed.
std::string calibration_csv(const PerfEstimate& est);

Json experiment_table_to_json(const ExperimentTable& table);
std::string experiment_table_to_csv(const ExperimentTable& table);

// Fixed-format number for tables.
std::string format_fixed(double v, int digits);

}  // namespace cfpred
