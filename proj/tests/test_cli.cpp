#include <doctest.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include "cfpred/csv.hpp"
#include "cfpred/serialize.hpp"
#include "cli.hpp"

using namespace cfpred;

namespace {

const std::string kData = CFPRED_DATA_DIR;
const std::string kWork = CFPRED_WORK_DIR;

struct Run {
  int code;
  std::string out, err;
};

Run run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string write(const std::string& name, const std::string& text) {
  const std::string path = kWork + "/" + name;
  std::ofstream(path, std::ios::binary) << text;
  return path;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Json base_config(const std::string& input) {
  return Json{{"input", input},
              {"outcome", "binary"},
              {"model", {{"method", "plain"}, {"design", "linear"}}},
              {"regime", {{"type", "static"}, {"a", 0}}},
              {"nuisance", {{"propensity", "quadratic"}, {"cond_loss", "quadratic"}}},
              {"estimators", {"naive", "cl", "ipw", "dr"}},
              {"measures", {"mse"}},
              {"bootstrap", {{"B", 0}}}};
}

Json evaluate(const Json& cfg, const std::string& name) {
  const Run r = run({"evaluate", write(name, cfg.dump())});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  return Json::parse(r.out);
}

double value_of(const Json& result, const std::string& estimator, const std::string& measure = "mse") {
  for (const auto& e : result["estimates"]) {
    if (e["estimator"] == estimator && e["measure"] == measure) return e["value"].get<double>();
  }
  FAIL("estimate not found: " << estimator);
  return 0;
}

}  // namespace

TEST_CASE("usage errors exit 2") {
  const Run bad = run({"simulate", "--experiment", "3"});
  CHECK(bad.code == 2);
  CHECK(bad.err.rfind("error: usage", 0) == 0);
  CHECK(run({}).code == 2);
  CHECK(run({"frobnicate"}).code == 2);
  const Run missing = run({"evaluate", kWork + "/does_not_exist.json"});
  CHECK(missing.code == 2);
  CHECK(missing.err.rfind("error: data", 0) == 0);
  CHECK(run({"--help"}).code == 0);
}

TEST_CASE("simulate writes a 17-row table deterministically") {
  const std::string prefix = kWork + "/sim_small";
  const Run a = run({"simulate", "--experiment", "2", "--reps", "4", "--n", "200", "--seed", "5", "--threads", "1",
                     "--out", prefix});
  REQUIRE(a.code == 0);
  const CsvTable t = parse_csv(a.out);
  CHECK(t.rows.size() == 17);
  CHECK(t.header[0] == "model");
  CHECK(t.has_column("mse_mean"));
  CHECK(slurp(prefix + ".csv") == a.out);
  const Json j = Json::parse(slurp(prefix + ".json"));
  CHECK(j["reps"] == 4);
  const Run b = run({"simulate", "--experiment", "2", "--reps", "4", "--n", "200", "--seed", "5", "--threads", "3"});
  CHECK(b.out == a.out);
  const Run e1 = run({"simulate", "--experiment", "1", "--reps", "3", "--n", "100", "--seed", "5"});
  REQUIRE(e1.code == 0);
  CHECK(parse_csv(e1.out).rows.size() == 12);

  const std::string ds = kWork + "/generated.csv";
  REQUIRE(run({"simulate", "--experiment", "1", "--n", "50", "--seed", "2", "--write-dataset", ds}).code == 0);
  const Dataset d = load_dataset(ds);
  CHECK(d.size() == 50);
  CHECK(d.outcome() == OutcomeType::Continuous);
}

TEST_CASE("evaluate on the bundled example") {
  const Json r = evaluate(base_config(kData + "/example.csv"), "eval_basic.json");
  CHECK(r["n_train"].get<int>() + r["n_test"].get<int>() == 1000);
  CHECK(r["estimates"].size() == 4);
  for (const auto& e : r["estimates"]) {
    const double v = e["value"].get<double>();
    CHECK(v > 0.1);
    CHECK(v < 0.3);
  }
  CHECK(r["regime"] == "static(a=0)");
}

TEST_CASE("IPW equals naive when every test row is at the target arm") {
  const Dataset full = load_dataset(kData + "/example.csv");
  std::vector<int> a = full.a();
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (full.split()[i] == Split::Test) a[i] = 0;
  }
  const Dataset forced(full.x(), a, full.y(), full.split(), full.outcome(), full.covariate_names());
  const std::string path = write("all_control.csv", dataset_to_csv(forced));
  const Json r = evaluate(base_config(path), "eval_all_control.json");
  CHECK(std::abs(value_of(r, "ipw") - value_of(r, "naive")) <= 1e-12);
}

TEST_CASE("schema errors name the problem and exit 2") {
  Json cfg = base_config(kData + "/example.csv");
  cfg["predictors"] = {"x1", "bmi"};
  const Run r = run({"evaluate", write("eval_bad_col.json", cfg.dump())});
  CHECK(r.code == 2);
  CHECK(r.err.rfind("error: schema", 0) == 0);
  CHECK(r.err.find("bmi") != std::string::npos);

  cfg = base_config(kData + "/example.csv");
  cfg["regime"] = {{"type", "static"}, {"a", 3}};
  CHECK(run({"evaluate", write("eval_bad_regime.json", cfg.dump())}).code == 2);

  cfg = base_config(kData + "/example.csv");
  cfg["measures"] = {"logloss"};
  CHECK(run({"evaluate", write("eval_bad_measure.json", cfg.dump())}).code == 2);
  CHECK(run({"evaluate", write("eval_not_json.json", "{nope")}).code == 2);
}

TEST_CASE("AUC, calibration and bootstrap output") {
  Json cfg = base_config(kData + "/example.csv");
  cfg["measures"] = {"auc", "calibration"};
  cfg["estimators"] = {"naive", "ipw", "dr"};
  cfg["bootstrap"] = {{"B", 50}, {"seed", 4}};
  cfg["output"] = {{"calibration_csv", kWork + "/cal.csv"}};
  const Json r = evaluate(cfg, "eval_auc.json");
  CHECK(r["skipped"].size() == 2);
  const double naive = value_of(r, "naive", "auc");
  CHECK(naive > 0.5);
  for (const auto& e : r["estimates"]) {
    if (e["measure"] == "auc") {
      CHECK(e.contains("se"));
      CHECK(e["ci_95"][0].get<double>() <= e["ci_95"][1].get<double>());
    }
  }
  const CsvTable naive_cal = read_csv(kWork + "/cal_naive.csv");
  CHECK(naive_cal.rows.size() == 10);
  CHECK(read_csv(kWork + "/cal_ipw.csv").rows.size() == 10);
}

TEST_CASE("stochastic regime with p = 0 reproduces the static regime") {
  Json cfg = base_config(kData + "/example.csv");
  cfg["estimators"] = {"cl", "ipw"};
  const Json st = evaluate(cfg, "eval_static.json");
  cfg["regime"] = {{"type", "stochastic"}, {"p", 0.0}};
  const Json sto = evaluate(cfg, "eval_stochastic.json");
  CHECK(value_of(sto, "cl") == doctest::Approx(value_of(st, "cl")).epsilon(1e-12));
  CHECK(value_of(sto, "ipw") == doctest::Approx(value_of(st, "ipw")).epsilon(1e-12));
}

TEST_CASE("tailor then evaluate a loaded model") {
  const std::string model_path = kWork + "/tailored.json";
  Json tcfg{{"input", kData + "/example.csv"},
            {"predictors", {"x1", "x2"}},
            {"model", {{"method", "ipw"}, {"target_a", 0}, {"design", "quadratic"}, {"propensity", "quadratic"}}},
            {"output", {{"model", model_path}}}};
  const Run t = run({"tailor", write("tailor.json", tcfg.dump())});
  REQUIRE_MESSAGE(t.code == 0, t.err);
  const Json m = Json::parse(slurp(model_path));
  CHECK(m["method"] == "ipw");
  CHECK(m["predictor_names"] == Json({"x1", "x2"}));

  Json cfg = base_config(kData + "/example.csv");
  cfg["model"] = {{"load", model_path}};
  const Json loaded = evaluate(cfg, "eval_loaded.json");
  CHECK(loaded["model"]["coefficients"] == m["coefficients"]);

  Json std_cfg = tcfg;
  std_cfg["model"] = {{"method", "standardized"}, {"outcome_design", "quadratic"}, {"design", "linear"}};
  std_cfg.erase("output");
  const Run s = run({"tailor", write("tailor_std.json", std_cfg.dump())});
  REQUIRE(s.code == 0);
  CHECK(Json::parse(s.out)["method"] == "standardized");
}

TEST_CASE("cv selects among candidates") {
  Json cfg{{"input", kData + "/example.csv"},
           {"candidates",
            {{{"name", "intercept"}, {"design", "intercept"}},
             {{"name", "linear"}, {"design", "linear"}}}},
           {"cv", {{"folds", 3}, {"seed", 2}, {"estimator", "dr"}}},
           {"nuisance", {{"propensity", "quadratic"}, {"cond_loss", "quadratic"}}}};
  const Run r = run({"cv", write("cv.json", cfg.dump())});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  const Json j = Json::parse(r.out);
  CHECK(j["selected"] == "linear");
  CHECK(j["candidates"][0]["fold_scores"].size() == 3);
  CHECK(run({"cv", write("cv.json", cfg.dump())}).out == r.out);
}

TEST_CASE("long-format evaluation") {
  Json cfg = Json::parse(slurp(kData + "/example_long_config.json"));
  cfg["input"] = kData + "/example_long.csv";
  cfg["bootstrap"] = {{"B", 0}};
  const Json r = evaluate(cfg, "eval_long.json");
  CHECK(r["format"] == "long");
  CHECK(r["followers"].size() == 2);
  CHECK(std::abs(value_of(r, "ipw") - value_of(r, "ICE")) < 0.05);
  cfg["regime"] = {{"type", "sequence"}, {"treatments", {0}}};
  CHECK(run({"evaluate", write("eval_long_bad.json", cfg.dump())}).code == 2);
}
