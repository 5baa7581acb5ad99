#include "cfsim/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "cfsim/error.hpp"

namespace cfsim {

namespace {

using Json = nlohmann::ordered_json;

[[noreturn]] void fail(const std::string& field, const std::string& what) {
  throw Error(ErrorCode::Config, "config: " + field + ": " + what);
}

void require_object(const Json& j, const std::string& field) {
  if (!j.is_object()) fail(field, "expected an object");
}

double as_double(const Json& j, const std::string& field) {
  if (!j.is_number()) fail(field, "expected a number");
  return j.get<double>();
}

std::int64_t as_int(const Json& j, const std::string& field) {
  if (!j.is_number_integer()) fail(field, "expected an integer");
  return j.get<std::int64_t>();
}

std::size_t as_count(const Json& j, const std::string& field) {
  const auto v = as_int(j, field);
  if (v < 0) fail(field, "must be >= 0");
  return static_cast<std::size_t>(v);
}

std::vector<double> as_doubles(const Json& j, const std::string& field) {
  if (!j.is_array()) fail(field, "expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    out.push_back(as_double(j[i], field + "[" + std::to_string(i) + "]"));
  }
  return out;
}

void read_normal(const Json& j, NormalSpec& spec, const std::string& field,
                 double* floor = nullptr, AgeFloorMode* mode = nullptr) {
  require_object(j, field);
  for (const auto& [key, value] : j.items()) {
    const std::string f = field + "." + key;
    if (key == "mu") {
      spec.mu = as_double(value, f);
    } else if (key == "sd") {
      spec.sd = as_double(value, f);
    } else if (floor && key == "floor") {
      *floor = as_double(value, f);
    } else if (mode && key == "floor_mode") {
      if (!value.is_string()) fail(f, "expected \"clamp\" or \"resample\"");
      const auto s = value.get<std::string>();
      if (s == "clamp") {
        *mode = AgeFloorMode::Clamp;
      } else if (s == "resample") {
        *mode = AgeFloorMode::Resample;
      } else {
        fail(f, "expected \"clamp\" or \"resample\", got \"" + s + "\"");
      }
    } else {
      fail(f, "unknown key");
    }
  }
}

void read_covariates(const Json& j, CovariateSpec& spec) {
  require_object(j, "covariates");
  for (const auto& [key, value] : j.items()) {
    if (key == "x1") {
      read_normal(value, spec.grade1, "covariates.x1");
    } else if (key == "x2") {
      read_normal(value, spec.age, "covariates.x2", &spec.age_floor, &spec.age_floor_mode);
    } else if (key == "x3") {
      read_normal(value, spec.grade2, "covariates.x3");
    } else if (key == "x4") {
      require_object(value, "covariates.x4");
      for (const auto& [k, v] : value.items()) {
        if (k != "p") fail("covariates.x4." + k, "unknown key");
        spec.gender_p = as_double(v, "covariates.x4.p");
      }
    } else {
      fail("covariates." + key, "unknown key");
    }
  }
}

void read_outcome(const Json& j, OutcomeParams& p) {
  require_object(j, "outcome");
  for (const auto& [key, value] : j.items()) {
    if (key == "betas") {
      const auto b = as_doubles(value, "outcome.betas");
      if (b.size() != p.betas.size()) fail("outcome.betas", "expected 5 values (intercept, x1..x4)");
      std::copy(b.begin(), b.end(), p.betas.begin());
    } else if (key == "noise_sd") {
      p.noise_sd = as_double(value, "outcome.noise_sd");
    } else {
      fail("outcome." + key, "unknown key");
    }
  }
}

void read_rule(const Json& j, ConfoundedAssignment& rule) {
  require_object(j, "confounding_rule");
  for (const auto& [key, value] : j.items()) {
    const std::string f = "confounding_rule." + key;
    if (key == "lower") {
      rule.lower = as_double(value, f);
    } else if (key == "upper") {
      rule.upper = as_double(value, f);
    } else if (key == "mid_prob") {
      rule.mid_prob = as_double(value, f);
    } else {
      fail(f, "unknown key");
    }
  }
}

void read_lasso(const Json& j, LassoOptions& o) {
  require_object(j, "lasso");
  for (const auto& [key, value] : j.items()) {
    const std::string f = "lasso." + key;
    if (key == "folds") {
      o.folds = static_cast<int>(as_int(value, f));
    } else if (key == "n_lambda") {
      o.n_lambda = static_cast<int>(as_int(value, f));
    } else if (key == "lambda_min_ratio") {
      o.lambda_min_ratio = as_double(value, f);
    } else if (key == "tol") {
      o.tol = as_double(value, f);
    } else if (key == "max_iter") {
      o.max_iter = static_cast<int>(as_int(value, f));
    } else if (key == "lambda_grid") {
      o.lambda_grid = as_doubles(value, f);
    } else {
      fail(f, "unknown key");
    }
  }
}

void read_forest(const Json& j, ForestParams& o) {
  require_object(j, "forest");
  for (const auto& [key, value] : j.items()) {
    const std::string f = "forest." + key;
    if (key == "n_trees") {
      o.n_trees = static_cast<int>(as_int(value, f));
    } else if (key == "mtry") {
      o.mtry = static_cast<int>(as_int(value, f));
    } else if (key == "min_leaf_size") {
      o.min_leaf_size = static_cast<int>(as_int(value, f));
    } else if (key == "bootstrap") {
      if (!value.is_boolean()) fail(f, "expected true or false");
      o.bootstrap = value.get<bool>();
    } else {
      fail(f, "unknown key");
    }
  }
}

std::vector<Method> read_methods(const Json& j) {
  if (!j.is_array()) fail("methods", "expected an array of method names");
  std::vector<Method> out;
  for (const auto& v : j) {
    if (!v.is_string()) fail("methods", "expected method names");
    const auto m = parse_method(v.get<std::string>());
    if (!m || *m == Method::Naive) {
      fail("methods", "unknown method \"" + v.get<std::string>() + "\" (expected LM, Lasso or RF)");
    }
    out.push_back(*m);
  }
  return out;
}

// Applies every key of `j` to `cfg`; scenario-identity keys are only
// accepted inside a scenario entry.
void read_fields(const Json& j, ScenarioConfig& cfg, bool in_scenario, const std::string& prefix) {
  for (const auto& [key, value] : j.items()) {
    const std::string f = prefix + key;
    if (key == "master_seed") {
      if (!value.is_number_unsigned()) fail(f, "expected a non-negative integer");
      cfg.master_seed = value.get<std::uint64_t>();
    } else if (key == "n_samples") {
      cfg.n_samples = as_count(value, f);
    } else if (key == "n_replicates") {
      cfg.n_replicates = as_count(value, f);
    } else if (key == "ate_true_grid") {
      cfg.ate_true_grid = as_doubles(value, f);
    } else if (key == "pi_grid") {
      cfg.pi_grid = as_doubles(value, f);
    } else if (key == "methods") {
      cfg.methods = read_methods(value);
    } else if (key == "covariates") {
      read_covariates(value, cfg.covariates);
    } else if (key == "outcome") {
      read_outcome(value, cfg.outcome);
    } else if (key == "confounding_rule") {
      read_rule(value, cfg.confounding_rule);
    } else if (key == "lasso") {
      read_lasso(value, cfg.models.lasso);
    } else if (key == "forest") {
      read_forest(value, cfg.models.forest);
    } else if (in_scenario && key == "confounding") {
      if (!value.is_string()) fail(f, "expected \"none\" or \"single_x3\"");
      const auto c = parse_confounding(value.get<std::string>());
      if (!c) fail(f, "expected \"none\" or \"single_x3\"");
      cfg.confounding = *c;
    } else if (in_scenario && key == "degree") {
      cfg.degree = static_cast<int>(as_int(value, f));
    } else if (in_scenario && key == "id") {
      // checked after confounding and degree are known
    } else {
      fail(f, "unknown key");
    }
  }
}

Json normal_json(const NormalSpec& s) { return Json{{"mu", s.mu}, {"sd", s.sd}}; }

}  // namespace

std::vector<ScenarioConfig> parse_config(std::string_view text) {
  Json root;
  const bool blank = std::all_of(text.begin(), text.end(), [](char c) { return std::isspace(static_cast<unsigned char>(c)); });
  if (blank) {
    root = Json::object();
  } else {
    try {
      root = Json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(ErrorCode::Config, std::string("config: parse error: ") + e.what());
    }
  }
  require_object(root, "<root>");

  ScenarioConfig base;
  Json shared = Json::object();
  for (const auto& [key, value] : root.items()) {
    if (key != "scenarios") shared[key] = value;
  }
  read_fields(shared, base, false, "");

  std::vector<ScenarioConfig> out;
  if (!root.contains("scenarios")) {
    for (ScenarioConfig s : default_scenarios()) {
      ScenarioConfig merged = base;
      merged.confounding = s.confounding;
      merged.degree = s.degree;
      out.push_back(merged);
    }
  } else {
    const Json& list = root["scenarios"];
    if (!list.is_array() || list.empty()) fail("scenarios", "expected a non-empty array");
    for (std::size_t i = 0; i < list.size(); ++i) {
      const std::string prefix = "scenarios[" + std::to_string(i) + "].";
      require_object(list[i], prefix.substr(0, prefix.size() - 1));
      if (!list[i].contains("confounding") || !list[i].contains("degree")) {
        fail(prefix.substr(0, prefix.size() - 1), "needs \"confounding\" and \"degree\"");
      }
      ScenarioConfig s = base;
      read_fields(list[i], s, true, prefix);
      if (list[i].contains("id")) {
        const auto& id = list[i]["id"];
        if (!id.is_string() || id.get<std::string>() != s.id()) {
          fail(prefix + "id", "does not match confounding/degree (expected \"" + s.id() + "\")");
        }
      }
      out.push_back(s);
    }
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    for (std::size_t k = 0; k < i; ++k) {
      if (out[k].id() == out[i].id()) fail("scenarios", "duplicate scenario " + out[i].id());
    }
    try {
      out[i].validate();
    } catch (const Error& e) {
      throw Error(ErrorCode::Config, "config: scenario " + out[i].id() + ": " + e.what());
    }
  }
  return out;
}

std::vector<ScenarioConfig> load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "config: cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

nlohmann::ordered_json config_to_json(const std::vector<ScenarioConfig>& configs) {
  Json list = Json::array();
  for (const auto& c : configs) {
    Json methods = Json::array();
    for (Method m : c.methods) methods.push_back(std::string(to_string(m)));
    Json x2 = normal_json(c.covariates.age);
    x2["floor"] = c.covariates.age_floor;
    x2["floor_mode"] = c.covariates.age_floor_mode == AgeFloorMode::Clamp ? "clamp" : "resample";
    const auto& l = c.models.lasso;
    const auto& f = c.models.forest;
    list.push_back(Json{
        {"id", c.id()},
        {"confounding", std::string(to_string(c.confounding))},
        {"degree", c.degree},
        {"master_seed", c.master_seed},
        {"n_samples", c.n_samples},
        {"n_replicates", c.n_replicates},
        {"ate_true_grid", c.ate_true_grid},
        {"pi_grid", c.pi_grid},
        {"methods", methods},
        {"covariates",
         Json{{"x1", normal_json(c.covariates.grade1)},
              {"x2", x2},
              {"x3", normal_json(c.covariates.grade2)},
              {"x4", Json{{"p", c.covariates.gender_p}}}}},
        {"outcome", Json{{"betas", c.outcome.betas}, {"noise_sd", c.outcome.noise_sd}}},
        {"confounding_rule", Json{{"lower", c.confounding_rule.lower},
                                  {"upper", c.confounding_rule.upper},
                                  {"mid_prob", c.confounding_rule.mid_prob}}},
        {"lasso", Json{{"folds", l.folds},
                       {"n_lambda", l.n_lambda},
                       {"lambda_min_ratio", l.lambda_min_ratio},
                       {"tol", l.tol},
                       {"max_iter", l.max_iter},
                       {"lambda_grid", l.lambda_grid}}},
        {"forest", Json{{"n_trees", f.n_trees},
                        {"mtry", f.mtry},
                        {"min_leaf_size", f.min_leaf_size},
                        {"bootstrap", f.bootstrap}}},
    });
  }
  return Json{{"scenarios", list}};
}

std::vector<Method> parse_method_list(std::string_view text) {
  std::vector<Method> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto end = std::min(text.find(',', start), text.size());
    const auto name = text.substr(start, end - start);
    const auto m = parse_method(name);
    if (!m || *m == Method::Naive) {
      throw Error(ErrorCode::Config, "methods: unknown method \"" + std::string(name) +
                                         "\" (expected LM, Lasso or RF)");
    }
    out.push_back(*m);
    start = end + 1;
  }
  return out;
}

std::vector<ScenarioConfig> apply_overrides(std::vector<ScenarioConfig> configs,
                                            const ConfigOverrides& o) {
  if (!o.scenarios.empty()) {
    std::vector<ScenarioConfig> kept;
    for (const auto& id : o.scenarios) {
      auto it = std::find_if(configs.begin(), configs.end(),
                             [&](const ScenarioConfig& c) { return c.id() == id; });
      if (it == configs.end()) throw Error(ErrorCode::Config, "scenario: unknown id \"" + id + "\"");
      kept.push_back(*it);
    }
    configs = std::move(kept);
  }
  for (auto& c : configs) {
    if (o.master_seed) c.master_seed = *o.master_seed;
    if (o.n_replicates) c.n_replicates = *o.n_replicates;
    if (o.methods) c.methods = *o.methods;
    if (o.n_trees) c.models.forest.n_trees = *o.n_trees;
    c.validate();
  }
  return configs;
}

}  // namespace cfsim
