#include "mrp/config.hpp"

#include <fstream>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "mrp/csv.hpp"
#include "mrp/error.hpp"

namespace mrp {

namespace pt = boost::property_tree;
namespace fs = std::filesystem;

namespace {

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, ',')) {
    const auto first = item.find_first_not_of(" \t");
    if (first == std::string::npos) continue;
    const auto last = item.find_last_not_of(" \t");
    out.push_back(item.substr(first, last - first + 1));
  }
  return out;
}

bool parse_bool(const std::string& text, const std::string& key) {
  if (text == "true" || text == "1" || text == "yes" || text == "on") return true;
  if (text == "false" || text == "0" || text == "no" || text == "off") return false;
  throw InputError("config: '" + key + "' must be true or false, found '" + text + "'");
}

template <typename T>
T get_number(const pt::ptree& tree, const std::string& key, T fallback) {
  const auto text = tree.get_optional<std::string>(key);
  if (!text) return fallback;
  const auto value = csv::parse_double(*text);
  if (!value) throw InputError("config: '" + key + "' must be a number, found '" + *text + "'");
  return static_cast<T>(*value);
}

fs::path resolve(const fs::path& base, const std::string& value) {
  fs::path p(value);
  if (p.is_relative()) p = base / p;
  return p.lexically_normal();
}

template <std::size_t N>
std::array<double, N> get_array(const pt::ptree& tree, const std::string& key, std::array<double, N> fallback) {
  const auto text = tree.get_optional<std::string>(key);
  if (!text) return fallback;
  const auto items = split_list(*text);
  if (items.size() != N) {
    throw InputError("config: '" + key + "' needs " + std::to_string(N) + " comma-separated values");
  }
  std::array<double, N> out{};
  for (std::size_t i = 0; i < N; ++i) {
    const auto v = csv::parse_double(items[i]);
    if (!v) throw InputError("config: '" + key + "' has a non-numeric entry");
    out[i] = *v;
  }
  return out;
}

ModelSpec parse_model(const pt::ptree& tree, ModelSpec spec) {
  if (auto v = tree.get_optional<std::string>("model.rung")) spec.rung = parse_rung(*v);
  if (auto v = tree.get_optional<std::string>("model.use_ethnicity")) {
    spec.use_ethnicity = parse_bool(*v, "model.use_ethnicity");
  }
  if (auto v = tree.get_optional<std::string>("model.state_predictors")) spec.state_predictors = split_list(*v);
  if (auto v = tree.get_optional<std::string>("model.slope_predictor")) spec.slope_predictor = *v;
  if (auto v = tree.get_optional<std::string>("model.cat_by_state")) {
    spec.cat_by_state = parse_bool(*v, "model.cat_by_state");
  }
  return spec;
}

pt::ptree read_ini(std::istream& in) {
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw InputError(std::string("config: ") + e.what());
  }
  return tree;
}

}  // namespace

RunConfig parse_run_config(std::istream& in, const fs::path& base) {
  const auto tree = read_ini(in);
  RunConfig c;
  const auto survey = tree.get_optional<std::string>("data.survey");
  const auto cells = tree.get_optional<std::string>("data.cells");
  const auto states = tree.get_optional<std::string>("data.states");
  if (!survey || !cells || !states) {
    throw InputError("config: [data] must set survey, cells and states");
  }
  c.survey = resolve(base, *survey);
  c.cells = resolve(base, *cells);
  c.states = resolve(base, *states);
  c.model = parse_model(tree, c.model);

  if (auto v = tree.get_optional<std::string>("prior.mode")) c.prior.mode = parse_prior_mode(*v);
  c.prior.coef_scale = get_number(tree, "prior.coef_scale", c.prior.coef_scale);
  c.prior.log_sigma_mean = get_number(tree, "prior.log_sigma_mean", c.prior.log_sigma_mean);
  c.prior.log_sigma_sd = get_number(tree, "prior.log_sigma_sd", c.prior.log_sigma_sd);
  c.prior.corr_eta = get_number(tree, "prior.corr_eta", c.prior.corr_eta);

  if (auto v = tree.get_optional<std::string>("sampler.method")) {
    if (*v == "mcmc" || *v == "hmc") c.method = FitMethod::mcmc;
    else if (*v == "laplace") c.method = FitMethod::laplace;
    else throw InputError("config: sampler.method must be mcmc or laplace");
  }
  auto& h = c.mcmc.hmc;
  h.chains = get_number(tree, "sampler.chains", h.chains);
  h.warmup = get_number(tree, "sampler.warmup", h.warmup);
  h.iterations = get_number(tree, "sampler.iterations", h.iterations);
  h.seed = get_number<std::uint64_t>(tree, "sampler.seed", h.seed);
  h.target_accept = get_number(tree, "sampler.target_accept", h.target_accept);
  h.integration_time = get_number(tree, "sampler.integration_time", h.integration_time);
  h.max_leapfrog = get_number(tree, "sampler.max_leapfrog", h.max_leapfrog);
  if (auto v = tree.get_optional<std::string>("sampler.init")) c.mcmc.init = parse_init_mode(*v);
  c.mcmc.jitter = get_number(tree, "sampler.jitter", c.mcmc.jitter);
  if (auto v = tree.get_optional<std::string>("sampler.parameterization")) {
    c.mcmc.parameterization = parse_parameterization(*v);
  }
  c.laplace_draws = get_number(tree, "sampler.laplace_draws", c.laplace_draws);
  if (h.chains < 1 || h.iterations < 1 || h.warmup < 0) {
    throw InputError("config: sampler needs chains >= 1, iterations >= 1, warmup >= 0");
  }

  if (auto v = tree.get_optional<std::string>("output.dir")) c.output_dir = resolve(base, *v);
  else c.output_dir = resolve(base, "run");

  if (auto v = tree.get_optional<std::string>("report.exclude_states")) c.exclude_states = split_list(*v);
  if (auto v = tree.get_optional<std::string>("report.exclude_ak_hi_dc")) {
    if (parse_bool(*v, "report.exclude_ak_hi_dc")) {
      for (const char* s : {"AK", "HI", "DC"}) {
        if (std::find(c.exclude_states.begin(), c.exclude_states.end(), s) == c.exclude_states.end()) {
          c.exclude_states.emplace_back(s);
        }
      }
    }
  }
  return c;
}

RunConfig load_run_config(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open config " + path.string());
  if (path.extension() == ".json") {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw InputError("manifest " + path.string() + ": " + e.what());
    }
    if (!j.contains("config")) throw InputError(path.string() + ": manifest has no config section");
    return run_config_from_json(j.at("config"));
  }
  return parse_run_config(in, fs::absolute(path).parent_path());
}

nlohmann::json to_json(const RunConfig& c) {
  const auto& h = c.mcmc.hmc;
  return {
      {"data", {{"survey", c.survey.string()}, {"cells", c.cells.string()}, {"states", c.states.string()}}},
      {"model",
       {{"rung", std::string(to_string(c.model.rung))},
        {"use_ethnicity", c.model.use_ethnicity},
        {"state_predictors", c.model.state_predictors},
        {"slope_predictor", c.model.slope_predictor},
        {"cat_by_state", c.model.cat_by_state}}},
      {"prior",
       {{"mode", std::string(to_string(c.prior.mode))},
        {"coef_scale", c.prior.coef_scale},
        {"log_sigma_mean", c.prior.log_sigma_mean},
        {"log_sigma_sd", c.prior.log_sigma_sd},
        {"corr_eta", c.prior.corr_eta}}},
      {"sampler",
       {{"method", c.method == FitMethod::laplace ? "laplace" : "mcmc"},
        {"chains", h.chains},
        {"warmup", h.warmup},
        {"iterations", h.iterations},
        {"seed", h.seed},
        {"target_accept", h.target_accept},
        {"integration_time", h.integration_time},
        {"max_leapfrog", h.max_leapfrog},
        {"init", std::string(to_string(c.mcmc.init))},
        {"jitter", c.mcmc.jitter},
        {"parameterization", std::string(to_string(c.mcmc.parameterization))},
        {"laplace_draws", c.laplace_draws}}},
      {"output", {{"dir", c.output_dir.string()}}},
      {"report", {{"exclude_states", c.exclude_states}}},
  };
}

RunConfig run_config_from_json(const nlohmann::json& j) {
  try {
    RunConfig c;
    c.survey = j.at("data").at("survey").get<std::string>();
    c.cells = j.at("data").at("cells").get<std::string>();
    c.states = j.at("data").at("states").get<std::string>();
    const auto& m = j.at("model");
    c.model.rung = parse_rung(m.at("rung").get<std::string>());
    c.model.use_ethnicity = m.at("use_ethnicity").get<bool>();
    c.model.state_predictors = m.at("state_predictors").get<std::vector<std::string>>();
    c.model.slope_predictor = m.at("slope_predictor").get<std::string>();
    c.model.cat_by_state = m.at("cat_by_state").get<bool>();
    const auto& p = j.at("prior");
    c.prior.mode = parse_prior_mode(p.at("mode").get<std::string>());
    c.prior.coef_scale = p.at("coef_scale").get<double>();
    c.prior.log_sigma_mean = p.at("log_sigma_mean").get<double>();
    c.prior.log_sigma_sd = p.at("log_sigma_sd").get<double>();
    c.prior.corr_eta = p.at("corr_eta").get<double>();
    const auto& s = j.at("sampler");
    c.method = s.at("method").get<std::string>() == "laplace" ? FitMethod::laplace : FitMethod::mcmc;
    auto& h = c.mcmc.hmc;
    h.chains = s.at("chains").get<int>();
    h.warmup = s.at("warmup").get<int>();
    h.iterations = s.at("iterations").get<int>();
    h.seed = s.at("seed").get<std::uint64_t>();
    h.target_accept = s.at("target_accept").get<double>();
    h.integration_time = s.at("integration_time").get<double>();
    h.max_leapfrog = s.at("max_leapfrog").get<int>();
    c.mcmc.init = parse_init_mode(s.at("init").get<std::string>());
    c.mcmc.jitter = s.at("jitter").get<double>();
    c.mcmc.parameterization = parse_parameterization(s.at("parameterization").get<std::string>());
    c.laplace_draws = s.at("laplace_draws").get<int>();
    c.output_dir = j.at("output").at("dir").get<std::string>();
    c.exclude_states = j.at("report").at("exclude_states").get<std::vector<std::string>>();
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("run config: ") + e.what());
  }
}

ScenarioConfig parse_scenario_config(std::istream& in, const fs::path& base) {
  const auto tree = read_ini(in);
  ScenarioConfig c;
  c.kind = tree.get<std::string>("scenario.kind", "redblue");
  const int S = get_number(tree, "scenario.states", 50);
  const int n = get_number(tree, "scenario.respondents", 30000);
  const auto seed = get_number<std::uint64_t>(tree, "scenario.seed", 1);
  if (n < 0) throw InputError("config: scenario.respondents must be non-negative");
  if (c.kind == "redblue") {
    c.scenario = redblue_scenario(S, n, seed);
  } else if (c.kind == "custom") {
    auto& sc = c.scenario;
    sc.num_states = S;
    sc.respondents = n;
    sc.seed = seed;
    sc.spec = parse_model(tree, sc.spec);
    sc.num_regions = get_number(tree, "scenario.regions", sc.num_regions);
    auto& t = sc.truth;
    t.sigma_alpha = get_number(tree, "truth.sigma_alpha", t.sigma_alpha);
    t.slope_mu = get_number(tree, "truth.slope_mu", t.slope_mu);
    t.slope_sigma = get_number(tree, "truth.slope_sigma", t.slope_sigma);
    t.corr = get_number(tree, "truth.corr", t.corr);
    t.sigma_cat = get_number(tree, "truth.sigma_cat", t.sigma_cat);
    auto vec = [&](const std::string& key) {
      Vector out;
      if (auto v = tree.get_optional<std::string>(key)) {
        const auto items = split_list(*v);
        out.resize(static_cast<Index>(items.size()));
        for (std::size_t i = 0; i < items.size(); ++i) {
          const auto x = csv::parse_double(items[i]);
          if (!x) throw InputError("config: '" + key + "' has a non-numeric entry");
          out(static_cast<Index>(i)) = *x;
        }
      }
      return out;
    };
    t.gamma = vec("truth.gamma");
    t.beta = vec("truth.beta");
  } else {
    throw InputError("config: scenario.kind must be redblue or custom");
  }
  auto& sc = c.scenario;
  sc.income_profile = get_array(tree, "population.income_profile", sc.income_profile);
  sc.ethnicity_profile = get_array(tree, "population.ethnicity_profile", sc.ethnicity_profile);
  sc.turnout = get_array(tree, "population.turnout", sc.turnout);
  sc.nonresponse = get_array(tree, "population.nonresponse", sc.nonresponse);
  if (auto v = tree.get_optional<std::string>("output.dir")) c.output_dir = resolve(base, *v);
  else c.output_dir = resolve(base, "sim");
  return c;
}

ScenarioConfig load_scenario_config(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open config " + path.string());
  return parse_scenario_config(in, fs::absolute(path).parent_path());
}

}  // namespace mrp
