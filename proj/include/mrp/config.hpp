#ifndef MRP_CONFIG_HPP
#define MRP_CONFIG_HPP

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "mrp/inference.hpp"
#include "mrp/model.hpp"
#include "mrp/model_spec.hpp"
#include "mrp/synthetic.hpp"

namespace mrp {

enum class FitMethod { mcmc, laplace };

/// Everything needed to reproduce a fit from its inputs.
struct RunConfig {
  std::filesystem::path survey;
  std::filesystem::path cells;
  std::filesystem::path states;
  ModelSpec model;
  PriorConfig prior;
  FitMethod method = FitMethod::mcmc;
  McmcOptions mcmc;
  int laplace_draws = 4000;
  std::filesystem::path output_dir = "run";
  /// Labels left out of diagnostic reports only.
  std::vector<std::string> exclude_states;
};

/// Parses an INI-style config (sections data, model, prior, sampler, output,
/// report). Relative paths resolve against the config file's directory. A
/// .json path is read as a run manifest.
RunConfig load_run_config(const std::filesystem::path& path);
RunConfig parse_run_config(std::istream& in, const std::filesystem::path& base_dir);

nlohmann::json to_json(const RunConfig& config);
RunConfig run_config_from_json(const nlohmann::json& j);

struct ScenarioConfig {
  Scenario scenario;
  std::string kind = "redblue";
  std::filesystem::path output_dir = "sim";
};

ScenarioConfig load_scenario_config(const std::filesystem::path& path);
ScenarioConfig parse_scenario_config(std::istream& in, const std::filesystem::path& base_dir);

}  // namespace mrp

#endif  // MRP_CONFIG_HPP
