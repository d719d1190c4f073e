#include "mrp/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <iterator>
#include <map>
#include <numeric>

#include <boost/crc.hpp>

#include "CLI11.hpp"
#include "mrp/csv.hpp"
#include "mrp/draws_io.hpp"
#include "mrp/error.hpp"
#include "mrp/optimize.hpp"
#include "mrp/synthetic.hpp"

namespace mrp {

namespace fs = std::filesystem;

namespace {

struct Inputs {
  StateTable states;
  SurveyLoad survey;
  CellTable cells;
};

Inputs load_inputs(const RunConfig& config, bool with_survey) {
  Inputs in;
  in.states = load_states(config.states);
  if (with_survey) in.survey = load_survey(config.survey, config.model, in.states);
  in.cells = load_cells(config.cells, config.model, in.states);
  if (with_survey) validate(Dataset{in.survey.responses, in.cells, in.states});
  return in;
}

std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

fs::path default_draws(const RunConfig& config) { return config.output_dir / "draws.bin"; }

std::optional<double> summary_mean(const AggregateTable& table, std::size_t g) {
  return table.groups.at(g).summary.mean;
}

}  // namespace

std::string file_crc32(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  boost::crc_32_type crc;
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof buf);
    crc.process_bytes(buf, static_cast<std::size_t>(in.gcount()));
  }
  char hex[9];
  std::snprintf(hex, sizeof hex, "%08x", crc.checksum());
  return hex;
}

FitOutcome cmd_fit(const RunConfig& config, std::ostream& log) {
  const auto inputs = load_inputs(config, true);
  for (const auto& w : inputs.survey.warnings) log << "warning: " << w << '\n';
  if (inputs.survey.dropped() > 0) {
    log << "dropped " << inputs.survey.dropped_missing_key << " rows with a missing cell key and "
        << inputs.survey.dropped_missing_vote << " rows with a missing vote\n";
  }
  if (inputs.survey.responses.empty()) throw InputError("survey has no usable responses");
  nlohmann::json checksums;
  for (const auto& [name, path] : {std::pair{"survey", config.survey}, std::pair{"cells", config.cells},
                                   std::pair{"states", config.states}}) {
    checksums[name] = {{"path", path.string()}, {"crc32", file_crc32(path)}};
  }

  Design design(config.model, inputs.states);
  const LogDensityModel model(design, inputs.survey.responses, config.prior);

  PosteriorDraws draws;
  if (config.method == FitMethod::laplace) {
    draws = fit_laplace(model, config.laplace_draws, config.mcmc.hmc.seed);
  } else {
    draws = sample_mcmc(model, config.mcmc);
  }

  const bool checked = draws.diagnostics.has_value();
  const bool converged = !checked || draws.diagnostics->converged;
  const std::string stamp = !checked ? "not-assessed" : (converged ? "converged" : "non-converged");

  fs::create_directories(config.output_dir);
  FitOutcome outcome;
  outcome.draws_path = default_draws(config);
  outcome.manifest_path = config.output_dir / "manifest.json";
  outcome.converged = converged;
  write_draws(outcome.draws_path, draws, {{"convergence", stamp}});

  nlohmann::json conv = {{"status", stamp}, {"divergences", draws.divergences}};
  if (checked) {
    const auto& r = *draws.diagnostics;
    auto out_txt = open_output(config.output_dir / "convergence.txt");
    write_report_table(out_txt, r);
    auto out_kv = open_output(config.output_dir / "convergence.kv");
    write_report_kv(out_kv, r);
    conv["max_rhat"] = std::isfinite(r.max_rhat) ? nlohmann::json(r.max_rhat) : nlohmann::json();
    conv["min_ess"] = std::isfinite(r.min_ess) ? nlohmann::json(r.min_ess) : nlohmann::json();
    conv["warnings"] = r.warnings;
    for (const auto& w : r.warnings) log << "warning: " << w << '\n';
  }

  nlohmann::json manifest = {
      {"format", "mrp-run"},
      {"command", "fit"},
      {"config", to_json(config)},
      {"inputs", checksums},
      {"survey", {{"responses", inputs.survey.responses.size()},
                  {"dropped_missing_key", inputs.survey.dropped_missing_key},
                  {"dropped_missing_vote", inputs.survey.dropped_missing_vote}}},
      {"outputs", {{"draws", "draws.bin"}, {"draws_header", "draws.json"},
                   {"draws_crc32", file_crc32(outcome.draws_path)}}},
      {"convergence", conv},
  };
  auto out = open_output(outcome.manifest_path);
  out << manifest.dump(2) << '\n';
  log << "fit: " << draws.size() << " draws of " << draws.draws.cols() << " parameters, " << stamp << '\n';
  return outcome;
}

std::vector<fs::path> cmd_poststratify(const RunConfig& config, const fs::path& draws_path,
                                       const PoststratOptions& options, std::ostream& log) {
  const auto inputs = load_inputs(config, false);
  const Design design(config.model, inputs.states);
  const auto file = read_draws(draws_path);
  if (!(file.draws.layout == design.layout())) {
    throw InputError(draws_path.string() + ": draws layout does not match the configured model");
  }
  std::vector<std::vector<Dim>> groupings;
  for (const auto& g : options.groupings) groupings.push_back(parse_grouping(g));
  for (const auto& dims : groupings) {
    if (std::find(dims.begin(), dims.end(), Dim::ethnicity) != dims.end() && !config.model.use_ethnicity) {
      throw InputError("grouping dimension 'ethnicity' is not part of the model cross");
    }
  }
  std::optional<Vector> recorded;
  if (options.recorded_totals) recorded = load_recorded_totals(*options.recorded_totals, inputs.states);

  auto estimates = predict_cells(file.draws, inputs.cells, design);
  fs::create_directories(config.output_dir);
  if (recorded) {
    auto calibrated = calibrate_to_totals(estimates, inputs.cells, *recorded);
    estimates = std::move(calibrated.estimates);
    auto out = open_output(config.output_dir / "calibration.csv");
    out << "state,recorded,delta_mean,delta_sd\n";
    for (Index s = 0; s < inputs.states.size(); ++s) {
      const auto sm = summarize(Vector(calibrated.delta.col(s)));
      out << inputs.states.label(s) << ',' << csv::format_double((*recorded)(s)) << ','
          << csv::format_double(sm.mean) << ',' << csv::format_double(sm.sd) << '\n';
    }
    log << "calibrated " << inputs.states.size() << " states to recorded totals\n";
  }

  std::vector<fs::path> written;
  for (const auto& dims : groupings) {
    const auto table = poststratify(estimates, inputs.cells, inputs.states, dims);
    const auto name = grouping_name(dims);
    const auto path = config.output_dir / ("estimates_" + name + ".csv");
    auto out = open_output(path);
    write_estimates(out, table, inputs.states);
    written.push_back(path);
    if (options.export_draws) {
      const auto dpath = config.output_dir / ("estimate_draws_" + name + ".csv");
      auto dout = open_output(dpath);
      write_estimate_draws(dout, table, inputs.states);
      written.push_back(dpath);
    }
    log << "wrote " << path.string() << " (" << table.groups.size() << " rows)\n";
  }
  if (options.slopes) {
    const auto slopes = state_income_slopes(estimates, inputs.cells, inputs.states, &file.draws);
    const auto path = config.output_dir / "slopes.csv";
    auto out = open_output(path);
    write_slopes(out, slopes);
    written.push_back(path);
  }
  return written;
}

std::vector<DiagnosticRow> diagnostic_rows(const std::vector<SurveyResponse>& responses,
                                           const CellEstimates& estimates, const CellTable& cells,
                                           const StateTable& states, const std::vector<std::string>& exclude) {
  const Index S = states.size();
  const std::vector<Dim> by_state{Dim::state};
  const std::vector<Dim> by_state_income{Dim::state, Dim::income};
  const auto state_table = poststratify(estimates, cells, states, by_state);
  const auto point_table = poststratify(estimates, cells, states, by_state_income);

  std::vector<double> share(static_cast<std::size_t>(S), 0.0);
  for (std::size_t g = 0; g < state_table.groups.size(); ++g) {
    share[static_cast<std::size_t>(state_table.groups[g].key[0])] = *summary_mean(state_table, g);
  }
  std::map<std::pair<int, int>, const AggregateEstimate*> points;
  for (const auto& g : point_table.groups) points[{g.key[0], g.key[1]}] = &g;

  struct Raw {
    int n = 0;
    double w = 0.0, wy = 0.0;
  };
  std::map<std::pair<int, int>, Raw> raw;
  for (const auto& r : responses) {
    auto& cell = raw[{r.state, r.income}];
    cell.n += 1;
    cell.w += r.weight;
    cell.wy += r.weight * r.vote;
  }

  std::vector<int> order(static_cast<std::size_t>(S));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return share[static_cast<std::size_t>(a)] > share[static_cast<std::size_t>(b)];
  });

  std::vector<DiagnosticRow> rows;
  for (const int s : order) {
    const auto& label = states.label(s);
    if (std::find(exclude.begin(), exclude.end(), label) != exclude.end()) continue;
    for (int i = 1; i <= kIncomeCategories; ++i) {
      DiagnosticRow row;
      row.state = label;
      row.income = i;
      const auto it = points.find({s, i});
      if (it != points.end()) {
        row.model_mean = it->second->summary.mean;
        row.model_sd = it->second->summary.sd;
      }
      const auto r = raw.find({s, i});
      if (r != raw.end() && r->second.n > 0 && r->second.w > 0.0) {
        row.n = r->second.n;
        const double p = r->second.wy / r->second.w;
        row.raw_mean = p;
        row.raw_se = std::sqrt(p * (1.0 - p) / row.n);
      }
      rows.push_back(row);
    }
  }
  return rows;
}

void write_diagnostic_rows(std::ostream& out, const std::vector<DiagnosticRow>& rows) {
  out << "state,income,n,raw_mean,raw_se,model_mean,model_sd\n";
  auto opt = [](const std::optional<double>& v) { return v ? csv::format_double(*v) : std::string(); };
  for (const auto& r : rows) {
    out << r.state << ',' << r.income << ',' << r.n << ',' << opt(r.raw_mean) << ',' << opt(r.raw_se) << ','
        << csv::format_double(r.model_mean) << ',' << csv::format_double(r.model_sd) << '\n';
  }
}

fs::path cmd_diagnose(const RunConfig& config, const fs::path& draws_path, std::ostream& log) {
  const auto inputs = load_inputs(config, true);
  const Design design(config.model, inputs.states);
  const auto file = read_draws(draws_path);
  const auto estimates = predict_cells(file.draws, inputs.cells, design);
  const auto rows = diagnostic_rows(inputs.survey.responses, estimates, inputs.cells, inputs.states,
                                    config.exclude_states);
  fs::create_directories(config.output_dir);
  const auto path = config.output_dir / "diagnostics.csv";
  auto out = open_output(path);
  write_diagnostic_rows(out, rows);
  log << "wrote " << path.string() << " (" << rows.size() << " rows)\n";
  return path;
}

void cmd_simulate(const ScenarioConfig& config, std::ostream& log) {
  const auto truth = make_truth(config.scenario);
  const auto data = simulate_poll(truth, config.scenario);
  write_simulation(config.output_dir, data, truth);
  log << "wrote survey.csv, cells.csv, states.csv and truth.csv to " << config.output_dir.string() << " ("
      << data.responses.size() << " respondents, " << truth.cells.size() << " cells)\n";
}

int run_cli(int argc, char** argv) {
  CLI::App app{"Multilevel regression and poststratification"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::string draws_path;
  std::optional<std::uint64_t> seed;

  auto* fit = app.add_subcommand("fit", "Fit the model and write posterior draws");
  fit->add_option("config", config_path, "Run config (.ini) or a previous manifest.json")->required();
  fit->add_option("-o,--out", out_dir, "Output directory (overrides the config)");
  fit->add_option("--seed", seed, "Sampler seed (overrides the config)");

  PoststratOptions post_opts;
  std::vector<std::string> groupings;
  std::string totals;
  auto* post = app.add_subcommand("poststratify", "Aggregate cell estimates by grouping");
  post->add_option("config", config_path, "Run config or manifest")->required();
  post->add_option("-d,--draws", draws_path, "Draws file (default <out>/draws.bin)");
  post->add_option("-o,--out", out_dir, "Output directory (overrides the config)");
  post->add_option("-b,--by", groupings, "Grouping, e.g. state, \"state,income\", national (repeatable)");
  post->add_option("--totals", totals, "Recorded state totals (columns state,rep_share) to calibrate to");
  post->add_flag("--export-draws", post_opts.export_draws, "Also write per-draw aggregates");
  post->add_flag("--slopes", post_opts.slopes, "Also write per-state income slopes");

  bool exclude_flag = false;
  auto* diag = app.add_subcommand("diagnose", "Raw survey means next to model estimates");
  diag->add_option("config", config_path, "Run config or manifest")->required();
  diag->add_option("-d,--draws", draws_path, "Draws file (default <out>/draws.bin)");
  diag->add_option("-o,--out", out_dir, "Output directory (overrides the config)");
  diag->add_flag("--exclude-ak-hi-dc", exclude_flag, "Leave AK, HI and DC out of the table");

  std::string scenario_path;
  int sim_states = 50;
  int sim_n = 30000;
  auto* sim = app.add_subcommand("simulate", "Write a synthetic survey, population and truth");
  sim->add_option("--config", scenario_path, "Scenario config (.ini)");
  sim->add_option("--states", sim_states, "Number of states for the built-in scenario");
  sim->add_option("--respondents", sim_n, "Survey size for the built-in scenario");
  sim->add_option("--seed", seed, "Seed");
  sim->add_option("-o,--out", out_dir, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInputError;
  }

  try {
    auto load = [&] {
      auto config = load_run_config(config_path);
      if (!out_dir.empty()) config.output_dir = out_dir;
      if (seed) config.mcmc.hmc.seed = *seed;
      return config;
    };
    if (*fit) {
      const auto outcome = cmd_fit(load(), std::cerr);
      return outcome.converged ? kExitOk : kExitNotConverged;
    }
    if (*post) {
      const auto config = load();
      if (!groupings.empty()) post_opts.groupings = groupings;
      if (!totals.empty()) post_opts.recorded_totals = fs::path(totals);
      cmd_poststratify(config, draws_path.empty() ? default_draws(config) : fs::path(draws_path), post_opts,
                       std::cerr);
      return kExitOk;
    }
    if (*diag) {
      auto config = load();
      if (exclude_flag) {
        for (const char* s : {"AK", "HI", "DC"}) config.exclude_states.emplace_back(s);
      }
      cmd_diagnose(config, draws_path.empty() ? default_draws(config) : fs::path(draws_path), std::cerr);
      return kExitOk;
    }
    if (*sim) {
      ScenarioConfig sc;
      if (!scenario_path.empty()) {
        sc = load_scenario_config(scenario_path);
        if (seed) throw InputError("--seed cannot be combined with --config; set scenario.seed instead");
      } else {
        sc.scenario = redblue_scenario(sim_states, sim_n, seed.value_or(1));
      }
      if (!out_dir.empty()) sc.output_dir = out_dir;
      cmd_simulate(sc, std::cerr);
      return kExitOk;
    }
  } catch (const InputError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return kExitInputError;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return kExitInternalError;
  }
  return kExitInternalError;
}

}  // namespace mrp
