#ifndef MRP_COMMANDS_HPP
#define MRP_COMMANDS_HPP

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "mrp/config.hpp"
#include "mrp/data.hpp"
#include "mrp/poststrat.hpp"

namespace mrp {

enum ExitCode : int {
  kExitOk = 0,
  kExitInputError = 2,
  kExitNotConverged = 3,
  kExitInternalError = 4,
};

struct FitOutcome {
  std::filesystem::path draws_path;
  std::filesystem::path manifest_path;
  bool converged = true;
};

/// Loads and validates every input before writing anything, then fits and
/// writes draws.bin, draws.json, convergence.txt, convergence.kv and
/// manifest.json under the output directory.
FitOutcome cmd_fit(const RunConfig& config, std::ostream& log);

struct PoststratOptions {
  std::vector<std::string> groupings{"state"};
  std::optional<std::filesystem::path> recorded_totals;
  bool export_draws = false;
  bool slopes = false;
};

/// Writes estimates_<grouping>.csv for every grouping. Returns the paths.
std::vector<std::filesystem::path> cmd_poststratify(const RunConfig& config,
                                                    const std::filesystem::path& draws_path,
                                                    const PoststratOptions& options, std::ostream& log);

/// Raw survey summary next to the model estimate for one state x income point.
struct DiagnosticRow {
  std::string state;
  int income = 0;
  int n = 0;
  std::optional<double> raw_mean;
  std::optional<double> raw_se;
  double model_mean = 0.0;
  double model_sd = 0.0;
};

/// One row per state x income; states ordered by decreasing posterior mean
/// state share, excluded labels dropped.
std::vector<DiagnosticRow> diagnostic_rows(const std::vector<SurveyResponse>& responses,
                                           const CellEstimates& estimates, const CellTable& cells,
                                           const StateTable& states,
                                           const std::vector<std::string>& exclude = {});
void write_diagnostic_rows(std::ostream& out, const std::vector<DiagnosticRow>& rows);

std::filesystem::path cmd_diagnose(const RunConfig& config, const std::filesystem::path& draws_path,
                                   std::ostream& log);

void cmd_simulate(const ScenarioConfig& config, std::ostream& log);

/// CRC-32 of a file's bytes as 8 lowercase hex digits.
std::string file_crc32(const std::filesystem::path& path);

int run_cli(int argc, char** argv);

}  // namespace mrp

#endif  // MRP_COMMANDS_HPP
