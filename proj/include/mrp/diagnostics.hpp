#ifndef MRP_DIAGNOSTICS_HPP
#define MRP_DIAGNOSTICS_HPP

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "mrp/math.hpp"

namespace mrp {

/// Linear-interpolation (type 7) quantile of `values`; p in [0, 1].
double quantile(std::span<const double> values, double p);

struct Summary {
  double mean = 0.0;
  double sd = 0.0;
  double q05 = 0.0, q25 = 0.0, q50 = 0.0, q75 = 0.0, q95 = 0.0;
};

Summary summarize(std::span<const double> values);
Summary summarize(const Vector& values);

/// Split-chain potential scale reduction. `draws` is iterations x chains.
/// Returns NaN when the within-chain variance is zero (undefined).
double split_rhat(const Matrix& draws);

/// Multi-chain effective sample size (split chains, Geyer's initial
/// monotone sequence). `draws` is iterations x chains. NaN when all draws
/// are constant.
double effective_sample_size(const Matrix& draws);

struct ConvergenceThresholds {
  double max_rhat = 1.1;
  double min_ess = 100.0;
  /// Divergent transitions above this fraction produce a warning.
  double divergence_fraction = 0.01;
};

struct ParameterDiagnostic {
  std::string name;
  Summary summary;
  double rhat = 0.0;
  double ess = 0.0;
};

struct DiagnosticsReport {
  int chains = 0;
  int draws_per_chain = 0;
  int divergences = 0;
  std::vector<ParameterDiagnostic> parameters;
  double max_rhat = 0.0;  // over parameters with a defined R-hat
  double min_ess = 0.0;
  int undefined_rhat = 0;
  bool converged = false;
  std::vector<std::string> warnings;
};

/// Diagnostics for draws (rows) grouped by chain id; needs >= 2 chains for
/// R-hat. Names label the columns.
DiagnosticsReport diagnose(const Matrix& draws, const std::vector<int>& chain,
                           const std::vector<std::string>& names, int divergences = 0,
                           const ConvergenceThresholds& thresholds = {});

void write_report_table(std::ostream& out, const DiagnosticsReport& report);
void write_report_kv(std::ostream& out, const DiagnosticsReport& report);

}  // namespace mrp

#endif  // MRP_DIAGNOSTICS_HPP
