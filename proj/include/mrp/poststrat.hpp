#ifndef MRP_POSTSTRAT_HPP
#define MRP_POSTSTRAT_HPP

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mrp/data.hpp"
#include "mrp/design.hpp"
#include "mrp/diagnostics.hpp"
#include "mrp/inference.hpp"

namespace mrp {

/// Posterior draws of every cell's linear predictor and probability.
/// Columns follow the canonical cell order of `cross`.
struct CellEstimates {
  CellCross cross{0, false};
  Matrix eta;    // draws x cells
  Matrix theta;  // draws x cells, inverse logit of eta

  Index num_draws() const { return theta.rows(); }
  Index num_cells() const { return theta.cols(); }
  Summary summary(Index cell) const;
};

/// Cell probabilities from explicit eta draws.
CellEstimates cell_estimates_from_eta(const CellCross& cross, Matrix eta);

/// theta_j = inv_logit(eta_j(params_d)) for every draw d and cell j.
CellEstimates predict_cells(const PosteriorDraws& draws, const CellTable& cells, const Design& design);

enum class Dim { state, income, ethnicity, region };

std::string_view to_string(Dim dim);
/// "state", "state,income", "ethnicity x region", "national" (empty).
std::vector<Dim> parse_grouping(std::string_view text);
std::string grouping_name(std::span<const Dim> dims);

struct AggregateEstimate {
  std::vector<int> key;  // one value per grouping dim (state index, category or region)
  Vector draws;
  double total_weight = 0.0;
  Summary summary;
  std::vector<Index> cells;
};

struct AggregateTable {
  std::vector<Dim> dims;
  std::vector<AggregateEstimate> groups;

  /// draws x groups.
  Matrix draws() const;
};

/// Per-draw population-weighted average of cell probabilities within each
/// group: theta_g = sum_j N_j theta_j / sum_j N_j.
AggregateTable poststratify(const CellEstimates& estimates, const CellTable& cells,
                            const StateTable& states, std::span<const Dim> grouping);

struct CalibrationResult {
  CellEstimates estimates;
  Matrix delta;  // draws x states, logit shift applied to each state
};

/// Smallest-residual logit shift delta with sum w_c inv_logit(eta_c + delta)
/// / sum w_c = target. Returns exactly 0 when the unshifted residual is
/// already below tol.
double solve_logit_shift(std::span<const double> eta, std::span<const double> weights, double target,
                         double tol = 1e-10);

/// Shifts each state's cells on the logit scale, per draw, so the state's
/// voter-weighted aggregate equals `recorded` (one share per state).
CalibrationResult calibrate_to_totals(const CellEstimates& estimates, const CellTable& cells,
                                      const Vector& recorded, double tol = 1e-10);

/// Reads a state,rep_share table into a per-state vector.
Vector load_recorded_totals(const std::filesystem::path& path, const StateTable& states);

struct StateSlope {
  Index state = 0;
  std::string label;
  double avg_income = 0.0;
  Summary gap;       // theta(income 5) - theta(income 1)
  Summary ls_slope;  // least-squares slope of theta on codes -2..2
  std::optional<Summary> logit_slope;
};

struct StateSlopes {
  Matrix gap_draws;  // draws x states
  Matrix ls_draws;
  std::vector<StateSlope> rows;
};

/// Income gradient of the Republican share within each state. Cells are
/// first poststratified to state x income. `draws` (optional) adds the
/// logit-scale income coefficient of each state.
StateSlopes state_income_slopes(const CellEstimates& estimates, const CellTable& cells,
                                const StateTable& states, const PosteriorDraws* draws = nullptr);

/// National theta(income 5) - theta(income 1), per draw.
Vector national_income_gap(const CellEstimates& estimates, const CellTable& cells,
                           const StateTable& states);

void write_estimates(std::ostream& out, const AggregateTable& table, const StateTable& states);
void write_estimate_draws(std::ostream& out, const AggregateTable& table, const StateTable& states);
void write_slopes(std::ostream& out, const StateSlopes& slopes);

}  // namespace mrp

#endif  // MRP_POSTSTRAT_HPP
