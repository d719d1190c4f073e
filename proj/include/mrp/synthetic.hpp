#ifndef MRP_SYNTHETIC_HPP
#define MRP_SYNTHETIC_HPP

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <random>
#include <vector>

#include "mrp/data.hpp"
#include "mrp/design.hpp"
#include "mrp/model.hpp"

namespace mrp {

/// True hyperparameters of the generative model. `gamma` and `beta` follow
/// the design's gamma and beta blocks; empty means defaults.
struct Hyperparameters {
  Vector gamma;
  double sigma_alpha = 0.3;
  Vector beta;
  double slope_mu = 0.0;
  double slope_sigma = 0.05;
  double corr = 0.0;
  double sigma_cat = 0.1;
};

struct Scenario {
  int num_states = 50;
  ModelSpec spec;
  Hyperparameters truth;
  int respondents = 30000;
  std::uint64_t seed = 1;
  int num_regions = 4;
  /// Population share of each income category within a state.
  std::array<double, kIncomeCategories> income_profile{0.16, 0.21, 0.26, 0.21, 0.16};
  std::array<double, kEthnicities> ethnicity_profile{0.70, 0.12, 0.13, 0.05};
  std::array<double, kIncomeCategories> turnout{0.45, 0.52, 0.58, 0.64, 0.71};
  /// Relative response rate by income category.
  std::array<double, kIncomeCategories> nonresponse{1.0, 1.0, 1.0, 1.0, 1.0};
  /// Evenly spaced state incomes instead of normal draws.
  bool spaced_income = false;
};

/// Ground truth: the population, its design and true parameters.
struct Truth {
  StateTable states;
  CellTable cells;
  Design design;
  Vector params;  // model layout; log-scale entries are log(sigma)
  Vector eta;     // per cell
  Vector theta;   // per cell
};

StateTable generate_states(const Scenario& scenario);
CellTable generate_cells(const Scenario& scenario, const StateTable& states);

/// State effects drawn from the declared hierarchy given the design;
/// deterministic in the scenario seed.
Vector draw_truth(const Scenario& scenario, const Design& design);

/// Population, design and truth together.
Truth make_truth(const Scenario& scenario);

/// Respondents allocated to cells in proportion to voters times the income
/// response rate; votes are independent coin flips at the cell probability.
Dataset simulate_poll(const Truth& truth, const Scenario& scenario);

/// M2 scenario in which the state income slope falls linearly with state
/// income and the national top-bottom income gap is 0.20.
Scenario redblue_scenario(int num_states, int respondents, std::uint64_t seed);

/// One draw from a proper prior (weakly informative mode only).
Vector draw_prior(const Design& design, const PriorConfig& prior, std::mt19937_64& rng);

/// State labels: the 50 postal codes then DC, then S052, S053, ...
std::vector<std::string> state_labels(int num_states);

void write_truth(std::ostream& out, const Truth& truth);

/// Writes survey.csv, cells.csv, states.csv and truth.csv into `dir`.
void write_simulation(const std::filesystem::path& dir, const Dataset& data, const Truth& truth);

}  // namespace mrp

#endif  // MRP_SYNTHETIC_HPP
