#ifndef MRP_DATA_HPP
#define MRP_DATA_HPP

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mrp/math.hpp"
#include "mrp/model_spec.hpp"

namespace mrp {

/// One respondent with a two-party vote intention.
struct SurveyResponse {
  int state = 0;      // 0-based index into StateTable
  int income = 3;     // 1..5
  int ethnicity = 0;  // 1..4, or 0 when not modeled
  int vote = 0;       // 1 = Republican, 0 = Democrat
  double weight = 1.0;

  CellKey cell() const { return {state, income, ethnicity}; }
};

struct PoststratCell {
  CellKey key;
  std::optional<double> n_adults;
  std::optional<double> turnout_rate;
  double n_voters = 0.0;
};

/// Numeric state-level column kept in raw units and standardized across
/// states (sample mean 0, sample sd 1).
struct StateColumn {
  std::string name;
  Vector raw;
  Vector standardized;
};

class StateTable {
 public:
  StateTable() = default;
  /// Builds and validates the table; standardizes every numeric column.
  StateTable(std::vector<std::string> labels, std::vector<StateColumn> columns,
             std::vector<int> region);

  Index size() const { return static_cast<Index>(labels_.size()); }
  const std::vector<std::string>& labels() const { return labels_; }
  const std::string& label(Index state) const { return labels_.at(state); }
  std::optional<int> find(std::string_view label) const;

  const std::vector<StateColumn>& columns() const { return columns_; }
  const StateColumn* column(std::string_view name) const;
  const Vector& avg_income() const { return columns_.at(0).raw; }
  const Vector& prev_rep_share() const { return columns_.at(1).raw; }

  const std::vector<int>& region() const { return region_; }
  int num_regions() const { return num_regions_; }

 private:
  std::vector<std::string> labels_;
  std::vector<StateColumn> columns_;
  std::vector<int> region_;
  int num_regions_ = 0;
};

/// Cells of the declared cross in canonical order.
class CellTable {
 public:
  CellTable() = default;
  CellTable(CellCross cross, std::vector<PoststratCell> cells);

  const CellCross& cross() const { return cross_; }
  Index size() const { return static_cast<Index>(cells_.size()); }
  const PoststratCell& operator[](Index i) const { return cells_[static_cast<std::size_t>(i)]; }
  const std::vector<PoststratCell>& cells() const { return cells_; }
  auto begin() const { return cells_.begin(); }
  auto end() const { return cells_.end(); }

  Vector voters() const;
  bool has_adults() const;

 private:
  CellCross cross_{0, false};
  std::vector<PoststratCell> cells_;
};

struct SurveyLoad {
  std::vector<SurveyResponse> responses;
  int dropped_missing_vote = 0;
  int dropped_missing_key = 0;
  std::vector<std::string> warnings;

  int dropped() const { return dropped_missing_vote + dropped_missing_key; }
};

struct Dataset {
  std::vector<SurveyResponse> responses;
  CellTable cells;
  StateTable states;
};

StateTable load_states(const std::filesystem::path& path);
StateTable read_states(std::istream& in, const std::string& source_name = "states");

SurveyLoad load_survey(const std::filesystem::path& path, const ModelSpec& spec,
                       const StateTable& states);
SurveyLoad read_survey(std::istream& in, const ModelSpec& spec, const StateTable& states,
                       const std::string& source_name = "survey");

CellTable load_cells(const std::filesystem::path& path, const ModelSpec& spec,
                     const StateTable& states);
CellTable read_cells(std::istream& in, const ModelSpec& spec, const StateTable& states,
                     const std::string& source_name = "cells");

/// n_voters = n_adults * turnout_rate for every cell.
CellTable compute_voter_weights(const CellTable& cells);

void write_states(std::ostream& out, const StateTable& states);
void write_survey(std::ostream& out, const std::vector<SurveyResponse>& responses,
                  const StateTable& states, bool with_ethnicity);
void write_cells(std::ostream& out, const CellTable& cells, const StateTable& states);

/// Checks that every respondent falls in a declared cell and references a
/// known state.
void validate(const Dataset& data);

}  // namespace mrp

#endif  // MRP_DATA_HPP
