#include "mrp/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include "mrp/csv.hpp"
#include "mrp/error.hpp"

namespace mrp {

namespace {

std::string where(const std::string& source, int line, std::string_view column) {
  std::ostringstream out;
  out << source << ": line " << line << ", column '" << column << "'";
  return out.str();
}

std::size_t require_column(const csv::Table& table, std::string_view name,
                           const std::string& source) {
  const auto col = table.column(name);
  if (!col) {
    throw InputError(source + ": missing required column '" + std::string(name) + "'");
  }
  return *col;
}

bool is_missing(std::string_view field) {
  return field.empty() || field == "NA" || field == "na" || field == "NaN";
}

int parse_category(const std::string& field, int lo, int hi, const std::string& source, int line,
                   std::string_view column) {
  const auto value = csv::parse_int(field);
  if (!value || *value < lo || *value > hi) {
    std::ostringstream msg;
    msg << where(source, line, column) << ": expected an integer in " << lo << ".." << hi
        << ", found '" << field << "'";
    throw InputError(msg.str());
  }
  return static_cast<int>(*value);
}

double parse_number(const std::string& field, const std::string& source, int line,
                    std::string_view column) {
  const auto value = csv::parse_double(field);
  if (!value || !std::isfinite(*value)) {
    throw InputError(where(source, line, column) + ": expected a number, found '" + field + "'");
  }
  return *value;
}

Vector standardize(const Vector& raw) {
  const Index n = raw.size();
  Vector out = Vector::Zero(n);
  if (n < 2) return out;
  const double mean = raw.mean();
  const double sd = std::sqrt((raw.array() - mean).square().sum() / static_cast<double>(n - 1));
  if (!(sd > 0.0)) return out;
  return (raw.array() - mean) / sd;
}

int state_index(const StateTable& states, const std::string& label,
                std::set<std::string>& unknown) {
  const auto idx = states.find(label);
  if (!idx) {
    unknown.insert(label);
    return -1;
  }
  return *idx;
}

std::string list_labels(const std::set<std::string>& labels) {
  std::string out;
  for (const auto& label : labels) {
    if (!out.empty()) out += ", ";
    out += "'" + label + "'";
  }
  return out;
}

}  // namespace

StateTable::StateTable(std::vector<std::string> labels, std::vector<StateColumn> columns,
                       std::vector<int> region)
    : labels_(std::move(labels)), columns_(std::move(columns)), region_(std::move(region)) {
  const auto n = labels_.size();
  if (region_.size() != n) {
    throw InputError("state table: region column length does not match number of states");
  }
  std::set<std::string> seen;
  for (const auto& label : labels_) {
    if (label.empty()) throw InputError("state table: empty state label");
    if (!seen.insert(label).second) {
      throw InputError("state table: duplicate state '" + label + "'");
    }
  }
  if (columns_.size() < 2 || columns_[0].name != "avg_income" ||
      columns_[1].name != "prev_rep_share") {
    throw InputError("state table: avg_income and prev_rep_share columns are required");
  }
  for (auto& column : columns_) {
    if (static_cast<std::size_t>(column.raw.size()) != n) {
      throw InputError("state table: column '" + column.name + "' has wrong length");
    }
    column.standardized = standardize(column.raw);
  }
  for (Index s = 0; s < static_cast<Index>(n); ++s) {
    const double share = columns_[1].raw(s);
    if (!(share > 0.0 && share < 1.0)) {
      throw InputError("state table: prev_rep_share for '" + labels_[s] +
                       "' must lie strictly between 0 and 1");
    }
  }
  num_regions_ = 0;
  for (int r : region_) {
    if (r < 1) throw InputError("state table: region ids must be positive integers");
    num_regions_ = std::max(num_regions_, r);
  }
  std::vector<bool> used(static_cast<std::size_t>(num_regions_), false);
  for (int r : region_) used[static_cast<std::size_t>(r - 1)] = true;
  for (int r = 0; r < num_regions_; ++r) {
    if (!used[static_cast<std::size_t>(r)]) {
      throw InputError("state table: region " + std::to_string(r + 1) +
                       " has no states (region ids must be contiguous from 1)");
    }
  }
}

std::optional<int> StateTable::find(std::string_view label) const {
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (labels_[i] == label) return static_cast<int>(i);
  }
  return std::nullopt;
}

const StateColumn* StateTable::column(std::string_view name) const {
  for (const auto& column : columns_) {
    if (column.name == name) return &column;
  }
  return nullptr;
}

CellTable::CellTable(CellCross cross, std::vector<PoststratCell> cells)
    : cross_(cross), cells_(std::move(cells)) {
  if (static_cast<int>(cells_.size()) != cross_.size()) {
    throw InputError("cell table does not cover the declared cross");
  }
  for (int i = 0; i < cross_.size(); ++i) {
    if (cells_[static_cast<std::size_t>(i)].key != cross_.key(i)) {
      throw InputError("cell table is not in canonical order");
    }
  }
}

Vector CellTable::voters() const {
  Vector n(size());
  for (Index i = 0; i < size(); ++i) n(i) = cells_[static_cast<std::size_t>(i)].n_voters;
  return n;
}

bool CellTable::has_adults() const {
  return !cells_.empty() && std::all_of(cells_.begin(), cells_.end(), [](const PoststratCell& c) {
    return c.n_adults.has_value() && c.turnout_rate.has_value();
  });
}

StateTable read_states(std::istream& in, const std::string& source) {
  const auto table = csv::read(in, source);
  const auto state_col = require_column(table, "state", source);
  const auto income_col = require_column(table, "avg_income", source);
  const auto share_col = require_column(table, "prev_rep_share", source);
  const auto region_col = require_column(table, "region", source);

  const auto n = table.rows.size();
  std::vector<std::string> labels;
  std::vector<int> region;
  std::vector<StateColumn> columns;
  columns.push_back({"avg_income", Vector(n), {}});
  columns.push_back({"prev_rep_share", Vector(n), {}});
  std::vector<std::size_t> extra_cols;
  for (std::size_t c = 0; c < table.header.size(); ++c) {
    if (c == state_col || c == income_col || c == share_col || c == region_col) continue;
    columns.push_back({table.header[c], Vector(n), {}});
    extra_cols.push_back(c);
  }
  for (std::size_t r = 0; r < n; ++r) {
    const auto& row = table.rows[r];
    const int line = table.lines[r];
    labels.push_back(row[state_col]);
    columns[0].raw(static_cast<Index>(r)) = parse_number(row[income_col], source, line, "avg_income");
    columns[1].raw(static_cast<Index>(r)) = parse_number(row[share_col], source, line, "prev_rep_share");
    for (std::size_t e = 0; e < extra_cols.size(); ++e) {
      columns[2 + e].raw(static_cast<Index>(r)) =
          parse_number(row[extra_cols[e]], source, line, table.header[extra_cols[e]]);
    }
    const auto reg = csv::parse_int(row[region_col]);
    if (!reg || *reg < 1) {
      throw InputError(where(source, line, "region") + ": expected a positive integer, found '" +
                       row[region_col] + "'");
    }
    region.push_back(static_cast<int>(*reg));
  }
  return StateTable(std::move(labels), std::move(columns), std::move(region));
}

StateTable load_states(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  return read_states(in, path.string());
}

SurveyLoad read_survey(std::istream& in, const ModelSpec& spec, const StateTable& states,
                       const std::string& source) {
  const auto table = csv::read(in, source);
  const auto state_col = require_column(table, "state", source);
  const auto income_col = require_column(table, "income", source);
  const auto vote_col = require_column(table, "vote", source);
  std::optional<std::size_t> eth_col;
  if (spec.use_ethnicity) eth_col = require_column(table, "ethnicity", source);
  const auto weight_col = table.column("weight");

  SurveyLoad result;
  std::set<std::string> unknown;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const int line = table.lines[r];
    if (is_missing(row[state_col]) || is_missing(row[income_col]) ||
        (eth_col && is_missing(row[*eth_col]))) {
      ++result.dropped_missing_key;
      continue;
    }
    SurveyResponse resp;
    resp.state = state_index(states, row[state_col], unknown);
    resp.income = parse_category(row[income_col], 1, kIncomeCategories, source, line, "income");
    if (eth_col) {
      resp.ethnicity = parse_category(row[*eth_col], 1, kEthnicities, source, line, "ethnicity");
    }
    if (weight_col) {
      resp.weight = parse_number(row[*weight_col], source, line, "weight");
      if (resp.weight < 0) throw InputError(where(source, line, "weight") + ": negative weight");
    }
    if (is_missing(row[vote_col])) {
      ++result.dropped_missing_vote;
      continue;
    }
    resp.vote = parse_category(row[vote_col], 0, 1, source, line, "vote");
    if (resp.state >= 0) result.responses.push_back(resp);
  }
  if (!unknown.empty()) {
    throw InputError(source + ": unknown state label(s): " + list_labels(unknown));
  }
  if (result.dropped_missing_vote > 0) {
    result.warnings.push_back(source + ": dropped " + std::to_string(result.dropped_missing_vote) +
                              " respondent(s) with no vote preference");
  }
  if (result.dropped_missing_key > 0) {
    result.warnings.push_back(source + ": dropped " + std::to_string(result.dropped_missing_key) +
                              " respondent(s) with unknown state, income or ethnicity");
  }
  return result;
}

SurveyLoad load_survey(const std::filesystem::path& path, const ModelSpec& spec,
                       const StateTable& states) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  return read_survey(in, spec, states, path.string());
}

CellTable read_cells(std::istream& in, const ModelSpec& spec, const StateTable& states,
                     const std::string& source) {
  const auto table = csv::read(in, source);
  const auto state_col = require_column(table, "state", source);
  const auto income_col = require_column(table, "income", source);
  const auto eth_col = table.column("ethnicity");
  if (spec.use_ethnicity && !eth_col) {
    throw InputError(source + ": missing required column 'ethnicity'");
  }
  const auto adults_col = table.column("n_adults");
  const auto turnout_col = table.column("turnout_rate");
  const auto voters_col = table.column("n_voters");
  const bool from_adults = adults_col && turnout_col;
  if (!from_adults && !voters_col) {
    throw InputError(source + ": header must declare n_voters or both n_adults and turnout_rate");
  }
  // An ethnicity column the model does not use is summed out.
  const bool collapse = eth_col && !spec.use_ethnicity;

  const CellCross cross(static_cast<int>(states.size()), spec.use_ethnicity);
  std::vector<PoststratCell> cells(static_cast<std::size_t>(cross.size()));
  std::vector<int> seen_line(cells.size(), 0);
  std::set<std::string> unknown;

  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const int line = table.lines[r];
    CellKey key;
    key.state = state_index(states, row[state_col], unknown);
    key.income = parse_category(row[income_col], 1, kIncomeCategories, source, line, "income");
    if (eth_col) {
      const int eth = parse_category(row[*eth_col], 1, kEthnicities, source, line, "ethnicity");
      if (spec.use_ethnicity) key.ethnicity = eth;
    }
    double adults = 0.0;
    double turnout = 0.0;
    double voters = 0.0;
    if (from_adults) {
      adults = parse_number(row[*adults_col], source, line, "n_adults");
      turnout = parse_number(row[*turnout_col], source, line, "turnout_rate");
      if (adults < 0) throw InputError(where(source, line, "n_adults") + ": negative count");
      if (turnout < 0.0 || turnout > 1.0) {
        throw InputError(where(source, line, "turnout_rate") + ": turnout rate " + row[*turnout_col] +
                         " outside [0, 1]");
      }
      voters = adults * turnout;
      if (voters_col) {
        const double given = parse_number(row[*voters_col], source, line, "n_voters");
        if (std::abs(given - voters) > 1e-9 * std::max(1.0, std::abs(voters))) {
          throw InputError(where(source, line, "n_voters") +
                           ": does not equal n_adults * turnout_rate");
        }
      }
    } else {
      voters = parse_number(row[*voters_col], source, line, "n_voters");
      if (voters < 0) throw InputError(where(source, line, "n_voters") + ": negative count");
    }
    if (key.state < 0) continue;

    const auto idx = static_cast<std::size_t>(cross.index(key));
    auto& cell = cells[idx];
    if (seen_line[idx] != 0 && !collapse) {
      std::ostringstream msg;
      msg << source << ": line " << line << ": duplicate cell (state=" << row[state_col]
          << ", income=" << key.income;
      if (spec.use_ethnicity) msg << ", ethnicity=" << key.ethnicity;
      msg << ") first seen on line " << seen_line[idx];
      throw InputError(msg.str());
    }
    if (seen_line[idx] == 0) {
      cell.key = key;
      seen_line[idx] = line;
      if (from_adults) {
        cell.n_adults = adults;
        cell.turnout_rate = turnout;
      }
      cell.n_voters = voters;
    } else {
      if (from_adults) cell.n_adults = *cell.n_adults + adults;
      cell.n_voters += voters;
    }
  }
  if (!unknown.empty()) {
    throw InputError(source + ": unknown state label(s): " + list_labels(unknown));
  }
  if (collapse && from_adults) {
    for (auto& cell : cells) {
      if (cell.n_adults && *cell.n_adults > 0) cell.turnout_rate = cell.n_voters / *cell.n_adults;
    }
  }

  std::vector<std::string> missing;
  for (int i = 0; i < cross.size(); ++i) {
    if (seen_line[static_cast<std::size_t>(i)] != 0) continue;
    const auto key = cross.key(i);
    std::string text = "(state=" + states.label(key.state) + ", income=" + std::to_string(key.income);
    if (spec.use_ethnicity) text += ", ethnicity=" + std::to_string(key.ethnicity);
    missing.push_back(text + ")");
  }
  if (!missing.empty()) {
    std::string msg = source + ": " + std::to_string(missing.size()) + " missing cell(s): ";
    const std::size_t shown = std::min<std::size_t>(missing.size(), 20);
    for (std::size_t i = 0; i < shown; ++i) msg += (i ? ", " : "") + missing[i];
    if (shown < missing.size()) msg += ", ...";
    throw InputError(msg);
  }
  return CellTable(cross, std::move(cells));
}

CellTable load_cells(const std::filesystem::path& path, const ModelSpec& spec,
                     const StateTable& states) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  return read_cells(in, spec, states, path.string());
}

CellTable compute_voter_weights(const CellTable& cells) {
  std::vector<PoststratCell> out = cells.cells();
  for (auto& cell : out) {
    if (!cell.n_adults || !cell.turnout_rate) {
      throw InputError("compute_voter_weights: cell without n_adults/turnout_rate");
    }
    if (*cell.n_adults < 0 || *cell.turnout_rate < 0 || *cell.turnout_rate > 1) {
      throw InputError("compute_voter_weights: n_adults must be >= 0 and turnout in [0, 1]");
    }
    cell.n_voters = *cell.n_adults * *cell.turnout_rate;
  }
  return CellTable(cells.cross(), std::move(out));
}

void write_states(std::ostream& out, const StateTable& states) {
  std::vector<std::string> header{"state", "avg_income", "prev_rep_share", "region"};
  for (std::size_t c = 2; c < states.columns().size(); ++c) header.push_back(states.columns()[c].name);
  out << csv::join(header) << '\n';
  for (Index s = 0; s < states.size(); ++s) {
    std::vector<std::string> row{states.label(s), csv::format_double(states.avg_income()(s)),
                                 csv::format_double(states.prev_rep_share()(s)),
                                 std::to_string(states.region()[static_cast<std::size_t>(s)])};
    for (std::size_t c = 2; c < states.columns().size(); ++c) {
      row.push_back(csv::format_double(states.columns()[c].raw(s)));
    }
    out << csv::join(row) << '\n';
  }
}

void write_survey(std::ostream& out, const std::vector<SurveyResponse>& responses,
                  const StateTable& states, bool with_ethnicity) {
  out << (with_ethnicity ? "state,income,ethnicity,vote\n" : "state,income,vote\n");
  for (const auto& r : responses) {
    out << states.label(r.state) << ',' << r.income << ',';
    if (with_ethnicity) out << r.ethnicity << ',';
    out << r.vote << '\n';
  }
}

void write_cells(std::ostream& out, const CellTable& cells, const StateTable& states) {
  const bool eth = cells.cross().use_ethnicity();
  const bool adults = cells.has_adults();
  out << "state,income";
  if (eth) out << ",ethnicity";
  out << (adults ? ",n_adults,turnout_rate,n_voters\n" : ",n_voters\n");
  for (const auto& cell : cells) {
    out << states.label(cell.key.state) << ',' << cell.key.income;
    if (eth) out << ',' << cell.key.ethnicity;
    if (adults) {
      out << ',' << csv::format_double(*cell.n_adults) << ','
          << csv::format_double(*cell.turnout_rate);
    }
    out << ',' << csv::format_double(cell.n_voters) << '\n';
  }
}

void validate(const Dataset& data) {
  const auto& cross = data.cells.cross();
  if (cross.num_states() != data.states.size()) {
    throw InputError("dataset: cell table and state table disagree on the number of states");
  }
  for (std::size_t i = 0; i < data.responses.size(); ++i) {
    if (!cross.contains(data.responses[i].cell())) {
      throw InputError("dataset: respondent " + std::to_string(i + 1) +
                       " falls outside the declared cell cross");
    }
  }
}

}  // namespace mrp
