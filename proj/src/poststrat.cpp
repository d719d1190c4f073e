#include "mrp/poststrat.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <ostream>
#include <stdexcept>

#include <Eigen/SparseCore>

#include "mrp/csv.hpp"
#include "mrp/error.hpp"

namespace mrp {

Summary CellEstimates::summary(Index cell) const {
  return summarize(Vector(theta.col(cell)));
}

CellEstimates cell_estimates_from_eta(const CellCross& cross, Matrix eta) {
  if (eta.cols() != cross.size()) {
    throw std::invalid_argument("eta draws do not match the cell cross");
  }
  CellEstimates out;
  out.cross = cross;
  out.theta = inv_logit(eta.array()).matrix();
  out.eta = std::move(eta);
  return out;
}

CellEstimates predict_cells(const PosteriorDraws& draws, const CellTable& cells, const Design& design) {
  if (cells.cross().size() != design.cross().size() ||
      cells.cross().use_ethnicity() != design.cross().use_ethnicity() ||
      cells.cross().num_states() != design.cross().num_states()) {
    throw InputError("cell table cross does not match the model design");
  }
  if (draws.draws.cols() != design.layout().size() ||
      (draws.layout.size() > 0 && !(draws.layout == design.layout()))) {
    throw InputError("posterior draws do not match the model parameter layout");
  }
  const Index D = draws.size();
  Matrix eta(D, design.cross().size());
  for (Index d = 0; d < D; ++d) {
    eta.row(d) = design.cell_linear_predictors(draws.draws.row(d).transpose()).transpose();
  }
  return cell_estimates_from_eta(design.cross(), std::move(eta));
}

std::string_view to_string(Dim dim) {
  switch (dim) {
    case Dim::state: return "state";
    case Dim::income: return "income";
    case Dim::ethnicity: return "ethnicity";
    case Dim::region: return "region";
  }
  return "?";
}

std::vector<Dim> parse_grouping(std::string_view text) {
  std::vector<Dim> dims;
  std::string token;
  auto flush = [&] {
    if (token.empty()) return;
    if (token == "x" || token == "by" || token == "national") {
      token.clear();
      return;
    }
    Dim d;
    if (token == "state") d = Dim::state;
    else if (token == "income") d = Dim::income;
    else if (token == "ethnicity") d = Dim::ethnicity;
    else if (token == "region") d = Dim::region;
    else throw InputError("unknown grouping dimension '" + token + "'");
    if (std::find(dims.begin(), dims.end(), d) != dims.end()) {
      throw InputError("grouping dimension '" + token + "' repeated");
    }
    dims.push_back(d);
    token.clear();
  };
  const std::string s(text);
  for (std::size_t i = 0; i < s.size(); ++i) {
    const unsigned char ch = static_cast<unsigned char>(s[i]);
    if (std::isalpha(ch) || ch == '_') {
      token += static_cast<char>(std::tolower(ch));
      continue;
    }
    flush();
  }
  flush();
  return dims;
}

std::string grouping_name(std::span<const Dim> dims) {
  if (dims.empty()) return "national";
  std::string name;
  for (std::size_t i = 0; i < dims.size(); ++i) {
    if (i) name += "_";
    name += to_string(dims[i]);
  }
  return name;
}

Matrix AggregateTable::draws() const {
  if (groups.empty()) return {};
  Matrix out(groups.front().draws.size(), static_cast<Index>(groups.size()));
  for (std::size_t g = 0; g < groups.size(); ++g) out.col(static_cast<Index>(g)) = groups[g].draws;
  return out;
}

namespace {

int dim_value(Dim dim, const CellKey& key, const StateTable& states) {
  switch (dim) {
    case Dim::state: return key.state;
    case Dim::income: return key.income;
    case Dim::ethnicity: return key.ethnicity;
    case Dim::region: return states.region()[static_cast<std::size_t>(key.state)];
  }
  return 0;
}

std::string dim_label(Dim dim, int value, const StateTable& states) {
  return dim == Dim::state ? states.label(value) : std::to_string(value);
}

}  // namespace

AggregateTable poststratify(const CellEstimates& estimates, const CellTable& cells,
                            const StateTable& states, std::span<const Dim> grouping) {
  const auto& cross = cells.cross();
  if (estimates.num_cells() != cross.size()) {
    throw InputError("cell estimates do not match the cell table");
  }
  for (Dim d : grouping) {
    if (d == Dim::ethnicity && !cross.use_ethnicity()) {
      throw InputError("grouping dimension 'ethnicity' is not part of the model cross");
    }
  }

  std::map<std::vector<int>, std::vector<Index>> members;
  for (Index c = 0; c < cross.size(); ++c) {
    const auto key = cross.key(static_cast<int>(c));
    std::vector<int> group;
    for (Dim d : grouping) group.push_back(dim_value(d, key, states));
    members[group].push_back(c);
  }

  AggregateTable table;
  table.dims.assign(grouping.begin(), grouping.end());
  std::vector<Eigen::Triplet<double>> weights;
  for (auto& [key, list] : members) {
    double total = 0.0;
    for (Index c : list) total += cells[c].n_voters;
    if (!(total > 0.0)) {
      std::string name;
      for (std::size_t i = 0; i < key.size(); ++i) {
        name += (i ? ", " : "") + std::string(to_string(grouping[i])) + "=" +
                dim_label(grouping[i], key[i], states);
      }
      throw InputError("group (" + (name.empty() ? std::string("national") : name) +
                       ") has zero total weight");
    }
    const auto g = static_cast<Index>(table.groups.size());
    for (Index c : list) weights.emplace_back(c, g, cells[c].n_voters / total);
    AggregateEstimate est;
    est.key = key;
    est.total_weight = total;
    est.cells = list;
    table.groups.push_back(std::move(est));
  }
  Eigen::SparseMatrix<double> w(cross.size(), static_cast<Index>(table.groups.size()));
  w.setFromTriplets(weights.begin(), weights.end());
  const Matrix agg = estimates.theta * w;
  for (std::size_t g = 0; g < table.groups.size(); ++g) {
    auto& est = table.groups[g];
    est.draws = agg.col(static_cast<Index>(g));
    est.summary = summarize(est.draws);
  }
  return table;
}

double solve_logit_shift(std::span<const double> eta, std::span<const double> weights, double target,
                         double tol) {
  if (!(target > 0.0 && target < 1.0)) {
    throw InputError("recorded share must lie strictly between 0 and 1 (got " +
                     std::to_string(target) + ")");
  }
  double total = 0.0;
  double lo_eta = std::numeric_limits<double>::infinity();
  double hi_eta = -lo_eta;
  for (std::size_t c = 0; c < eta.size(); ++c) {
    if (weights[c] <= 0.0) continue;
    total += weights[c];
    lo_eta = std::min(lo_eta, eta[c]);
    hi_eta = std::max(hi_eta, eta[c]);
  }
  if (!(total > 0.0)) throw InputError("cannot calibrate a state with zero total weight");

  auto residual = [&](double delta, double* slope) {
    double f = 0.0, df = 0.0;
    for (std::size_t c = 0; c < eta.size(); ++c) {
      if (weights[c] <= 0.0) continue;
      const double p = inv_logit(eta[c] + delta);
      f += weights[c] * p;
      df += weights[c] * p * (1.0 - p);
    }
    if (slope) *slope = df / total;
    return f / total - target;
  };

  if (std::abs(residual(0.0, nullptr)) < tol) return 0.0;

  // The weighted mean lies between the extreme cells, which brackets the root.
  const double center = logit(target);
  double lo = center - hi_eta;
  double hi = center - lo_eta;
  double delta = std::clamp(0.0, lo, hi);
  double best = delta;
  double best_abs = std::numeric_limits<double>::infinity();
  for (int it = 0; it < 200; ++it) {
    double slope = 0.0;
    const double f = residual(delta, &slope);
    if (std::abs(f) < best_abs) {
      best_abs = std::abs(f);
      best = delta;
    }
    if (f == 0.0 || (std::abs(f) < 1e-15)) break;
    if (f < 0.0) lo = delta; else hi = delta;
    double next = slope > 0.0 ? delta - f / slope : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (next == delta || hi - lo < 1e-15 * std::max(1.0, std::abs(delta))) break;
    delta = next;
  }
  if (best_abs >= tol) {
    throw std::runtime_error("calibration shift did not reach the requested tolerance");
  }
  return best;
}

CalibrationResult calibrate_to_totals(const CellEstimates& estimates, const CellTable& cells,
                                      const Vector& recorded, double tol) {
  const auto& cross = cells.cross();
  const Index S = cross.num_states();
  if (recorded.size() != S) throw InputError("recorded totals must have one share per state");
  if (estimates.num_cells() != cross.size()) throw InputError("cell estimates do not match cells");
  for (Index s = 0; s < S; ++s) {
    if (!(recorded(s) > 0.0 && recorded(s) < 1.0)) {
      throw InputError("recorded share for state index " + std::to_string(s) +
                       " must lie strictly between 0 and 1; no finite shift exists otherwise");
    }
  }
  const Index per_state = cross.size() / S;
  const Vector n = cells.voters();
  const Index D = estimates.num_draws();
  Matrix eta = estimates.eta;
  Matrix delta(D, S);
  std::vector<double> buffer(static_cast<std::size_t>(per_state));
  for (Index d = 0; d < D; ++d) {
    for (Index s = 0; s < S; ++s) {
      const Index first = s * per_state;  // canonical order is state-major
      for (Index c = 0; c < per_state; ++c) buffer[static_cast<std::size_t>(c)] = eta(d, first + c);
      const double shift = solve_logit_shift(
          buffer, std::span<const double>(n.data() + first, static_cast<std::size_t>(per_state)),
          recorded(s), tol);
      delta(d, s) = shift;
      if (shift != 0.0) eta.row(d).segment(first, per_state).array() += shift;
    }
  }
  return {cell_estimates_from_eta(cross, std::move(eta)), std::move(delta)};
}

Vector load_recorded_totals(const std::filesystem::path& path, const StateTable& states) {
  const auto table = csv::read_file(path);
  const auto state_col = table.column("state");
  auto share_col = table.column("rep_share");
  if (!share_col) share_col = table.column("recorded");
  if (!state_col || !share_col) {
    throw InputError(path.string() + ": recorded totals need columns state,rep_share");
  }
  Vector out = Vector::Constant(states.size(), quiet_nan());
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const auto s = states.find(row[*state_col]);
    if (!s) throw InputError(path.string() + ": unknown state label '" + row[*state_col] + "'");
    const auto v = csv::parse_double(row[*share_col]);
    if (!v || !(*v > 0.0 && *v < 1.0)) {
      throw InputError(path.string() + ": line " + std::to_string(table.lines[r]) +
                       ": rep_share must lie strictly between 0 and 1");
    }
    out(*s) = *v;
  }
  for (Index s = 0; s < states.size(); ++s) {
    if (std::isnan(out(s))) {
      throw InputError(path.string() + ": no recorded total for state '" + states.label(s) + "'");
    }
  }
  return out;
}

StateSlopes state_income_slopes(const CellEstimates& estimates, const CellTable& cells,
                                const StateTable& states, const PosteriorDraws* draws) {
  const std::vector<Dim> by{Dim::state, Dim::income};
  const auto table = poststratify(estimates, cells, states, by);
  const Index S = states.size();
  const Index D = estimates.num_draws();
  const Matrix agg = table.draws();  // groups ordered by (state, income)
  StateSlopes out;
  out.gap_draws.resize(D, S);
  out.ls_draws.resize(D, S);
  for (Index s = 0; s < S; ++s) {
    const auto block = agg.middleCols(s * kIncomeCategories, kIncomeCategories);
    out.gap_draws.col(s) = block.col(kIncomeCategories - 1) - block.col(0);
    Vector ls = Vector::Zero(D);
    for (int k = 0; k < kIncomeCategories; ++k) ls += income_code(k + 1) * block.col(k);
    out.ls_draws.col(s) = ls / 10.0;  // sum of squared codes
  }
  std::optional<Matrix> logit;
  if (draws && draws->layout.has("beta")) {
    const auto& beta = draws->layout.block("beta");
    logit = Matrix(D, S);
    for (Index s = 0; s < S; ++s) logit->col(s) = draws->draws.col(beta.offset);
    if (const auto* slope = draws->layout.find("slope")) {
      *logit += draws->draws.middleCols(slope->offset, slope->length);
    }
  }
  for (Index s = 0; s < S; ++s) {
    StateSlope row;
    row.state = s;
    row.label = states.label(s);
    row.avg_income = states.avg_income()(s);
    row.gap = summarize(Vector(out.gap_draws.col(s)));
    row.ls_slope = summarize(Vector(out.ls_draws.col(s)));
    if (logit) row.logit_slope = summarize(Vector(logit->col(s)));
    out.rows.push_back(std::move(row));
  }
  return out;
}

Vector national_income_gap(const CellEstimates& estimates, const CellTable& cells,
                           const StateTable& states) {
  const std::vector<Dim> by{Dim::income};
  const Matrix agg = poststratify(estimates, cells, states, by).draws();
  return agg.col(kIncomeCategories - 1) - agg.col(0);
}

namespace {

void write_summary(std::ostream& out, const Summary& s) {
  out << csv::format_double(s.mean) << ',' << csv::format_double(s.sd) << ','
      << csv::format_double(s.q05) << ',' << csv::format_double(s.q25) << ','
      << csv::format_double(s.q50) << ',' << csv::format_double(s.q75) << ','
      << csv::format_double(s.q95);
}

void write_key(std::ostream& out, const AggregateTable& table, const AggregateEstimate& g,
               const StateTable& states) {
  for (std::size_t i = 0; i < table.dims.size(); ++i) {
    out << dim_label(table.dims[i], g.key[i], states) << ',';
  }
}

void write_key_header(std::ostream& out, const AggregateTable& table) {
  if (table.dims.empty()) out << "group,";
  for (Dim d : table.dims) out << to_string(d) << ',';
}

}  // namespace

void write_estimates(std::ostream& out, const AggregateTable& table, const StateTable& states) {
  write_key_header(out, table);
  out << "statistic,n_voters,mean,sd,q05,q25,q50,q75,q95\n";
  for (const auto& g : table.groups) {
    if (table.dims.empty()) out << "national,";
    write_key(out, table, g, states);
    out << "theta," << csv::format_double(g.total_weight) << ',';
    write_summary(out, g.summary);
    out << '\n';
  }
}

void write_estimate_draws(std::ostream& out, const AggregateTable& table, const StateTable& states) {
  write_key_header(out, table);
  const Index D = table.groups.empty() ? 0 : table.groups.front().draws.size();
  for (Index d = 0; d < D; ++d) out << (d ? "," : "") << "draw" << d;
  out << '\n';
  for (const auto& g : table.groups) {
    if (table.dims.empty()) out << "national,";
    write_key(out, table, g, states);
    for (Index d = 0; d < D; ++d) out << (d ? "," : "") << csv::format_double(g.draws(d));
    out << '\n';
  }
}

void write_slopes(std::ostream& out, const StateSlopes& slopes) {
  out << "state,avg_income,statistic,mean,sd,q05,q25,q50,q75,q95\n";
  for (const auto& row : slopes.rows) {
    auto line = [&](std::string_view stat, const Summary& s) {
      out << row.label << ',' << csv::format_double(row.avg_income) << ',' << stat << ',';
      write_summary(out, s);
      out << '\n';
    };
    line("gap", row.gap);
    line("ls_slope", row.ls_slope);
    if (row.logit_slope) line("logit_slope", *row.logit_slope);
  }
}

}  // namespace mrp
