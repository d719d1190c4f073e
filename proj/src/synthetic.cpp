#include "mrp/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <ostream>

#include "mrp/csv.hpp"
#include "mrp/error.hpp"
#include "mrp/rng.hpp"

namespace mrp {

namespace {

constexpr int kStatesStream = 1;
constexpr int kTruthStream = 2;
constexpr int kPollStream = 3;
constexpr int kCellsStream = 4;

const std::array<const char*, 51> kPostalCodes{
    "AK", "AL", "AR", "AZ", "CA", "CO", "CT", "DE", "FL", "GA", "HI", "IA", "ID",
    "IL", "IN", "KS", "KY", "LA", "MA", "MD", "ME", "MI", "MN", "MO", "MS", "MT",
    "NC", "ND", "NE", "NH", "NJ", "NM", "NV", "NY", "OH", "OK", "OR", "PA", "RI",
    "SC", "SD", "TN", "TX", "UT", "VA", "VT", "WA", "WI", "WV", "WY", "DC"};

double weighted_gap(const Vector& theta, const CellTable& cells) {
  double top = 0, top_n = 0, bottom = 0, bottom_n = 0;
  for (Index c = 0; c < cells.size(); ++c) {
    const auto& cell = cells[c];
    if (cell.key.income == kIncomeCategories) {
      top += cell.n_voters * theta(c);
      top_n += cell.n_voters;
    } else if (cell.key.income == 1) {
      bottom += cell.n_voters * theta(c);
      bottom_n += cell.n_voters;
    }
  }
  return top / top_n - bottom / bottom_n;
}

}  // namespace

std::vector<std::string> state_labels(int num_states) {
  std::vector<std::string> labels;
  for (int s = 0; s < num_states; ++s) {
    if (s < static_cast<int>(kPostalCodes.size())) {
      labels.emplace_back(kPostalCodes[static_cast<std::size_t>(s)]);
    } else {
      char buf[16];
      std::snprintf(buf, sizeof(buf), "S%03d", s + 1);
      labels.emplace_back(buf);
    }
  }
  return labels;
}

StateTable generate_states(const Scenario& sc) {
  const int S = sc.num_states;
  if (S < 2) throw InputError("scenario needs at least 2 states");
  auto rng = make_rng(sc.seed, kStatesStream);
  std::normal_distribution<double> normal;

  std::vector<int> order(static_cast<std::size_t>(S));
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);

  Vector income_z(S);
  for (int s = 0; s < S; ++s) {
    if (sc.spaced_income) {
      const double u = -1.0 + 2.0 * order[static_cast<std::size_t>(s)] / (S - 1.0);
      income_z(s) = 1.7 * u;
    } else {
      income_z(s) = normal(rng);
    }
  }
  Vector income = 50000.0 + 8000.0 * income_z.array();
  Vector share(S);
  for (int s = 0; s < S; ++s) share(s) = inv_logit(0.05 - 0.3 * income_z(s) + 0.25 * normal(rng));

  const int R = std::min(sc.num_regions, S);
  std::vector<int> region(static_cast<std::size_t>(S));
  std::vector<int> perm(order);
  std::shuffle(perm.begin(), perm.end(), rng);
  for (int s = 0; s < S; ++s) region[static_cast<std::size_t>(s)] = perm[static_cast<std::size_t>(s)] % R + 1;

  std::vector<StateColumn> columns{{"avg_income", income, {}}, {"prev_rep_share", share, {}}};
  return StateTable(state_labels(S), std::move(columns), std::move(region));
}

CellTable generate_cells(const Scenario& sc, const StateTable& states) {
  const CellCross cross(static_cast<int>(states.size()), sc.spec.use_ethnicity);
  auto rng = make_rng(sc.seed, kCellsStream);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<PoststratCell> cells(static_cast<std::size_t>(cross.size()));
  std::vector<double> population(static_cast<std::size_t>(states.size()));
  std::vector<double> turnout_shift(static_cast<std::size_t>(states.size()));
  for (Index s = 0; s < states.size(); ++s) {
    population[static_cast<std::size_t>(s)] =
        std::round(std::exp(std::log(4e5) + unif(rng) * (std::log(1.2e7) - std::log(4e5))));
    turnout_shift[static_cast<std::size_t>(s)] = -0.05 + 0.1 * unif(rng);
  }
  for (int c = 0; c < cross.size(); ++c) {
    auto& cell = cells[static_cast<std::size_t>(c)];
    cell.key = cross.key(c);
    const auto s = static_cast<std::size_t>(cell.key.state);
    double share = sc.income_profile[static_cast<std::size_t>(cell.key.income - 1)];
    if (cross.use_ethnicity()) share *= sc.ethnicity_profile[static_cast<std::size_t>(cell.key.ethnicity - 1)];
    cell.n_adults = std::round(population[s] * share);
    cell.turnout_rate =
        std::clamp(sc.turnout[static_cast<std::size_t>(cell.key.income - 1)] + turnout_shift[s], 0.0, 1.0);
    cell.n_voters = *cell.n_adults * *cell.turnout_rate;
  }
  return CellTable(cross, std::move(cells));
}

Vector draw_truth(const Scenario& sc, const Design& design) {
  const auto& layout = design.layout();
  const Index S = design.num_states();
  auto rng = make_rng(sc.seed, kTruthStream);
  std::normal_distribution<double> normal;
  Vector za(S), zs(S);
  for (Index s = 0; s < S; ++s) za(s) = normal(rng);
  for (Index s = 0; s < S; ++s) zs(s) = normal(rng);
  const Index n_cat = layout.has("cat") ? layout.block("cat").length : 0;
  Vector zc(n_cat);
  for (Index i = 0; i < n_cat; ++i) zc(i) = normal(rng);

  const auto& h = sc.truth;
  Vector gamma = h.gamma;
  const Index K = layout.block("gamma").length;
  if (gamma.size() == 0) {
    gamma = Vector::Constant(K, 0.2);
    gamma(0) = 0.0;
  }
  if (gamma.size() != K) {
    throw InputError("scenario gamma has " + std::to_string(gamma.size()) +
                     " entries, design expects " + std::to_string(K));
  }
  Vector beta = h.beta;
  const Index B = layout.block("beta").length;
  if (beta.size() == 0) {
    beta = Vector::Zero(B);
    beta(0) = 0.1;
    const double eth[] = {-1.0, -0.5, -0.3};
    for (Index e = 1; e < B; ++e) beta(e) = eth[e - 1];
  }
  if (beta.size() != B) throw InputError("scenario beta does not match the design");

  Vector p = Vector::Zero(layout.size());
  layout.segment(p, "gamma") = gamma;
  layout.segment(p, "beta") = beta;
  layout.segment(p, "alpha") = design.state_design() * gamma + h.sigma_alpha * za;
  p(layout.block("sigma_alpha").offset) = std::log(h.sigma_alpha);
  if (layout.has("slope")) {
    const double rho = h.corr;
    const double root = std::sqrt(1.0 - rho * rho);
    Vector mean = Vector::Zero(S);
    if (layout.has("slope_mu")) {
      p(layout.block("slope_mu").offset) = h.slope_mu;
      mean = h.slope_mu * design.slope_predictor();
    }
    layout.segment(p, "slope") = mean + h.slope_sigma * (rho * za + root * zs);
    p(layout.block("slope_sigma").offset) = std::log(h.slope_sigma);
    p(layout.block("corr").offset) = std::atanh(rho);
  }
  if (n_cat > 0) {
    layout.segment(p, "cat") = h.sigma_cat * zc;
    p(layout.block("sigma_cat").offset) = std::log(h.sigma_cat);
  }
  return p;
}

Truth make_truth(const Scenario& sc) {
  auto states = generate_states(sc);
  auto cells = generate_cells(sc, states);
  Design design(sc.spec, states);
  Vector params = draw_truth(sc, design);
  Vector eta = design.cell_linear_predictors(params);
  Vector theta = inv_logit(eta.array()).matrix();
  return {std::move(states), std::move(cells), std::move(design), std::move(params), std::move(eta),
          std::move(theta)};
}

Dataset simulate_poll(const Truth& truth, const Scenario& sc) {
  const auto& cells = truth.cells;
  std::vector<double> rate(static_cast<std::size_t>(cells.size()));
  for (Index c = 0; c < cells.size(); ++c) {
    rate[static_cast<std::size_t>(c)] =
        cells[c].n_voters * sc.nonresponse[static_cast<std::size_t>(cells[c].key.income - 1)];
  }
  auto rng = make_rng(sc.seed, kPollStream);
  std::discrete_distribution<int> pick(rate.begin(), rate.end());
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Dataset data{{}, cells, truth.states};
  data.responses.reserve(static_cast<std::size_t>(sc.respondents));
  for (int i = 0; i < sc.respondents; ++i) {
    const int c = pick(rng);
    SurveyResponse r;
    const auto key = cells[c].key;
    r.state = key.state;
    r.income = key.income;
    r.ethnicity = key.ethnicity;
    r.vote = unif(rng) < truth.theta(c) ? 1 : 0;
    data.responses.push_back(r);
  }
  return data;
}

Scenario redblue_scenario(int num_states, int respondents, std::uint64_t seed) {
  if (num_states < 10) throw InputError("red/blue scenario needs at least 10 states");
  Scenario sc;
  sc.num_states = num_states;
  sc.respondents = respondents;
  sc.seed = seed;
  sc.spaced_income = true;
  sc.spec.rung = Rung::M2;
  sc.spec.state_predictors = {"avg_income", "prev_rep_share"};
  sc.spec.slope_predictor = "avg_income";
  sc.truth.gamma = Vector(3);
  sc.truth.gamma << -0.15, -0.1, 0.2;
  sc.truth.sigma_alpha = 0.2;
  sc.truth.slope_sigma = 0.03;
  sc.truth.corr = -0.2;
  sc.nonresponse = {0.85, 0.95, 1.0, 1.05, 1.15};

  // Slope_j = a * (z_max + offset - z_j) + noise on the logit scale, with a
  // set so the national top-bottom gap is 0.20.
  const auto states = generate_states(sc);
  const auto cells = generate_cells(sc, states);
  const Design design(sc.spec, states);
  const double z_max = design.slope_predictor().maxCoeff();
  const double offset = -0.3;
  auto gap = [&](double a) {
    Scenario trial = sc;
    trial.truth.beta = Vector::Constant(1, a * (z_max + offset));
    trial.truth.slope_mu = -a;
    const Vector eta = design.cell_linear_predictors(draw_truth(trial, design));
    return weighted_gap(inv_logit(eta.array()).matrix(), cells);
  };
  double lo = 0.0, hi = 2.0;
  for (int it = 0; it < 100; ++it) {
    const double mid = 0.5 * (lo + hi);
    (gap(mid) < 0.20 ? lo : hi) = mid;
  }
  const double a = 0.5 * (lo + hi);
  sc.truth.beta = Vector::Constant(1, a * (z_max + offset));
  sc.truth.slope_mu = -a;
  return sc;
}

Vector draw_prior(const Design& design, const PriorConfig& prior, std::mt19937_64& rng) {
  if (prior.mode != PriorMode::weakly_informative) {
    throw InputError("prior draws need the proper (weakly informative) prior");
  }
  const auto& layout = design.layout();
  const Index S = design.num_states();
  std::normal_distribution<double> normal;
  Vector p = Vector::Zero(layout.size());
  auto coef = [&](const char* name) {
    if (!layout.has(name)) return;
    for (Index i = 0; i < layout.block(name).length; ++i) {
      p(layout.block(name).offset + i) = prior.coef_scale * normal(rng);
    }
  };
  auto log_scale = [&](const char* name) {
    if (!layout.has(name)) return 0.0;
    const double v = prior.log_sigma_mean + prior.log_sigma_sd * normal(rng);
    p(layout.block(name).offset) = v;
    return std::exp(v);
  };
  coef("beta");
  coef("gamma");
  coef("slope_mu");
  const double sa = log_scale("sigma_alpha");
  const double ss = log_scale("slope_sigma");
  const double sc = log_scale("sigma_cat");
  double rho = 0.0;
  if (layout.has("corr")) {
    // (1 - rho^2)^(eta - 1) on (-1, 1) is a Beta(eta, eta) on (rho + 1) / 2.
    std::gamma_distribution<double> g(prior.corr_eta, 1.0);
    const double x = g(rng), y = g(rng);
    rho = 2.0 * x / (x + y) - 1.0;
    p(layout.block("corr").offset) = std::atanh(rho);
  }
  Vector za(S), zs(S);
  for (Index s = 0; s < S; ++s) za(s) = normal(rng);
  for (Index s = 0; s < S; ++s) zs(s) = normal(rng);
  layout.segment(p, "alpha") = design.state_design() * layout.segment(p, "gamma") + sa * za;
  if (layout.has("slope")) {
    Vector mean = Vector::Zero(S);
    if (layout.has("slope_mu")) mean = p(layout.block("slope_mu").offset) * design.slope_predictor();
    layout.segment(p, "slope") = mean + ss * (rho * za + std::sqrt(1.0 - rho * rho) * zs);
  }
  if (layout.has("cat")) {
    for (Index i = 0; i < layout.block("cat").length; ++i) {
      p(layout.block("cat").offset + i) = sc * normal(rng);
    }
  }
  return p;
}

void write_truth(std::ostream& out, const Truth& truth) {
  const bool eth = truth.cells.cross().use_ethnicity();
  out << (eth ? "state,income,ethnicity,eta,theta\n" : "state,income,eta,theta\n");
  for (Index c = 0; c < truth.cells.size(); ++c) {
    const auto& key = truth.cells[c].key;
    out << truth.states.label(key.state) << ',' << key.income << ',';
    if (eth) out << key.ethnicity << ',';
    out << csv::format_double(truth.eta(c)) << ',' << csv::format_double(truth.theta(c)) << '\n';
  }
}

void write_simulation(const std::filesystem::path& dir, const Dataset& data, const Truth& truth) {
  std::filesystem::create_directories(dir);
  auto open = [&](const char* name) {
    std::ofstream out(dir / name, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + (dir / name).string());
    return out;
  };
  {
    auto out = open("survey.csv");
    write_survey(out, data.responses, data.states, data.cells.cross().use_ethnicity());
  }
  {
    auto out = open("cells.csv");
    write_cells(out, data.cells, data.states);
  }
  {
    auto out = open("states.csv");
    write_states(out, data.states);
  }
  {
    auto out = open("truth.csv");
    write_truth(out, truth);
  }
}

}  // namespace mrp
