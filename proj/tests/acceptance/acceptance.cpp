// Acceptance suite: one PASS/FAIL line per criterion. Pass criterion numbers
// on the command line to run a subset.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <numeric>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>

#include "../support/fixtures.hpp"
#include "mrp/design.hpp"
#include "mrp/inference.hpp"
#include "mrp/model.hpp"
#include "mrp/poststrat.hpp"
#include "mrp/reparam.hpp"
#include "mrp/rng.hpp"
#include "mrp/synthetic.hpp"

using namespace mrp;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

double correlation(const Vector& a, const Vector& b) {
  const Vector x = a.array() - a.mean();
  const Vector y = b.array() - b.mean();
  return x.dot(y) / std::sqrt(x.squaredNorm() * y.squaredNorm());
}

// ---------------------------------------------------------------------------
// 1. Analytic gradient against fourth-order central differences.

Outcome gradient_correctness() {
  double worst = 0.0;
  std::string where;
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> normal;
  for (Rung rung : {Rung::M1, Rung::M2, Rung::M3}) {
    const auto spec = test::spec_for(rung, true);
    const auto data = test::toy_data(5, 400, spec);
    const LogDensityModel model(Design(spec, data.states), data.responses);
    const NonCenteredModel nc(model);
    for (int k = 0; k < 20; ++k) {
      Vector x(model.dim());
      for (Index i = 0; i < x.size(); ++i) x(i) = 0.7 * normal(rng);
      Vector g;
      model.log_density_gradient(x, g);
      const Vector fd = test::central_gradient([&](const Vector& y) { return model.log_density(y); }, x);
      const double rel = (g - fd).norm() / std::max(1.0, fd.norm());
      Vector gn;
      nc.log_density_gradient(x, gn);
      const Vector fdn = test::central_gradient([&](const Vector& y) { return nc.log_density(y); }, x);
      const double reln = (gn - fdn).norm() / std::max(1.0, fdn.norm());
      if (std::max(rel, reln) > worst) {
        worst = std::max(rel, reln);
        where = std::string(to_string(rung)) + (reln > rel ? " non-centered" : " centered");
      }
    }
  }
  return {worst <= 1e-6, fmt("max relative error %.2e over 20 points x M1..M3 x {centered, non-centered} (worst %s)",
                             worst, where.c_str())};
}

// ---------------------------------------------------------------------------
// 2. Poststratification against hand loops.

Outcome poststrat_identity() {
  ModelSpec spec = test::spec_for(Rung::M1, true);
  const auto data = test::toy_data(6, 10, spec, 5);
  const auto& cells = data.cells;
  const Index J = cells.size();
  std::mt19937_64 rng(9);
  std::normal_distribution<double> normal;
  Matrix eta(7, J);
  for (Index d = 0; d < eta.rows(); ++d)
    for (Index j = 0; j < J; ++j) eta(d, j) = normal(rng);
  const auto est = cell_estimates_from_eta(cells.cross(), eta);

  double err = 0.0;
  for (const char* g : {"state", "state,income", "ethnicity,region", "income", "national"}) {
    const auto dims = parse_grouping(g);
    const auto table = poststratify(est, cells, data.states, dims);
    for (const auto& grp : table.groups) {
      for (Index d = 0; d < eta.rows(); ++d) {
        double num = 0.0, den = 0.0;
        for (Index j = 0; j < J; ++j) {
          const auto& key = cells[j].key;
          bool member = true;
          for (std::size_t k = 0; k < dims.size(); ++k) {
            int v = 0;
            switch (dims[k]) {
              case Dim::state: v = key.state; break;
              case Dim::income: v = key.income; break;
              case Dim::ethnicity: v = key.ethnicity; break;
              case Dim::region: v = data.states.region()[static_cast<std::size_t>(key.state)]; break;
            }
            member = member && v == grp.key[k];
          }
          if (!member) continue;
          const double p = 1.0 / (1.0 + std::exp(-eta(d, j)));
          num += cells[j].n_voters * p;
          den += cells[j].n_voters;
        }
        err = std::max(err, std::abs(grp.draws(d) - num / den));
      }
    }
  }
  // Nesting: national equals the voter-weighted combination of states.
  const std::vector<Dim> by_state{Dim::state};
  const auto states = poststratify(est, cells, data.states, by_state);
  const auto national = poststratify(est, cells, data.states, {});
  double nest = 0.0;
  for (Index d = 0; d < eta.rows(); ++d) {
    double num = 0.0, den = 0.0;
    for (const auto& g : states.groups) {
      num += g.total_weight * g.draws(d);
      den += g.total_weight;
    }
    nest = std::max(nest, std::abs(national.groups[0].draws(d) - num / den));
  }
  return {err <= 1e-12 && nest <= 1e-12,
          fmt("max deviation from hand-computed averages %.1e, national vs weighted states %.1e", err, nest)};
}

// ---------------------------------------------------------------------------
// 3. Two-state, two-income M1 posterior means against grid quadrature.

Outcome small_posterior_oracle() {
  Scenario sc;
  sc.num_states = 2;
  sc.num_regions = 1;
  const auto states = generate_states(sc);
  ModelSpec spec;
  spec.rung = Rung::M1;
  spec.use_ethnicity = false;
  spec.state_predictors = {};
  Design design(spec, states);
  // Observed cells: incomes 1 and 5 in each state.
  const double y[2][2] = {{30, 52}, {45, 71}};
  const double n[2][2] = {{100, 100}, {100, 100}};
  Vector succ = Vector::Zero(design.cross().size());
  Vector trials = Vector::Zero(design.cross().size());
  for (int s = 0; s < 2; ++s) {
    succ(design.cross().index({s, 1, 0})) = y[s][0];
    trials(design.cross().index({s, 1, 0})) = n[s][0];
    succ(design.cross().index({s, 5, 0})) = y[s][1];
    trials(design.cross().index({s, 5, 0})) = n[s][1];
  }
  const PriorConfig prior;
  const LogDensityModel model(design, succ, trials, prior);
  if (model.dim() != 5) return {false, fmt("expected 5 parameters, layout has %ld", static_cast<long>(model.dim()))};

  // Independent log posterior over (a1, a2, b, g, ls).
  auto log_post = [&](double a1, double a2, double b, double g, double ls) {
    double lp = 0.0;
    const double a[2] = {a1, a2};
    for (int s = 0; s < 2; ++s) {
      for (int k = 0; k < 2; ++k) {
        const double e = a[s] + b * (k == 0 ? -2.0 : 2.0);
        lp += y[s][k] * e - n[s][k] * (e > 0 ? e + std::log1p(std::exp(-e)) : std::log1p(std::exp(e)));
      }
    }
    const double sig = std::exp(ls);
    lp += -0.5 * ((a1 - g) * (a1 - g) + (a2 - g) * (a2 - g)) / (sig * sig) - 2.0 * ls;
    lp += -0.5 * (b * b + g * g) / 25.0;
    lp += -0.5 * ls * ls;
    return lp;
  };

  // Grid over (m, d, b, ls, t) with a1 = m + d/2, a2 = m - d/2 and
  // gamma = mg + v * t. For each sigma the d axis is centered and scaled by
  // a Gaussian approximation combining the data and d ~ N(0, 2 sigma^2), and
  // gamma's axis by its exact conditional given (a, sigma); both scalings
  // enter as Jacobians so the quadrature targets the same integral.
  auto logit = [](double p) { return std::log(p / (1 - p)); };
  double a_hat[2], a_var[2], b_hat = 0.0;
  for (int s = 0; s < 2; ++s) {
    const double p0 = y[s][0] / n[s][0], p1 = y[s][1] / n[s][1];
    a_hat[s] = 0.5 * (logit(p0) + logit(p1));
    a_var[s] = 0.25 * (1 / (n[s][0] * p0 * (1 - p0)) + 1 / (n[s][1] * p1 * (1 - p1)));
    b_hat += 0.5 * (logit(p1) - logit(p0)) / 4.0;
  }
  const double d_hat = a_hat[0] - a_hat[1], d_var = a_var[0] + a_var[1];
  const double m_hat = 0.5 * (a_hat[0] + a_hat[1]);
  auto grid = [](double lo, double hi, int k) {
    std::vector<double> v(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) v[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / (k - 1);
    return v;
  };
  const auto M = grid(m_hat - 1.0, m_hat + 1.0, 41);
  const auto Tau = grid(-8.0, 8.0, 33);
  const auto B = grid(b_hat - 0.45, b_hat + 0.45, 41);
  const auto L = grid(-7.0, 4.0, 89);
  const auto T = grid(-8.0, 8.0, 33);
  double lmax = -1e300;
  std::array<double, 5> m{};
  double Z = 0.0;
  for (int pass = 0; pass < 2; ++pass) {
    for (double ls : L) {
      const double sig2 = std::exp(2 * ls);
      const double prec = 1.0 / 25.0 + 2.0 / sig2;
      const double v = 1.0 / std::sqrt(prec);
      const double d_prec = 1.0 / (2.0 * sig2) + 1.0 / d_var;
      const double d_mid = d_hat / d_var / d_prec;
      const double w_d = 1.0 / std::sqrt(d_prec);
      for (double mm : M) {
        for (double tau : Tau) {
          const double d = d_mid + w_d * tau;
          const double a1 = mm + 0.5 * d, a2 = mm - 0.5 * d;
          const double mg = (a1 + a2) / sig2 / prec;
          for (double b : B) {
            for (double t : T) {
              const double g = mg + v * t;
              const double lp = log_post(a1, a2, b, g, ls) + std::log(v * w_d);
              if (pass == 0) {
                lmax = std::max(lmax, lp);
                continue;
              }
              const double w = std::exp(lp - lmax);
              Z += w;
              m[0] += w * a1;
              m[1] += w * a2;
              m[2] += w * b;
              m[3] += w * g;
              m[4] += w * ls;
            }
          }
        }
      }
    }
  }
  for (double& v : m) v /= Z;

  McmcOptions opt;
  // Two groups leave sigma weakly identified; the default acceptance target
  // diverges in the neck of the funnel.
  opt.hmc.seed = 3;
  opt.hmc.warmup = 2000;
  opt.hmc.iterations = 10000;
  opt.hmc.target_accept = 0.99;
  const auto draws = sample_mcmc(model, opt);
  const Vector mean = draws.draws.colwise().mean();
  const auto& lay = model.layout();
  const Index idx[5] = {lay.block("alpha").offset, lay.block("alpha").offset + 1, lay.block("beta").offset,
                        lay.block("gamma").offset, lay.block("sigma_alpha").offset};
  const char* names[5] = {"alpha1", "alpha2", "beta", "gamma", "log_sigma"};
  double worst = 0.0;
  std::string detail;
  for (int k = 0; k < 5; ++k) {
    const double diff = std::abs(mean(idx[k]) - m[static_cast<std::size_t>(k)]);
    worst = std::max(worst, diff);
    detail += fmt("%s %.3f/%.3f ", names[k], mean(idx[k]), m[static_cast<std::size_t>(k)]);
  }
  return {worst <= 0.02, fmt("max |mcmc - grid| = %.4f; ", worst) + detail};
}

// ---------------------------------------------------------------------------
// 4. Simulation-based calibration of M1.

Outcome simulation_based_calibration() {
  Scenario sc;
  sc.num_states = 5;
  sc.seed = 404;
  sc.spec.rung = Rung::M1;
  sc.spec.use_ethnicity = false;
  sc.spec.state_predictors = {"avg_income"};
  sc.respondents = 500;
  const auto states = generate_states(sc);
  const auto cells = generate_cells(sc, states);
  const Design design(sc.spec, states);
  PriorConfig prior;
  prior.coef_scale = 1.0;
  prior.log_sigma_mean = -1.0;
  prior.log_sigma_sd = 0.5;

  const int reps = 200, kept = 99, bins = 10;
  const Index P = design.layout().size();
  Eigen::MatrixXi counts = Eigen::MatrixXi::Zero(P, bins);
  int non_converged = 0;
  for (int r = 0; r < reps; ++r) {
    auto rng = make_rng(7000 + static_cast<std::uint64_t>(r), 0);
    const Vector truth_params = draw_prior(design, prior, rng);
    const Vector eta = design.cell_linear_predictors(truth_params);
    Truth truth{states, cells, design, truth_params, eta, inv_logit(eta.array()).matrix()};
    Scenario rep = sc;
    rep.seed = 9000 + static_cast<std::uint64_t>(r);
    const auto data = simulate_poll(truth, rep);
    const LogDensityModel model(design, data.responses, prior);
    McmcOptions opt;
    opt.hmc.seed = 100 + static_cast<std::uint64_t>(r);
    opt.init = InitMode::diffuse;
    const auto draws = sample_mcmc(model, opt);
    if (!draws.diagnostics->converged) ++non_converged;
    const Index D = draws.size();
    for (Index p = 0; p < P; ++p) {
      int rank = 0;
      for (int k = 0; k < kept; ++k) {
        const Index d = (static_cast<Index>(k) * D) / kept;
        if (draws.draws(d, p) < truth_params(p)) ++rank;
      }
      ++counts(p, rank * bins / (kept + 1));
    }
  }
  double min_p = 1.0;
  std::string worst;
  const double expected = static_cast<double>(reps) / bins;
  for (Index p = 0; p < P; ++p) {
    double chi2 = 0.0;
    for (int b = 0; b < bins; ++b) chi2 += std::pow(counts(p, b) - expected, 2) / expected;
    const double pval = boost::math::gamma_q((bins - 1) / 2.0, chi2 / 2.0);
    if (pval < min_p) {
      min_p = pval;
      worst = design.layout().parameter_name(p);
    }
  }
  return {min_p > 0.01, fmt("%d replications, %ld parameters; min chi-square p = %.3f (%s); %d fits flagged non-converged",
                            reps, static_cast<long>(P), min_p, worst.c_str(), non_converged)};
}

// ---------------------------------------------------------------------------
// 5-8 share the red/blue replications.

struct Replication {
  double slope_truth_corr = 0.0;
  double slope_income_corr = 0.0;
  double gap_est = 0.0;
  double gap_true = 0.0;
  long covered = 0;
  long cells = 0;
  double median_sd = 0.0;
  bool converged = false;
};

struct RedBlueRun {
  Truth truth;
  CellEstimates estimates;
  PosteriorDraws draws;
};

RedBlueRun fit_redblue(std::uint64_t seed) {
  const auto sc = redblue_scenario(50, 30000, seed);
  auto truth = make_truth(sc);
  const auto data = simulate_poll(truth, sc);
  const LogDensityModel model(truth.design, data.responses);
  McmcOptions opt;
  opt.hmc.seed = seed;
  auto draws = sample_mcmc(model, opt);
  auto estimates = predict_cells(draws, data.cells, truth.design);
  return {std::move(truth), std::move(estimates), std::move(draws)};
}

Replication evaluate(const RedBlueRun& run) {
  Replication r;
  const auto& lay = run.truth.design.layout();
  const Index S = run.truth.design.num_states();
  const auto& slope = lay.block("slope");
  const Index beta = lay.block("beta").offset;
  const Vector mean = run.draws.draws.colwise().mean();
  Vector est(S), tru(S);
  for (Index s = 0; s < S; ++s) {
    est(s) = mean(beta) + mean(slope.offset + s);
    tru(s) = run.truth.params(beta) + run.truth.params(slope.offset + s);
  }
  r.slope_truth_corr = correlation(est, tru);
  r.slope_income_corr = correlation(est, run.truth.states.avg_income());

  const auto& cells = run.truth.cells;
  double top = 0, top_n = 0, bot = 0, bot_n = 0;
  for (Index j = 0; j < cells.size(); ++j) {
    const double w = cells[j].n_voters;
    if (cells[j].key.income == 5) top += w * run.truth.theta(j), top_n += w;
    if (cells[j].key.income == 1) bot += w * run.truth.theta(j), bot_n += w;
  }
  r.gap_true = top / top_n - bot / bot_n;
  r.gap_est = national_income_gap(run.estimates, cells, run.truth.states).mean();

  std::vector<double> sds;
  const std::vector<Dim> dims{Dim::state, Dim::income};
  const auto table = poststratify(run.estimates, cells, run.truth.states, dims);
  for (const auto& g : table.groups) sds.push_back(g.summary.sd);
  r.median_sd = quantile(sds, 0.5);

  for (Index j = 0; j < run.estimates.num_cells(); ++j) {
    std::vector<double> col(run.estimates.theta.col(j).data(),
                            run.estimates.theta.col(j).data() + run.estimates.num_draws());
    const double lo = quantile(col, 0.05);
    const double hi = quantile(col, 0.95);
    r.covered += (run.truth.theta(j) >= lo && run.truth.theta(j) <= hi) ? 1 : 0;
    ++r.cells;
  }
  r.converged = run.draws.diagnostics->converged;
  return r;
}

std::vector<Replication>& redblue_replications() {
  static std::vector<Replication> reps = [] {
    std::vector<Replication> out;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) out.push_back(evaluate(fit_redblue(seed)));
    return out;
  }();
  return reps;
}

Outcome redblue_recovery() {
  const auto& reps = redblue_replications();
  int strong = 0, negative = 0, converged = 0;
  double min_corr = 1.0, mean_corr = 0.0;
  for (const auto& r : reps) {
    strong += r.slope_truth_corr >= 0.8;
    negative += r.slope_income_corr < 0.0;
    converged += r.converged;
    min_corr = std::min(min_corr, r.slope_truth_corr);
    mean_corr += r.slope_truth_corr / static_cast<double>(reps.size());
  }
  const bool pass = strong == static_cast<int>(reps.size()) && negative >= 19;
  return {pass, fmt("corr(estimated, true slope) >= 0.8 in %d/20 (min %.3f, mean %.3f); "
                    "corr(estimated slope, avg_income) < 0 in %d/20; %d/20 converged",
                    strong, min_corr, mean_corr, negative, converged)};
}

Outcome rich_poor_gap() {
  const auto& reps = redblue_replications();
  int within = 0;
  double worst = 0.0;
  for (const auto& r : reps) {
    const double dev = std::abs(r.gap_est - r.gap_true);
    within += dev <= 0.03;
    worst = std::max(worst, dev);
  }
  const auto& first = reps.front();
  return {within == static_cast<int>(reps.size()),
          fmt("replication 1: estimated %.4f vs true %.4f; within 0.03 in %d/20 (max deviation %.4f)",
              first.gap_est, first.gap_true, within, worst)};
}

Outcome interval_calibration() {
  long covered = 0, total = 0;
  for (const auto& r : redblue_replications()) {
    covered += r.covered;
    total += r.cells;
  }
  const double rate = static_cast<double>(covered) / static_cast<double>(total);
  return {rate >= 0.85 && rate <= 0.95, fmt("90%% interval coverage %.4f over %ld cell estimates", rate, total)};
}

Outcome uncertainty_scale() {
  const auto& reps = redblue_replications();
  double lo = 1.0, hi = 0.0;
  for (const auto& r : reps) {
    lo = std::min(lo, r.median_sd);
    hi = std::max(hi, r.median_sd);
  }
  const double first = reps.front().median_sd;
  return {first >= 0.01 && first <= 0.06 && lo >= 0.01 && hi <= 0.06,
          fmt("median posterior sd of state x income points %.4f (range over 20 replications %.4f..%.4f)", first,
              lo, hi)};
}

// ---------------------------------------------------------------------------
// 9. Calibration to recorded totals and idempotence.

Outcome calibration_totals() {
  const auto run = fit_redblue(1);
  const auto& cells = run.truth.cells;
  const Index S = run.truth.design.num_states();
  // Recorded totals: true state shares nudged off the model's estimates.
  Vector recorded(S);
  for (Index s = 0; s < S; ++s) {
    double num = 0, den = 0;
    for (Index j = 0; j < cells.size(); ++j) {
      if (cells[j].key.state != s) continue;
      num += cells[j].n_voters * run.truth.theta(j);
      den += cells[j].n_voters;
    }
    recorded(s) = std::clamp(num / den + 0.02 * ((s % 3) - 1), 0.05, 0.95);
  }
  const auto first = calibrate_to_totals(run.estimates, cells, recorded);
  double err = 0.0;
  for (Index d = 0; d < first.estimates.num_draws(); ++d) {
    for (Index s = 0; s < S; ++s) {
      double num = 0, den = 0;
      for (Index j = 0; j < cells.size(); ++j) {
        if (cells[j].key.state != s) continue;
        num += cells[j].n_voters / (1.0 + std::exp(-first.estimates.eta(d, j)));
        den += cells[j].n_voters;
      }
      err = std::max(err, std::abs(num / den - recorded(s)));
    }
  }
  const auto second = calibrate_to_totals(first.estimates, cells, recorded);
  const double shift = second.delta.cwiseAbs().maxCoeff();
  return {err <= 1e-8 && shift < 1e-10,
          fmt("max |aggregate - recorded| %.2e over %ld draws x %ld states; second pass max |delta| %.2e", err,
              static_cast<long>(first.estimates.num_draws()), static_cast<long>(S), shift)};
}

// ---------------------------------------------------------------------------
// 10. Partial pooling of state intercepts.

Outcome partial_pooling() {
  Scenario sc;
  sc.num_states = 10;
  sc.seed = 31;
  sc.spec.rung = Rung::M1;
  sc.spec.use_ethnicity = false;
  sc.spec.state_predictors = {"avg_income", "prev_rep_share"};
  const auto states = generate_states(sc);
  const Design design(sc.spec, states);
  const auto& lay = design.layout();
  Vector params = Vector::Zero(lay.size());
  params(lay.block("gamma").offset) = 0.1;
  params(lay.block("gamma").offset + 1) = -0.2;
  params(lay.block("gamma").offset + 2) = 0.3;
  params(lay.block("sigma_alpha").offset) = std::log(0.3);
  const Vector mean_alpha = design.state_design() * params.segment(lay.block("gamma").offset, 3);
  std::mt19937_64 rng(31);
  std::normal_distribution<double> normal;
  for (Index s = 0; s < 10; ++s) params(s) = mean_alpha(s) + 0.3 * normal(rng);
  params(0) = mean_alpha(0) + 1.2;  // small state far above its regression line

  std::vector<int> sizes(10, 300);
  sizes[0] = 5;
  sizes[1] = 5000;
  std::uniform_real_distribution<double> unif;
  std::vector<SurveyResponse> responses;
  std::vector<double> yes(10, 0.0);
  for (int s = 0; s < 10; ++s) {
    for (int i = 0; i < sizes[static_cast<std::size_t>(s)]; ++i) {
      SurveyResponse r;
      r.state = s;
      r.income = 1 + i % 5;
      const double p = 1.0 / (1.0 + std::exp(-design.linear_predictor(params, r.cell())));
      r.vote = unif(rng) < p;
      yes[static_cast<std::size_t>(s)] += r.vote;
      responses.push_back(r);
    }
  }
  const LogDensityModel model(design, responses);
  McmcOptions opt;
  opt.hmc.seed = 31;
  opt.hmc.iterations = 2000;
  const auto draws = sample_mcmc(model, opt);
  const Vector mean = draws.draws.colwise().mean();
  Vector pred = Vector::Zero(10);
  for (Index d = 0; d < draws.size(); ++d) {
    pred += design.state_design() * draws.draws.row(d).segment(lay.block("gamma").offset, 3).transpose();
  }
  pred /= static_cast<double>(draws.size());
  auto raw_logit = [&](int s) {
    const double p = yes[static_cast<std::size_t>(s)] / sizes[static_cast<std::size_t>(s)];
    return std::log(p / (1 - p));
  };
  const double raw0 = raw_logit(0), raw1 = raw_logit(1);
  const double lo = std::min(raw0, pred(0)), hi = std::max(raw0, pred(0));
  const bool between = mean(0) > lo && mean(0) < hi;
  const bool close = std::abs(mean(1) - raw1) < 0.05;
  return {between && close,
          fmt("small state (n=5): raw logit %.3f, posterior %.3f, regression %.3f; "
              "large state (n=5000): raw logit %.3f, posterior %.3f (|diff| %.4f)",
              raw0, mean(0), pred(0), raw1, mean(1), std::abs(mean(1) - raw1))};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"gradient correctness", gradient_correctness},
      {"poststratification identity", poststrat_identity},
      {"small-posterior oracle", small_posterior_oracle},
      {"simulation-based calibration", simulation_based_calibration},
      {"red/blue slope recovery", redblue_recovery},
      {"rich-poor gap", rich_poor_gap},
      {"interval calibration", interval_calibration},
      {"uncertainty scale", uncertainty_scale},
      {"calibration to recorded totals", calibration_totals},
      {"partial pooling", partial_pooling},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
  int failures = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const int id = static_cast<int>(k) + 1;
    if (!only.empty() && !only.count(id)) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = criteria[k].second();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    failures += !out.pass;
    std::cout << (out.pass ? "PASS" : "FAIL") << "  " << id << ". " << criteria[k].first << ": " << out.detail
              << fmt(" [%.1fs]", secs) << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
