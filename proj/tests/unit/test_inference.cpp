#include <cmath>
#include <random>

#include "../support/fixtures.hpp"
#include "doctest.h"
#include "mrp/diagnostics.hpp"
#include "mrp/hmc.hpp"
#include "mrp/inference.hpp"
#include "mrp/optimize.hpp"

using namespace mrp;

namespace {

// Independent normals with given means and sds.
struct Gaussian {
  Vector mu, sd;
  Index dim() const { return mu.size(); }
  double log_density(const Vector& x) const {
    return -0.5 * ((x - mu).array() / sd.array()).square().sum();
  }
  double log_density_gradient(const Vector& x, Vector& g) const {
    g = -((x - mu).array() / sd.array().square()).matrix();
    return log_density(x);
  }
};

// Intercept-only logistic regression under a flat prior.
struct Pooled {
  double y, n;
  Index dim() const { return 1; }
  double log_density(const Vector& x) const { return y * x(0) - n * std::log1p(std::exp(x(0))); }
  double log_density_gradient(const Vector& x, Vector& g) const {
    g.resize(1);
    g(0) = y - n / (1.0 + std::exp(-x(0)));
    return log_density(x);
  }
};

// Bayesian linear regression with known noise: exactly Gaussian posterior.
struct LinearRegression {
  Matrix X;
  Vector yv;
  double noise = 0.5, prior = 2.0;
  Index dim() const { return X.cols(); }
  double log_density(const Vector& b) const {
    return -0.5 * (yv - X * b).squaredNorm() / (noise * noise) - 0.5 * b.squaredNorm() / (prior * prior);
  }
  double log_density_gradient(const Vector& b, Vector& g) const {
    g = X.transpose() * (yv - X * b) / (noise * noise) - b / (prior * prior);
    return log_density(b);
  }
};

struct Saddle {
  Index dim() const { return 2; }
  double log_density(const Vector& x) const { return -x(0) * x(0) + 0.5 * x(1) * x(1); }
  double log_density_gradient(const Vector& x, Vector& g) const {
    g.resize(2);
    g << -2 * x(0), x(1);
    return log_density(x);
  }
};

}  // namespace

TEST_CASE("MAP of a pooled logistic model is the empirical logit") {
  const auto fit = fit_map(Pooled{75, 100});
  CHECK(fit.point(0) == doctest::Approx(std::log(3.0)).epsilon(1e-8));
  CHECK(fit.grad_norm < 1e-8);
  CHECK(fit.neg_hessian(0, 0) == doctest::Approx(100 * 0.75 * 0.25).epsilon(1e-5));
}

TEST_CASE("MAP under standard normal priors with no data is zero") {
  const auto fit = fit_map(Gaussian{Vector::Zero(4), Vector::Ones(4)}, Vector::Constant(4, 3.0));
  CHECK(fit.point.norm() < 1e-8);
}

TEST_CASE("MAP errors") {
  MapOptions few;
  few.max_iter = 1;
  few.newton_steps = 0;
  Gaussian g{Vector::LinSpaced(30, -5, 5), Vector::LinSpaced(30, 0.01, 10)};
  try {
    fit_map(g, Vector::Zero(30), few);
    FAIL("expected ConvergenceError");
  } catch (const ConvergenceError& e) {
    CHECK(e.best_point().size() == 30);
    CHECK(e.best_log_density() >= g.log_density(Vector::Zero(30)));
  }
  try {
    fit_map(Saddle{}, Vector::Zero(2));
    FAIL("expected NotPositiveDefiniteError");
  } catch (const NotPositiveDefiniteError& e) {
    CHECK(std::abs(e.direction()(1)) == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(e.eigenvalue() <= 0.0);
  }
}

TEST_CASE("MAP on synthetic data beats the truth") {
  Scenario sc;
  sc.num_states = 10;
  sc.respondents = 3000;
  sc.seed = 8;
  sc.spec = test::spec_for(Rung::M1, false);
  const auto truth = make_truth(sc);
  const auto data = simulate_poll(truth, sc);
  const LogDensityModel model(truth.design, data.responses);
  const auto fit = fit_map(model);
  CHECK(fit.log_density >= model.log_density(truth.params));
  CHECK(fit.grad_norm <= 1e-6 * static_cast<double>(model.dim()));
}

TEST_CASE("Laplace draws") {
  SUBCASE("sd from the Hessian") {
    Matrix h(1, 1);
    h << 4.0;
    const Eigen::LLT<Matrix> llt(h);
    const auto d = sample_laplace(Vector::Zero(1), llt, 1000, 5);
    const double sd = std::sqrt((d.draws.col(0).array() - d.draws.col(0).mean()).square().sum() / 999.0);
    CHECK(sd == doctest::Approx(0.5).epsilon(0.05));
    const auto again = sample_laplace(Vector::Zero(1), llt, 1000, 5);
    CHECK(again.draws == d.draws);
  }
  SUBCASE("Gaussian posterior: Laplace agrees with HMC") {
    std::mt19937_64 rng(2);
    std::normal_distribution<double> normal;
    LinearRegression lr;
    lr.X.resize(40, 3);
    lr.yv.resize(40);
    for (Index i = 0; i < 40; ++i) {
      lr.X.row(i) << 1.0, normal(rng), normal(rng);
      lr.yv(i) = 0.5 - lr.X(i, 1) + 0.25 * lr.X(i, 2) + 0.5 * normal(rng);
    }
    const auto fit = fit_map(lr);
    const auto lap = sample_laplace(fit.point, fit.factor, 8000, 3);
    HmcSettings s;
    s.seed = 4;
    s.iterations = 2000;
    const auto mc = sample_target(lr, std::vector<Vector>(4, Vector::Zero(3)), s);
    const Vector m1 = lap.draws.colwise().mean(), m2 = mc.draws.colwise().mean();
    const Vector sd1 = ((lap.draws.rowwise() - m1.transpose()).array().square().colwise().mean()).sqrt();
    const Vector sd2 = ((mc.draws.rowwise() - m2.transpose()).array().square().colwise().mean()).sqrt();
    for (Index k = 0; k < 3; ++k) {
      CHECK(std::abs(m1(k) - m2(k)) < 4 * sd1(k) / std::sqrt(1000.0));
      CHECK(sd2(k) / sd1(k) == doctest::Approx(1.0).epsilon(0.06));
    }
  }
}

TEST_CASE("HMC on a standard normal") {
  HmcSettings s;
  s.seed = 12;
  s.iterations = 2000;
  const Gaussian g{Vector::Zero(5), Vector::Ones(5)};
  const auto out = sample_target(g, std::vector<Vector>(4, Vector::Constant(5, 2.0)), s);
  CHECK(out.size() == 8000);
  for (Index k = 0; k < 5; ++k) {
    const double m = out.draws.col(k).mean();
    const double sd = std::sqrt((out.draws.col(k).array() - m).square().mean());
    CHECK(std::abs(m) < 0.05);
    CHECK(sd >= 0.95);
    CHECK(sd <= 1.05);
  }
  CHECK(out.divergences == 0);
}

TEST_CASE("HMC is deterministic in the seed and independent of threading") {
  const Gaussian g{Vector::Zero(3), Vector::Constant(3, 2.0)};
  HmcSettings s;
  s.warmup = 200;
  s.iterations = 100;
  s.seed = 5;
  const auto inits = std::vector<Vector>(3, Vector::Zero(3));
  const auto a = sample_target(g, inits, s);
  s.parallel = false;
  const auto b = sample_target(g, inits, s);
  CHECK(a.draws == b.draws);
  s.seed = 6;
  CHECK_FALSE(sample_target(g, inits, s).draws == a.draws);
}

TEST_CASE("metric adaptation windows") {
  const auto ends = metric_window_ends(1000);
  REQUIRE_FALSE(ends.empty());
  CHECK(ends.back() == 1000 - 50 - 1);
  for (std::size_t i = 1; i < ends.size(); ++i) CHECK(ends[i] > ends[i - 1]);
  CHECK(metric_window_ends(10).empty());
}

TEST_CASE("dual averaging settles near the target") {
  DualAverage da(1.0, 0.8);
  double eps = 1.0;
  // Acceptance falls with step size; the fixed point is eps = 0.25.
  for (int i = 0; i < 2000; ++i) eps = da.update(std::exp(-0.892574 * eps));
  CHECK(da.final_step_size() == doctest::Approx(0.25).epsilon(0.05));
}

TEST_CASE("diagnostics") {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> normal;
  SUBCASE("constant chains: R-hat undefined") {
    Matrix d = Matrix::Constant(100, 2, 3.0);
    CHECK(std::isnan(split_rhat(d)));
    std::vector<int> chain(200);
    for (int i = 0; i < 200; ++i) chain[static_cast<std::size_t>(i)] = i / 100;
    const auto r = diagnose(Matrix::Constant(200, 1, 3.0), chain, {"x"});
    CHECK(r.undefined_rhat == 1);
    CHECK_FALSE(r.converged);
  }
  SUBCASE("iid draws") {
    Matrix d(1000, 4);
    for (Index i = 0; i < d.size(); ++i) d(i) = normal(rng);
    const double rhat = split_rhat(d);
    CHECK(rhat >= 0.99);
    CHECK(rhat <= 1.01);
    CHECK(effective_sample_size(d) == doctest::Approx(4000).epsilon(0.15));
  }
  SUBCASE("unmixed chains") {
    Matrix d(500, 2);
    for (Index i = 0; i < 500; ++i) {
      d(i, 0) = normal(rng);
      d(i, 1) = 10 + normal(rng);
    }
    CHECK(split_rhat(d) > 3);
  }
  SUBCASE("AR(1) chain has reduced ESS") {
    const double phi = 0.9;
    Matrix d(4000, 2);
    for (Index c = 0; c < 2; ++c) {
      double x = 0;
      for (Index i = 0; i < 4000; ++i) d(i, c) = x = phi * x + std::sqrt(1 - phi * phi) * normal(rng);
    }
    // Theoretical ESS = N (1 - phi) / (1 + phi).
    CHECK(effective_sample_size(d) == doctest::Approx(8000 * 0.1 / 1.9).epsilon(0.3));
  }
  SUBCASE("quantiles") {
    const std::vector<double> v{4, 1, 3, 2};
    CHECK(quantile(v, 0.0) == 1);
    CHECK(quantile(v, 1.0) == 4);
    CHECK(quantile(v, 0.5) == 2.5);
    CHECK(quantile(v, 0.25) == doctest::Approx(1.75));
  }
}

TEST_CASE("MCMC on the hierarchical model: convergence and Laplace agreement") {
  Scenario sc;
  sc.num_states = 8;
  sc.respondents = 5000;
  sc.seed = 21;
  sc.spec = test::spec_for(Rung::M1, false);
  sc.spec.state_predictors = {"avg_income"};
  const auto truth = make_truth(sc);
  const auto data = simulate_poll(truth, sc);
  const LogDensityModel model(truth.design, data.responses);
  const auto mc = sample_mcmc(model, test::quick_mcmc(3, 1000, 1000));
  REQUIRE(mc.diagnostics);
  CHECK(mc.diagnostics->converged);
  CHECK(mc.layout == model.layout());
  CHECK(mc.num_chains() == 4);
  const auto lap = fit_laplace(model, 4000, 3);
  const Vector m1 = mc.draws.colwise().mean(), m2 = lap.draws.colwise().mean();
  const auto& a = model.layout().block("alpha");
  for (Index k = a.offset; k < a.offset + a.length; ++k) {
    CHECK(std::abs(m1(k) - m2(k)) < 0.05);
    const double s1 = std::sqrt((mc.draws.col(k).array() - m1(k)).square().mean());
    const double s2 = std::sqrt((lap.draws.col(k).array() - m2(k)).square().mean());
    CHECK(s2 / s1 == doctest::Approx(1.0).epsilon(0.2));
  }
  const Index b = model.layout().block("beta").offset;
  CHECK(std::abs(m1(b) - m2(b)) < 0.05);
}

TEST_CASE("init modes and option parsing") {
  CHECK(parse_init_mode("diffuse") == InitMode::diffuse);
  CHECK(parse_parameterization("centered") == Parameterization::centered);
  CHECK_THROWS(parse_init_mode("random"));
  const auto spec = test::spec_for(Rung::M2, false);
  const auto data = test::toy_data(5, 300, spec);
  const LogDensityModel model(Design(spec, data.states), data.responses);
  auto opt = test::quick_mcmc(1);
  const auto inits = initial_points(model, opt);
  CHECK(inits.size() == 4);
  for (const auto& x : inits) CHECK(std::isfinite(model.log_density(x)));
  opt.init = InitMode::diffuse;
  CHECK(initial_points(model, opt).size() == 4);
}

TEST_CASE("nested Laplace on M2") {
  const auto spec = test::spec_for(Rung::M2, false);
  const auto data = test::toy_data(12, 4000, spec);
  const LogDensityModel model(Design(spec, data.states), data.responses);
  const auto fit = fit_nested_laplace(model);
  CHECK(fit.hyper.size() == 3);
  CHECK(fit.effects.size() + fit.hyper.size() == static_cast<std::size_t>(model.dim()));
  CHECK((fit.hyper_cov.diagonal().array() > 0).all());
  const auto a = sample_nested_laplace(fit, model.layout(), 200, 9);
  const auto b = sample_nested_laplace(fit, model.layout(), 200, 9);
  CHECK(a.draws == b.draws);
  CHECK(a.layout == model.layout());
  CHECK(a.draws.allFinite());
  const Vector mean = a.draws.colwise().mean();
  CHECK(std::abs(mean(model.layout().block("sigma_alpha").offset) - fit.hyper_mode(0)) < 0.1);
}
