#include <algorithm>
#include <random>

#include "../support/fixtures.hpp"
#include "doctest.h"
#include "mrp/model.hpp"
#include "mrp/reparam.hpp"

using namespace mrp;

namespace {

Vector random_point(Index n, std::uint64_t seed, double scale = 0.7) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Vector x(n);
  for (Index i = 0; i < n; ++i) x(i) = scale * normal(rng);
  return x;
}

double rel_error(const Vector& a, const Vector& b) { return (a - b).norm() / std::max(1.0, b.norm()); }

}  // namespace

TEST_CASE("likelihood at zero is n log 0.5") {
  const auto spec = test::spec_for(Rung::M2, true);
  const auto data = test::toy_data(4, 37, spec);
  PriorConfig uniform;
  uniform.mode = PriorMode::uniform;
  const LogDensityModel model(Design(spec, data.states), data.responses, uniform);
  const Vector zero = Vector::Zero(model.dim());
  CHECK(model.log_likelihood(zero) == doctest::Approx(37 * std::log(0.5)).epsilon(1e-14));
  CHECK(std::isfinite(model.log_density(zero)));
}

TEST_CASE("one respondent: eta 0 to eta 2") {
  ModelSpec spec = test::spec_for(Rung::M1, false);
  const auto data = test::toy_data(3, 1, spec);
  std::vector<SurveyResponse> one{{0, 3, 0, 1, 1.0}};
  const Design design(spec, data.states);
  const LogDensityModel model(design, one);
  Vector p = Vector::Zero(model.dim());
  const double l0 = model.log_likelihood(p);
  p(design.layout().block("alpha").offset) = 2.0;
  const double l2 = model.log_likelihood(p);
  CHECK(l2 - l0 == doctest::Approx(std::log((1.0 / (1.0 + std::exp(-2.0))) / 0.5)).epsilon(1e-14));
}

TEST_CASE("likelihood matches a per-respondent oracle") {
  for (Rung r : {Rung::M1, Rung::M2, Rung::M3}) {
    const auto spec = test::spec_for(r, true);
    const auto data = test::toy_data(3, 20, spec, 17);
    const Design design(spec, data.states);
    const LogDensityModel model(design, data.responses);
    for (std::uint64_t k = 0; k < 5; ++k) {
      const Vector p = random_point(model.dim(), k, 1.5);
      CHECK(model.log_likelihood(p) == doctest::Approx(test::naive_log_likelihood(design, data.responses, p)).epsilon(1e-10));
    }
  }
}

TEST_CASE("gradient matches finite differences at 50 random points") {
  for (Rung r : {Rung::M1, Rung::M2, Rung::M3}) {
    for (PriorMode mode : {PriorMode::weakly_informative, PriorMode::uniform}) {
      const auto spec = test::spec_for(r, true);
      const auto data = test::toy_data(3, 200, spec, 23);
      PriorConfig prior;
      prior.mode = mode;
      const LogDensityModel model(Design(spec, data.states), data.responses, prior);
      const NonCenteredModel nc(model);
      double worst = 0.0, worst_nc = 0.0;
      for (std::uint64_t k = 0; k < 50; ++k) {
        const Vector x = random_point(model.dim(), 100 + k);
        const Vector fd = test::central_gradient([&](const Vector& y) { return model.log_density(y); }, x);
        worst = std::max(worst, rel_error(grad_log_posterior(x, model), fd));
        Vector g;
        nc.log_density_gradient(x, g);
        const Vector fdn = test::central_gradient([&](const Vector& y) { return nc.log_density(y); }, x);
        worst_nc = std::max(worst_nc, rel_error(g, fdn));
      }
      CHECK(worst < 1e-6);
      CHECK(worst_nc < 1e-6);
    }
  }
}

TEST_CASE("gradient matches two-point central differences with step 1e-5") {
  const auto spec = test::spec_for(Rung::M2, false);
  const auto data = test::toy_data(3, 100, spec);
  const LogDensityModel model(Design(spec, data.states), data.responses);
  const Vector x = random_point(model.dim(), 4);
  Vector fd(x.size());
  for (Index i = 0; i < x.size(); ++i) {
    Vector a = x, b = x;
    a(i) += 1e-5;
    b(i) -= 1e-5;
    fd(i) = (model.log_density(a) - model.log_density(b)) / 2e-5;
  }
  CHECK(rel_error(grad_log_posterior(x, model), fd) < 1e-6);
}

TEST_CASE("non-centered map round-trips") {
  const auto spec = test::spec_for(Rung::M3, true);
  const auto data = test::toy_data(5, 100, spec);
  const LogDensityModel model(Design(spec, data.states), data.responses);
  const NonCenteredModel nc(model);
  const Vector x = random_point(model.dim(), 6);
  CHECK((nc.to_layout(nc.from_layout(x)) - x).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("stable for extreme linear predictors") {
  const auto spec = test::spec_for(Rung::M1, false);
  const auto data = test::toy_data(3, 50, spec);
  const Design design(spec, data.states);
  const LogDensityModel model(design, data.responses);
  for (double a : {-500.0, 500.0}) {
    Vector p = Vector::Zero(model.dim());
    design.layout().segment(p, "alpha").setConstant(a);
    Vector g;
    CHECK(std::isfinite(model.log_density_gradient(p, g)));
    CHECK(g.allFinite());
  }
  CHECK_THROWS(model.log_density(Vector::Zero(model.dim() + 1)));
}

TEST_CASE("uniform prior is finite everywhere finite") {
  const auto spec = test::spec_for(Rung::M3, true);
  const auto data = test::toy_data(4, 60, spec);
  PriorConfig prior;
  prior.mode = PriorMode::uniform;
  const LogDensityModel model(Design(spec, data.states), data.responses, prior);
  for (std::uint64_t k = 0; k < 20; ++k) CHECK(std::isfinite(model.log_density(random_point(model.dim(), k, 3.0))));
}

TEST_CASE("symmetric data gives equal alpha gradients") {
  ModelSpec spec = test::spec_for(Rung::M1, false);
  spec.state_predictors = {};
  const auto data = test::toy_data(4, 1, spec);
  std::vector<SurveyResponse> rs;
  for (int s = 0; s < 4; ++s)
    for (int i = 1; i <= 5; ++i)
      for (int v = 0; v < 2; ++v) rs.push_back({s, i, 0, v, 1.0});
  const Design design(spec, data.states);
  const LogDensityModel model(design, rs);
  Vector p = random_point(model.dim(), 9);
  design.layout().segment(p, "alpha").setConstant(0.4);
  const Vector g = grad_log_posterior(p, model);
  const auto ga = design.layout().segment(g, "alpha");
  CHECK((ga.array() - ga(0)).abs().maxCoeff() < 1e-12);
}

TEST_CASE("respondent order does not change the posterior") {
  const auto spec = test::spec_for(Rung::M2, true);
  const auto data = test::toy_data(5, 500, spec);
  auto shuffled = data.responses;
  std::mt19937 rng(4);
  std::shuffle(shuffled.begin(), shuffled.end(), rng);
  const Design design(spec, data.states);
  const LogDensityModel a(design, data.responses), b(design, shuffled);
  const Vector x = random_point(a.dim(), 3);
  CHECK(std::abs(a.log_density(x) - b.log_density(x)) < 1e-9);
}

TEST_CASE("counts constructor validates") {
  const auto spec = test::spec_for(Rung::M1, false);
  const auto data = test::toy_data(3, 10, spec);
  const Design design(spec, data.states);
  const Index J = design.cross().size();
  CHECK_THROWS(LogDensityModel(design, Vector::Zero(J - 1), Vector::Zero(J - 1)));
  CHECK_THROWS(LogDensityModel(design, Vector::Constant(J, 2.0), Vector::Constant(J, 1.0)));
}
