#ifndef MRP_TEST_FIXTURES_HPP
#define MRP_TEST_FIXTURES_HPP

#include <cmath>
#include <random>
#include <vector>

#include "mrp/data.hpp"
#include "mrp/design.hpp"
#include "mrp/inference.hpp"
#include "mrp/model.hpp"
#include "mrp/synthetic.hpp"

namespace mrp::test {

// Small synthetic dataset for a given spec: S states, n respondents.
inline Dataset toy_data(int S, int n, const ModelSpec& spec, std::uint64_t seed = 11) {
  Scenario sc;
  sc.num_states = S;
  sc.respondents = n;
  sc.seed = seed;
  sc.spec = spec;
  sc.num_regions = 2;
  sc.truth.slope_mu = -0.1;
  sc.truth.corr = 0.3;
  const auto truth = make_truth(sc);
  return simulate_poll(truth, sc);
}

inline ModelSpec spec_for(Rung rung, bool ethnicity = true) {
  ModelSpec spec;
  spec.rung = rung;
  spec.use_ethnicity = ethnicity;
  return spec;
}

// Likelihood oracle: loop over respondents, one Bernoulli term each.
inline double naive_log_likelihood(const Design& design, const std::vector<SurveyResponse>& rs,
                                   const Vector& params) {
  double ll = 0.0;
  for (const auto& r : rs) {
    const double eta = design.linear_predictor(params, r.cell());
    const double p = 1.0 / (1.0 + std::exp(-eta));
    ll += r.vote ? std::log(p) : std::log1p(-p);
  }
  return ll;
}

// Fourth-order central differences.
template <typename F>
Vector central_gradient(F&& f, const Vector& x, double h = 1e-4) {
  Vector g(x.size());
  for (Index i = 0; i < x.size(); ++i) {
    auto at = [&](double dx) {
      Vector y = x;
      y(i) += dx;
      return f(y);
    };
    g(i) = (-at(2 * h) + 8 * at(h) - 8 * at(-h) + at(-2 * h)) / (12 * h);
  }
  return g;
}

inline McmcOptions quick_mcmc(std::uint64_t seed, int warmup = 500, int iterations = 500, int chains = 4) {
  McmcOptions o;
  o.hmc.seed = seed;
  o.hmc.warmup = warmup;
  o.hmc.iterations = iterations;
  o.hmc.chains = chains;
  return o;
}

}  // namespace mrp::test

#endif  // MRP_TEST_FIXTURES_HPP
