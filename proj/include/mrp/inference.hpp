#ifndef MRP_INFERENCE_HPP
#define MRP_INFERENCE_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mrp/design.hpp"
#include "mrp/diagnostics.hpp"
#include "mrp/hmc.hpp"
#include "mrp/model.hpp"
#include "mrp/optimize.hpp"

namespace mrp {

/// Sampled parameter vectors, one row per draw, rows in sampling order
/// within each chain.
struct PosteriorDraws {
  Matrix draws;
  std::vector<int> chain;
  ParameterLayout layout;
  std::string method;
  int divergences = 0;
  std::optional<DiagnosticsReport> diagnostics;

  Index size() const { return draws.rows(); }
  int num_chains() const;
  std::vector<std::string> parameter_names() const;
};

enum class InitMode {
  /// MAP point plus Gaussian jitter.
  map_jitter,
  /// Uniform(-2, 2) on every unconstrained coordinate.
  diffuse,
};

enum class Parameterization { centered, noncentered };

std::string_view to_string(InitMode mode);
InitMode parse_init_mode(std::string_view text);
std::string_view to_string(Parameterization p);
Parameterization parse_parameterization(std::string_view text);

struct McmcOptions {
  HmcSettings hmc;
  InitMode init = InitMode::map_jitter;
  double jitter = 0.1;
  Parameterization parameterization = Parameterization::noncentered;
  ConvergenceThresholds thresholds;
};

/// Gaussian approximation draws centered at the MAP; deterministic in seed.
PosteriorDraws sample_laplace(const Vector& map_point, const Eigen::LLT<Matrix>& factor,
                              Index num_draws, std::uint64_t seed,
                              const ParameterLayout& layout = {});

/// Nested Laplace approximation. The joint mode of a hierarchical posterior
/// collapses the group scales, so the scale parameters (log sigma, atanh rho)
/// are set to the mode of their Laplace-approximated marginal and the
/// effects, which are conditionally a penalized logistic regression, get a
/// Gaussian around their conditional mode that shifts linearly with the
/// scales.
struct NestedLaplace {
  std::vector<Index> hyper;    // layout indices of the scale parameters
  std::vector<Index> effects;  // all other indices
  Vector hyper_mode;
  Matrix hyper_cov;
  Vector effect_mode;          // conditional mode at hyper_mode
  Eigen::LLT<Matrix> effect_factor;  // conditional negative Hessian
  Matrix effect_shift;         // d effect_mode / d hyper
  double log_marginal = 0.0;
  int outer_iterations = 0;
};

NestedLaplace fit_nested_laplace(const LogDensityModel& model);

/// Draws from a nested Laplace fit in the model layout; deterministic in seed.
PosteriorDraws sample_nested_laplace(const NestedLaplace& fit, const ParameterLayout& layout,
                                     Index num_draws, std::uint64_t seed);

PosteriorDraws fit_laplace(const LogDensityModel& model, Index num_draws, std::uint64_t seed);

/// Runs HMC chains on the model and returns draws in the model layout with
/// convergence diagnostics attached.
PosteriorDraws sample_mcmc(const LogDensityModel& model, const McmcOptions& options);

/// Chains on an arbitrary target started from the given points.
template <LogDensity Target>
PosteriorDraws sample_target(const Target& target, const std::vector<Vector>& inits,
                             const HmcSettings& settings) {
  const auto chains = run_chains(target, inits, settings);
  PosteriorDraws out;
  out.method = "hmc";
  const Index per = settings.iterations;
  out.draws.resize(per * static_cast<Index>(chains.size()), target.dim());
  for (std::size_t c = 0; c < chains.size(); ++c) {
    out.draws.middleRows(static_cast<Index>(c) * per, per) = chains[c].draws;
    out.chain.insert(out.chain.end(), static_cast<std::size_t>(per), static_cast<int>(c));
    out.divergences += chains[c].divergences;
  }
  return out;
}

/// Split R-hat, ESS and summaries for every parameter.
DiagnosticsReport diagnostics(const PosteriorDraws& draws, const ConvergenceThresholds& thresholds = {});

/// Initial points for chains: MAP-based or diffuse, in the model layout.
std::vector<Vector> initial_points(const LogDensityModel& model, const McmcOptions& options);

}  // namespace mrp

#endif  // MRP_INFERENCE_HPP
