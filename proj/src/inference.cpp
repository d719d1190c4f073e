#include "mrp/inference.hpp"

#include <random>
#include <set>

#include "mrp/error.hpp"
#include "mrp/reparam.hpp"

namespace mrp {

int PosteriorDraws::num_chains() const {
  return static_cast<int>(std::set<int>(chain.begin(), chain.end()).size());
}

std::vector<std::string> PosteriorDraws::parameter_names() const {
  std::vector<std::string> names;
  for (Index i = 0; i < draws.cols(); ++i) {
    names.push_back(i < layout.size() ? layout.parameter_name(i) : "p" + std::to_string(i));
  }
  return names;
}

std::string_view to_string(InitMode mode) {
  return mode == InitMode::diffuse ? "diffuse" : "map";
}

InitMode parse_init_mode(std::string_view text) {
  if (text == "map" || text == "map_jitter") return InitMode::map_jitter;
  if (text == "diffuse") return InitMode::diffuse;
  throw InputError("unknown init mode '" + std::string(text) + "' (expected map or diffuse)");
}

std::string_view to_string(Parameterization p) {
  return p == Parameterization::centered ? "centered" : "noncentered";
}

Parameterization parse_parameterization(std::string_view text) {
  if (text == "centered") return Parameterization::centered;
  if (text == "noncentered" || text == "non-centered") return Parameterization::noncentered;
  throw InputError("unknown parameterization '" + std::string(text) + "'");
}

PosteriorDraws sample_laplace(const Vector& map_point, const Eigen::LLT<Matrix>& factor,
                              Index num_draws, std::uint64_t seed, const ParameterLayout& layout) {
  if (factor.info() != Eigen::Success) {
    throw std::invalid_argument("sample_laplace: factor is not positive definite");
  }
  PosteriorDraws out;
  out.method = "laplace";
  out.layout = layout;
  out.draws = laplace_draws(map_point, factor, num_draws, seed);
  out.chain.assign(static_cast<std::size_t>(num_draws), 0);
  return out;
}

Matrix laplace_draws(const Vector& map_point, const Eigen::LLT<Matrix>& factor, Index num_draws,
                     std::uint64_t seed) {
  const Index n = map_point.size();
  auto rng = chain_rng(seed, 0);
  std::normal_distribution<double> normal;
  Matrix z(n, num_draws);
  for (Index d = 0; d < num_draws; ++d) {
    for (Index i = 0; i < n; ++i) z(i, d) = normal(rng);
  }
  // -H = L L^T, so x = map + L^-T z has covariance (-H)^-1.
  const Matrix x = factor.matrixU().solve(z);
  return (x.colwise() + map_point).transpose();
}

namespace {

void clamp_scales(Vector& params, const ParameterLayout& layout) {
  for (const auto& b : layout.blocks()) {
    if (b.transform == Transform::log) {
      for (Index i = 0; i < b.length; ++i) {
        params(b.offset + i) = std::clamp(params(b.offset + i), -2.5, 2.5);
      }
    }
    if (b.transform == Transform::atanh) {
      for (Index i = 0; i < b.length; ++i) {
        params(b.offset + i) = std::clamp(params(b.offset + i), -1.5, 1.5);
      }
    }
  }
}

}  // namespace

std::vector<Vector> initial_points(const LogDensityModel& model, const McmcOptions& options) {
  const auto chains = static_cast<std::size_t>(options.hmc.chains);
  std::vector<Vector> inits;
  auto rng = chain_rng(options.hmc.seed, -1);
  const NonCenteredModel nc(model);
  const bool noncentered = options.parameterization == Parameterization::noncentered;

  if (options.init == InitMode::diffuse) {
    std::uniform_real_distribution<double> unif(-2.0, 2.0);
    for (std::size_t c = 0; c < chains; ++c) {
      Vector raw(model.dim());
      for (Index i = 0; i < raw.size(); ++i) raw(i) = unif(rng);
      inits.push_back(noncentered ? nc.to_layout(raw) : raw);
    }
    return inits;
  }

  MapOptions map_opt;
  map_opt.max_iter = 500;
  map_opt.tol = 1e-6;
  map_opt.newton_steps = 0;
  Vector mode = detail::maximize(nc, Vector::Zero(model.dim()), map_opt).x;
  clamp_scales(mode, model.layout());
  const Vector raw_center = noncentered ? mode : nc.to_layout(mode);
  std::normal_distribution<double> normal;
  for (std::size_t c = 0; c < chains; ++c) {
    Vector raw = raw_center;
    for (Index i = 0; i < raw.size(); ++i) raw(i) += options.jitter * normal(rng);
    inits.push_back(noncentered ? nc.to_layout(raw) : raw);
  }
  return inits;
}

PosteriorDraws sample_mcmc(const LogDensityModel& model, const McmcOptions& options) {
  if (options.hmc.chains < 1 || options.hmc.iterations < 1) {
    throw std::invalid_argument("sample_mcmc: need at least one chain and one iteration");
  }
  const auto inits = initial_points(model, options);
  PosteriorDraws out;
  if (options.parameterization == Parameterization::noncentered) {
    const NonCenteredModel nc(model);
    std::vector<Vector> raw_inits;
    for (const auto& p : inits) raw_inits.push_back(nc.from_layout(p));
    out = sample_target(nc, raw_inits, options.hmc);
    for (Index d = 0; d < out.draws.rows(); ++d) {
      out.draws.row(d) = nc.to_layout(out.draws.row(d).transpose()).transpose();
    }
  } else {
    out = sample_target(model, inits, options.hmc);
  }
  out.layout = model.layout();
  out.diagnostics = diagnostics(out, options.thresholds);
  return out;
}

DiagnosticsReport diagnostics(const PosteriorDraws& draws, const ConvergenceThresholds& thresholds) {
  return diagnose(draws.draws, draws.chain, draws.parameter_names(), draws.divergences, thresholds);
}

}  // namespace mrp
