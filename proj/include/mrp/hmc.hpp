#ifndef MRP_HMC_HPP
#define MRP_HMC_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <thread>
#include <vector>

#include "mrp/log_density.hpp"
#include "mrp/math.hpp"
#include "mrp/rng.hpp"

namespace mrp {

struct HmcSettings {
  int chains = 4;
  int warmup = 1000;
  int iterations = 1000;
  std::uint64_t seed = 1;
  double target_accept = 0.8;
  /// Nominal integration time; each transition draws its time uniformly
  /// from [0.5, 1.5] times this value.
  double integration_time = 3.0;
  int max_leapfrog = 1024;
  /// Energy error treated as a divergent trajectory.
  double divergence_threshold = 1000.0;
  bool adapt_metric = true;
  bool parallel = true;
};

struct ChainResult {
  Matrix draws;  // iterations x dim, sampling order
  int divergences = 0;
  double step_size = 0.0;
  Vector inv_metric;
  double mean_accept = 0.0;
  long long leapfrog_steps = 0;
};

/// Dual averaging of log step size towards a target acceptance statistic.
class DualAverage {
 public:
  DualAverage(double step_size, double target, double t0 = 10.0, double gamma = 0.05,
              double kappa = 0.75)
      : mu_(std::log(10.0 * step_size)), target_(target), t0_(t0), gamma_(gamma), kappa_(kappa) {}

  /// Returns the step size to use next.
  double update(double accept_stat) {
    ++counter_;
    accept_stat = std::isfinite(accept_stat) ? std::min(1.0, accept_stat) : 0.0;
    const double eta = 1.0 / (counter_ + t0_);
    s_bar_ = (1.0 - eta) * s_bar_ + eta * (target_ - accept_stat);
    const double x = mu_ - s_bar_ * std::sqrt(counter_) / gamma_;
    const double x_eta = std::pow(counter_, -kappa_);
    x_bar_ = (1.0 - x_eta) * x_bar_ + x_eta * x;
    return std::exp(x);
  }
  double final_step_size() const { return std::exp(x_bar_); }

 private:
  double mu_;
  double target_;
  double t0_, gamma_, kappa_;
  double counter_ = 0.0;
  double s_bar_ = 0.0;
  double x_bar_ = 0.0;
};

/// Warmup schedule: fast step-size-only buffers around slow windows whose
/// draws estimate the diagonal metric. Window ends are warmup iteration
/// indices (0-based, inclusive).
std::vector<int> metric_window_ends(int warmup);

inline std::mt19937_64 chain_rng(std::uint64_t seed, int chain_id) { return make_rng(seed, chain_id); }

namespace detail {

template <LogDensity Target>
class Hamiltonian {
 public:
  Hamiltonian(const Target& target, const Vector& inv_metric)
      : target_(target), inv_metric_(inv_metric) {}

  void set_metric(const Vector& inv_metric) { inv_metric_ = inv_metric; }
  const Vector& inv_metric() const { return inv_metric_; }

  double kinetic(const Vector& p) const { return 0.5 * p.dot(inv_metric_.cwiseProduct(p)); }

  Vector sample_momentum(std::mt19937_64& rng) const {
    std::normal_distribution<double> normal;
    Vector p(inv_metric_.size());
    for (Index i = 0; i < p.size(); ++i) p(i) = normal(rng) / std::sqrt(inv_metric_(i));
    return p;
  }

  /// L leapfrog steps from (q, p, grad); returns the final log density or
  /// NaN when the trajectory diverged.
  double leapfrog(Vector& q, Vector& p, Vector& grad, double eps, int steps, double h0,
                  double threshold) const {
    double lp = 0.0;
    p += 0.5 * eps * grad;
    for (int l = 0; l < steps; ++l) {
      q += eps * inv_metric_.cwiseProduct(p);
      lp = target_.log_density_gradient(q, grad);
      if (!std::isfinite(lp)) return quiet_nan();
      const double step = (l + 1 == steps) ? 0.5 * eps : eps;
      p += step * grad;
      if (l + 1 < steps && (-lp + kinetic(p) - h0) > threshold) return quiet_nan();
    }
    return lp;
  }

  const Target& target() const { return target_; }

 private:
  const Target& target_;
  Vector inv_metric_;
};

template <LogDensity Target>
double find_reasonable_step(const Hamiltonian<Target>& ham, const Vector& q, double lp,
                            const Vector& grad, double eps, std::mt19937_64& rng) {
  auto accept_log = [&](double e) {
    Vector qq = q, gg = grad;
    Vector p = ham.sample_momentum(rng);
    const double h0 = -lp + ham.kinetic(p);
    const double lp1 = ham.leapfrog(qq, p, gg, e, 1, h0, std::numeric_limits<double>::infinity());
    if (!std::isfinite(lp1)) return -std::numeric_limits<double>::infinity();
    return h0 - (-lp1 + ham.kinetic(p));
  };
  double a = accept_log(eps);
  const int direction = a > std::log(0.8) ? 1 : -1;
  for (int k = 0; k < 50; ++k) {
    if (direction == 1 && !(a > std::log(0.8))) break;
    if (direction == -1 && !(a < std::log(0.8))) break;
    eps *= direction == 1 ? 2.0 : 0.5;
    if (eps > 1e7 || eps < 1e-10) break;
    a = accept_log(eps);
  }
  return eps;
}

}  // namespace detail

/// One chain of jittered fixed-time HMC with dual-averaging step size and
/// windowed diagonal metric adaptation during warmup.
template <LogDensity Target>
ChainResult run_chain(const Target& target, Vector q, const HmcSettings& settings, int chain_id) {
  const Index dim = target.dim();
  auto rng = chain_rng(settings.seed, chain_id);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  detail::Hamiltonian<Target> ham(target, Vector::Ones(dim));
  Vector grad(dim);
  double lp = target.log_density_gradient(q, grad);
  if (!std::isfinite(lp)) throw std::domain_error("initial point has non-finite log density");

  double eps = detail::find_reasonable_step(ham, q, lp, grad, 1.0, rng);
  DualAverage adapt(eps, settings.target_accept);
  const auto window_ends = settings.adapt_metric ? metric_window_ends(settings.warmup)
                                                 : std::vector<int>{};
  std::size_t next_window = 0;
  int window_start = settings.warmup >= 150 ? 75 : static_cast<int>(0.15 * settings.warmup);
  Vector w_mean = Vector::Zero(dim), w_m2 = Vector::Zero(dim);
  int w_count = 0;

  ChainResult result;
  result.draws.resize(settings.iterations, dim);
  double accept_sum = 0.0;
  const int total = settings.warmup + settings.iterations;
  for (int it = 0; it < total; ++it) {
    const bool warming = it < settings.warmup;
    const double time = settings.integration_time * (0.5 + unif(rng));
    const int steps = std::clamp(static_cast<int>(std::ceil(time / eps)), 1, settings.max_leapfrog);

    Vector p = ham.sample_momentum(rng);
    const double h0 = -lp + ham.kinetic(p);
    Vector q1 = q, g1 = grad;
    const double lp1 = ham.leapfrog(q1, p, g1, eps, steps, h0, settings.divergence_threshold);
    double accept = 0.0;
    bool divergent = !std::isfinite(lp1);
    if (!divergent) {
      const double h1 = -lp1 + ham.kinetic(p);
      if (h1 - h0 > settings.divergence_threshold) divergent = true;
      accept = std::isfinite(h1) ? std::min(1.0, std::exp(h0 - h1)) : 0.0;
    }
    if (!divergent && unif(rng) < accept) {
      q = std::move(q1);
      grad = std::move(g1);
      lp = lp1;
    }
    result.leapfrog_steps += steps;

    if (warming) {
      eps = adapt.update(accept);
      if (next_window < window_ends.size() && it >= window_start) {
        ++w_count;
        const Vector delta = q - w_mean;
        w_mean += delta / w_count;
        w_m2 += delta.cwiseProduct(q - w_mean);
        if (it == window_ends[next_window]) {
          const double n = w_count;
          Vector var = w_m2 / std::max(1.0, n - 1.0);
          var = (n / (n + 5.0)) * var.array() + 1e-3 * (5.0 / (n + 5.0));
          ham.set_metric(var);
          eps = detail::find_reasonable_step(ham, q, lp, grad, eps, rng);
          adapt = DualAverage(eps, settings.target_accept);
          w_mean.setZero();
          w_m2.setZero();
          w_count = 0;
          window_start = it + 1;
          ++next_window;
        }
      }
      if (it + 1 == settings.warmup) eps = adapt.final_step_size();
    } else {
      const int row = it - settings.warmup;
      result.draws.row(row) = q.transpose();
      accept_sum += accept;
      if (divergent) ++result.divergences;
    }
  }
  result.step_size = eps;
  result.inv_metric = ham.inv_metric();
  result.mean_accept = settings.iterations > 0 ? accept_sum / settings.iterations : 0.0;
  return result;
}

/// Independent chains, one per initial point, on separate threads when
/// `settings.parallel` is set. Results are in chain order.
template <LogDensity Target>
std::vector<ChainResult> run_chains(const Target& target, const std::vector<Vector>& inits,
                                    const HmcSettings& settings) {
  std::vector<ChainResult> results(inits.size());
  std::vector<std::exception_ptr> errors(inits.size());
  auto work = [&](std::size_t c) {
    try {
      results[c] = run_chain(target, inits[c], settings, static_cast<int>(c));
    } catch (...) {
      errors[c] = std::current_exception();
    }
  };
  if (settings.parallel && inits.size() > 1 && std::thread::hardware_concurrency() > 1) {
    std::vector<std::jthread> threads;
    for (std::size_t c = 0; c < inits.size(); ++c) threads.emplace_back(work, c);
  } else {
    for (std::size_t c = 0; c < inits.size(); ++c) work(c);
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return results;
}

}  // namespace mrp

#endif  // MRP_HMC_HPP
