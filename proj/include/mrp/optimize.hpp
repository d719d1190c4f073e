#ifndef MRP_OPTIMIZE_HPP
#define MRP_OPTIMIZE_HPP

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

#include "mrp/log_density.hpp"
#include "mrp/math.hpp"

namespace mrp {

struct MapOptions {
  int max_iter = 2000;
  /// Convergence when the gradient 2-norm falls below tol.
  double tol = 1e-6;
  int history = 10;
  int newton_steps = 50;
};

struct MapFit {
  Vector point;
  double log_density = 0.0;
  double grad_norm = 0.0;
  int iterations = 0;
  /// Negative Hessian at the optimum and its Cholesky factor.
  Matrix neg_hessian;
  Eigen::LLT<Matrix> factor;
};

/// Optimizer ran out of iterations; carries the best point it reached.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, Vector best, double best_log_density, double grad_norm)
      : std::runtime_error(what),
        best_(std::move(best)),
        best_log_density_(best_log_density),
        grad_norm_(grad_norm) {}
  const Vector& best_point() const { return best_; }
  double best_log_density() const { return best_log_density_; }
  double grad_norm() const { return grad_norm_; }

 private:
  Vector best_;
  double best_log_density_;
  double grad_norm_;
};

/// The negative Hessian at the optimum is not positive definite.
class NotPositiveDefiniteError : public std::runtime_error {
 public:
  NotPositiveDefiniteError(const std::string& what, Vector direction, double eigenvalue)
      : std::runtime_error(what), direction_(std::move(direction)), eigenvalue_(eigenvalue) {}
  const Vector& direction() const { return direction_; }
  double eigenvalue() const { return eigenvalue_; }

 private:
  Vector direction_;
  double eigenvalue_;
};

namespace detail {

struct AscentResult {
  Vector x;
  double f;
  Vector g;
  int iterations;
  bool converged;
};

/// L-BFGS ascent with a backtracking line search, then Newton polishing on
/// a finite-difference Hessian.
template <LogDensity Target>
AscentResult maximize(const Target& target, Vector x, const MapOptions& opt) {
  const Index n = x.size();
  Vector g(n);
  double f = target.log_density_gradient(x, g);
  if (!std::isfinite(f)) throw std::domain_error("log density is not finite at the initial point");

  std::vector<Vector> s_hist, y_hist;
  std::vector<double> rho_hist;
  int iter = 0;
  for (; iter < opt.max_iter && g.norm() >= opt.tol; ++iter) {
    // Two-loop recursion for the ascent direction.
    Vector q = g;
    const auto m = s_hist.size();
    std::vector<double> a(m);
    for (std::size_t k = m; k-- > 0;) {
      a[k] = rho_hist[k] * s_hist[k].dot(q);
      q -= a[k] * y_hist[k];
    }
    double gamma = 1.0;
    if (m > 0) gamma = s_hist.back().dot(y_hist.back()) / y_hist.back().squaredNorm();
    Vector dir = gamma * q;
    for (std::size_t k = 0; k < m; ++k) {
      const double b = rho_hist[k] * y_hist[k].dot(dir);
      dir += s_hist[k] * (a[k] - b);
    }
    if (m == 0) dir = g / std::max(1.0, g.norm());
    double slope = g.dot(dir);
    if (!(slope > 0)) {
      s_hist.clear();
      y_hist.clear();
      rho_hist.clear();
      dir = g / std::max(1.0, g.norm());
      slope = g.dot(dir);
    }

    double step = 1.0;
    Vector x_new(n), g_new(n);
    double f_new = -std::numeric_limits<double>::infinity();
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      x_new = x + step * dir;
      f_new = target.log_density_gradient(x_new, g_new);
      if (std::isfinite(f_new) && f_new >= f + 1e-4 * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;

    const Vector s = x_new - x;
    const Vector y = g - g_new;  // gradient change of -f
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      if (s_hist.size() == static_cast<std::size_t>(opt.history)) {
        s_hist.erase(s_hist.begin());
        y_hist.erase(y_hist.begin());
        rho_hist.erase(rho_hist.begin());
      }
      s_hist.push_back(s);
      y_hist.push_back(y);
      rho_hist.push_back(1.0 / sy);
    }
    const bool stalled = std::abs(f_new - f) <= 1e-15 * std::max(1.0, std::abs(f));
    x = x_new;
    f = f_new;
    g = g_new;
    if (stalled) break;
  }

  // Newton polishing.
  for (int k = 0; k < opt.newton_steps && g.norm() >= opt.tol; ++k) {
    const Matrix neg_h = -numeric_hessian(target, x);
    Eigen::LLT<Matrix> llt(neg_h);
    if (llt.info() != Eigen::Success) break;
    const Vector dir = llt.solve(g);
    double step = 1.0;
    bool improved = false;
    Vector x_new(n), g_new(n);
    for (int ls = 0; ls < 30; ++ls) {
      x_new = x + step * dir;
      const double f_new = target.log_density_gradient(x_new, g_new);
      if (std::isfinite(f_new) && (f_new >= f || g_new.norm() < g.norm())) {
        x = x_new;
        f = f_new;
        g = g_new;
        improved = true;
        break;
      }
      step *= 0.5;
    }
    ++iter;
    if (!improved) break;
  }
  const bool converged = g.norm() < opt.tol;
  return {std::move(x), f, std::move(g), iter, converged};
}

}  // namespace detail

/// Maximum a posteriori point of `target` with the Laplace factorization.
///
/// Throws ConvergenceError when the gradient norm stays above tol and
/// NotPositiveDefiniteError when the negative Hessian at the optimum is not
/// positive definite.
template <LogDensity Target>
MapFit fit_map(const Target& target, std::optional<Vector> init = std::nullopt,
               const MapOptions& options = {}) {
  Vector x0 = init ? *init : Vector::Zero(target.dim());
  if (x0.size() != target.dim()) throw std::invalid_argument("fit_map: init has wrong length");
  auto res = detail::maximize(target, std::move(x0), options);
  if (!res.converged) {
    throw ConvergenceError("MAP optimization did not converge (gradient norm " +
                               std::to_string(res.g.norm()) + " after " +
                               std::to_string(res.iterations) + " iterations)",
                           res.x, res.f, res.g.norm());
  }
  MapFit fit;
  fit.point = res.x;
  fit.log_density = res.f;
  fit.grad_norm = res.g.norm();
  fit.iterations = res.iterations;
  fit.neg_hessian = -numeric_hessian(target, fit.point);
  fit.factor.compute(fit.neg_hessian);
  if (fit.factor.info() != Eigen::Success) {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(fit.neg_hessian);
    Index worst = 0;
    eig.eigenvectors().col(0).cwiseAbs().maxCoeff(&worst);
    throw NotPositiveDefiniteError(
        "negative Hessian at the MAP is not positive definite (eigenvalue " +
            std::to_string(eig.eigenvalues()(0)) + ", direction dominated by coordinate " +
            std::to_string(worst) + ")",
        eig.eigenvectors().col(0), eig.eigenvalues()(0));
  }
  return fit;
}

/// Draws from N(map, (-H)^-1) given the Cholesky factor of -H.
Matrix laplace_draws(const Vector& map_point, const Eigen::LLT<Matrix>& factor, Index num_draws,
                     std::uint64_t seed);

}  // namespace mrp

#endif  // MRP_OPTIMIZE_HPP
