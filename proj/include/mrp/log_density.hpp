#ifndef MRP_LOG_DENSITY_HPP
#define MRP_LOG_DENSITY_HPP

#include <concepts>

#include "mrp/math.hpp"

namespace mrp {

/// A differentiable log density over an unconstrained vector.
template <typename T>
concept LogDensity = requires(const T& t, const Vector& x, Vector& g) {
  { t.dim() } -> std::convertible_to<Index>;
  { t.log_density(x) } -> std::convertible_to<double>;
  { t.log_density_gradient(x, g) } -> std::convertible_to<double>;
};

/// Hessian of the log density by central differences of its gradient,
/// symmetrized.
template <LogDensity Target>
Matrix numeric_hessian(const Target& target, const Vector& x, double rel_step = 1e-5) {
  const Index n = x.size();
  Matrix h(n, n);
  Vector xp = x;
  Vector gp(n), gm(n);
  for (Index i = 0; i < n; ++i) {
    const double step = rel_step * std::max(1.0, std::abs(x(i)));
    xp(i) = x(i) + step;
    target.log_density_gradient(xp, gp);
    xp(i) = x(i) - step;
    target.log_density_gradient(xp, gm);
    xp(i) = x(i);
    h.col(i) = (gp - gm) / (2.0 * step);
  }
  return 0.5 * (h + h.transpose());
}

/// Gradient by central differences of the log density.
template <LogDensity Target>
Vector finite_difference_gradient(const Target& target, const Vector& x, double step = 1e-5) {
  Vector g(x.size());
  Vector xp = x;
  for (Index i = 0; i < x.size(); ++i) {
    xp(i) = x(i) + step;
    const double up = target.log_density(xp);
    xp(i) = x(i) - step;
    const double down = target.log_density(xp);
    xp(i) = x(i);
    g(i) = (up - down) / (2.0 * step);
  }
  return g;
}

}  // namespace mrp

#endif  // MRP_LOG_DENSITY_HPP
