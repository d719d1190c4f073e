#ifndef MRP_MATH_HPP
#define MRP_MATH_HPP

#include <cmath>
#include <concepts>
#include <limits>

#include <Eigen/Dense>

namespace mrp {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

template <std::floating_point Scalar>
Scalar inv_logit(Scalar x) {
  using std::exp;
  if (x >= 0) {
    return Scalar(1) / (Scalar(1) + exp(-x));
  }
  const Scalar e = exp(x);
  return e / (Scalar(1) + e);
}

template <std::floating_point Scalar>
Scalar logit(Scalar p) {
  using std::log;
  return log(p) - std::log1p(-p);
}

/// log(1 + exp(x)) without overflow for large |x|.
template <std::floating_point Scalar>
Scalar log1p_exp(Scalar x) {
  using std::exp;
  using std::log1p;
  if (x > 0) {
    return x + log1p(exp(-x));
  }
  return log1p(exp(x));
}

template <std::floating_point Scalar>
Scalar log_inv_logit(Scalar x) {
  return -log1p_exp(-x);
}

/// log(1 - tanh(t)^2), stable for large |t|.
template <std::floating_point Scalar>
Scalar log1m_tanh_sq(Scalar t) {
  using std::abs;
  using std::exp;
  using std::log1p;
  const Scalar a = abs(t);
  return Scalar(2) * (std::log(Scalar(2)) - a - log1p(exp(Scalar(-2) * a)));
}

inline constexpr double kLogSqrtTwoPi = 0.91893853320467274178;

template <std::floating_point Scalar>
Scalar normal_lpdf(Scalar x, Scalar mu, Scalar sigma) {
  const Scalar z = (x - mu) / sigma;
  return Scalar(-0.5) * z * z - std::log(sigma) - Scalar(kLogSqrtTwoPi);
}

/// Elementwise inverse logit of an Eigen expression.
template <typename Derived>
auto inv_logit(const Eigen::ArrayBase<Derived>& x) {
  return x.unaryExpr([](typename Derived::Scalar v) { return inv_logit(v); });
}

inline double quiet_nan() { return std::numeric_limits<double>::quiet_NaN(); }

}  // namespace mrp

#endif  // MRP_MATH_HPP
