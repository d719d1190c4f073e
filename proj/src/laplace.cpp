#include <cmath>
#include <limits>

#include "mrp/error.hpp"
#include "mrp/inference.hpp"
#include "mrp/rng.hpp"

namespace mrp {

namespace {

// The model with the scale parameters held fixed; a function of the effects.
class Conditional {
 public:
  Conditional(const LogDensityModel& model, const std::vector<Index>& hyper, const std::vector<Index>& effects,
              const Vector& phi)
      : model_(model), hyper_(hyper), effects_(effects), full_(model.dim()) {
    for (std::size_t k = 0; k < hyper_.size(); ++k) full_(hyper_[k]) = phi(static_cast<Index>(k));
  }

  Index dim() const { return static_cast<Index>(effects_.size()); }

  double log_density(const Vector& x) const { return model_.log_density(assemble(x)); }

  double log_density_gradient(const Vector& x, Vector& grad) const {
    Vector g;
    const double f = model_.log_density_gradient(assemble(x), g);
    grad.resize(dim());
    for (std::size_t i = 0; i < effects_.size(); ++i) grad(static_cast<Index>(i)) = g(effects_[i]);
    return f;
  }

  Vector assemble(const Vector& x) const {
    Vector p = full_;
    for (std::size_t i = 0; i < effects_.size(); ++i) p(effects_[i]) = x(static_cast<Index>(i));
    return p;
  }

 private:
  const LogDensityModel& model_;
  const std::vector<Index>& hyper_;
  const std::vector<Index>& effects_;
  Vector full_;
};

struct Inner {
  Vector x;
  double log_density;
  double log_marginal;
  Eigen::LLT<Matrix> factor;
};

class Marginal {
 public:
  Marginal(const LogDensityModel& model, std::vector<Index> hyper, std::vector<Index> effects)
      : model_(model), hyper_(std::move(hyper)), effects_(std::move(effects)),
        warm_(Vector::Zero(static_cast<Index>(effects_.size()))) {}

  // log p(x*, phi | y) - 1/2 log det(-H_xx) at the conditional mode x*.
  Inner evaluate(const Vector& phi) {
    const Conditional cond(model_, hyper_, effects_, phi);
    MapOptions opt;
    opt.max_iter = 5000;
    const auto fit = fit_map(cond, warm_, opt);
    warm_ = fit.point;
    double log_det = 0.0;
    const Matrix& L = fit.factor.matrixLLT();
    for (Index i = 0; i < L.rows(); ++i) log_det += 2.0 * std::log(L(i, i));
    return {fit.point, fit.log_density, fit.log_density - 0.5 * log_det, fit.factor};
  }

  double value(const Vector& phi) {
    try {
      return evaluate(phi).log_marginal;
    } catch (const NotPositiveDefiniteError&) {
      return -std::numeric_limits<double>::infinity();
    }
  }

  const std::vector<Index>& hyper() const { return hyper_; }
  const std::vector<Index>& effects() const { return effects_; }

 private:
  const LogDensityModel& model_;
  std::vector<Index> hyper_;
  std::vector<Index> effects_;
  Vector warm_;
};

// Gradient and Hessian of f by central differences of values.
void stencil(Marginal& m, const Vector& x, double f0, double h, Vector& grad, Matrix& hess) {
  const Index k = x.size();
  grad.resize(k);
  hess.resize(k, k);
  Vector fp(k), fm(k);
  for (Index i = 0; i < k; ++i) {
    Vector y = x;
    y(i) += h;
    fp(i) = m.value(y);
    y(i) = x(i) - h;
    fm(i) = m.value(y);
    grad(i) = (fp(i) - fm(i)) / (2.0 * h);
    hess(i, i) = (fp(i) - 2.0 * f0 + fm(i)) / (h * h);
  }
  for (Index i = 0; i < k; ++i) {
    for (Index j = i + 1; j < k; ++j) {
      double acc = 0.0;
      for (int si : {1, -1}) {
        for (int sj : {1, -1}) {
          Vector y = x;
          y(i) += si * h;
          y(j) += sj * h;
          acc += si * sj * m.value(y);
        }
      }
      hess(i, j) = hess(j, i) = acc / (4.0 * h * h);
    }
  }
}

}  // namespace

NestedLaplace fit_nested_laplace(const LogDensityModel& model) {
  const auto& layout = model.layout();
  std::vector<Index> hyper, effects;
  for (const auto& b : layout.blocks()) {
    for (Index i = 0; i < b.length; ++i) {
      (b.transform == Transform::identity ? effects : hyper).push_back(b.offset + i);
    }
  }
  Marginal marginal(model, hyper, effects);
  const auto k = static_cast<Index>(hyper.size());

  Vector phi = Vector::Constant(k, -1.0);
  for (Index i = 0; i < k; ++i) {
    for (const auto& b : layout.blocks()) {
      if (b.offset == hyper[static_cast<std::size_t>(i)] && b.transform == Transform::atanh) phi(i) = 0.0;
    }
  }

  constexpr double kStep = 1e-3;
  double f = marginal.value(phi);
  if (!std::isfinite(f)) throw ConvergenceError("nested Laplace: conditional mode failed at the start", phi, f, 0.0);
  Vector grad;
  Matrix hess;
  int iter = 0;
  bool done = false;
  for (; iter < 100 && !done; ++iter) {
    stencil(marginal, phi, f, kStep, grad, hess);
    Vector dir;
    Eigen::LLT<Matrix> llt(-hess);
    if (llt.info() == Eigen::Success) {
      dir = llt.solve(grad);
    } else {
      dir = grad / std::max(1.0, grad.norm());
    }
    // Keep the scale steps moderate; log scales move by at most 1 per step.
    const double longest = dir.cwiseAbs().maxCoeff();
    if (longest > 1.0) dir /= longest;
    double step = 1.0;
    bool moved = false;
    for (int ls = 0; ls < 30; ++ls) {
      const Vector trial = phi + step * dir;
      const double ft = marginal.value(trial);
      if (std::isfinite(ft) && ft >= f - 1e-10) {
        phi = trial;
        done = (step * dir).cwiseAbs().maxCoeff() < 1e-6 || ft - f < 1e-10;
        f = ft;
        moved = true;
        break;
      }
      step *= 0.5;
    }
    if (!moved) done = true;
  }
  stencil(marginal, phi, f, 1e-2, grad, hess);
  Eigen::LLT<Matrix> hyper_llt(-hess);
  if (hyper_llt.info() != Eigen::Success) {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(-hess);
    throw NotPositiveDefiniteError("nested Laplace: marginal of the scale parameters is not concave at its mode",
                                   eig.eigenvectors().col(0), eig.eigenvalues()(0));
  }
  if (grad.norm() > 1e-2 * std::max(1.0, -hess.diagonal().maxCoeff())) {
    throw ConvergenceError("nested Laplace: scale parameters did not converge (gradient norm " +
                               std::to_string(grad.norm()) + ")",
                           phi, f, grad.norm());
  }

  NestedLaplace out;
  out.hyper = hyper;
  out.effects = effects;
  out.hyper_mode = phi;
  out.hyper_cov = hyper_llt.solve(Matrix::Identity(k, k));
  out.outer_iterations = iter;
  auto inner = marginal.evaluate(phi);
  out.log_marginal = inner.log_marginal;
  out.effect_mode = inner.x;
  out.effect_factor = inner.factor;

  // x*(phi) solves g_x(x, phi) = 0, so dx*/dphi = (-H_xx)^-1 dg_x/dphi.
  const Conditional cond(model, hyper, effects, phi);
  const Vector full = cond.assemble(inner.x);
  Matrix cross(static_cast<Index>(effects.size()), k);
  for (Index j = 0; j < k; ++j) {
    const double h = 1e-5;
    Vector p = full, gp, gm;
    p(hyper[static_cast<std::size_t>(j)]) += h;
    model.log_density_gradient(p, gp);
    p(hyper[static_cast<std::size_t>(j)]) -= 2.0 * h;
    model.log_density_gradient(p, gm);
    for (std::size_t i = 0; i < effects.size(); ++i) {
      cross(static_cast<Index>(i), j) = (gp(effects[i]) - gm(effects[i])) / (2.0 * h);
    }
  }
  out.effect_shift = inner.factor.solve(cross);
  return out;
}

PosteriorDraws sample_nested_laplace(const NestedLaplace& fit, const ParameterLayout& layout, Index num_draws,
                                     std::uint64_t seed) {
  const auto k = static_cast<Index>(fit.hyper.size());
  const auto n = static_cast<Index>(fit.effects.size());
  auto rng = make_rng(seed, 0);
  std::normal_distribution<double> normal;
  const Matrix hyper_chol = fit.hyper_cov.llt().matrixL();
  const auto upper = fit.effect_factor.matrixU();

  PosteriorDraws out;
  out.method = "laplace";
  out.layout = layout;
  out.draws.resize(num_draws, layout.size());
  out.chain.assign(static_cast<std::size_t>(num_draws), 0);
  Vector zh(k), ze(n);
  for (Index d = 0; d < num_draws; ++d) {
    for (Index i = 0; i < k; ++i) zh(i) = normal(rng);
    for (Index i = 0; i < n; ++i) ze(i) = normal(rng);
    const Vector dphi = hyper_chol * zh;
    const Vector x = fit.effect_mode + fit.effect_shift * dphi + upper.solve(ze);
    for (Index i = 0; i < k; ++i) out.draws(d, fit.hyper[static_cast<std::size_t>(i)]) = fit.hyper_mode(i) + dphi(i);
    for (Index i = 0; i < n; ++i) out.draws(d, fit.effects[static_cast<std::size_t>(i)]) = x(i);
  }
  return out;
}

PosteriorDraws fit_laplace(const LogDensityModel& model, Index num_draws, std::uint64_t seed) {
  return sample_nested_laplace(fit_nested_laplace(model), model.layout(), num_draws, seed);
}

}  // namespace mrp
