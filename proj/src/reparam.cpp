#include "mrp/reparam.hpp"

#include <cmath>

namespace mrp {

namespace {

struct Offsets {
  Index S = 0;
  Index alpha = 0, gamma = 0, n_gamma = 0, log_sa = 0;
  Index slope = -1, slope_mu = -1, log_ss = -1, corr = -1;
  Index cat = -1, n_cat = 0, log_sc = -1;
};

Offsets offsets(const ParameterLayout& layout, Index S) {
  Offsets o;
  o.S = S;
  o.alpha = layout.block("alpha").offset;
  o.gamma = layout.block("gamma").offset;
  o.n_gamma = layout.block("gamma").length;
  o.log_sa = layout.block("sigma_alpha").offset;
  if (const auto* b = layout.find("slope")) {
    o.slope = b->offset;
    o.log_ss = layout.block("slope_sigma").offset;
    o.corr = layout.block("corr").offset;
    if (const auto* m = layout.find("slope_mu")) o.slope_mu = m->offset;
  }
  if (const auto* b = layout.find("cat")) {
    o.cat = b->offset;
    o.n_cat = b->length;
    o.log_sc = layout.block("sigma_cat").offset;
  }
  return o;
}

}  // namespace

Vector NonCenteredModel::to_layout(const Vector& raw) const {
  const auto& d = model_->design();
  const auto o = offsets(d.layout(), d.num_states());
  Vector p = raw;
  const Vector mean_alpha = d.state_design() * raw.segment(o.gamma, o.n_gamma);
  const double sa = std::exp(raw(o.log_sa));
  p.segment(o.alpha, o.S) = mean_alpha + sa * raw.segment(o.alpha, o.S);
  if (o.slope >= 0) {
    const double ss = std::exp(raw(o.log_ss));
    const double rho = std::tanh(raw(o.corr));
    const double root = std::exp(0.5 * log1m_tanh_sq(raw(o.corr)));
    Vector mean = Vector::Zero(o.S);
    if (o.slope_mu >= 0) mean = raw(o.slope_mu) * d.slope_predictor();
    p.segment(o.slope, o.S) =
        mean + ss * (rho * raw.segment(o.alpha, o.S) + root * raw.segment(o.slope, o.S));
  }
  if (o.cat >= 0) p.segment(o.cat, o.n_cat) = std::exp(raw(o.log_sc)) * raw.segment(o.cat, o.n_cat);
  return p;
}

Vector NonCenteredModel::from_layout(const Vector& params) const {
  const auto& d = model_->design();
  const auto o = offsets(d.layout(), d.num_states());
  Vector raw = params;
  const Vector mean_alpha = d.state_design() * params.segment(o.gamma, o.n_gamma);
  const double sa = std::exp(params(o.log_sa));
  const Vector za = (params.segment(o.alpha, o.S) - mean_alpha) / sa;
  raw.segment(o.alpha, o.S) = za;
  if (o.slope >= 0) {
    const double ss = std::exp(params(o.log_ss));
    const double rho = std::tanh(params(o.corr));
    const double root = std::exp(0.5 * log1m_tanh_sq(params(o.corr)));
    Vector mean = Vector::Zero(o.S);
    if (o.slope_mu >= 0) mean = params(o.slope_mu) * d.slope_predictor();
    raw.segment(o.slope, o.S) = ((params.segment(o.slope, o.S) - mean) / ss - rho * za) / root;
  }
  if (o.cat >= 0) {
    raw.segment(o.cat, o.n_cat) = params.segment(o.cat, o.n_cat) / std::exp(params(o.log_sc));
  }
  return raw;
}

double NonCenteredModel::log_jacobian(const Vector& raw) const {
  const auto& d = model_->design();
  const auto o = offsets(d.layout(), d.num_states());
  const auto Sd = static_cast<double>(o.S);
  double lj = Sd * raw(o.log_sa);
  if (o.slope >= 0) lj += Sd * (raw(o.log_ss) + 0.5 * log1m_tanh_sq(raw(o.corr)));
  if (o.cat >= 0) lj += static_cast<double>(o.n_cat) * raw(o.log_sc);
  return lj;
}

double NonCenteredModel::log_density(const Vector& raw) const {
  return model_->log_density(to_layout(raw)) + log_jacobian(raw);
}

double NonCenteredModel::log_density_gradient(const Vector& raw, Vector& grad) const {
  const auto& d = model_->design();
  const auto o = offsets(d.layout(), d.num_states());
  const auto Sd = static_cast<double>(o.S);
  const Vector p = to_layout(raw);
  Vector g;
  const double lp = model_->log_density_gradient(p, g) + log_jacobian(raw);

  // Chain rule through the affine map; blocks not touched pass through.
  grad = g;
  const auto ga = g.segment(o.alpha, o.S);
  const auto za = raw.segment(o.alpha, o.S);
  const double sa = std::exp(raw(o.log_sa));
  grad.segment(o.gamma, o.n_gamma) += d.state_design().transpose() * ga;
  grad.segment(o.alpha, o.S) = sa * ga;
  grad(o.log_sa) += sa * ga.dot(za) + Sd;
  if (o.slope >= 0) {
    const auto gs = g.segment(o.slope, o.S);
    const auto zs = raw.segment(o.slope, o.S);
    const double ss = std::exp(raw(o.log_ss));
    const double rho = std::tanh(raw(o.corr));
    const double root = std::exp(0.5 * log1m_tanh_sq(raw(o.corr)));
    grad.segment(o.alpha, o.S) += ss * rho * gs;
    grad.segment(o.slope, o.S) = ss * root * gs;
    if (o.slope_mu >= 0) grad(o.slope_mu) += d.slope_predictor().dot(gs);
    grad(o.log_ss) += ss * (rho * gs.dot(za) + root * gs.dot(zs)) + Sd;
    // d rho/dt = root^2, d root/dt = -rho * root, d(0.5 log(1-rho^2))/dt = -rho
    grad(o.corr) += ss * (root * root * gs.dot(za) - rho * root * gs.dot(zs)) - Sd * rho;
  }
  if (o.cat >= 0) {
    const auto gc = g.segment(o.cat, o.n_cat);
    const double sc = std::exp(raw(o.log_sc));
    grad(o.log_sc) += sc * gc.dot(raw.segment(o.cat, o.n_cat)) + static_cast<double>(o.n_cat);
    grad.segment(o.cat, o.n_cat) = sc * gc;
  }
  return lp;
}

}  // namespace mrp
