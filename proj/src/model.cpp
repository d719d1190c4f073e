#include "mrp/model.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "mrp/error.hpp"

namespace mrp {

std::string_view to_string(PriorMode mode) {
  return mode == PriorMode::uniform ? "uniform" : "weak";
}

PriorMode parse_prior_mode(std::string_view text) {
  if (text == "uniform" || text == "flat") return PriorMode::uniform;
  if (text == "weak" || text == "weakly_informative" || text == "default") {
    return PriorMode::weakly_informative;
  }
  throw InputError("unknown prior mode '" + std::string(text) + "' (expected weak or uniform)");
}

LogDensityModel::LogDensityModel(Design design, const std::vector<SurveyResponse>& responses,
                                 PriorConfig prior)
    : design_(std::move(design)), prior_(prior) {
  const auto& cross = design_.cross();
  successes_ = Vector::Zero(cross.size());
  trials_ = Vector::Zero(cross.size());
  for (const auto& r : responses) {
    CellKey key = r.cell();
    if (!cross.use_ethnicity()) key.ethnicity = 0;
    const int c = cross.index(key);
    successes_(c) += r.vote;
    trials_(c) += 1.0;
  }
}

LogDensityModel::LogDensityModel(Design design, Vector successes, Vector trials, PriorConfig prior)
    : design_(std::move(design)),
      successes_(std::move(successes)),
      trials_(std::move(trials)),
      prior_(prior) {
  if (successes_.size() != design_.cross().size() || trials_.size() != successes_.size()) {
    throw std::invalid_argument("cell counts do not match the declared cross");
  }
  if ((successes_.array() < 0).any() || (successes_.array() > trials_.array()).any()) {
    throw std::invalid_argument("cell successes must lie in [0, trials]");
  }
}

void LogDensityModel::check(const Vector& params) const {
  if (params.size() != dim()) {
    throw std::invalid_argument("parameter vector has length " + std::to_string(params.size()) +
                                ", model expects " + std::to_string(dim()));
  }
}

double LogDensityModel::log_likelihood(const Vector& params) const {
  return evaluate(params, nullptr, true, false);
}

double LogDensityModel::log_prior(const Vector& params) const {
  return evaluate(params, nullptr, false, true);
}

double LogDensityModel::log_density(const Vector& params) const {
  return evaluate(params, nullptr, true, true);
}

double LogDensityModel::log_density_gradient(const Vector& params, Vector& grad) const {
  grad.setZero(dim());
  return evaluate(params, &grad, true, true);
}

double LogDensityModel::evaluate(const Vector& params, Vector* grad, bool likelihood,
                                 bool prior) const {
  check(params);
  const auto& layout = design_.layout();
  const auto& plan = design_.plan();
  const Index S = design_.num_states();
  const Index alpha = layout.block("alpha").offset;
  const Index beta = layout.block("beta").offset;
  const Index n_beta = layout.block("beta").length;
  const Index gamma = layout.block("gamma").offset;
  const Index n_gamma = layout.block("gamma").length;
  const Index log_sa = layout.block("sigma_alpha").offset;
  const Block* slope_b = layout.find("slope");
  const Block* slope_mu_b = layout.find("slope_mu");
  const Block* cat_b = layout.find("cat");
  const bool uniform = prior_.mode == PriorMode::uniform;

  double lp = 0.0;

  if (likelihood) {
    const Vector eta = design_.cell_linear_predictors(params);
    for (Index c = 0; c < eta.size(); ++c) {
      const double n = trials_(c);
      if (n == 0.0) continue;
      const double y = successes_(c);
      lp += y * eta(c) - n * log1p_exp(eta(c));
      if (grad) {
        const double r = y - n * inv_logit(eta(c));
        const Index s = plan.state[static_cast<std::size_t>(c)];
        const double x = plan.income_code[static_cast<std::size_t>(c)];
        (*grad)(alpha + s) += r;
        (*grad)(beta) += r * x;
        if (slope_b) (*grad)(slope_b->offset + s) += r * x;
        const int e = plan.ethnicity[static_cast<std::size_t>(c)];
        if (e > 0) (*grad)(beta + e) += r;
        if (cat_b) (*grad)(cat_b->offset + plan.cat[static_cast<std::size_t>(c)]) += r;
      }
    }
  }
  if (!prior) return lp;

  const auto& W = design_.state_design();
  const Vector mean_alpha = W * params.segment(gamma, n_gamma);
  const double la = params(log_sa);
  const double sa = std::exp(la);

  if (!slope_b) {
    const Vector z = (params.segment(alpha, S) - mean_alpha) / sa;
    lp += -0.5 * z.squaredNorm() - static_cast<double>(S) * (la + kLogSqrtTwoPi);
    if (grad) {
      const Vector d = z / sa;
      grad->segment(alpha, S) -= d;
      grad->segment(gamma, n_gamma) += W.transpose() * d;
      (*grad)(log_sa) += z.squaredNorm() - static_cast<double>(S);
    }
  } else {
    // Bivariate normal on (intercept, slope) residuals per state.
    const Index slope = slope_b->offset;
    const Index log_ss = layout.block("slope_sigma").offset;
    const Index corr = layout.block("corr").offset;
    const double ls = params(log_ss);
    const double ss = std::exp(ls);
    const double t = params(corr);
    const double rho = std::tanh(t);
    const double log1m_rho2 = log1m_tanh_sq(t);
    const double c = std::exp(-log1m_rho2);  // 1 / (1 - rho^2)
    Vector mean_slope = Vector::Zero(S);
    if (slope_mu_b) mean_slope = params(slope_mu_b->offset) * design_.slope_predictor();
    const Vector u = (params.segment(alpha, S) - mean_alpha) / sa;
    const Vector v = (params.segment(slope, S) - mean_slope) / ss;
    const double uu = u.squaredNorm();
    const double vv = v.squaredNorm();
    const double uv = u.dot(v);
    const double q = uu - 2.0 * rho * uv + vv;
    const auto Sd = static_cast<double>(S);
    lp += -Sd * (2.0 * kLogSqrtTwoPi + la + ls + 0.5 * log1m_rho2) - 0.5 * c * q;
    if (grad) {
      const Vector da = c * (u - rho * v) / sa;  // d lp / d alpha residual, negated
      const Vector ds = c * (v - rho * u) / ss;
      grad->segment(alpha, S) -= da;
      grad->segment(gamma, n_gamma) += W.transpose() * da;
      grad->segment(slope, S) -= ds;
      if (slope_mu_b) (*grad)(slope_mu_b->offset) += design_.slope_predictor().dot(ds);
      (*grad)(log_sa) += -Sd + c * (uu - rho * uv);
      (*grad)(log_ss) += -Sd + c * (vv - rho * uv);
      (*grad)(corr) += Sd * rho - rho * c * q + uv;
    }
  }

  if (cat_b) {
    const Index log_sc = layout.block("sigma_cat").offset;
    const double lc = params(log_sc);
    const double sc = std::exp(lc);
    const Vector z = params.segment(cat_b->offset, cat_b->length) / sc;
    const auto n = static_cast<double>(cat_b->length);
    lp += -0.5 * z.squaredNorm() - n * (lc + kLogSqrtTwoPi);
    if (grad) {
      grad->segment(cat_b->offset, cat_b->length) -= z / sc;
      (*grad)(log_sc) += z.squaredNorm() - n;
    }
  }

  // Hyperpriors on the otherwise unmodeled parameters.
  auto coefficient = [&](Index offset, Index length) {
    if (uniform) return;
    const double scale = prior_.coef_scale;
    const auto x = params.segment(offset, length);
    lp += -0.5 * x.squaredNorm() / (scale * scale) -
          static_cast<double>(length) * (std::log(scale) + kLogSqrtTwoPi);
    if (grad) grad->segment(offset, length) -= x / (scale * scale);
  };
  auto log_scale = [&](Index offset) {
    const double x = params(offset);
    if (uniform) {
      lp += x;  // flat on the scale itself
      if (grad) (*grad)(offset) += 1.0;
      return;
    }
    lp += normal_lpdf(x, prior_.log_sigma_mean, prior_.log_sigma_sd);
    if (grad) {
      (*grad)(offset) -= (x - prior_.log_sigma_mean) / (prior_.log_sigma_sd * prior_.log_sigma_sd);
    }
  };
  coefficient(beta, n_beta);
  coefficient(gamma, n_gamma);
  log_scale(log_sa);
  if (slope_b) {
    if (slope_mu_b) coefficient(slope_mu_b->offset, 1);
    log_scale(layout.block("slope_sigma").offset);
    const Index corr = layout.block("corr").offset;
    const double t = params(corr);
    const double shape = uniform ? 1.0 : prior_.corr_eta;
    lp += shape * log1m_tanh_sq(t);
    if (grad) (*grad)(corr) -= 2.0 * shape * std::tanh(t);
  }
  if (cat_b) log_scale(layout.block("sigma_cat").offset);
  return lp;
}

double log_posterior(const Vector& params, const LogDensityModel& model) {
  return model.log_density(params);
}

Vector grad_log_posterior(const Vector& params, const LogDensityModel& model) {
  Vector grad;
  model.log_density_gradient(params, grad);
  return grad;
}

}  // namespace mrp
