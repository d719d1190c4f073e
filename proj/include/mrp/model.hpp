#ifndef MRP_MODEL_HPP
#define MRP_MODEL_HPP

#include <string_view>
#include <vector>

#include "mrp/data.hpp"
#include "mrp/design.hpp"
#include "mrp/log_density.hpp"

namespace mrp {

enum class PriorMode {
  /// Normal(0, coef_scale) on coefficients, Normal on log scales, LKJ-type
  /// prior on the intercept/slope correlation.
  weakly_informative,
  /// Flat on coefficients, on each scale (not its log) and on the
  /// correlation.
  uniform,
};

std::string_view to_string(PriorMode mode);
PriorMode parse_prior_mode(std::string_view text);

struct PriorConfig {
  PriorMode mode = PriorMode::weakly_informative;
  double coef_scale = 5.0;
  double log_sigma_mean = 0.0;
  double log_sigma_sd = 1.0;
  /// Shape of the (1 - rho^2)^(eta - 1) correlation prior.
  double corr_eta = 2.0;
};

/// Hierarchical logistic regression posterior over the parameter layout of
/// a Design. Responses are reduced to per-cell counts, which is exact
/// because every respondent shares its cell's linear predictor.
class LogDensityModel {
 public:
  LogDensityModel(Design design, const std::vector<SurveyResponse>& responses,
                  PriorConfig prior = {});
  /// Directly from per-cell counts (canonical cell order).
  LogDensityModel(Design design, Vector successes, Vector trials, PriorConfig prior = {});

  const Design& design() const { return design_; }
  const ParameterLayout& layout() const { return design_.layout(); }
  const PriorConfig& prior() const { return prior_; }
  const Vector& successes() const { return successes_; }
  const Vector& trials() const { return trials_; }
  Index dim() const { return design_.layout().size(); }

  double log_likelihood(const Vector& params) const;
  /// Hierarchical terms, hyperpriors and log-scale Jacobians.
  double log_prior(const Vector& params) const;
  double log_density(const Vector& params) const;
  double log_density_gradient(const Vector& params, Vector& grad) const;

 private:
  double evaluate(const Vector& params, Vector* grad, bool likelihood, bool prior) const;
  void check(const Vector& params) const;

  Design design_;
  Vector successes_;
  Vector trials_;
  PriorConfig prior_;
};

double log_posterior(const Vector& params, const LogDensityModel& model);
Vector grad_log_posterior(const Vector& params, const LogDensityModel& model);

}  // namespace mrp

#endif  // MRP_MODEL_HPP
