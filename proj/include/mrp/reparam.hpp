#ifndef MRP_REPARAM_HPP
#define MRP_REPARAM_HPP

#include "mrp/model.hpp"

namespace mrp {

/// Non-centered view of a LogDensityModel: the alpha, slope and cat blocks
/// hold standardized state/category errors instead of the effects
/// themselves. Every other block is shared with the model layout.
///
///   alpha = W gamma + sigma_alpha * za
///   slope = slope_mu * z + sigma_slope * (rho * za + sqrt(1 - rho^2) * zs)
///   cat   = sigma_cat * zc
class NonCenteredModel {
 public:
  explicit NonCenteredModel(const LogDensityModel& model) : model_(&model) {}

  Index dim() const { return model_->dim(); }
  const LogDensityModel& model() const { return *model_; }

  Vector to_layout(const Vector& raw) const;
  Vector from_layout(const Vector& params) const;

  double log_density(const Vector& raw) const;
  double log_density_gradient(const Vector& raw, Vector& grad) const;

 private:
  double log_jacobian(const Vector& raw) const;

  const LogDensityModel* model_;
};

}  // namespace mrp

#endif  // MRP_REPARAM_HPP
