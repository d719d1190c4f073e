#ifndef MRP_DESIGN_HPP
#define MRP_DESIGN_HPP

#include <string>
#include <string_view>
#include <vector>

#include "mrp/data.hpp"
#include "mrp/math.hpp"
#include "mrp/model_spec.hpp"

namespace mrp {

/// How a block is stored in the unconstrained parameter vector.
enum class Transform { identity, log, atanh };

std::string_view to_string(Transform t);

struct Block {
  std::string name;
  Index offset = 0;
  Index length = 0;
  Transform transform = Transform::identity;
  /// Per-element labels, e.g. state labels for alpha.
  std::vector<std::string> labels;
};

/// Disjoint named blocks covering the flat parameter vector.
///
/// Order: alpha, beta, gamma, sigma_alpha, then for M2/M3 slope, slope_mu
/// (when a slope predictor is set), slope_sigma, corr, then for M3 cat and
/// sigma_cat. Scales are stored as logs and the intercept/slope correlation
/// as atanh.
class ParameterLayout {
 public:
  ParameterLayout() = default;
  explicit ParameterLayout(std::vector<Block> blocks);

  Index size() const { return size_; }
  const std::vector<Block>& blocks() const { return blocks_; }
  const Block* find(std::string_view name) const;
  /// Throws std::out_of_range for an unknown block.
  const Block& block(std::string_view name) const;
  bool has(std::string_view name) const { return find(name) != nullptr; }

  std::string parameter_name(Index i) const;

  template <typename Derived>
  auto segment(Eigen::MatrixBase<Derived>& v, std::string_view name) const {
    const auto& b = block(name);
    return v.segment(b.offset, b.length);
  }
  template <typename Derived>
  auto segment(const Eigen::MatrixBase<Derived>& v, std::string_view name) const {
    const auto& b = block(name);
    return v.segment(b.offset, b.length);
  }

  friend bool operator==(const ParameterLayout& a, const ParameterLayout& b);

 private:
  std::vector<Block> blocks_;
  Index size_ = 0;
};

/// Per-cell index lists mapping parameter blocks to the linear predictor.
struct CellPlan {
  std::vector<int> state;
  std::vector<double> income_code;
  std::vector<int> ethnicity;  // 0..3, or -1 when not modeled
  std::vector<int> cat;        // index into the cat block, or -1
};

/// A ModelSpec bound to a state table: parameter layout, state-level design
/// matrix and the cell plan.
class Design {
 public:
  Design(const ModelSpec& spec, const StateTable& states);

  const ModelSpec& spec() const { return spec_; }
  const ParameterLayout& layout() const { return layout_; }
  const CellCross& cross() const { return cross_; }
  const CellPlan& plan() const { return plan_; }
  Index num_states() const { return w_.rows(); }

  /// State-level design matrix, intercept column first.
  const Matrix& state_design() const { return w_; }
  const std::vector<std::string>& state_design_names() const { return w_names_; }
  /// Standardized slope predictor per state (zeros when none).
  const Vector& slope_predictor() const { return z_; }
  Index cat_groups() const { return cat_groups_; }
  int cat_index(const CellKey& key) const;

  /// Linear predictor for a single cell (or a respondent via its cell).
  template <typename Derived>
  typename Derived::Scalar linear_predictor(const Eigen::MatrixBase<Derived>& params,
                                            const CellKey& key) const;

  /// Linear predictor of every cell in canonical order.
  template <typename Derived>
  Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> cell_linear_predictors(
      const Eigen::MatrixBase<Derived>& params) const;

 private:
  void check_length(Index n) const;

  ModelSpec spec_;
  CellCross cross_;
  ParameterLayout layout_;
  Matrix w_;
  std::vector<std::string> w_names_;
  Vector z_;
  Index cat_groups_ = 0;
  CellPlan plan_;
  Index alpha_ = 0, beta_ = 0, slope_ = -1, cat_ = -1;
};

/// Layout only; same as Design(spec, states).layout().
ParameterLayout build_layout(const ModelSpec& spec, const StateTable& states);

template <typename Derived>
typename Derived::Scalar Design::linear_predictor(const Eigen::MatrixBase<Derived>& params,
                                                  const CellKey& key) const {
  check_length(params.size());
  const int c = cross_.index(key);
  const auto s = static_cast<Index>(plan_.state[c]);
  const double x = plan_.income_code[c];
  using Scalar = typename Derived::Scalar;
  Scalar slope = params(beta_);
  if (slope_ >= 0) slope += params(slope_ + s);
  Scalar eta = params(alpha_ + s) + slope * x;
  if (plan_.ethnicity[c] > 0) eta += params(beta_ + plan_.ethnicity[c]);
  if (cat_ >= 0) eta += params(cat_ + plan_.cat[c]);
  return eta;
}

template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> Design::cell_linear_predictors(
    const Eigen::MatrixBase<Derived>& params) const {
  check_length(params.size());
  const auto n = static_cast<Index>(plan_.state.size());
  Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> eta(n);
  for (Index c = 0; c < n; ++c) {
    const Index s = plan_.state[c];
    auto slope = params(beta_);
    if (slope_ >= 0) slope += params(slope_ + s);
    auto value = params(alpha_ + s) + slope * plan_.income_code[c];
    if (plan_.ethnicity[c] > 0) value += params(beta_ + plan_.ethnicity[c]);
    if (cat_ >= 0) value += params(cat_ + plan_.cat[c]);
    eta(c) = value;
  }
  return eta;
}

}  // namespace mrp

#endif  // MRP_DESIGN_HPP
