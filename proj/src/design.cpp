#include "mrp/design.hpp"

#include <stdexcept>

#include "mrp/error.hpp"

namespace mrp {

std::string_view to_string(Transform t) {
  switch (t) {
    case Transform::identity: return "identity";
    case Transform::log: return "log";
    case Transform::atanh: return "atanh";
  }
  return "?";
}

ParameterLayout::ParameterLayout(std::vector<Block> blocks) : blocks_(std::move(blocks)) {
  for (const auto& b : blocks_) {
    if (b.offset != size_) throw std::invalid_argument("layout blocks must be contiguous");
    if (!b.labels.empty() && static_cast<Index>(b.labels.size()) != b.length) {
      throw std::invalid_argument("layout block '" + b.name + "' has mismatched labels");
    }
    size_ += b.length;
  }
}

const Block* ParameterLayout::find(std::string_view name) const {
  for (const auto& b : blocks_) {
    if (b.name == name) return &b;
  }
  return nullptr;
}

const Block& ParameterLayout::block(std::string_view name) const {
  const auto* b = find(name);
  if (!b) throw std::out_of_range("no parameter block '" + std::string(name) + "'");
  return *b;
}

std::string ParameterLayout::parameter_name(Index i) const {
  for (const auto& b : blocks_) {
    if (i >= b.offset && i < b.offset + b.length) {
      if (b.length == 1 && b.labels.empty()) return b.name;
      const auto k = static_cast<std::size_t>(i - b.offset);
      return b.name + "[" + (b.labels.empty() ? std::to_string(k) : b.labels[k]) + "]";
    }
  }
  throw std::out_of_range("parameter index " + std::to_string(i) + " out of range");
}

bool operator==(const ParameterLayout& a, const ParameterLayout& b) {
  if (a.size_ != b.size_ || a.blocks_.size() != b.blocks_.size()) return false;
  for (std::size_t i = 0; i < a.blocks_.size(); ++i) {
    const auto& x = a.blocks_[i];
    const auto& y = b.blocks_[i];
    if (x.name != y.name || x.offset != y.offset || x.length != y.length ||
        x.transform != y.transform) {
      return false;
    }
  }
  return true;
}

namespace {

std::vector<std::string> income_labels() {
  std::vector<std::string> out;
  for (int k = 1; k <= kIncomeCategories; ++k) out.push_back("inc" + std::to_string(k));
  return out;
}

}  // namespace

Design::Design(const ModelSpec& spec, const StateTable& states)
    : spec_(spec), cross_(static_cast<int>(states.size()), spec.use_ethnicity) {
  const Index S = states.size();
  if (S < 2) {
    throw InputError("model needs at least 2 states for a hierarchical state level (got " +
                     std::to_string(S) + ")");
  }

  // State-level design matrix.
  std::vector<Vector> columns{Vector::Ones(S)};
  w_names_ = {"intercept"};
  for (const auto& name : spec.state_predictors) {
    if (name == "region") {
      for (int r = 2; r <= states.num_regions(); ++r) {
        Vector ind(S);
        for (Index s = 0; s < S; ++s) ind(s) = states.region()[static_cast<std::size_t>(s)] == r ? 1.0 : 0.0;
        columns.push_back(ind);
        w_names_.push_back("region" + std::to_string(r));
      }
      continue;
    }
    const auto* col = states.column(name);
    if (!col) throw InputError("unknown state predictor '" + name + "'");
    columns.push_back(col->standardized);
    w_names_.push_back(name);
  }
  w_.resize(S, static_cast<Index>(columns.size()));
  for (std::size_t k = 0; k < columns.size(); ++k) w_.col(static_cast<Index>(k)) = columns[k];

  z_ = Vector::Zero(S);
  const bool slope_reg = spec.has_slopes() && !spec.slope_predictor.empty();
  if (slope_reg) {
    const auto* col = states.column(spec.slope_predictor);
    if (!col) throw InputError("unknown slope predictor '" + spec.slope_predictor + "'");
    z_ = col->standardized;
  }

  // Parameter blocks.
  std::vector<Block> blocks;
  Index offset = 0;
  auto add = [&](std::string name, Index length, Transform t, std::vector<std::string> labels = {}) {
    blocks.push_back({std::move(name), offset, length, t, std::move(labels)});
    offset += length;
    return blocks.back().offset;
  };
  alpha_ = add("alpha", S, Transform::identity, states.labels());
  std::vector<std::string> beta_labels{"income"};
  if (spec.use_ethnicity) {
    for (int e = 2; e <= kEthnicities; ++e) beta_labels.push_back("eth" + std::to_string(e));
  }
  beta_ = add("beta", static_cast<Index>(beta_labels.size()), Transform::identity, beta_labels);
  add("gamma", w_.cols(), Transform::identity, w_names_);
  add("sigma_alpha", 1, Transform::log);
  if (spec.has_slopes()) {
    slope_ = add("slope", S, Transform::identity, states.labels());
    if (slope_reg) add("slope_mu", 1, Transform::identity);
    add("slope_sigma", 1, Transform::log);
    add("corr", 1, Transform::atanh);
  }
  if (spec.has_category_offsets()) {
    const Index by_state = spec.cat_by_state ? S : 1;
    cat_groups_ = by_state * spec.ethnicity_levels();
    std::vector<std::string> labels;
    for (Index g = 0; g < cat_groups_; ++g) {
      std::string prefix;
      if (spec.cat_by_state) prefix += states.label(g / spec.ethnicity_levels()) + ":";
      if (spec.use_ethnicity) prefix += "eth" + std::to_string(g % spec.ethnicity_levels() + 1) + ":";
      for (const auto& inc : income_labels()) labels.push_back(prefix + inc);
    }
    cat_ = add("cat", cat_groups_ * kIncomeCategories, Transform::identity, labels);
    add("sigma_cat", 1, Transform::log);
  }
  layout_ = ParameterLayout(std::move(blocks));

  // Cell plan.
  const int C = cross_.size();
  plan_.state.resize(C);
  plan_.income_code.resize(C);
  plan_.ethnicity.resize(C);
  plan_.cat.resize(C);
  for (int c = 0; c < C; ++c) {
    const auto key = cross_.key(c);
    plan_.state[c] = key.state;
    plan_.income_code[c] = income_code(key.income);
    plan_.ethnicity[c] = spec.use_ethnicity ? key.ethnicity - 1 : -1;
    plan_.cat[c] = cat_ >= 0 ? cat_index(key) : -1;
  }
}

int Design::cat_index(const CellKey& key) const {
  if (!spec_.has_category_offsets()) return -1;
  int group = 0;
  if (spec_.cat_by_state) group = key.state * spec_.ethnicity_levels();
  if (spec_.use_ethnicity) group += key.ethnicity - 1;
  return group * kIncomeCategories + (key.income - 1);
}

void Design::check_length(Index n) const {
  if (n != layout_.size()) {
    throw std::invalid_argument("parameter vector has length " + std::to_string(n) +
                                ", layout expects " + std::to_string(layout_.size()));
  }
}

ParameterLayout build_layout(const ModelSpec& spec, const StateTable& states) {
  return Design(spec, states).layout();
}

}  // namespace mrp
