#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace soscert {

/// Variable groups of the coupled constraint space: the current step
/// (state x, control u, lifting variables l), the successor step
/// (xp, up, lp), and disturbances (w, wp).
enum class VarGroup : std::uint8_t {
  kState = 0,
  kControl,
  kLift,
  kStateNext,
  kControlNext,
  kLiftNext,
  kDisturbance,
  kDisturbanceNext,
};

inline constexpr int kNumVarGroups = 8;

inline const char* group_prefix(VarGroup g) {
  switch (g) {
    case VarGroup::kState: return "x";
    case VarGroup::kControl: return "u";
    case VarGroup::kLift: return "l";
    case VarGroup::kStateNext: return "xp";
    case VarGroup::kControlNext: return "up";
    case VarGroup::kLiftNext: return "lp";
    case VarGroup::kDisturbance: return "w";
    case VarGroup::kDisturbanceNext: return "wp";
  }
  return "?";
}

/// Successor-step counterpart of a current-step group.
inline VarGroup successor_of(VarGroup g) {
  switch (g) {
    case VarGroup::kState: return VarGroup::kStateNext;
    case VarGroup::kControl: return VarGroup::kControlNext;
    case VarGroup::kLift: return VarGroup::kLiftNext;
    case VarGroup::kDisturbance: return VarGroup::kDisturbanceNext;
    default:
      throw std::invalid_argument("successor_of: group has no successor");
  }
}

/// An ordered, immutable list of named variables. Monomial exponent vectors
/// index into this order, so it is fixed at construction.
class VariableSpace {
 public:
  struct Variable {
    std::string name;
    VarGroup group;
  };

  explicit VariableSpace(std::vector<Variable> vars) : vars_(std::move(vars)) {
    for (int i = 0; i < static_cast<int>(vars_.size()); ++i) {
      auto [it, inserted] = by_name_.emplace(vars_[i].name, i);
      if (!inserted) {
        throw std::invalid_argument("VariableSpace: duplicate variable name '" +
                                    vars_[i].name + "'");
      }
      group_members_[static_cast<int>(vars_[i].group)].push_back(i);
    }
  }

  int size() const { return static_cast<int>(vars_.size()); }

  const Variable& var(int index) const { return vars_.at(index); }

  const std::string& name(int index) const { return vars_.at(index).name; }

  /// Index of a named variable, or -1 when absent.
  int index_of(const std::string& name) const {
    auto it = by_name_.find(name);
    return it == by_name_.end() ? -1 : it->second;
  }

  const std::vector<int>& group_indices(VarGroup g) const {
    return group_members_[static_cast<int>(g)];
  }

  int group_size(VarGroup g) const {
    return static_cast<int>(group_indices(g).size());
  }

  /// Index of the k-th variable of a group.
  int group_var(VarGroup g, int k) const { return group_indices(g).at(k); }

  /// Structural equality: same names and groups in the same order.
  bool same_as(const VariableSpace& other) const {
    if (this == &other) return true;
    if (vars_.size() != other.vars_.size()) return false;
    for (std::size_t i = 0; i < vars_.size(); ++i) {
      if (vars_[i].name != other.vars_[i].name ||
          vars_[i].group != other.vars_[i].group) {
        return false;
      }
    }
    return true;
  }

 private:
  std::vector<Variable> vars_;
  std::map<std::string, int> by_name_;
  std::array<std::vector<int>, kNumVarGroups> group_members_;
};

using SpacePtr = std::shared_ptr<const VariableSpace>;

inline bool same_space(const SpacePtr& a, const SpacePtr& b) {
  return a == b || (a && b && a->same_as(*b));
}

/// Canonical space with the given group sizes, groups laid out in enum order,
/// variables named "<prefix><1-based index>" (x1, x2, ..., u1, ...).
inline SpacePtr make_space(const std::array<int, kNumVarGroups>& sizes) {
  std::vector<VariableSpace::Variable> vars;
  for (int g = 0; g < kNumVarGroups; ++g) {
    VarGroup group = static_cast<VarGroup>(g);
    for (int k = 0; k < sizes[g]; ++k) {
      vars.push_back({group_prefix(group) + std::to_string(k + 1), group});
    }
  }
  return std::make_shared<VariableSpace>(std::move(vars));
}

/// Space holding only state and control variables, the home of plant
/// dynamics polynomials f(x, u).
inline SpacePtr make_plant_space(int n, int m, int n_w = 0) {
  return make_space({n, m, 0, 0, 0, 0, n_w, 0});
}

}  // namespace soscert
