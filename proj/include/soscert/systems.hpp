#pragma once

#include <Eigen/Dense>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "soscert/graph_encoding.hpp"
#include "soscert/neural_network.hpp"
#include "soscert/polynomial.hpp"
#include "soscert/variables.hpp"

namespace soscert {

/// x+ = f(x, u) in feedback with u = psi(x). Dynamics polynomials live in a
/// plant space holding only the x and u groups.
struct ClosedLoopSystem {
  int n = 0;
  int m = 0;
  std::vector<Polynomial> f;
  NeuralNetwork net;
  /// |f(0, psi(0))| in the sup norm; anything above ~1e-9 means the origin is
  /// not an equilibrium and attractivity statements are vacuous. Surfaced as
  /// a warning by the verification pipeline, not rejected here.
  double equilibrium_residual = 0.0;

  ClosedLoopSystem(std::vector<Polynomial> f_in, NeuralNetwork net_in)
      : f(std::move(f_in)), net(std::move(net_in)) {
    if (f.empty()) throw std::invalid_argument("ClosedLoopSystem: empty dynamics");
    const SpacePtr& sp = f.front().space();
    n = sp->group_size(VarGroup::kState);
    m = sp->group_size(VarGroup::kControl);
    if (static_cast<int>(f.size()) != n) {
      throw std::invalid_argument(
          "ClosedLoopSystem: need one dynamics polynomial per state");
    }
    for (const Polynomial& p : f) {
      if (!same_space(p.space(), sp)) {
        throw std::invalid_argument("ClosedLoopSystem: mixed dynamics spaces");
      }
    }
    if (net.input_width() != n || net.output_width() != m) {
      throw std::invalid_argument(
          "ClosedLoopSystem: network does not match plant dimensions");
    }
    equilibrium_residual = origin_residual();
  }

  Eigen::VectorXd f_eval(const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                         const Eigen::VectorXd& w = Eigen::VectorXd()) const {
    const SpacePtr& sp = f.front().space();
    std::vector<double> point(sp->size(), 0.0);
    for (int k = 0; k < x.size(); ++k) point[sp->group_var(VarGroup::kState, k)] = x[k];
    for (int k = 0; k < u.size(); ++k) point[sp->group_var(VarGroup::kControl, k)] = u[k];
    for (int k = 0; k < w.size(); ++k) point[sp->group_var(VarGroup::kDisturbance, k)] = w[k];
    Eigen::VectorXd out(n);
    for (int j = 0; j < n; ++j) out[j] = f[j].eval(point);
    return out;
  }

 private:
  double origin_residual() const {
    Eigen::VectorXd x0 = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd u0 = net.forward(x0);
    Eigen::VectorXd w0;
    if (f.front().space()->group_size(VarGroup::kDisturbance) > 0) {
      w0 = Eigen::VectorXd::Zero(f.front().space()->group_size(VarGroup::kDisturbance));
    }
    return f_eval(x0, u0, w0).lpNorm<Eigen::Infinity>();
  }
};

/// Disturbed plant x+ = f(x, u, w) with performance output y = f_y(x) and a
/// disturbance set {w : q(x, u, w) >= 0}.
struct DisturbedSystem {
  ClosedLoopSystem loop;
  int n_w = 0;
  std::vector<Polynomial> f_y;
  std::vector<Polynomial> q;

  DisturbedSystem(std::vector<Polynomial> f_in, NeuralNetwork net_in,
                  std::vector<Polynomial> f_y_in, std::vector<Polynomial> q_in)
      : loop(std::move(f_in), std::move(net_in)),
        f_y(std::move(f_y_in)),
        q(std::move(q_in)) {
    const SpacePtr& sp = loop.f.front().space();
    n_w = sp->group_size(VarGroup::kDisturbance);
    if (n_w < 1) {
      throw std::invalid_argument("DisturbedSystem: no disturbance variables");
    }
    if (q.empty()) {
      throw std::invalid_argument(
          "DisturbedSystem: disturbance set description q must be nonempty "
          "(use the constant 1 for unconstrained disturbances)");
    }
    for (const Polynomial& p : f_y) {
      if (!same_space(p.space(), sp)) {
        throw std::invalid_argument("DisturbedSystem: f_y space mismatch");
      }
      for (auto& [mono, c] : p.terms()) {
        for (auto& [idx, e] : mono.exponents()) {
          if (sp->var(idx).group != VarGroup::kState) {
            throw std::invalid_argument(
                "DisturbedSystem: performance output must depend on x only");
          }
        }
      }
    }
    for (const Polynomial& p : q) {
      if (!same_space(p.space(), sp)) {
        throw std::invalid_argument("DisturbedSystem: q space mismatch");
      }
    }
  }

  Eigen::VectorXd output(const Eigen::VectorXd& x) const {
    const SpacePtr& sp = loop.f.front().space();
    std::vector<double> point(sp->size(), 0.0);
    for (int k = 0; k < x.size(); ++k) point[sp->group_var(VarGroup::kState, k)] = x[k];
    Eigen::VectorXd y(f_y.size());
    for (std::size_t j = 0; j < f_y.size(); ++j) y[j] = f_y[j].eval(point);
    return y;
  }
};

/// Where a constraint row of a coupled set comes from; multiplier naming and
/// the nonnegativity identity both key off this.
enum class RowOrigin {
  kGraphCurrent,
  kGraphSuccessor,
  kDynamics,
  kDisturbanceSet,
};

struct TaggedPoly {
  Polynomial poly;
  RowOrigin origin;
};

/// Basic semialgebraic set coupling the current step to the successor step
/// through the dynamics equalities and two copies of the network graph.
struct ConstraintSet {
  enum class Kind { kK, kKw };
  SpacePtr space;
  Kind kind = Kind::kK;
  std::vector<TaggedPoly> g;  // inequalities >= 0
  std::vector<TaggedPoly> h;  // equalities  == 0
  int n = 0, m = 0, n_lambda = 0, n_w = 0;

  std::vector<int> rows_with_origin_g(RowOrigin o) const {
    std::vector<int> idx;
    for (int i = 0; i < static_cast<int>(g.size()); ++i) {
      if (g[i].origin == o) idx.push_back(i);
    }
    return idx;
  }
  std::vector<int> rows_with_origin_h(RowOrigin o) const {
    std::vector<int> idx;
    for (int i = 0; i < static_cast<int>(h.size()); ++i) {
      if (h[i].origin == o) idx.push_back(i);
    }
    return idx;
  }
};

namespace detail {

/// Index map embedding a plant space (x, u[, w]) into a joint space.
inline std::vector<int> plant_to_joint_map(const VariableSpace& plant,
                                           const VariableSpace& joint) {
  std::vector<int> map(plant.size(), -1);
  for (int i = 0; i < plant.size(); ++i) {
    VarGroup g = plant.var(i).group;
    // Position within its group is preserved.
    const auto& members = plant.group_indices(g);
    int pos = static_cast<int>(
        std::find(members.begin(), members.end(), i) - members.begin());
    map[i] = joint.group_var(g, pos);
  }
  return map;
}

inline void append_encoding(ConstraintSet& set, const GraphEncoding& enc,
                            RowOrigin origin) {
  for (const Polynomial& p : enc.g) set.g.push_back({p, origin});
  for (const Polynomial& p : enc.h) set.h.push_back({p, origin});
}

}  // namespace detail

/// The coupled stability set: both graph copies plus x+ = f(x, u). Dynamics
/// equalities are kept as rows (not substituted) so the encodings stay
/// degree-two and the dynamics get their own multipliers.
inline ConstraintSet build_K(const ClosedLoopSystem& sys) {
  const int n_lam = lift_count(sys.net);
  SpacePtr space = make_space({sys.n, sys.m, n_lam, sys.n, sys.m, n_lam, 0, 0});

  ConstraintSet set;
  set.space = space;
  set.kind = ConstraintSet::Kind::kK;
  set.n = sys.n;
  set.m = sys.m;
  set.n_lambda = n_lam;

  detail::append_encoding(set, encode_network(sys.net, space, Step::kCurrent),
                          RowOrigin::kGraphCurrent);
  detail::append_encoding(set, encode_network(sys.net, space, Step::kSuccessor),
                          RowOrigin::kGraphSuccessor);

  std::vector<int> map =
      detail::plant_to_joint_map(*sys.f.front().space(), *space);
  for (int j = 0; j < sys.n; ++j) {
    Polynomial row =
        Polynomial::variable(space, space->group_var(VarGroup::kStateNext, j)) -
        sys.f[j].remapped(space, map);
    set.h.push_back({std::move(row), RowOrigin::kDynamics});
  }
  return set;
}

/// As build_K for a disturbed plant: adds the disturbance groups, appends
/// the disturbance-set rows q(x, u, w) for the current step only (the
/// successor disturbance is left unconstrained, matching the coupled-set
/// definition; set constrain_successor_disturbance to also impose
/// q(x+, u+, w+), a strictly more constrained variant).
inline ConstraintSet build_Kw(const DisturbedSystem& dsys,
                              bool constrain_successor_disturbance = false) {
  const ClosedLoopSystem& sys = dsys.loop;
  const int n_lam = lift_count(sys.net);
  SpacePtr space = make_space(
      {sys.n, sys.m, n_lam, sys.n, sys.m, n_lam, dsys.n_w, dsys.n_w});

  ConstraintSet set;
  set.space = space;
  set.kind = ConstraintSet::Kind::kKw;
  set.n = sys.n;
  set.m = sys.m;
  set.n_lambda = n_lam;
  set.n_w = dsys.n_w;

  detail::append_encoding(set, encode_network(sys.net, space, Step::kCurrent),
                          RowOrigin::kGraphCurrent);
  detail::append_encoding(set, encode_network(sys.net, space, Step::kSuccessor),
                          RowOrigin::kGraphSuccessor);

  std::vector<int> map =
      detail::plant_to_joint_map(*sys.f.front().space(), *space);
  for (const Polynomial& qi : dsys.q) {
    set.g.push_back({qi.remapped(space, map), RowOrigin::kDisturbanceSet});
  }
  if (constrain_successor_disturbance) {
    std::vector<int> succ_map(map);
    const VariableSpace& plant = *sys.f.front().space();
    for (int i = 0; i < plant.size(); ++i) {
      VarGroup g = plant.var(i).group;
      const auto& members = plant.group_indices(g);
      int pos = static_cast<int>(
          std::find(members.begin(), members.end(), i) - members.begin());
      succ_map[i] = space->group_var(successor_of(g), pos);
    }
    for (const Polynomial& qi : dsys.q) {
      set.g.push_back({qi.remapped(space, succ_map), RowOrigin::kDisturbanceSet});
    }
  }
  for (int j = 0; j < sys.n; ++j) {
    Polynomial row =
        Polynomial::variable(space, space->group_var(VarGroup::kStateNext, j)) -
        sys.f[j].remapped(space, map);
    set.h.push_back({std::move(row), RowOrigin::kDynamics});
  }
  return set;
}

}  // namespace soscert
