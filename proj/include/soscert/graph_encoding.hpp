#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "soscert/neural_network.hpp"
#include "soscert/polynomial.hpp"
#include "soscert/variables.hpp"

namespace soscert {

enum class Step { kCurrent, kSuccessor };

/// One auxiliary variable of the network graph encoding: either the
/// post-activation value of a hidden neuron, or the slack that a saturated
/// neuron needs on top of its value.
struct LiftSlot {
  enum class Kind { kValue, kSatSlack };
  int layer;
  int neuron;
  Kind kind;
};

namespace detail {

inline bool is_identity_affine(const Eigen::MatrixXd& W, const Eigen::VectorXd& b) {
  if (W.rows() != W.cols()) return false;
  return W.isIdentity(0.0) && b.isZero(0.0);
}

/// The output layer can absorb the last hidden layer's values into u itself
/// when it is exactly the identity map, which removes those lifting
/// variables (a single activated neuron then needs none at all).
inline bool output_is_passthrough(const NeuralNetwork& net) {
  if (net.num_hidden_layers() == 0) return false;
  const Layer& last_hidden = net.layer(net.num_hidden_layers() - 1);
  if (last_hidden.act.kind == Activation::Kind::kIdentity) return false;
  const Layer& out = net.layer(net.num_layers() - 1);
  return is_identity_affine(out.W, out.b);
}

}  // namespace detail

/// Layout of the lifting variables for a network, in encoding order.
inline std::vector<LiftSlot> lift_layout(const NeuralNetwork& net) {
  std::vector<LiftSlot> slots;
  const bool passthrough = detail::output_is_passthrough(net);
  for (int i = 0; i < net.num_hidden_layers(); ++i) {
    const Layer& l = net.layer(i);
    const bool value_is_u = passthrough && i == net.num_hidden_layers() - 1;
    for (int j = 0; j < l.W.rows(); ++j) {
      switch (l.act.kind) {
        case Activation::Kind::kIdentity:
          break;  // inlined as an affine expression, no variable
        case Activation::Kind::kSaturation:
          if (!value_is_u) slots.push_back({i, j, LiftSlot::Kind::kValue});
          slots.push_back({i, j, LiftSlot::Kind::kSatSlack});
          break;
        default:
          if (!value_is_u) slots.push_back({i, j, LiftSlot::Kind::kValue});
          break;
      }
    }
  }
  return slots;
}

inline int lift_count(const NeuralNetwork& net) {
  return static_cast<int>(lift_layout(net).size());
}

/// Numeric values of the lifting variables along a forward pass, aligned
/// with lift_layout(). Saturation slack is the amount cut off above the
/// upper bound: max(pre - hi, 0).
inline Eigen::VectorXd nn_lifts(const NeuralNetwork& net, const Eigen::VectorXd& x) {
  std::vector<LiftSlot> slots = lift_layout(net);
  Eigen::VectorXd lifts(slots.size());
  // Recompute pre/post activations layer by layer.
  std::vector<Eigen::VectorXd> pre(net.num_hidden_layers());
  std::vector<Eigen::VectorXd> post(net.num_hidden_layers());
  Eigen::VectorXd v = x;
  for (int i = 0; i < net.num_hidden_layers(); ++i) {
    const Layer& l = net.layer(i);
    pre[i] = l.W * v + l.b;
    post[i] = pre[i];
    for (Eigen::Index j = 0; j < post[i].size(); ++j) {
      post[i][j] = l.act.apply(post[i][j]);
    }
    v = post[i];
  }
  for (std::size_t s = 0; s < slots.size(); ++s) {
    const LiftSlot& slot = slots[s];
    if (slot.kind == LiftSlot::Kind::kValue) {
      lifts[s] = post[slot.layer][slot.neuron];
    } else {
      const Layer& l = net.layer(slot.layer);
      lifts[s] = std::max(pre[slot.layer][slot.neuron] - l.act.hi, 0.0);
    }
  }
  return lifts;
}

/// Polynomial description of a network graph: the set of (x, u, l) with
/// g >= 0 and h = 0 is exactly {(x, psi(x), lifts(x))}.
struct GraphEncoding {
  SpacePtr space;
  Step step = Step::kCurrent;
  std::vector<Polynomial> g;
  std::vector<Polynomial> h;
  int lift_count = 0;
};

/// Encodes the graph of a network over the given space, in the current or
/// successor variable block. The space must carry input_width state,
/// output_width control and lift_count(net) lifting variables in that block.
inline GraphEncoding encode_network(const NeuralNetwork& net, SpacePtr space,
                                    Step step) {
  VarGroup gx = step == Step::kCurrent ? VarGroup::kState : VarGroup::kStateNext;
  VarGroup gu = step == Step::kCurrent ? VarGroup::kControl : VarGroup::kControlNext;
  VarGroup gl = step == Step::kCurrent ? VarGroup::kLift : VarGroup::kLiftNext;

  const std::vector<LiftSlot> slots = lift_layout(net);
  if (space->group_size(gx) != net.input_width() ||
      space->group_size(gu) != net.output_width() ||
      space->group_size(gl) != static_cast<int>(slots.size())) {
    throw std::invalid_argument(
        "encode_network: space group sizes do not match the network");
  }

  GraphEncoding enc;
  enc.space = space;
  enc.step = step;
  enc.lift_count = static_cast<int>(slots.size());

  auto var_poly = [&](VarGroup g, int k) {
    return Polynomial::variable(space, space->group_var(g, k));
  };

  // Lift slot lookup: (layer, neuron, kind) -> slot position.
  auto slot_index = [&](int layer, int neuron, LiftSlot::Kind kind) {
    for (std::size_t s = 0; s < slots.size(); ++s) {
      if (slots[s].layer == layer && slots[s].neuron == neuron &&
          slots[s].kind == kind) {
        return static_cast<int>(s);
      }
    }
    throw std::logic_error("encode_network: missing lift slot");
  };

  const bool passthrough = detail::output_is_passthrough(net);

  // Post-activation expressions of the previous layer, starting at x.
  std::vector<Polynomial> prev;
  for (int k = 0; k < net.input_width(); ++k) prev.push_back(var_poly(gx, k));

  for (int i = 0; i < net.num_hidden_layers(); ++i) {
    const Layer& l = net.layer(i);
    const bool value_is_u = passthrough && i == net.num_hidden_layers() - 1;
    std::vector<Polynomial> post;
    for (int j = 0; j < l.W.rows(); ++j) {
      Polynomial pre = Polynomial::constant(space, l.b[j]);
      for (int k = 0; k < l.W.cols(); ++k) {
        if (l.W(j, k) != 0.0) pre += l.W(j, k) * prev[k];
      }
      if (l.act.kind == Activation::Kind::kIdentity) {
        post.push_back(pre);
        continue;
      }
      Polynomial val = value_is_u
                           ? var_poly(gu, j)
                           : var_poly(gl, slot_index(i, j, LiftSlot::Kind::kValue));
      switch (l.act.kind) {
        case Activation::Kind::kReLU:
          enc.g.push_back(val - pre);
          enc.g.push_back(val);
          enc.h.push_back(val * (val - pre));
          break;
        case Activation::Kind::kLeakyReLU:
          enc.g.push_back(val - pre);
          enc.g.push_back(val - l.act.leak * pre);
          enc.h.push_back((val - pre) * (val - l.act.leak * pre));
          break;
        case Activation::Kind::kSaturation: {
          Polynomial slack =
              var_poly(gl, slot_index(i, j, LiftSlot::Kind::kSatSlack));
          Polynomial lo = Polynomial::constant(space, l.act.lo);
          Polynomial hi = Polynomial::constant(space, l.act.hi);
          enc.g.push_back(val - lo);
          enc.g.push_back(hi - val);
          enc.g.push_back(val - pre + slack);
          enc.g.push_back(slack);
          enc.h.push_back((val - hi) * slack);
          enc.h.push_back((val - lo) * (val - pre + slack));
          break;
        }
        default:
          break;
      }
      post.push_back(std::move(val));
    }
    prev = std::move(post);
  }

  if (!passthrough) {
    const Layer& out = net.layer(net.num_layers() - 1);
    for (int j = 0; j < out.W.rows(); ++j) {
      Polynomial rhs = Polynomial::constant(space, out.b[j]);
      for (int k = 0; k < out.W.cols(); ++k) {
        if (out.W(j, k) != 0.0) rhs += out.W(j, k) * prev[k];
      }
      enc.h.push_back(var_poly(gu, j) - rhs);
    }
  }
  return enc;
}

/// Encodes a network over its own minimal (x, u, l) space.
inline GraphEncoding encode_network(const NeuralNetwork& net,
                                    Step step = Step::kCurrent) {
  std::array<int, kNumVarGroups> sizes{};
  int ix = static_cast<int>(step == Step::kCurrent ? VarGroup::kState
                                                   : VarGroup::kStateNext);
  int iu = static_cast<int>(step == Step::kCurrent ? VarGroup::kControl
                                                   : VarGroup::kControlNext);
  int il = static_cast<int>(step == Step::kCurrent ? VarGroup::kLift
                                                   : VarGroup::kLiftNext);
  sizes[ix] = net.input_width();
  sizes[iu] = net.output_width();
  sizes[il] = lift_count(net);
  return encode_network(net, make_space(sizes), step);
}

/// True when (x, u, l) satisfies every inequality to -tol and every equality
/// to |.| <= tol. Variables outside the encoding's block are irrelevant and
/// set to zero.
inline bool membership_check(const GraphEncoding& enc, const Eigen::VectorXd& x,
                             const Eigen::VectorXd& u, const Eigen::VectorXd& l,
                             double tol) {
  VarGroup gx = enc.step == Step::kCurrent ? VarGroup::kState : VarGroup::kStateNext;
  VarGroup gu = enc.step == Step::kCurrent ? VarGroup::kControl : VarGroup::kControlNext;
  VarGroup gl = enc.step == Step::kCurrent ? VarGroup::kLift : VarGroup::kLiftNext;
  if (x.size() != enc.space->group_size(gx) ||
      u.size() != enc.space->group_size(gu) ||
      l.size() != enc.space->group_size(gl)) {
    throw std::invalid_argument("membership_check: dimension mismatch");
  }
  std::vector<double> point(enc.space->size(), 0.0);
  for (int k = 0; k < x.size(); ++k) point[enc.space->group_var(gx, k)] = x[k];
  for (int k = 0; k < u.size(); ++k) point[enc.space->group_var(gu, k)] = u[k];
  for (int k = 0; k < l.size(); ++k) point[enc.space->group_var(gl, k)] = l[k];
  for (const Polynomial& p : enc.g) {
    if (p.eval(point) < -tol) return false;
  }
  for (const Polynomial& p : enc.h) {
    if (std::abs(p.eval(point)) > tol) return false;
  }
  return true;
}

}  // namespace soscert
