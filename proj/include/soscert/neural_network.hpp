#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace soscert {

/// Componentwise activation. Saturation bounds default to the classical
/// [-1, 1] clamp; LeakyReLU slope must lie strictly in (0, 1).
struct Activation {
  enum class Kind { kReLU, kLeakyReLU, kSaturation, kIdentity };

  Kind kind = Kind::kIdentity;
  double leak = 0.01;
  double lo = -1.0;
  double hi = 1.0;

  static Activation relu() { return {Kind::kReLU}; }
  static Activation leaky_relu(double slope) {
    Activation a{Kind::kLeakyReLU};
    a.leak = slope;
    a.validate();
    return a;
  }
  static Activation saturation(double lo = -1.0, double hi = 1.0) {
    Activation a{Kind::kSaturation};
    a.lo = lo;
    a.hi = hi;
    a.validate();
    return a;
  }
  static Activation identity() { return {Kind::kIdentity}; }

  void validate() const {
    if (kind == Kind::kLeakyReLU && !(leak > 0.0 && leak < 1.0)) {
      throw std::invalid_argument("Activation: leaky slope must be in (0,1)");
    }
    if (kind == Kind::kSaturation && !(lo < hi)) {
      throw std::invalid_argument("Activation: saturation bounds need lo < hi");
    }
  }

  double apply(double t) const {
    switch (kind) {
      case Kind::kReLU: return std::max(t, 0.0);
      case Kind::kLeakyReLU: return std::max(t, leak * t);
      case Kind::kSaturation: return std::min(std::max(t, lo), hi);
      case Kind::kIdentity: return t;
    }
    return t;
  }

  bool operator==(const Activation& o) const {
    if (kind != o.kind) return false;
    if (kind == Kind::kLeakyReLU) return leak == o.leak;
    if (kind == Kind::kSaturation) return lo == o.lo && hi == o.hi;
    return true;
  }
};

struct Layer {
  Eigen::MatrixXd W;
  Eigen::VectorXd b;
  Activation act;
};

/// Feed-forward network: an alternation of affine maps and componentwise
/// activations, with an affine output (the final layer's activation is the
/// identity). Layers before the last are the hidden layers.
class NeuralNetwork {
 public:
  explicit NeuralNetwork(std::vector<Layer> layers) : layers_(std::move(layers)) {
    if (layers_.empty()) {
      throw std::invalid_argument("NeuralNetwork: at least one layer required");
    }
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      const Layer& l = layers_[i];
      l.act.validate();
      if (l.W.rows() != l.b.size()) {
        throw std::invalid_argument("NeuralNetwork: layer " + std::to_string(i) +
                                    " bias size does not match weight rows");
      }
      if (i > 0 && layers_[i - 1].W.rows() != l.W.cols()) {
        throw std::invalid_argument("NeuralNetwork: layer " + std::to_string(i) +
                                    " width does not chain with previous layer");
      }
    }
    if (layers_.back().act.kind != Activation::Kind::kIdentity) {
      throw std::invalid_argument(
          "NeuralNetwork: output layer must have identity activation");
    }
    if (input_width() < 1 || output_width() < 1) {
      throw std::invalid_argument("NeuralNetwork: empty input or output");
    }
  }

  /// Builds a network from layers as written, appending an identity output
  /// layer when the last given layer carries a non-identity activation.
  static NeuralNetwork with_output_identity(std::vector<Layer> layers) {
    if (!layers.empty() &&
        layers.back().act.kind != Activation::Kind::kIdentity) {
      int k = static_cast<int>(layers.back().W.rows());
      layers.push_back({Eigen::MatrixXd::Identity(k, k),
                        Eigen::VectorXd::Zero(k), Activation::identity()});
    }
    return NeuralNetwork(std::move(layers));
  }

  int num_layers() const { return static_cast<int>(layers_.size()); }
  int num_hidden_layers() const { return num_layers() - 1; }
  const Layer& layer(int i) const { return layers_.at(i); }
  int input_width() const { return static_cast<int>(layers_.front().W.cols()); }
  int output_width() const { return static_cast<int>(layers_.back().W.rows()); }

  bool relu_only() const {
    for (int i = 0; i < num_hidden_layers(); ++i) {
      if (layers_[i].act.kind != Activation::Kind::kReLU) return false;
    }
    return true;
  }

  Eigen::VectorXd forward(const Eigen::VectorXd& x) const {
    if (x.size() != input_width()) {
      throw std::invalid_argument("NeuralNetwork::forward: input dimension " +
                                  std::to_string(x.size()) + ", expected " +
                                  std::to_string(input_width()));
    }
    Eigen::VectorXd v = x;
    for (const Layer& l : layers_) {
      Eigen::VectorXd pre = l.W * v + l.b;
      for (Eigen::Index j = 0; j < pre.size(); ++j) pre[j] = l.act.apply(pre[j]);
      v = std::move(pre);
    }
    return v;
  }

  /// Post-activation values of every hidden layer, in layer order.
  std::vector<Eigen::VectorXd> hidden_activations(const Eigen::VectorXd& x) const {
    std::vector<Eigen::VectorXd> out;
    Eigen::VectorXd v = x;
    for (int i = 0; i < num_hidden_layers(); ++i) {
      const Layer& l = layers_[i];
      Eigen::VectorXd pre = l.W * v + l.b;
      for (Eigen::Index j = 0; j < pre.size(); ++j) pre[j] = l.act.apply(pre[j]);
      v = pre;
      out.push_back(std::move(pre));
    }
    return out;
  }

  /// Crude global Lipschitz bound: product of layer operator norms times the
  /// activation slopes (all activations here are 1-Lipschitz).
  double lipschitz_bound() const {
    double c = 1.0;
    for (const Layer& l : layers_) c *= l.W.norm();  // Frobenius >= spectral
    return c;
  }

 private:
  std::vector<Layer> layers_;
};

/// Two-layer ReLU network reproducing the componentwise clamp of D x to
/// [-1, 1]: weights [D; D], biases [1; -1], output map [I, -I] with bias -1.
/// Relies on the identity sat(t) = ReLU(t + 1) - ReLU(t - 1) - 1.
inline NeuralNetwork sat_to_relu(const Eigen::MatrixXd& D) {
  if (D.rows() != D.cols() || D.rows() < 1) {
    throw std::invalid_argument("sat_to_relu: D must be square and nonempty");
  }
  const int n = static_cast<int>(D.rows());
  Eigen::MatrixXd W1(2 * n, n);
  W1.topRows(n) = D;
  W1.bottomRows(n) = D;
  Eigen::VectorXd b1(2 * n);
  b1.head(n).setOnes();
  b1.tail(n) = -Eigen::VectorXd::Ones(n);
  Eigen::MatrixXd W2(n, 2 * n);
  W2.leftCols(n) = Eigen::MatrixXd::Identity(n, n);
  W2.rightCols(n) = -Eigen::MatrixXd::Identity(n, n);
  Eigen::VectorXd b2 = -Eigen::VectorXd::Ones(n);
  return NeuralNetwork({{W1, b1, Activation::relu()},
                        {W2, b2, Activation::identity()}});
}

}  // namespace soscert
