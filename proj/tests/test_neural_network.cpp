#include <catch2/catch_amalgamated.hpp>
#include <random>

#include "soscert/neural_network.hpp"
#include "test_util.hpp"

using namespace soscert;

namespace {

NeuralNetwork single_neuron(double w, double b, Activation act) {
  Eigen::MatrixXd W(1, 1);
  W << w;
  Eigen::VectorXd bias(1);
  bias << b;
  return NeuralNetwork::with_output_identity({{W, bias, act}});
}

double sat(double t, double lo = -1.0, double hi = 1.0) {
  return std::min(std::max(t, lo), hi);
}

}  // namespace

TEST_CASE("forward pass of a single ReLU neuron") {
  NeuralNetwork net = single_neuron(1.0, 0.0, Activation::relu());
  Eigen::VectorXd x(1);
  x << -2.0;
  CHECK(net.forward(x)[0] == 0.0);
  x << 3.0;
  CHECK(net.forward(x)[0] == 3.0);
}

TEST_CASE("forward pass of a saturated neuron") {
  NeuralNetwork net = single_neuron(1.0, 0.0, Activation::saturation());
  Eigen::VectorXd x(1);
  x << 5.0;
  CHECK(net.forward(x)[0] == 1.0);
  x << -5.0;
  CHECK(net.forward(x)[0] == -1.0);
  x << 0.3;
  CHECK(net.forward(x)[0] == 0.3);
}

TEST_CASE("zero-weight network returns the output bias everywhere") {
  Eigen::MatrixXd W1 = Eigen::MatrixXd::Zero(3, 2);
  Eigen::VectorXd b1 = Eigen::VectorXd::Ones(3);
  Eigen::MatrixXd W2 = Eigen::MatrixXd::Zero(2, 3);
  Eigen::VectorXd b2(2);
  b2 << 4.0, -7.0;
  NeuralNetwork net({{W1, b1, Activation::relu()},
                     {W2, b2, Activation::identity()}});
  testutil::Rng rng(1);
  for (int t = 0; t < 10; ++t) {
    Eigen::VectorXd x(2);
    x << testutil::uniform(rng, -5, 5), testutil::uniform(rng, -5, 5);
    CHECK(net.forward(x) == b2);
  }
}

TEST_CASE("dimension mismatch is rejected") {
  NeuralNetwork net = single_neuron(1.0, 0.0, Activation::relu());
  Eigen::VectorXd x(2);
  x << 1.0, 2.0;
  CHECK_THROWS_AS(net.forward(x), std::invalid_argument);
}

TEST_CASE("network construction invariants") {
  Eigen::MatrixXd W(1, 1);
  W << 1.0;
  Eigen::VectorXd b = Eigen::VectorXd::Zero(1);
  CHECK_THROWS_AS(NeuralNetwork({{W, b, Activation::relu()}}),
                  std::invalid_argument);  // output must be identity
  CHECK_THROWS_AS(Activation::leaky_relu(1.5), std::invalid_argument);
  CHECK_THROWS_AS(Activation::leaky_relu(0.0), std::invalid_argument);
  CHECK_THROWS_AS(Activation::saturation(1.0, -1.0), std::invalid_argument);
  Eigen::MatrixXd W2(2, 3);  // does not chain with a 1-wide layer
  W2.setZero();
  CHECK_THROWS_AS(
      NeuralNetwork({{W, b, Activation::relu()},
                     {W2, Eigen::VectorXd::Zero(2), Activation::identity()}}),
      std::invalid_argument);
}

TEST_CASE("leaky ReLU forward") {
  NeuralNetwork net = single_neuron(2.0, 0.0, Activation::leaky_relu(0.1));
  Eigen::VectorXd x(1);
  x << -1.0;
  CHECK(net.forward(x)[0] == Catch::Approx(-0.2));
  x << 1.0;
  CHECK(net.forward(x)[0] == Catch::Approx(2.0));
}

TEST_CASE("saturation-to-ReLU rewrite") {
  SECTION("scalar example") {
    Eigen::MatrixXd D(1, 1);
    D << 0.5;
    NeuralNetwork net = sat_to_relu(D);
    Eigen::VectorXd x(1);
    x << 4.0;
    CHECK(net.forward(x)[0] == Catch::Approx(1.0));  // sat(2) = 1
  }
  SECTION("zero maps to zero for any D") {
    testutil::Rng rng(2);
    for (int n : {1, 2, 5}) {
      Eigen::MatrixXd D(n, n);
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) D(i, j) = testutil::uniform(rng, -2, 2);
      }
      NeuralNetwork net = sat_to_relu(D);
      CHECK(net.forward(Eigen::VectorXd::Zero(n)).lpNorm<Eigen::Infinity>() ==
            0.0);
    }
  }
  SECTION("matches componentwise saturation on random points") {
    testutil::Rng rng(3);
    for (int n : {1, 3, 6}) {
      Eigen::MatrixXd D(n, n);
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) D(i, j) = testutil::uniform(rng, -2, 2);
      }
      NeuralNetwork net = sat_to_relu(D);
      for (int t = 0; t < 200; ++t) {
        Eigen::VectorXd x(n);
        for (int i = 0; i < n; ++i) x[i] = testutil::uniform(rng, -10, 10);
        Eigen::VectorXd got = net.forward(x);
        Eigen::VectorXd want = D * x;
        for (int i = 0; i < n; ++i) want[i] = sat(want[i]);
        CHECK((got - want).lpNorm<Eigen::Infinity>() <= 1e-12);
      }
    }
  }
}
