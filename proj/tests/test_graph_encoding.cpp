#include <catch2/catch_amalgamated.hpp>
#include <random>

#include "soscert/graph_encoding.hpp"
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

NeuralNetwork random_net(testutil::Rng& rng, int depth, int width_cap) {
  int in = testutil::uniform_int(rng, 1, 4);
  int out = testutil::uniform_int(rng, 1, 3);
  std::vector<Layer> layers;
  int prev = in;
  for (int d = 0; d < depth; ++d) {
    int w = testutil::uniform_int(rng, 1, width_cap);
    Eigen::MatrixXd W(w, prev);
    Eigen::VectorXd b(w);
    for (int i = 0; i < w; ++i) {
      b[i] = testutil::uniform(rng, -1, 1);
      for (int j = 0; j < prev; ++j) W(i, j) = testutil::uniform(rng, -1.5, 1.5);
    }
    Activation act;
    switch (testutil::uniform_int(rng, 0, 3)) {
      case 0: act = Activation::relu(); break;
      case 1: act = Activation::leaky_relu(0.2); break;
      case 2: act = Activation::saturation(); break;
      default: act = Activation::identity(); break;
    }
    layers.push_back({W, b, act});
    prev = w;
  }
  Eigen::MatrixXd Wn(out, prev);
  Eigen::VectorXd bn(out);
  for (int i = 0; i < out; ++i) {
    bn[i] = testutil::uniform(rng, -1, 1);
    for (int j = 0; j < prev; ++j) Wn(i, j) = testutil::uniform(rng, -1.5, 1.5);
  }
  layers.push_back({Wn, bn, Activation::identity()});
  return NeuralNetwork(std::move(layers));
}

}  // namespace

TEST_CASE("single ReLU neuron needs no lifting variables") {
  const double w = 1.5, b = -0.5;
  NeuralNetwork net = single_neuron(w, b, Activation::relu());
  GraphEncoding enc = encode_network(net);
  CHECK(enc.lift_count == 0);
  REQUIRE(enc.g.size() == 2);
  REQUIRE(enc.h.size() == 1);

  const SpacePtr& sp = enc.space;
  int xi = sp->index_of("x1"), ui = sp->index_of("u1");
  // g = { u - w x - b, u }
  CHECK(enc.g[0].coefficient(Monomial::var(ui)) == 1.0);
  CHECK(enc.g[0].coefficient(Monomial::var(xi)) == -w);
  CHECK(enc.g[0].coefficient(Monomial::one()) == -b);
  CHECK(enc.g[1].coefficient(Monomial::var(ui)) == 1.0);
  CHECK(enc.g[1].term_count() == 1);
  // h = { u (u - w x - b) }
  CHECK(enc.h[0].coefficient(Monomial::var(ui, 2)) == 1.0);
  CHECK(enc.h[0].coefficient(Monomial::from_pairs({{ui, 1}, {xi, 1}})) == -w);
  CHECK(enc.h[0].coefficient(Monomial::var(ui)) == -b);
}

TEST_CASE("single saturated neuron needs exactly one lifting variable") {
  const double w = 1.0, b = 0.25;
  NeuralNetwork net = single_neuron(w, b, Activation::saturation());
  GraphEncoding enc = encode_network(net);
  CHECK(enc.lift_count == 1);
  REQUIRE(enc.g.size() == 4);
  REQUIRE(enc.h.size() == 2);

  const SpacePtr& sp = enc.space;
  int xi = sp->index_of("x1"), ui = sp->index_of("u1"), li = sp->index_of("l1");
  // (u - 1) l = 0
  CHECK(enc.h[0].coefficient(Monomial::from_pairs({{ui, 1}, {li, 1}})) == 1.0);
  CHECK(enc.h[0].coefficient(Monomial::var(li)) == -1.0);
  // (u + 1)(u - w x - b + l) = 0
  CHECK(enc.h[1].coefficient(Monomial::var(ui, 2)) == 1.0);
  CHECK(enc.h[1].coefficient(Monomial::from_pairs({{ui, 1}, {xi, 1}})) == -w);
  CHECK(enc.h[1].coefficient(Monomial::from_pairs({{ui, 1}, {li, 1}})) == 1.0);
  CHECK(enc.h[1].coefficient(Monomial::one()) == -b);
}

TEST_CASE("identity single layer is a pure affine equality") {
  Eigen::MatrixXd W(2, 2);
  W << 1.0, 2.0, 0.0, -1.0;
  Eigen::VectorXd b(2);
  b << 0.5, 0.0;
  NeuralNetwork net({{W, b, Activation::identity()}});
  GraphEncoding enc = encode_network(net);
  CHECK(enc.lift_count == 0);
  CHECK(enc.g.empty());
  REQUIRE(enc.h.size() == 2);
}

TEST_CASE("membership of forward-pass points, single neurons") {
  NeuralNetwork net = single_neuron(1.0, 0.0, Activation::relu());
  GraphEncoding enc = encode_network(net);
  Eigen::VectorXd x(1), u(1), l(0);
  x << -1.0;
  u << 0.0;
  CHECK(membership_check(enc, x, u, l, 1e-9));
  x << 2.0;
  u << 2.0;
  CHECK(membership_check(enc, x, u, l, 1e-9));
  u << 0.0;  // violates u >= x
  CHECK(!membership_check(enc, x, u, l, 1e-9));
}

TEST_CASE("graph soundness across random networks") {
  testutil::Rng rng(20240811);
  for (int trial = 0; trial < 25; ++trial) {
    NeuralNetwork net = random_net(rng, testutil::uniform_int(rng, 1, 3), 8);
    GraphEncoding enc = encode_network(net);
    for (int t = 0; t < 100; ++t) {
      Eigen::VectorXd x(net.input_width());
      for (int i = 0; i < x.size(); ++i) x[i] = testutil::uniform(rng, -4, 4);
      Eigen::VectorXd u = net.forward(x);
      Eigen::VectorXd l = nn_lifts(net, x);
      REQUIRE(l.size() == enc.lift_count);
      INFO("trial " << trial << " point " << t);
      REQUIRE(membership_check(enc, x, u, l, 1e-9));
    }
  }
}

TEST_CASE("graph sharpness on a one-dimensional grid") {
  SECTION("ReLU: only the forward value satisfies the constraints") {
    NeuralNetwork net = single_neuron(1.0, 0.0, Activation::relu());
    GraphEncoding enc = encode_network(net);
    Eigen::VectorXd x(1), u(1), l(0);
    x << 1.3;
    double target = net.forward(x)[0];
    for (double cand = -5.0; cand <= 5.0; cand += 1e-3) {
      u << cand;
      if (membership_check(enc, x, u, l, 1e-6)) {
        CHECK(std::abs(cand - target) <= 2e-3);
      }
    }
  }
  SECTION("saturation: only (sat(p), slack) satisfies the constraints") {
    NeuralNetwork net = single_neuron(1.0, 0.0, Activation::saturation());
    GraphEncoding enc = encode_network(net);
    Eigen::VectorXd x(1), u(1), l(1);
    x << 2.7;  // saturated regime: u = 1, slack = 1.7
    double ut = 1.0, lt = 1.7;
    for (double uc = -2.0; uc <= 2.0; uc += 0.02) {
      for (double lc = 0.0; lc <= 4.0; lc += 0.02) {
        u << uc;
        l << lc;
        if (membership_check(enc, x, u, l, 1e-6)) {
          CHECK(std::abs(uc - ut) <= 0.05);
          CHECK(std::abs(lc - lt) <= 0.05);
        }
      }
    }
  }
}

TEST_CASE("control and lifts stay bounded near the origin") {
  testutil::Rng rng(5150);
  for (int trial = 0; trial < 8; ++trial) {
    NeuralNetwork net = random_net(rng, 2, 6);
    // Interval-propagated bound over the unit ball: each layer maps a norm
    // bound r to |W| r + |b| (activations are 1-Lipschitz with value <= pre
    // for ReLU/sat; the sat slack is bounded by |pre| + hi).
    double r = 1.0;
    double total_sq = 0.0;
    for (int i = 0; i < net.num_hidden_layers(); ++i) {
      const Layer& lay = net.layer(i);
      r = lay.W.norm() * r + lay.b.norm();
      total_sq += (r + 2.0) * (r + 2.0);  // value or slack per neuron layer
    }
    const Layer& out = net.layer(net.num_layers() - 1);
    double ubound = out.W.norm() * r + out.b.norm();
    double bound = std::sqrt(total_sq * net.lipschitz_bound() + 1.0) +
                   ubound + 10.0;  // generous but finite and data-derived
    double sup = 0.0;
    for (int t = 0; t < 300; ++t) {
      Eigen::VectorXd x(net.input_width());
      for (int i = 0; i < x.size(); ++i) x[i] = testutil::uniform(rng, -1, 1);
      if (x.norm() > 1.0) x /= x.norm();
      double mag = std::hypot(net.forward(x).norm(), nn_lifts(net, x).norm());
      sup = std::max(sup, mag);
    }
    CHECK(std::isfinite(sup));
    CHECK(sup <= bound);
  }
}
