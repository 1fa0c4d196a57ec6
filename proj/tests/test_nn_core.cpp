#include <cmath>
#include <random>

#include "doctest.h"
#include "middlegan/adam.hpp"
#include "middlegan/error.hpp"
#include "middlegan/gradcheck.hpp"
#include "middlegan/loss.hpp"
#include "middlegan/network.hpp"

using namespace mgan;
using namespace mgan::nn;

namespace {

Network single_layer(Tensor2 w, Tensor2 b, Activation act) {
  Network net;
  net.layers.push_back({std::move(w), std::move(b), act});
  return net;
}

Tensor2 random_tensor(std::size_t r, std::size_t c, Rng& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Tensor2 t(r, c);
  for (auto& x : t.data()) x = n(rng);
  return t;
}

OutputLoss mse_to(const Tensor2& target) {
  return [target](const Tensor2& y) { return mean_squared_error(y, target); };
}

}  // namespace

TEST_SUITE("nn_core") {

TEST_CASE("tensor shapes and matmul variants") {
  Tensor2 a(2, 3, std::vector<double>{1, 2, 3, 4, 5, 6});
  Tensor2 b(3, 2, std::vector<double>{7, 8, 9, 10, 11, 12});
  const Tensor2 c = matmul(a, b);
  CHECK(c(0, 0) == 58);
  CHECK(c(0, 1) == 64);
  CHECK(c(1, 0) == 139);
  CHECK(c(1, 1) == 154);
  CHECK(matmul_tn(a, a)(2, 2) == 3 * 3 + 6 * 6);
  CHECK(matmul_nt(a, a)(0, 1) == 1 * 4 + 2 * 5 + 3 * 6);
  CHECK_THROWS_AS(matmul(a, a), ShapeError);
  CHECK_THROWS_AS(Tensor2(2, 2, std::vector<double>{1, 2, 3}), ShapeError);
}

TEST_CASE("forward: identity layer passes input through") {
  Tensor2 eye(2, 2, std::vector<double>{1, 0, 0, 1});
  auto net = single_layer(eye, Tensor2(1, 2), Activation::identity());
  Tensor2 x(3, 2, std::vector<double>{1.5, -2, 0, 7, -3.25, 4});
  CHECK(forward(net, x).output == x);
}

TEST_CASE("forward: zero sigmoid layer outputs one half") {
  auto net = single_layer(Tensor2(3, 4), Tensor2(1, 4), Activation::sigmoid());
  Rng rng = make_rng(1);
  const Tensor2 y = predict(net, random_tensor(5, 3, rng));
  for (double v : y.data()) CHECK(v == 0.5);
}

TEST_CASE("forward: leaky rectifier slope") {
  Tensor2 eye(2, 2, std::vector<double>{1, 0, 0, 1});
  auto net = single_layer(eye, Tensor2(1, 2), Activation::leaky());
  const Tensor2 y = predict(net, Tensor2(1, 2, std::vector<double>{-1, 2}));
  CHECK(y(0, 0) == doctest::Approx(-0.2).epsilon(1e-15));
  CHECK(y(0, 1) == 2.0);
  CHECK(Activation::leaky().slope == 0.2);
}

TEST_CASE("forward: shape mismatch is rejected with dimensions") {
  Rng rng = make_rng(2);
  const std::size_t hidden[] = {4};
  auto net = make_mlp(3, hidden, 1, Activation::leaky(), Activation::identity(), rng);
  try {
    (void)forward(net, Tensor2(2, 5));
    FAIL("expected ShapeError");
  } catch (const ShapeError& e) {
    const std::string msg = e.what();
    CHECK(msg.find('5') != std::string::npos);
    CHECK(msg.find('3') != std::string::npos);
  }
}

TEST_CASE("forward is deterministic") {
  Rng rng = make_rng(3);
  const std::size_t hidden[] = {8, 8};
  auto net = make_mlp(2, hidden, 3, Activation::tanh(), Activation::sigmoid(), rng);
  const Tensor2 x = random_tensor(16, 2, rng);
  CHECK(predict(net, x) == predict(net, x));
  CHECK(forward(net, x).output == predict(net, x));
}

TEST_CASE("glorot initialisation bounds and zero biases") {
  Rng rng = make_rng(4);
  const std::size_t hidden[] = {30};
  auto net = make_mlp(10, hidden, 5, Activation::leaky(), Activation::identity(), rng);
  CHECK(net.param_count() == 10 * 30 + 30 + 30 * 5 + 5);
  const double bound = std::sqrt(6.0 / 40.0);
  for (double w : net.layers[0].weight.data()) CHECK(std::abs(w) <= bound);
  for (double b : net.layers[0].bias.data()) CHECK(b == 0.0);
}

TEST_CASE("backward: zero upstream gives zero gradients") {
  Rng rng = make_rng(5);
  const std::size_t hidden[] = {6};
  auto net = make_mlp(3, hidden, 2, Activation::tanh(), Activation::identity(), rng);
  const auto cache = forward(net, random_tensor(4, 3, rng));
  const auto g = backward(net, cache, Tensor2(4, 2));
  for (const auto& view : parameter_views(g)) {
    for (double v : view) CHECK(v == 0.0);
  }
}

TEST_CASE("backward: single linear layer weight gradient is x^T g") {
  Tensor2 w(2, 3, std::vector<double>{0.1, -0.2, 0.3, 0.4, 0.5, -0.6});
  auto net = single_layer(w, Tensor2(1, 3), Activation::identity());
  Tensor2 x(2, 2, std::vector<double>{1, 2, 3, 4});
  Tensor2 g(2, 3, std::vector<double>{1, 0, -1, 2, 1, 0});
  const auto grads = backward(net, forward(net, x), g);
  // Hand-computed x^T g.
  const double expected[2][3] = {{1 * 1 + 3 * 2, 1 * 0 + 3 * 1, 1 * -1 + 3 * 0},
                                 {2 * 1 + 4 * 2, 2 * 0 + 4 * 1, 2 * -1 + 4 * 0}};
  for (std::size_t i = 0; i < 2; ++i) {
    for (std::size_t j = 0; j < 3; ++j) CHECK(grads.layers[0].weight(i, j) == expected[i][j]);
  }
  CHECK(grads.layers[0].bias(0, 0) == 3);
  CHECK(grads.layers[0].bias(0, 2) == -1);
}

TEST_CASE("backward: missing cache is rejected") {
  Rng rng = make_rng(6);
  const std::size_t hidden[] = {3};
  auto net = make_mlp(2, hidden, 1, Activation::tanh(), Activation::identity(), rng);
  CHECK_THROWS_AS((void)backward(net, ForwardCache{}, Tensor2(1, 1)), InvalidArgument);
}

TEST_CASE("gradient_check: two-layer net on random input") {
  Rng rng = make_rng(7);
  const std::size_t hidden[] = {5};
  auto net = make_mlp(3, hidden, 2, Activation::leaky(), Activation::identity(), rng);
  const Tensor2 x = random_tensor(6, 3, rng);
  const auto r = gradient_check(net, mse_to(random_tensor(6, 2, rng)), x, 1e-5);
  CHECK(r.max_relative_error < 1e-4);
  CHECK(r.checked == net.param_count());
}

TEST_CASE("gradient_check: linear net with quadratic loss is near exact") {
  Rng rng = make_rng(8);
  const std::size_t hidden[] = {4};
  auto net = make_mlp(3, hidden, 2, Activation::identity(), Activation::identity(), rng);
  const auto r = gradient_check(net, mse_to(random_tensor(5, 2, rng)), random_tensor(5, 3, rng), 1e-5);
  CHECK(r.max_relative_error < 1e-7);
}

TEST_CASE("gradient_check: tanh and sigmoid layers") {
  Rng rng = make_rng(9);
  const std::size_t hidden[] = {6, 4};
  auto net = make_mlp(2, hidden, 3, Activation::tanh(), Activation::sigmoid(), rng);
  const auto r = gradient_check(net, mse_to(random_tensor(4, 3, rng)), random_tensor(4, 2, rng), 1e-5);
  CHECK(r.max_relative_error < 1e-4);
}

TEST_CASE("gradient_check: all-zero parameters with a symmetric loss") {
  Rng rng = make_rng(10);
  const std::size_t hidden[] = {3};
  auto net = make_mlp(2, hidden, 1, Activation::tanh(), Activation::identity(), rng);
  for (auto view : parameter_views(net)) std::fill(view.begin(), view.end(), 0.0);
  // 0.5·mean(y²) is symmetric about y = 0, where the zero network sits.
  const auto r = gradient_check(net, mse_to(Tensor2(3, 1)), random_tensor(3, 2, rng), 1e-5);
  CHECK(r.max_relative_error == 0.0);
  CHECK_THROWS_AS((void)gradient_check(net, mse_to(Tensor2(3, 1)), random_tensor(3, 2, rng), 0.0),
                  InvalidArgument);
}

TEST_CASE("gradient_check property over random architectures") {
  Rng rng = make_rng(11);
  const ActivationKind kinds[] = {ActivationKind::leaky_rectifier, ActivationKind::tanh,
                                  ActivationKind::sigmoid, ActivationKind::identity};
  for (int trial = 0; trial < 25; ++trial) {
    std::uniform_int_distribution<std::size_t> width(1, 8), depth(1, 3), act(0, 3);
    std::vector<std::size_t> hidden(depth(rng));
    for (auto& h : hidden) h = width(rng);
    const std::size_t in = width(rng) % 4 + 1, out = width(rng) % 3 + 1;
    auto net = make_mlp(in, hidden, out, Activation::leaky(), Activation::identity(), rng);
    for (auto& layer : net.layers) layer.activation.kind = kinds[act(rng)];
    const auto r = gradient_check(net, mse_to(random_tensor(4, out, rng)), random_tensor(4, in, rng), 1e-5);
    CAPTURE(trial);
    CHECK(r.max_relative_error < 1e-4);
  }
}

TEST_CASE("logit losses match their closed forms") {
  Tensor2 logits(2, 1, std::vector<double>{0.3, -1.2});
  const double targets[] = {1.0, 0.0};
  const auto r = bce_with_logits(logits, targets);
  const auto sig = [](double z) { return 1.0 / (1.0 + std::exp(-z)); };
  const double expected = -0.5 * (std::log(sig(0.3)) + std::log(1.0 - sig(-1.2)));
  CHECK(r.value == doctest::Approx(expected).epsilon(1e-12));
  CHECK(r.grad(0, 0) == doctest::Approx((sig(0.3) - 1.0) / 2).epsilon(1e-12));
  CHECK(softplus(800.0) == 800.0);
  CHECK(std::isfinite(softplus(-800.0)));

  Tensor2 z(1, 3, std::vector<double>{1, 2, 3});
  const std::size_t label[] = {2};
  const double denom = std::exp(1) + std::exp(2) + std::exp(3);
  CHECK(softmax_cross_entropy(z, label).value == doctest::Approx(-std::log(std::exp(3) / denom)));
}

TEST_CASE("adam: zero gradients leave parameters untouched") {
  Rng rng = make_rng(12);
  const std::size_t hidden[] = {4};
  auto net = make_mlp(2, hidden, 1, Activation::leaky(), Activation::identity(), rng);
  const Network before = net;
  auto state = AdamState::for_network(net);
  const auto cache = forward(net, random_tensor(3, 2, rng));
  const auto zero = backward(net, cache, Tensor2(3, 1));
  for (int i = 0; i < 10; ++i) adam_step(net, zero, state);
  CHECK(net == before);
  CHECK(state.step == 10);
  CHECK(state.learning_rate == 0.0002);
}

TEST_CASE("adam: first step moves by about -lr sign(g)") {
  auto net = single_layer(Tensor2(1, 1, 0.7), Tensor2(1, 1), Activation::identity());
  auto state = AdamState::for_network(net, {0.01, 0.9, 0.999, 1e-8});
  Gradients g;
  g.layers.push_back({Tensor2(1, 1, 3.0), Tensor2(1, 1, -0.5)});
  adam_step(net, g, state);
  CHECK(net.layers[0].weight(0, 0) == doctest::Approx(0.7 - 0.01).epsilon(1e-6));
  CHECK(net.layers[0].bias(0, 0) == doctest::Approx(0.01).epsilon(1e-6));
}

TEST_CASE("adam: constant gradient follows the reference recurrence") {
  auto net = single_layer(Tensor2(1, 1, 1.0), Tensor2(1, 1), Activation::identity());
  const AdamConfig cfg = gan_adam(0.001);
  auto state = AdamState::for_network(net, cfg);
  Gradients g;
  g.layers.push_back({Tensor2(1, 1, 0.25), Tensor2(1, 1, 0.0)});
  double theta = 1.0, m = 0.0, v = 0.0, prev = 1.0;
  for (int t = 1; t <= 100; ++t) {
    adam_step(net, g, state);
    m = cfg.beta1 * m + (1 - cfg.beta1) * 0.25;
    v = cfg.beta2 * v + (1 - cfg.beta2) * 0.0625;
    const double mh = m / (1 - std::pow(cfg.beta1, t));
    const double vh = v / (1 - std::pow(cfg.beta2, t));
    theta -= cfg.learning_rate * mh / (std::sqrt(vh) + cfg.epsilon);
    const double w = net.layers[0].weight(0, 0);
    CHECK(w < prev);
    CHECK(w == doctest::Approx(theta).epsilon(1e-12));
    prev = w;
  }
}

TEST_CASE("adam: non-finite gradient aborts without mutating") {
  auto net = single_layer(Tensor2(1, 2, 1.0), Tensor2(1, 2), Activation::identity());
  auto state = AdamState::for_network(net);
  const Network before = net;
  Gradients g;
  g.layers.push_back({Tensor2(1, 2, std::vector<double>{0.1, NAN}), Tensor2(1, 2)});
  CHECK_THROWS_AS(adam_step(net, g, state), DivergenceError);
  CHECK(net == before);
  CHECK(state.step == 0);
}

}  // TEST_SUITE
