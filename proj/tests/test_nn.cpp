#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "core/errors.hpp"
#include "core/nn.hpp"
#include "core/rng.hpp"

#include <cmath>
#include <random>
#include <sstream>

using namespace mopinn;

namespace {

MlpNetwork random_net(const std::vector<int>& dims, std::uint64_t seed) {
  return MlpNetwork::xavier_normal(dims, seed);
}

double scalar_loss(const MlpNetwork& net, const Eigen::VectorXd& x,
                   const Eigen::VectorXd& cot) {
  return cot.dot(net.forward(x));
}

}  // namespace

TEST_CASE("parameter count matches layer arithmetic") {
  const auto net = random_net({1, 20, 40, 500}, 1);
  // (1*20+20) + (20*40+40) + (40*500+500)
  CHECK(net.parameter_count() == 21380u);
  CHECK(net.input_dim() == 1);
  CHECK(net.output_dim() == 500);

  const auto tiny = random_net({2, 3}, 1);
  CHECK(tiny.parameter_count() == 9u);
}

TEST_CASE("xavier init: zero biases, deterministic in the seed") {
  const auto a = random_net({2, 7, 5}, 42);
  const auto b = random_net({2, 7, 5}, 42);
  const auto c = random_net({2, 7, 5}, 43);
  for (const auto& layer : a.layers())
    CHECK(layer.biases.isZero(0.0));
  CHECK(a.flatten() == b.flatten());
  CHECK(a.flatten() != c.flatten());
}

TEST_CASE("xavier init: sample std near sqrt(2/(fan_in+fan_out))") {
  const auto net = random_net({100, 100}, 7);
  const auto& w = net.layers()[0].weights;
  const double mean = w.mean();
  const double sd = std::sqrt((w.array() - mean).square().mean());
  const double expected = std::sqrt(2.0 / 200.0);
  CHECK(std::abs(mean) < 0.01);
  CHECK(sd == doctest::Approx(expected).epsilon(0.10));
}

TEST_CASE("forward: single affine layer is exactly W x + b") {
  LayerParams layer;
  layer.weights.resize(2, 2);
  layer.weights << 1.0, 2.0, -3.0, 0.5;
  layer.biases.resize(2);
  layer.biases << 0.25, -1.0;
  MlpNetwork net({layer});  // output layer carries no activation

  Eigen::VectorXd x(2);
  x << 2.0, -1.0;
  const Eigen::VectorXd y = net.forward(x);
  CHECK(y[0] == doctest::Approx(1.0 * 2 + 2.0 * -1 + 0.25));
  CHECK(y[1] == doctest::Approx(-3.0 * 2 + 0.5 * -1 - 1.0));
}

TEST_CASE("forward: one tanh hidden unit composes as expected") {
  LayerParams hidden, out;
  hidden.weights.resize(1, 1);
  hidden.weights << 0.5;
  hidden.biases = Eigen::VectorXd::Constant(1, 0.1);
  out.weights.resize(1, 1);
  out.weights << 2.0;
  out.biases = Eigen::VectorXd::Constant(1, -0.3);
  MlpNetwork net({hidden, out});

  Eigen::VectorXd x(1);
  x << 1.5;
  const double expected = 2.0 * std::tanh(0.5 * 1.5 + 0.1) - 0.3;
  CHECK(net.forward(x)[0] == doctest::Approx(expected).epsilon(1e-14));
}

TEST_CASE("forward_batch matches forward row by row") {
  const auto net = random_net({2, 6, 3}, 11);
  Eigen::MatrixXd x(4, 2);
  x << 0.1, -0.3, 1.0, 0.5, -0.7, 0.2, 0.0, 0.0;
  const Eigen::MatrixXd y = net.forward_batch(x);
  REQUIRE(y.rows() == 4);
  REQUIRE(y.cols() == 3);
  for (int i = 0; i < 4; ++i) {
    const Eigen::VectorXd yi = net.forward(x.row(i).transpose());
    CHECK((y.row(i).transpose() - yi).cwiseAbs().maxCoeff() < 1e-14);
  }
}

TEST_CASE("backward matches central finite differences") {
  // randomized small instances; relative error gate 1e-5 at step 1e-6
  std::mt19937_64 eng(99);
  std::normal_distribution<double> normal(0.0, 1.0);
  const std::vector<std::vector<int>> shapes = {
      {1, 4, 3}, {2, 5, 5, 2}, {3, 8, 1}, {1, 2, 2, 2, 3}};
  for (std::size_t s = 0; s < shapes.size(); ++s) {
    auto net = random_net(shapes[s], 100 + s);
    Eigen::VectorXd x(net.input_dim());
    Eigen::VectorXd cot(net.output_dim());
    for (int i = 0; i < x.size(); ++i) x[i] = normal(eng);
    for (int i = 0; i < cot.size(); ++i) cot[i] = normal(eng);

    const Eigen::VectorXd grad = flatten_gradients(net.backward(x, cot));
    Eigen::VectorXd theta = net.flatten();
    REQUIRE(grad.size() == theta.size());

    const double step = 1e-6;
    for (int i = 0; i < theta.size(); ++i) {
      Eigen::VectorXd tp = theta, tm = theta;
      tp[i] += step;
      tm[i] -= step;
      MlpNetwork np = net, nm = net;
      np.unflatten(tp);
      nm.unflatten(tm);
      const double fd =
          (scalar_loss(np, x, cot) - scalar_loss(nm, x, cot)) / (2 * step);
      const double denom = std::max(1.0, std::abs(fd));
      CHECK(std::abs(grad[i] - fd) / denom < 1e-5);
    }
  }
}

TEST_CASE("backward_batch over a batch equals the sum of per-point gradients") {
  const auto net = random_net({2, 5, 4}, 3);
  Eigen::MatrixXd x(3, 2);
  x << 0.2, 0.4, -0.5, 0.9, 0.0, -0.1;
  Eigen::MatrixXd cot(3, 4);
  cot.setRandom();

  ForwardTrace trace;
  net.forward_batch(x, trace);
  GradientBuffer batch = net.zero_gradients();
  net.backward_batch(trace, cot, batch);

  GradientBuffer summed = net.zero_gradients();
  for (int i = 0; i < 3; ++i)
    summed.add(net.backward(x.row(i).transpose(), cot.row(i).transpose()));

  const Eigen::VectorXd a = flatten_gradients(batch);
  const Eigen::VectorXd b = flatten_gradients(summed);
  CHECK((a - b).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("flatten / unflatten round trip") {
  auto net = random_net({3, 6, 2}, 5);
  const Eigen::VectorXd theta = net.flatten();
  auto other = random_net({3, 6, 2}, 77);
  other.unflatten(theta);
  CHECK(other.flatten() == theta);
  Eigen::MatrixXd x(2, 3);
  x.setRandom();
  CHECK(net.forward_batch(x) == other.forward_batch(x));
}

TEST_CASE("flatten layout: per layer weights row-major, then biases") {
  LayerParams layer;
  layer.weights.resize(2, 3);
  layer.weights << 1, 2, 3, 4, 5, 6;
  layer.biases.resize(2);
  layer.biases << 7, 8;
  MlpNetwork net({layer});
  const Eigen::VectorXd theta = net.flatten();
  Eigen::VectorXd expected(8);
  expected << 1, 2, 3, 4, 5, 6, 7, 8;
  CHECK(theta == expected);
}

TEST_CASE("save / load round trip is exact") {
  const auto net = random_net({2, 9, 4}, 123);
  std::stringstream ss;
  net.save(ss);
  const auto back = MlpNetwork::load(ss);
  CHECK(back.flatten() == net.flatten());
  CHECK(back.input_dim() == 2);
  CHECK(back.output_dim() == 4);
}

TEST_CASE("all_finite flags injected non-finite parameters") {
  auto net = random_net({1, 3, 1}, 9);
  CHECK(net.all_finite());
  net.layers()[0].weights(0, 0) = std::numeric_limits<double>::quiet_NaN();
  CHECK_FALSE(net.all_finite());
}

TEST_CASE("error paths throw ConfigError") {
  CHECK_THROWS_AS(MlpNetwork::xavier_normal({1}, 1), ConfigError);
  CHECK_THROWS_AS(MlpNetwork::xavier_normal({1, 0, 2}, 1), ConfigError);

  auto net = random_net({2, 3}, 1);
  Eigen::VectorXd wrong(3);
  wrong.setZero();
  CHECK_THROWS_AS(net.forward(wrong), ConfigError);
  CHECK_THROWS_AS(net.unflatten(Eigen::VectorXd::Zero(5)), ConfigError);

  std::stringstream bad("not-a-snapshot\n");
  CHECK_THROWS_AS(MlpNetwork::load(bad), ConfigError);
}
