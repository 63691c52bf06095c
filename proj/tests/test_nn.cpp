#include <doctest.h>

#include <cmath>
#include <random>

#include "evsched/nn.hpp"

using namespace evsched::nn;

TEST_SUITE_BEGIN("nn");

TEST_CASE("zero weights forward to the final bias") {
  std::mt19937_64 rng(1);
  DenseNet net({3, 4, 2}, rng);
  for (auto& w : net.weights()) w.setZero();
  net.biases()[0].setZero();
  net.biases()[1] << 0.5, -1.5;
  Vector out = net.forward(Vector::Zero(3));
  CHECK(out(0) == doctest::Approx(0.5));
  CHECK(out(1) == doctest::Approx(-1.5));
}

TEST_CASE("hand-computed single linear layer") {
  std::mt19937_64 rng(2);
  DenseNet net({2, 2}, rng);
  net.weights()[0] << 1.0, 2.0, -0.5, 0.25;
  net.biases()[0] << 0.1, -0.2;
  Vector in(2);
  in << 3.0, -1.0;
  Vector out = net.forward(in);
  CHECK(out(0) == doctest::Approx(1.0 * 3.0 + 2.0 * -1.0 + 0.1));
  CHECK(out(1) == doctest::Approx(-0.5 * 3.0 + 0.25 * -1.0 - 0.2));
}

TEST_CASE("batched forward equals per-sample forward") {
  std::mt19937_64 rng(3);
  DenseNet net({4, 8, 3}, rng);
  std::uniform_real_distribution<double> u(-1, 1);
  Matrix batch(4, 5);
  for (int c = 0; c < 5; ++c)
    for (int r = 0; r < 4; ++r) batch(r, c) = u(rng);
  Matrix out = net.forward(batch);
  for (int c = 0; c < 5; ++c) {
    Vector single = net.forward(Vector(batch.col(c)));
    for (int r = 0; r < 3; ++r) CHECK(out(r, c) == doctest::Approx(single(r)));
  }
}

TEST_CASE("zero output gradient leaves parameters unchanged") {
  std::mt19937_64 rng(4);
  DenseNet net({3, 5, 1}, rng);
  DenseNet before = net;
  Adam adam(net, {1e-3});
  Matrix inputs = Matrix::Random(3, 4);
  UpdateReport rep = backward_update(net, inputs, Matrix::Zero(1, 4), adam);
  CHECK(rep.applied);
  CHECK(rep.grad_norm == doctest::Approx(0.0));
  CHECK(adam.step_count() == 1);
  for (size_t l = 0; l < net.layer_count(); ++l) {
    CHECK((net.weights()[l] - before.weights()[l]).cwiseAbs().maxCoeff() ==
          doctest::Approx(0.0));
    CHECK((net.biases()[l] - before.biases()[l]).cwiseAbs().maxCoeff() ==
          doctest::Approx(0.0));
  }
}

TEST_CASE("non-finite gradients are rejected") {
  std::mt19937_64 rng(5);
  DenseNet net({2, 2}, rng);
  DenseNet before = net;
  Adam adam(net, {1e-3});
  Gradients g = net.zero_grads();
  g.w[0](0, 0) = std::numeric_limits<double>::quiet_NaN();
  CHECK_FALSE(adam.step(net, g));
  CHECK(adam.rejected_count() == 1);
  CHECK(adam.step_count() == 0);
  CHECK((net.weights()[0] - before.weights()[0]).cwiseAbs().maxCoeff() ==
        doctest::Approx(0.0));
}

TEST_CASE("scalar quadratic converges to the target") {
  // minimize (w*x + b - 3)^2 at x = 1 -> optimum w + b = 3
  std::mt19937_64 rng(6);
  DenseNet net({1, 1}, rng);
  Adam adam(net, {1e-2});
  Vector in = Vector::Ones(1);
  double out = 0.0;
  for (int step = 0; step < 10000; ++step) {
    out = net.forward(in)(0);
    Matrix grad(1, 1);
    grad(0, 0) = 2.0 * (out - 3.0);
    backward_update(net, Matrix(in), grad, adam);
    if (std::abs(out - 3.0) < 1e-7) break;
  }
  CHECK(std::abs(net.forward(in)(0) - 3.0) < 1e-6);
}

TEST_CASE("gradient check on random small rectifier nets") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int trial = 0; trial < 5; ++trial) {
    DenseNet net({4, 6, 5, 2}, rng);
    Vector in(4);
    // keep pre-activations away from the rectifier kink
    for (int attempt = 0; attempt < 100; ++attempt) {
      for (int i = 0; i < 4; ++i) in(i) = u(rng);
      if (net.min_kink_distance(in) > 1e-3) break;
    }
    Vector target = Vector::Constant(2, 0.3);
    auto loss = [&](const Vector& y) { return 0.5 * (y - target).squaredNorm(); };
    auto loss_grad = [&](const Vector& y) { return Vector(y - target); };
    double err = gradient_check(net, in, loss, loss_grad);
    CHECK(err < 1e-4);
  }
}

TEST_CASE("gradient check is near-exact for a linear net") {
  std::mt19937_64 rng(8);
  DenseNet net({3, 2}, rng);
  Vector in(3);
  in << 0.2, -0.7, 1.1;
  Vector target = Vector::Zero(2);
  auto loss = [&](const Vector& y) { return 0.5 * (y - target).squaredNorm(); };
  auto loss_grad = [&](const Vector& y) { return Vector(y - target); };
  CHECK(gradient_check(net, in, loss, loss_grad) < 1e-8);
}

TEST_CASE("checkpoint round-trip is bit-exact") {
  std::mt19937_64 rng(9);
  DenseNet net({5, 16, 3}, rng);
  nlohmann::json j = net.to_json();
  std::string dumped = j.dump();
  DenseNet restored = DenseNet::from_json(nlohmann::json::parse(dumped));
  REQUIRE(restored.layer_sizes() == net.layer_sizes());
  for (size_t l = 0; l < net.layer_count(); ++l) {
    CHECK(restored.weights()[l] == net.weights()[l]);
    CHECK(restored.biases()[l] == net.biases()[l]);
  }
}

TEST_CASE("initialization is deterministic per seed and mode") {
  std::mt19937_64 a(11), b(11), c(12);
  DenseNet na({3, 8, 1}, a), nb({3, 8, 1}, b), nc({3, 8, 1}, c);
  CHECK(na.weights()[0] == nb.weights()[0]);
  CHECK(na.weights()[0] != nc.weights()[0]);

  std::mt19937_64 d(11);
  DenseNet nd({3, 8, 1}, d, InitMode::StandardNormal);
  // literal standard-normal draws are the scaled ones times sqrt(fan_in)
  CHECK(nd.weights()[0](0, 0) ==
        doctest::Approx(na.weights()[0](0, 0) * std::sqrt(3.0)));
}

TEST_SUITE_END();
