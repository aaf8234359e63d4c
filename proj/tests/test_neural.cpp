#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <filesystem>
#include <sstream>
#include <vector>

#include "doctest.h"
#include "nbfrom/neural.hpp"
#include "nbfrom/random.hpp"
#include "oracles.hpp"

using nbfrom::DenseMatrix;
using nbfrom::Mlp;

namespace {

double loss_at(Mlp net, const std::vector<double>& params, const DenseMatrix& x, const DenseMatrix& y) {
  std::ranges::copy(params, net.parameters().begin());
  return nbfrom::mse_loss(net, x, y);
}

}  // namespace

TEST_CASE("init_network: zero biases, Glorot bounds, determinism") {
  const Mlp tiny = nbfrom::init_network({2, 1}, 7);
  CHECK(tiny.bias(0)[0] == 0.0);

  const Mlp a = nbfrom::init_network({2, 40, 1}, 3);
  const Mlp b = nbfrom::init_network({2, 40, 1}, 3);
  CHECK(a == b);
  const double bound = std::sqrt(6.0 / 42.0);
  double widest = 0.0;
  for (double w : a.weights(0)) widest = std::max(widest, std::fabs(w));
  CHECK(widest <= bound);
  CHECK(widest > 0.8 * bound);  // 80 draws should come close to the edge
  for (double v : a.bias(0)) CHECK(v == 0.0);

  CHECK(nbfrom::init_network({2, 40, 1}, 4) != a);
  CHECK_THROWS_AS(nbfrom::init_network({3}, 1), std::invalid_argument);
  CHECK_THROWS_AS(nbfrom::init_network({3, 0, 1}, 1), std::invalid_argument);
}

TEST_CASE("forward: hand-computed values") {
  Mlp zero({3, 4, 2});
  const auto out = nbfrom::forward(zero, std::vector<double>{1.0, -2.0, 3.0});
  CHECK(out == std::vector<double>{0.0, 0.0});

  Mlp ident({1, 1});
  ident.weights(0)[0] = 1.0;
  CHECK(nbfrom::forward(ident, std::vector<double>{0.5})[0] == 0.5);

  Mlp net({1, 2, 1});
  net.weights(0)[0] = 0.5;
  net.weights(0)[1] = -1.5;
  net.bias(0)[0] = 0.1;
  net.bias(0)[1] = 0.2;
  net.weights(1)[0] = 2.0;
  net.weights(1)[1] = 0.3;
  net.bias(1)[0] = -0.4;
  const double x = 0.7;
  const double expected = 2.0 * std::tanh(0.5 * x + 0.1) + 0.3 * std::tanh(-1.5 * x + 0.2) - 0.4;
  CHECK(nbfrom::forward(net, std::vector<double>{x})[0] == doctest::Approx(expected).epsilon(1e-15));

  CHECK_THROWS_AS(nbfrom::forward(net, std::vector<double>{1.0, 2.0}), std::invalid_argument);
}

TEST_CASE("mse_gradient: analytic cases") {
  Mlp lin({1, 1});
  lin.weights(0)[0] = 2.0;
  std::vector<double> g(lin.parameter_count());
  DenseMatrix x(1, 1, {1.0}), t(1, 1, {0.0});
  CHECK(nbfrom::mse_gradient(lin, x, t, g) == doctest::Approx(4.0));
  CHECK(g[0] == doctest::Approx(4.0));
  CHECK(g[1] == doctest::Approx(4.0));

  // Prediction equal to target: gradient vanishes everywhere.
  const Mlp net = nbfrom::init_network({2, 5, 1}, 1);
  DenseMatrix xs(3, 2, {0.1, 0.2, -0.3, 0.4, 0.5, -0.6});
  const DenseMatrix exact = nbfrom::forward_batch(net, xs);
  std::vector<double> g2(net.parameter_count(), 1.0);
  CHECK(nbfrom::mse_gradient(net, xs, exact, g2) == 0.0);
  for (double v : g2) CHECK(v == 0.0);

  CHECK_THROWS_AS(nbfrom::mse_gradient(net, xs, DenseMatrix(2, 1), g2), std::invalid_argument);
  CHECK_THROWS_AS(nbfrom::mse_gradient(net, DenseMatrix(0, 2), DenseMatrix(0, 1), g2),
                  std::invalid_argument);
}

TEST_CASE("mse_gradient: matches central differences on random small networks") {
  nbfrom::Rng rng(2024);
  int checked = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t hidden = 1 + rng.below(3);
    std::vector<std::size_t> sizes{1 + rng.below(3)};
    for (std::size_t h = 0; h < hidden; ++h) sizes.push_back(1 + rng.below(8));
    sizes.push_back(1 + rng.below(2));
    Mlp net = nbfrom::init_network(sizes, rng.next());
    for (double& b : net.parameters()) b += 0.1 * rng.uniform(-1.0, 1.0);

    const std::size_t batch = 1 + rng.below(6);
    DenseMatrix x(batch, sizes.front()), y(batch, sizes.back());
    for (double& v : x.data()) v = rng.uniform(-1.5, 1.5);
    for (double& v : y.data()) v = rng.uniform(-1.0, 1.0);

    std::vector<double> analytic(net.parameter_count());
    nbfrom::mse_gradient(net, x, y, analytic);
    const std::vector<double> params(net.parameters().begin(), net.parameters().end());
    const auto numeric = oracle::central_difference_gradient(
        [&](const std::vector<double>& p) { return loss_at(net, p, x, y); }, params, 1e-6);
    for (std::size_t i = 0; i < params.size(); ++i) {
      const double scale = std::max({std::fabs(analytic[i]), std::fabs(numeric[i]), 1e-3});
      CHECK(std::fabs(analytic[i] - numeric[i]) <= 1e-6 * scale);
      ++checked;
    }
  }
  CHECK(checked > 1000);
}

TEST_CASE("adam_step: fixed point, closed-form first step, errors") {
  nbfrom::AdamOptions opts;
  std::vector<double> p{1.5, -2.0};
  nbfrom::AdamState s(2);
  std::vector<double> zero{0.0, 0.0};
  nbfrom::adam_step(s, p, zero, 1e-3, opts);
  CHECK(p == std::vector<double>{1.5, -2.0});
  CHECK(s.step_count == 1);

  for (double g : {0.37, -5.0, 1e-4}) {
    std::vector<double> q{0.25};
    nbfrom::AdamState st(1);
    nbfrom::adam_step(st, q, std::vector<double>{g}, 1e-3, opts);
    // t = 1: m_hat = g, v_hat = g^2.
    CHECK(q[0] == doctest::Approx(0.25 - 1e-3 * g / (std::fabs(g) + 1e-8)).epsilon(1e-14));
  }

  std::vector<double> q{1.0};
  nbfrom::AdamState st(1);
  nbfrom::AdamOptions decay = opts;
  decay.weight_decay = 0.5;
  nbfrom::adam_step(st, q, std::vector<double>{0.0}, 0.1, decay);
  CHECK(q[0] == doctest::Approx(0.95));

  Mlp net({2, 3, 1});
  nbfrom::AdamState ns(net.parameter_count());
  std::vector<double> bad(net.parameter_count(), 0.0);
  bad[net.bias_offset(0) + 1] = std::nan("");
  try {
    nbfrom::adam_step(ns, net, bad, 1e-3, opts);
    FAIL("expected throw");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()).find("layer 0 bias") != std::string::npos);
  }
  CHECK(ns.step_count == 0);
}

TEST_CASE("adam on networks decays weights only") {
  Mlp net({1, 1});
  net.weights(0)[0] = 1.0;
  net.bias(0)[0] = 1.0;
  nbfrom::AdamState st(net.parameter_count());
  nbfrom::AdamOptions opts;
  opts.weight_decay = 0.5;
  nbfrom::adam_step(st, net, std::vector<double>{0.0, 0.0}, 0.1, opts);
  CHECK(net.weights(0)[0] == doctest::Approx(0.95));
  CHECK(net.bias(0)[0] == 1.0);
}

TEST_CASE("lr schedule") {
  const nbfrom::StepLrSchedule s{1e-3, 45, 0.9};
  CHECK(s.lr_at(0) == 1e-3);
  CHECK(s.lr_at(44) == 1e-3);
  CHECK(s.lr_at(45) == doctest::Approx(9e-4).epsilon(1e-15));
  CHECK(s.lr_at(90) == doctest::Approx(8.1e-4).epsilon(1e-15));
  const nbfrom::StepLrSchedule flat{2e-3, 10, 1.0};
  for (std::size_t e : {0, 9, 10, 1000}) CHECK(flat.lr_at(e) == 2e-3);
}

TEST_CASE("training fits sin(3x) and is reproducible") {
  DenseMatrix x(256, 1), y(256, 1);
  for (std::size_t i = 0; i < 256; ++i) {
    x(i, 0) = -1.0 + 2.0 * static_cast<double>(i) / 255.0;
    y(i, 0) = std::sin(3.0 * x(i, 0));
  }
  nbfrom::TrainOptions opts;
  opts.epochs = 2000;
  opts.schedule = {1e-3, 2000, 1.0};
  Mlp a = nbfrom::init_network({1, 16, 16, 1}, 1);
  Mlp b = a;
  const auto ha = nbfrom::train_mse(a, x, y, opts);
  const auto hb = nbfrom::train_mse(b, x, y, opts);
  CHECK(a == b);
  CHECK(ha == hb);
  CHECK(nbfrom::mse_loss(a, x, y) < 1e-3);
  CHECK(ha.back() < ha.front());

  opts.batch_size = 32;
  opts.epochs = 3;
  Mlp c = nbfrom::init_network({1, 16, 16, 1}, 42), d = c;
  nbfrom::train_mse(c, x, y, opts);
  nbfrom::train_mse(d, x, y, opts);
  CHECK(c == d);
}

TEST_CASE("training reports non-finite loss with the label and epoch") {
  DenseMatrix x(4, 1, {0, 1, 2, 3}), y(4, 1, {0, 1e300, 0, 0});
  Mlp net = nbfrom::init_network({1, 1}, 1);
  net.weights(0)[0] = 1e300;
  nbfrom::TrainOptions opts;
  opts.epochs = 2;
  try {
    nbfrom::train_mse(net, x, y, opts, "coef[u1,3]");
    FAIL("expected throw");
  } catch (const std::runtime_error& e) {
    const std::string msg = e.what();
    CHECK(msg.find("coef[u1,3]") != std::string::npos);
    CHECK(msg.find("epoch 0") != std::string::npos);
  }
}

TEST_CASE("serialization round-trips exactly and rejects corrupt input") {
  const Mlp net = nbfrom::init_network({2, 7, 3, 1}, 99);
  std::stringstream buf(std::ios::in | std::ios::out | std::ios::binary);
  nbfrom::write_network(buf, net);
  const std::string bytes = buf.str();
  CHECK(bytes.size() == 16 + 8 * (1 + 4) + 8 * net.parameter_count());
  CHECK(bytes.substr(0, 10) == "NBFROM-MLP");
  std::stringstream in(bytes);
  CHECK(nbfrom::read_network(in) == net);

  std::stringstream truncated(bytes.substr(0, bytes.size() - 3));
  CHECK_THROWS(nbfrom::read_network(truncated));
  std::string wrong = bytes;
  wrong[0] = 'X';
  std::stringstream bad(wrong);
  CHECK_THROWS(nbfrom::read_network(bad));

  const auto path = std::filesystem::temp_directory_path() / "nbfrom_test_net.bin";
  nbfrom::save_network(path, net);
  CHECK(nbfrom::load_network(path) == net);
  std::filesystem::remove(path);
}
