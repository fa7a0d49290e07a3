#include "nnmon/errors.hpp"
#include "nnmon/idx.hpp"
#include "nnmon/scores.hpp"
#include "nnmon/weights.hpp"

#include "../support.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>

using namespace nnmon;

namespace {

Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<Index>(xs.size()));
  Index i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

// Logits equal to the input: one identity layer.
Network identity_net(Index d) {
  return Network({Layer(Matrix::Identity(d, d), Vector::Zero(d), Activation::Identity)});
}

}  // namespace

TEST_CASE("max softmax score") {
  CHECK(max_softmax_score(vec({1000, 0})).value == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(std::abs(max_softmax_score(Vector::Zero(10)).value - 0.9) <= 1e-12);
  const double e = std::exp(1.0);
  CHECK(std::abs(max_softmax_score(vec({2, 0}), 2.0).value - (1 - e / (e + 1))) <= 1e-12);
  CHECK(max_softmax_score(vec({2, 0}), 2.0).value == doctest::Approx(0.2689).epsilon(1e-4));
  CHECK(confidence_verdict(0.59, 0.6) == Verdict::OoD);
  CHECK(confidence_verdict(0.6, 0.6) == Verdict::InDist);
}

TEST_CASE("odin with zero step equals max softmax") {
  std::mt19937_64 rng(8);
  const Network net = nnmon::testing::random_network({12, 16, 5}, rng);
  for (int i = 0; i < 100; ++i) {
    const Vector x = nnmon::testing::random_vector(12, rng);
    for (double t : {1.0, 3.0}) {
      CHECK(odin_score(net, x, t, 0.0).value == max_softmax_score(net, x, t).value);
    }
  }
}

TEST_CASE("odin step on logits (x, 0)") {
  // f(x) = (x, 0): a 1 -> 2 identity layer.
  Matrix w(2, 1);
  w << 1, 0;
  Network net({Layer(w, Vector::Zero(2), Activation::Identity)});
  const Vector x = vec({1.0});
  const Vector xp = odin_perturb(net, x, 1.0, 0.1);
  CHECK(xp(0) == doctest::Approx(1.1));
  CHECK(odin_score(net, x, 1.0, 0.1).value < max_softmax_score(net, x, 1.0).value);
  const Vector xm = odin_perturb(net, x, 1.0, 0.1, GradientObjective::Kind::MaxLogit);
  CHECK(xm(0) == doctest::Approx(1.1));
  CHECK_THROWS_AS(odin_perturb(net, x, 1.0, -0.1), ParameterError);
}

TEST_CASE("odin on the fixture model against an autograd reference") {
  const Network net = load_weights(nnmon::testing::fixture("mnist_mlp.json"));
  const auto data = load_idx(nnmon::testing::data_file("mnist/t10k-images-idx3-ubyte.gz"),
                             nnmon::testing::data_file("mnist/t10k-labels-idx1-ubyte.gz"));
  const Vector x = data.inputs.row(0).transpose();
  // Reference values computed with torch autograd in float64 on the same weights.
  const Vector ref_logits = vec({0.7428659474818846, -2.3779135144030725, 4.816154935617717, 6.183719916901329,
                                 -8.295038052123841, -2.1101723471291, -19.12930329961248, 21.449570732934045,
                                 -1.3009037637135956, 1.5484542162978303});
  CHECK((net.forward(x) - ref_logits).cwiseAbs().maxCoeff() < 1e-9);
  const Vector g = net.input_gradient(x, GradientObjective::log_max_softmax(3.0));
  CHECK(g.sum() == doctest::Approx(-0.2298910578133178).epsilon(1e-9));
  CHECK(g(300) == doctest::Approx(-0.00035403569225510333).epsilon(1e-9));
  CHECK(g(303) == doctest::Approx(-0.0034830601102852697).epsilon(1e-9));
  CHECK(odin_score(net, x, 3.0, 0.0014).value == doctest::Approx(0.011916059353722641).epsilon(1e-9));
  CHECK(max_softmax_score(net, x, 3.0).value == doctest::Approx(0.013514577858322552).epsilon(1e-9));
}

TEST_CASE("odin score does not grow with the step on in-distribution samples") {
  // Reference run (torch, same weights, first 200 test digits): 200/200 at T = 1 and T = 3.
  const Network net = load_weights(nnmon::testing::fixture("mnist_mlp.json"));
  const auto data = load_idx(nnmon::testing::data_file("mnist/t10k-images-idx3-ubyte.gz"),
                             nnmon::testing::data_file("mnist/t10k-labels-idx1-ubyte.gz"));
  for (double t : {1.0, 3.0}) {
    int ok = 0;
    for (Index i = 0; i < 200; ++i) {
      const Vector x = data.inputs.row(i).transpose();
      if (odin_score(net, x, t, 0.01).value <= odin_score(net, x, t, 0.0).value) ++ok;
    }
    CHECK(ok >= 180);
  }
}

TEST_CASE("shannon entropy") {
  CHECK(shannon_entropy(vec({1, 0, 0})) == 0.0);
  CHECK(std::abs(shannon_entropy(Vector::Constant(10, 0.1)) - std::log(10.0)) <= 1e-9);
  CHECK(std::abs(shannon_entropy(vec({0.5, 0.5})) - 0.693147180559945) <= 1e-9);
  CHECK_THROWS_AS(shannon_entropy(vec({0.5, 0.6})), NotADistributionError);
  CHECK_THROWS_AS(shannon_entropy(vec({1.5, -0.5})), NotADistributionError);
  CHECK_THROWS_AS(shannon_entropy(Vector()), NotADistributionError);
  CHECK_NOTHROW(shannon_entropy(vec({0.5, 0.5 + 5e-7})));
}

TEST_CASE("generalized entropy") {
  CHECK(generalized_entropy(vec({0, 1, 0}), 0.3) == 0.0);
  CHECK(std::abs(generalized_entropy(vec({0.5, 0.5}), 0.5) - 1.0) <= 1e-9);
  CHECK(std::abs(generalized_entropy(vec({0.9, 0.1}), 0.5) - 0.6) <= 1e-9);
  CHECK_THROWS_AS(generalized_entropy(vec({0.5, 0.5}), 0.0), ParameterError);
  CHECK_THROWS_AS(generalized_entropy(vec({0.5, 0.5}), 1.0), ParameterError);
  CHECK_THROWS_AS(generalized_entropy(vec({0.5, 0.5}), 0.5, 0), ParameterError);
  CHECK_THROWS_AS(generalized_entropy(vec({0.5, 0.5}), 0.5, 3), ParameterError);
  // Top-2 of (0.6, 0.3, 0.1): only the two largest terms.
  const double top2 = std::pow(0.6 * 0.4, 0.5) + std::pow(0.3 * 0.7, 0.5);
  CHECK(std::abs(generalized_entropy(vec({0.1, 0.6, 0.3}), 0.5, 2) - top2) <= 1e-12);
}

TEST_CASE("entropy properties") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    const Vector p = softmax(nnmon::testing::random_vector(10, rng, 3.0));
    // top-M = all classes is the untruncated sum, bit for bit.
    CHECK(generalized_entropy(p, 0.4, 10) == generalized_entropy(p, 0.4));
    // Permutation invariance.
    Vector q = p.reverse();
    CHECK(std::abs(shannon_entropy(q) - shannon_entropy(p)) <= 1e-12);
    CHECK(std::abs(generalized_entropy(q, 0.4) - generalized_entropy(p, 0.4)) <= 1e-12);
    // Uniform maximizes Shannon entropy on any support size.
    const Index k = 2 + trial % 9;
    Vector r(k);
    for (Index i = 0; i < k; ++i) r(i) = 1.0 + 0.2 * (u(rng) - 0.5);
    r /= r.sum();
    CHECK(shannon_entropy(r) <= std::log(static_cast<double>(k)) + 1e-12);
    CHECK(shannon_entropy(Vector::Constant(k, 1.0 / k)) == doctest::Approx(std::log(static_cast<double>(k))));
    CHECK(shannon_entropy(p) > 0.0);
    CHECK(generalized_entropy(p, 0.4) > 0.0);
  }
}

TEST_CASE("score shift invariance and temperature monotonicity") {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> c(-50.0, 50.0);
  for (int trial = 0; trial < 100; ++trial) {
    const Vector z = nnmon::testing::random_vector(10, rng, 4.0);
    const Vector zs = (z.array() + c(rng)).matrix();
    CHECK(std::abs(max_softmax_score(z, 2.0).value - max_softmax_score(zs, 2.0).value) <= 1e-12);
    CHECK(std::abs(shannon_entropy(softmax(z)) - shannon_entropy(softmax(zs))) <= 1e-12);
    CHECK(std::abs(generalized_entropy(softmax(z), 0.3, 5) - generalized_entropy(softmax(zs), 0.3, 5)) <= 1e-12);
    double prev = softmax(z, 1.0).maxCoeff();
    for (double t : {1.5, 2.0, 3.0, 10.0, 100.0}) {
      const double cur = softmax(z, t).maxCoeff();
      CHECK(cur <= prev + 1e-15);
      prev = cur;
    }
  }
  const Vector flat = Vector::Constant(4, 2.5);
  for (double t : {1.0, 3.0, 1000.0}) CHECK(softmax(flat, t).isApprox(Vector::Constant(4, 0.25)));
}

TEST_CASE("score config validation") {
  ScoreConfig cfg;
  CHECK_NOTHROW(cfg.validate(10));
  cfg.top_m = 11;
  CHECK_THROWS_AS(cfg.validate(10), ParameterError);
  cfg.top_m.reset();
  cfg.gamma = 1.0;
  CHECK_THROWS_AS(cfg.validate(10), ParameterError);
  cfg.gamma = 0.5;
  cfg.temperature = 0.0;
  CHECK_THROWS_AS(cfg.validate(10), ParameterError);
  CHECK(kDefaultOdinEpsilon == 0.0014);
}
