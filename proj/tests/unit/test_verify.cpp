#include "nnmon/errors.hpp"
#include "nnmon/verify.hpp"

#include "../support.hpp"

#include <doctest.h>

#include <random>

using namespace nnmon;

namespace {

Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<Index>(xs.size()));
  Index i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

// Layer 1 is an identity ReLU on R^2, layer 2 is y = x1 - x2.
Network suffix_net() {
  Matrix w2(1, 2);
  w2 << 1, -1;
  return Network({Layer(Matrix::Identity(2, 2), Vector::Zero(2), Activation::ReLU),
                  Layer(w2, Vector::Zero(1), Activation::Identity)});
}

UnsafeSet at_least(double b) { return UnsafeSet{{HalfSpace{vec({1}), b}}}; }

}  // namespace

TEST_CASE("interval propagation example") {
  const auto out = propagate_intervals(suffix_net(), 1, {vec({0, 0}), vec({1, 2})});
  CHECK(out.lower(0) == -2.0);
  CHECK(out.upper(0) == 1.0);
  const auto point = propagate_intervals(suffix_net(), 1, {vec({0.5, 0.25}), vec({0.5, 0.25})});
  CHECK(point.lower(0) == 0.25);
  CHECK(point.upper(0) == 0.25);
}

TEST_CASE("relu clamps interval bounds") {
  Network net({Layer(Matrix::Identity(1, 1), Vector::Zero(1), Activation::ReLU),
               Layer(Matrix::Identity(1, 1), Vector::Zero(1), Activation::Identity)});
  const auto out = propagate_intervals(net, 0, {vec({-3}), vec({2})});
  CHECK(out.lower(0) == 0.0);
  CHECK(out.upper(0) == 2.0);
  const auto neg = propagate_intervals(net, 0, {vec({-3}), vec({-1})});
  CHECK(neg.upper(0) == 0.0);
}

TEST_CASE("safety verdicts") {
  const IntervalVector box{vec({0, 0}), vec({1, 2})};
  const auto safe = check_safety(suffix_net(), 1, box, at_least(2));
  CHECK(safe.verdict == SafetyVerdict::SafeVerified);
  REQUIRE(safe.constraint_upper.size() == 1);
  CHECK(safe.constraint_upper[0] == 1.0);
  CHECK(check_safety(suffix_net(), 1, box, at_least(0.5)).verdict == SafetyVerdict::Unknown);
  CHECK(check_safety(suffix_net(), 1, box, at_least(1.0)).verdict == SafetyVerdict::Unknown);
  CHECK(check_safety(suffix_net(), 1, box, UnsafeSet{{HalfSpace{vec({0}), 1}}}).verdict ==
        SafetyVerdict::SafeVerified);
  CHECK(to_string(SafetyVerdict::SafeVerified) == "safe-verified");
  CHECK_THROWS_AS(check_safety(suffix_net(), 1, box, UnsafeSet{}), ParameterError);
  CHECK_THROWS_AS(check_safety(suffix_net(), 1, box, UnsafeSet{{HalfSpace{vec({1, 1}), 0}}}), InputShapeError);
}

TEST_CASE("box monitor entry point") {
  BoxMonitor m;
  m.layer = 1;
  m.lower = vec({0, 0});
  m.upper = vec({1, 2});
  CHECK(check_safety(suffix_net(), m, at_least(2)).verdict == SafetyVerdict::SafeVerified);
  CHECK(check_safety(suffix_net(), m, at_least(0.5)).verdict == SafetyVerdict::Unknown);
}

TEST_CASE("propagation validation") {
  CHECK_THROWS_AS(propagate_intervals(suffix_net(), 3, {vec({0}), vec({1})}), LayerIndexError);
  CHECK_THROWS_AS(propagate_intervals(suffix_net(), 1, {vec({0}), vec({1})}), InputShapeError);
  CHECK_THROWS_AS(propagate_intervals(suffix_net(), 1, {vec({1, 0}), vec({0, 0})}), ParameterError);
}

TEST_CASE("soundness and monotonicity on random networks") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    const Network net = nnmon::testing::random_network({3, 6, 5, 4}, rng);
    const int layer = trial % 3;
    const Index d = net.dim(layer);
    const Vector c = nnmon::testing::random_vector(d, rng);
    const Vector r = nnmon::testing::random_vector(d, rng).cwiseAbs();
    const IntervalVector box{c - r, c + r};
    const IntervalVector wide{c - 2 * r, c + 2 * r};
    const auto out = propagate_intervals(net, layer, box);
    const auto out_wide = propagate_intervals(net, layer, wide);
    CHECK((out_wide.lower.array() <= out.lower.array()).all());
    CHECK((out_wide.upper.array() >= out.upper.array()).all());
    for (int s = 0; s < 200; ++s) {
      Vector v(d);
      for (Index i = 0; i < d; ++i) v(i) = box.lower(i) + u(rng) * (box.upper(i) - box.lower(i));
      CHECK(out.contains(net.forward_from(layer, v), 1e-9));
    }
  }
}

TEST_CASE("unsafe-set parsing") {
  const auto s = parse_unsafe_set(R"({"constraints": [{"a": [1, -1], "b": 0.5}]})");
  REQUIRE(s.constraints.size() == 1);
  CHECK(s.constraints[0].a == vec({1, -1}));
  CHECK(s.constraints[0].b == 0.5);
  CHECK(s.contains(vec({2, 1})));
  CHECK_FALSE(s.contains(vec({1, 1})));
  CHECK_THROWS_AS(parse_unsafe_set("{"), FormatError);
  CHECK_THROWS_AS(parse_unsafe_set(R"({"constraints": []})"), FormatError);
  CHECK_THROWS_AS(parse_unsafe_set(R"({"constraints": [{"a": [1, "x"], "b": 0}]})"), FormatError);
  CHECK_THROWS_AS(parse_unsafe_set(R"({"constraints": [{"a": [1]}]})"), FormatError);
  CHECK_THROWS_AS(load_unsafe_set("/nonexistent/unsafe.json"), FormatError);
}
