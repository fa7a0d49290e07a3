#include "nnmon/scores.hpp"

#include "nnmon/errors.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

namespace nnmon {

namespace {

void check_distribution(const Vector& p) {
  if (p.size() == 0) throw NotADistributionError("empty distribution");
  if (!p.allFinite() || (p.array() < 0.0).any()) {
    throw NotADistributionError("distribution entries must be finite and non-negative");
  }
  if (std::abs(p.sum() - 1.0) > 1e-6) {
    throw NotADistributionError("distribution sums to " + std::to_string(p.sum()));
  }
}

}  // namespace

void ScoreConfig::validate(Index classes) const {
  if (!(temperature > 0.0)) throw ParameterError("temperature must be positive");
  if (!(epsilon >= 0.0)) throw ParameterError("epsilon must be non-negative");
  if (!(gamma > 0.0 && gamma < 1.0)) throw ParameterError("gamma must lie in (0, 1)");
  if (top_m && (*top_m < 1 || *top_m > classes)) {
    throw ParameterError("top-M must lie in 1.." + std::to_string(classes));
  }
}

OodScore max_softmax_score(const Vector& logits, double temperature) {
  return {1.0 - softmax(logits, temperature).maxCoeff()};
}

OodScore max_softmax_score(const Network& net, const Vector& input, double temperature) {
  return max_softmax_score(net.forward(input), temperature);
}

Vector odin_perturb(const Network& net, const Vector& input, double temperature, double epsilon,
                    GradientObjective::Kind objective) {
  if (!(epsilon >= 0.0)) throw ParameterError("epsilon must be non-negative");
  if (!(temperature > 0.0)) throw ParameterError("temperature must be positive");
  if (epsilon == 0.0) return input;
  const Vector grad = net.input_gradient(input, {objective, temperature});
  const Vector step = grad.unaryExpr([](double g) { return g > 0.0 ? 1.0 : (g < 0.0 ? -1.0 : 0.0); });
  return input + epsilon * step;
}

OodScore odin_score(const Network& net, const Vector& input, double temperature, double epsilon,
                    GradientObjective::Kind objective) {
  return max_softmax_score(net, odin_perturb(net, input, temperature, epsilon, objective),
                           temperature);
}

double shannon_entropy(const Vector& p) {
  check_distribution(p);
  double h = 0.0;
  for (Index i = 0; i < p.size(); ++i) {
    if (p(i) > 0.0) h -= p(i) * std::log(p(i));
  }
  return h;
}

double generalized_entropy(const Vector& p, double gamma, std::optional<int> top_m) {
  if (!(gamma > 0.0 && gamma < 1.0)) throw ParameterError("gamma must lie in (0, 1)");
  check_distribution(p);
  std::vector<double> probs(p.data(), p.data() + p.size());
  std::size_t m = probs.size();
  if (top_m) {
    if (*top_m < 1 || static_cast<std::size_t>(*top_m) > probs.size()) {
      throw ParameterError("top-M must lie in 1.." + std::to_string(probs.size()));
    }
    m = static_cast<std::size_t>(*top_m);
  }
  if (m < probs.size()) {
    std::partial_sort(probs.begin(), probs.begin() + static_cast<std::ptrdiff_t>(m), probs.end(),
                      std::greater<>());
  }
  double g = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    g += std::pow(probs[j], gamma) * std::pow(1.0 - probs[j], gamma);
  }
  return g;
}

}  // namespace nnmon
