#pragma once

#include "nnmon/network.hpp"
#include "nnmon/types.hpp"

#include <optional>

namespace nnmon {

/// OoD score; higher means more likely out-of-distribution.
struct OodScore {
  double value = 0.0;
};

/// Default single-step perturbation magnitude for ODIN.
inline constexpr double kDefaultOdinEpsilon = 0.0014;

struct ScoreConfig {
  double temperature = 1.0;
  double epsilon = 0.0;
  double gamma = 0.1;
  std::optional<int> top_m;  // nullopt: all classes
  GradientObjective::Kind odin_objective = GradientObjective::Kind::LogMaxSoftmax;

  void validate(Index classes) const;
};

/// 1 - max softmax(logits, T).
OodScore max_softmax_score(const Vector& logits, double temperature = 1.0);
OodScore max_softmax_score(const Network& net, const Vector& input, double temperature = 1.0);

/// Temperature scaling plus one sign-gradient step of size epsilon that raises
/// the top-class score. epsilon = 0 reduces to max_softmax_score.
OodScore odin_score(const Network& net, const Vector& input, double temperature, double epsilon,
                    GradientObjective::Kind objective = GradientObjective::Kind::LogMaxSoftmax);

/// The perturbed input used by odin_score.
Vector odin_perturb(const Network& net, const Vector& input, double temperature, double epsilon,
                    GradientObjective::Kind objective = GradientObjective::Kind::LogMaxSoftmax);

/// -sum p log p (natural log, 0 log 0 = 0). Throws NotADistributionError.
double shannon_entropy(const Vector& p);

/// sum p^g (1-p)^g over all classes, or over the M most probable ones.
double generalized_entropy(const Vector& p, double gamma, std::optional<int> top_m = std::nullopt);

/// Accept (InDist) iff the top softmax probability reaches tau.
inline Verdict confidence_verdict(double max_probability, double tau) {
  return max_probability < tau ? Verdict::OoD : Verdict::InDist;
}

}  // namespace nnmon
