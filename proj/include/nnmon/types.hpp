#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <string_view>

namespace nnmon {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

/// Binary decision returned by every monitor.
enum class Verdict { InDist, OoD };

inline std::string_view to_string(Verdict v) {
  return v == Verdict::InDist ? "in-dist" : "ood";
}

/// Which value of a neuron a monitor observes: after or before its activation.
enum class FeatureSource { PostActivation, PreActivation };

inline std::string_view to_string(FeatureSource s) {
  return s == FeatureSource::PostActivation ? "post" : "pre";
}

}  // namespace nnmon
