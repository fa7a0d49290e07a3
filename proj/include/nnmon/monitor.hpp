#pragma once

#include "nnmon/boxes.hpp"
#include "nnmon/gaussian.hpp"
#include "nnmon/network.hpp"
#include "nnmon/patterns.hpp"

#include <string>
#include <variant>

namespace nnmon {

using AnyMonitor = std::variant<BoxMonitor, MultiBoxMonitor, NeuronSelectionMonitor, PatternMonitor,
                                GaussianIntervalMonitor, MahalanobisMonitor>;

/// "box", "multibox", "neuron-select", "pattern", "gaussian", "mahalanobis".
std::string monitor_kind(const AnyMonitor& monitor);
int monitor_layer(const AnyMonitor& monitor);
/// Feature source the monitor reads (neuron selection always reads pre-activation).
FeatureSource monitor_source(const AnyMonitor& monitor);

struct MonitorResult {
  Verdict verdict = Verdict::InDist;
  /// Graded OoD score, higher means further from the build data:
  /// violated dimensions (box, gaussian), fewest violations over boxes (multibox),
  /// deviations of the predicted class (neuron-select), Hamming distance capped
  /// at limit + 1 (pattern), distance (mahalanobis).
  double score = 0.0;
  int predicted = -1;
  double confidence = 0.0;
};

MonitorResult evaluate(const AnyMonitor& monitor, const Network& net, const Vector& input);

/// Checks that the monitor reads a layer of `net` with matching width.
void check_compatible(const AnyMonitor& monitor, const Network& net);

}  // namespace nnmon
