#pragma once

#include "nnmon/network.hpp"
#include "nnmon/types.hpp"

#include <cstdint>
#include <vector>

namespace nnmon {

struct BoxVerdict {
  Verdict verdict = Verdict::InDist;
  std::vector<Index> violated;  // dimensions outside their closed interval
};

/// Per-neuron closed intervals [min - delta, max + delta] over a build set.
struct BoxMonitor {
  int layer = 0;
  FeatureSource source = FeatureSource::PostActivation;
  Vector lower;
  Vector upper;
  double delta = 0.0;

  Index dims() const { return lower.size(); }
  BoxVerdict verdict(const Vector& features) const;
  bool contains(const Vector& features) const;
};

/// Rows of `features` are build-set samples of the monitored layer.
BoxMonitor build_box(const Matrix& features, double delta, int layer = 0,
                     FeatureSource source = FeatureSource::PostActivation);
BoxMonitor build_box(const Network& net, const Matrix& inputs, int layer, double delta,
                     FeatureSource source = FeatureSource::PostActivation);

struct MultiBoxVerdict {
  Verdict verdict = Verdict::InDist;
  int box = -1;                  // first accepting box, -1 if none
  std::size_t min_violations = 0;  // fewest violated dimensions over all boxes
};

/// One box per non-empty k-means cluster of the build set.
struct MultiBoxMonitor {
  int layer = 0;
  FeatureSource source = FeatureSource::PostActivation;
  std::vector<BoxMonitor> boxes;
  int clusters = 1;
  std::uint64_t seed = 0;
  double delta = 0.0;
  bool standardized = false;

  MultiBoxVerdict verdict(const Vector& features) const;
};

/// Clusters with seeded k-means (optionally on per-neuron standardized values)
/// and boxes each cluster's raw features. k = 1 gives exactly build_box.
MultiBoxMonitor build_multibox(const Matrix& features, double delta, int k, std::uint64_t seed,
                               bool standardize = false, int layer = 0,
                               FeatureSource source = FeatureSource::PostActivation);
MultiBoxMonitor build_multibox(const Network& net, const Matrix& inputs, int layer, double delta,
                               int k, std::uint64_t seed, bool standardize = false);

enum class NeuronSign { AlwaysPositive, AlwaysNegative };

struct SelectedNeuron {
  Index neuron = 0;
  NeuronSign sign = NeuronSign::AlwaysPositive;
  double bound = 0.0;  // build-set extreme nearest zero
};

struct NeuronSelectionVerdict {
  Verdict verdict = Verdict::InDist;
  int deviations = 0;
};

/// Class-conditional selection of neurons whose pre-activation sign never
/// changes within a class. A query deviates on a selected neuron when it
/// crosses the recorded bound towards (or past) zero.
struct NeuronSelectionMonitor {
  int layer = 0;
  Index neurons = 0;
  std::vector<std::vector<SelectedNeuron>> classes;
  int threshold = 0;

  NeuronSelectionVerdict verdict(int predicted_class, const Vector& pre_activation) const;
};

NeuronSelectionMonitor build_neuron_selection(const Matrix& pre_activation,
                                              const std::vector<int>& labels, int num_classes,
                                              int threshold = 0, int layer = 0);
NeuronSelectionMonitor build_neuron_selection(const Network& net, const Matrix& inputs,
                                              const std::vector<int>& labels, int layer,
                                              int threshold = 0);

}  // namespace nnmon
