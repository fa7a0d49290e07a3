#pragma once

#include "nnmon/idx.hpp"
#include "nnmon/network.hpp"
#include "nnmon/types.hpp"

#include <string>
#include <vector>

namespace nnmon {

/// Layer-l neuron values of a dataset, one row per sample.
struct FeatureMatrix {
  int layer = 0;
  FeatureSource source = FeatureSource::PostActivation;
  Matrix values;
  std::vector<int> labels;
};

FeatureMatrix extract_features(const Network& net, const LabeledDataset& data, int layer,
                               FeatureSource source = FeatureSource::PostActivation);

/// Single-input counterpart of extract_features.
Vector monitored_features(const Network& net, const Vector& input, int layer, FeatureSource source);

/// CSV cache: header "label,n0,n1,...", comment line "# layer=<l> source=<post|pre>".
void save_features_csv(const FeatureMatrix& features, const std::string& path);
FeatureMatrix load_features_csv(const std::string& path);

}  // namespace nnmon
