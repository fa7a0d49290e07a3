#include "nnmon/boxes.hpp"

#include "nnmon/errors.hpp"
#include "nnmon/kmeans.hpp"

#include <algorithm>
#include <limits>
#include <string>

namespace nnmon {

namespace {

void check_dims(Index got, Index expected) {
  if (got != expected) {
    throw InputShapeError("feature length " + std::to_string(got) + ", expected " +
                          std::to_string(expected));
  }
}

}  // namespace

BoxVerdict BoxMonitor::verdict(const Vector& features) const {
  check_dims(features.size(), dims());
  BoxVerdict out;
  for (Index i = 0; i < features.size(); ++i) {
    if (!(features(i) >= lower(i) && features(i) <= upper(i))) out.violated.push_back(i);
  }
  out.verdict = out.violated.empty() ? Verdict::InDist : Verdict::OoD;
  return out;
}

bool BoxMonitor::contains(const Vector& features) const {
  check_dims(features.size(), dims());
  return (features.array() >= lower.array()).all() && (features.array() <= upper.array()).all();
}

BoxMonitor build_box(const Matrix& features, double delta, int layer, FeatureSource source) {
  if (features.rows() == 0) throw InsufficientDataError("box monitor needs a nonempty build set");
  if (!(delta >= 0.0)) throw ParameterError("box buffer delta must be non-negative");
  BoxMonitor box;
  box.layer = layer;
  box.source = source;
  box.delta = delta;
  box.lower = features.colwise().minCoeff().transpose().array() - delta;
  box.upper = features.colwise().maxCoeff().transpose().array() + delta;
  return box;
}

BoxMonitor build_box(const Network& net, const Matrix& inputs, int layer, double delta,
                     FeatureSource source) {
  return build_box(net.batch_features(inputs, layer, source), delta, layer, source);
}

MultiBoxVerdict MultiBoxMonitor::verdict(const Vector& features) const {
  MultiBoxVerdict out;
  out.min_violations = std::numeric_limits<std::size_t>::max();
  for (std::size_t b = 0; b < boxes.size(); ++b) {
    const auto v = boxes[b].verdict(features);
    if (v.violated.size() < out.min_violations) out.min_violations = v.violated.size();
    if (v.verdict == Verdict::InDist) {
      out.box = static_cast<int>(b);
      out.min_violations = 0;
      break;
    }
  }
  out.verdict = out.box >= 0 ? Verdict::InDist : Verdict::OoD;
  return out;
}

MultiBoxMonitor build_multibox(const Matrix& features, double delta, int k, std::uint64_t seed,
                               bool standardize, int layer, FeatureSource source) {
  if (features.rows() == 0) throw InsufficientDataError("multi-box monitor needs a nonempty build set");
  if (!(delta >= 0.0)) throw ParameterError("box buffer delta must be non-negative");

  Matrix points = features;
  if (standardize && features.rows() > 1) {
    const Vector mean = features.colwise().mean().transpose();
    Vector sd = ((features.rowwise() - mean.transpose()).array().square().colwise().sum() /
                 static_cast<double>(features.rows() - 1))
                    .sqrt()
                    .transpose();
    sd = sd.unaryExpr([](double s) { return s > 0.0 ? s : 1.0; });
    points = (features.rowwise() - mean.transpose()).array().rowwise() / sd.transpose().array();
  }
  const KMeansResult clusters = kmeans(points, k, seed);

  MultiBoxMonitor mon;
  mon.layer = layer;
  mon.source = source;
  mon.clusters = k;
  mon.seed = seed;
  mon.delta = delta;
  mon.standardized = standardize;
  for (int c = 0; c < k; ++c) {
    std::vector<Index> members;
    for (std::size_t i = 0; i < clusters.assignment.size(); ++i) {
      if (clusters.assignment[i] == c) members.push_back(static_cast<Index>(i));
    }
    if (members.empty()) continue;
    mon.boxes.push_back(build_box(features(members, Eigen::all), delta, layer, source));
  }
  return mon;
}

MultiBoxMonitor build_multibox(const Network& net, const Matrix& inputs, int layer, double delta,
                               int k, std::uint64_t seed, bool standardize) {
  return build_multibox(net.batch_features(inputs, layer, FeatureSource::PostActivation), delta, k,
                        seed, standardize, layer);
}

NeuronSelectionVerdict NeuronSelectionMonitor::verdict(int predicted_class,
                                                       const Vector& pre_activation) const {
  if (predicted_class < 0 || static_cast<std::size_t>(predicted_class) >= classes.size()) {
    throw ParameterError("class " + std::to_string(predicted_class) + " outside 0.." +
                         std::to_string(static_cast<int>(classes.size()) - 1));
  }
  check_dims(pre_activation.size(), neurons);
  NeuronSelectionVerdict out;
  for (const auto& sel : classes[static_cast<std::size_t>(predicted_class)]) {
    const double v = pre_activation(sel.neuron);
    const bool deviates = sel.sign == NeuronSign::AlwaysPositive ? v < sel.bound : v > sel.bound;
    if (deviates) ++out.deviations;
  }
  out.verdict = out.deviations > threshold ? Verdict::OoD : Verdict::InDist;
  return out;
}

NeuronSelectionMonitor build_neuron_selection(const Matrix& pre_activation,
                                              const std::vector<int>& labels, int num_classes,
                                              int threshold, int layer) {
  if (static_cast<std::size_t>(pre_activation.rows()) != labels.size()) {
    throw ConsistencyError("feature rows and labels differ in count");
  }
  if (num_classes < 1) throw ParameterError("class count must be at least 1");
  if (threshold < 0) throw ParameterError("deviation threshold must be non-negative");

  const Index d = pre_activation.cols();
  const double inf = std::numeric_limits<double>::infinity();
  Matrix lo = Matrix::Constant(num_classes, d, inf);
  Matrix hi = Matrix::Constant(num_classes, d, -inf);
  std::vector<std::size_t> counts(static_cast<std::size_t>(num_classes), 0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int c = labels[i];
    if (c < 0 || c >= num_classes) {
      throw ConsistencyError("label " + std::to_string(c) + " outside 0.." +
                             std::to_string(num_classes - 1));
    }
    ++counts[static_cast<std::size_t>(c)];
    lo.row(c) = lo.row(c).cwiseMin(pre_activation.row(static_cast<Index>(i)));
    hi.row(c) = hi.row(c).cwiseMax(pre_activation.row(static_cast<Index>(i)));
  }

  NeuronSelectionMonitor mon;
  mon.layer = layer;
  mon.neurons = d;
  mon.threshold = threshold;
  mon.classes.resize(static_cast<std::size_t>(num_classes));
  for (int c = 0; c < num_classes; ++c) {
    if (counts[static_cast<std::size_t>(c)] == 0) {
      throw InsufficientDataError("class " + std::to_string(c) + " has no build samples");
    }
    for (Index j = 0; j < d; ++j) {
      if (lo(c, j) > 0.0) {
        mon.classes[static_cast<std::size_t>(c)].push_back({j, NeuronSign::AlwaysPositive, lo(c, j)});
      } else if (hi(c, j) < 0.0) {
        mon.classes[static_cast<std::size_t>(c)].push_back({j, NeuronSign::AlwaysNegative, hi(c, j)});
      }
    }
  }
  return mon;
}

NeuronSelectionMonitor build_neuron_selection(const Network& net, const Matrix& inputs,
                                              const std::vector<int>& labels, int layer,
                                              int threshold) {
  return build_neuron_selection(net.batch_features(inputs, layer, FeatureSource::PreActivation),
                                labels, static_cast<int>(net.dim(net.depth())), threshold, layer);
}

}  // namespace nnmon
