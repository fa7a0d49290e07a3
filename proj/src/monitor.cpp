#include "nnmon/monitor.hpp"

#include "nnmon/errors.hpp"

namespace nnmon {
namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

Index monitor_width(const AnyMonitor& m) {
  return std::visit(overloaded{
                        [](const BoxMonitor& b) { return b.dims(); },
                        [](const MultiBoxMonitor& b) { return b.boxes.empty() ? Index{0} : b.boxes.front().dims(); },
                        [](const NeuronSelectionMonitor& n) { return n.neurons; },
                        [](const PatternMonitor& p) { return p.rule().neurons(); },
                        [](const GaussianIntervalMonitor& g) { return g.stats.mean.size(); },
                        [](const MahalanobisMonitor& mm) {
                          return mm.class_means.empty() ? Index{0} : mm.class_means.front().size();
                        },
                    },
                    m);
}

}  // namespace

std::string monitor_kind(const AnyMonitor& monitor) {
  static const char* const names[] = {"box", "multibox", "neuron-select", "pattern", "gaussian", "mahalanobis"};
  return names[monitor.index()];
}

int monitor_layer(const AnyMonitor& monitor) {
  return std::visit(overloaded{
                        [](const PatternMonitor& p) { return p.layer(); },
                        [](const GaussianIntervalMonitor& g) { return g.stats.layer; },
                        [](const auto& m) { return m.layer; },
                    },
                    monitor);
}

FeatureSource monitor_source(const AnyMonitor& monitor) {
  return std::visit(overloaded{
                        [](const PatternMonitor& p) { return p.rule().source; },
                        [](const NeuronSelectionMonitor&) { return FeatureSource::PreActivation; },
                        [](const auto& m) { return m.source; },
                    },
                    monitor);
}

void check_compatible(const AnyMonitor& monitor, const Network& net) {
  const int layer = monitor_layer(monitor);
  if (layer < 1 || layer > net.depth()) {
    throw LayerIndexError("monitor reads layer " + std::to_string(layer) + ", network has layers 1.." +
                          std::to_string(net.depth()));
  }
  if (monitor_width(monitor) != net.dim(layer)) {
    throw ConsistencyError("monitor expects " + std::to_string(monitor_width(monitor)) +
                           " neurons, layer " + std::to_string(layer) + " has " +
                           std::to_string(net.dim(layer)));
  }
}

MonitorResult evaluate(const AnyMonitor& monitor, const Network& net, const Vector& input) {
  const int layer = monitor_layer(monitor);
  const FeatureVector fv = net.features(input, layer);
  const Vector& feats = monitor_source(monitor) == FeatureSource::PreActivation ? fv.pre_activation : fv.values;
  const Vector logits = net.forward_from(layer, fv.values);
  const Vector probs = softmax(logits);

  MonitorResult r;
  r.predicted = static_cast<int>(argmax(logits));
  r.confidence = probs.maxCoeff();
  std::visit(overloaded{
                 [&](const BoxMonitor& m) {
                   const auto v = m.verdict(feats);
                   r.verdict = v.verdict;
                   r.score = static_cast<double>(v.violated.size());
                 },
                 [&](const MultiBoxMonitor& m) {
                   const auto v = m.verdict(feats);
                   r.verdict = v.verdict;
                   r.score = static_cast<double>(v.min_violations);
                 },
                 [&](const NeuronSelectionMonitor& m) {
                   const auto v = m.verdict(r.predicted, feats);
                   r.verdict = v.verdict;
                   r.score = v.deviations;
                 },
                 [&](const PatternMonitor& m) {
                   const auto v = m.verdict(feats);
                   r.verdict = v.verdict;
                   r.score = v.min_distance ? static_cast<double>(*v.min_distance)
                                            : static_cast<double>(m.distance_limit() + 1);
                 },
                 [&](const GaussianIntervalMonitor& m) {
                   const auto v = m.verdict(feats);
                   r.verdict = v.verdict;
                   r.score = v.violations;
                 },
                 [&](const MahalanobisMonitor& m) {
                   r.score = m.score(feats);
                   r.verdict = r.score > m.threshold ? Verdict::OoD : Verdict::InDist;
                 },
             },
             monitor);
  return r;
}

}  // namespace nnmon
