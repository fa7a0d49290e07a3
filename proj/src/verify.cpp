#include "nnmon/verify.hpp"

#include "nnmon/errors.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <sstream>

namespace nnmon {

bool IntervalVector::contains(const Vector& v, double slack) const {
  if (v.size() != size()) return false;
  return (v.array() >= lower.array() - slack).all() && (v.array() <= upper.array() + slack).all();
}

IntervalVector propagate_intervals(const Network& net, int layer, const IntervalVector& box) {
  if (layer < 0 || layer > net.depth()) {
    throw LayerIndexError("layer " + std::to_string(layer) + " outside 0.." + std::to_string(net.depth()));
  }
  if (box.lower.size() != net.dim(layer) || box.upper.size() != net.dim(layer)) {
    throw InputShapeError("box has dimension " + std::to_string(box.lower.size()) + ", layer " +
                          std::to_string(layer) + " has " + std::to_string(net.dim(layer)));
  }
  if ((box.lower.array() > box.upper.array()).any()) throw ParameterError("box is empty (lower > upper)");

  Vector lo = box.lower;
  Vector hi = box.upper;
  for (int l = layer + 1; l <= net.depth(); ++l) {
    const Layer& f = net.layer(l);
    const Matrix pos = f.weights.cwiseMax(0.0);
    const Matrix neg = f.weights.cwiseMin(0.0);
    Vector new_lo = pos * lo + neg * hi + f.bias;
    Vector new_hi = pos * hi + neg * lo + f.bias;
    lo = apply_activation(f.activation, new_lo);
    hi = apply_activation(f.activation, new_hi);
  }
  return {std::move(lo), std::move(hi)};
}

bool UnsafeSet::contains(const Vector& y) const {
  for (const auto& h : constraints) {
    if (!(h.a.dot(y) >= h.b)) return false;
  }
  return true;
}

VerificationOutcome check_safety(const Network& net, int layer, const IntervalVector& box,
                                 const UnsafeSet& unsafe) {
  if (unsafe.constraints.empty()) throw ParameterError("unsafe set needs at least one constraint");
  VerificationOutcome out;
  out.output_bounds = propagate_intervals(net, layer, box);
  const auto& ob = out.output_bounds;
  bool all_below = true;
  for (std::size_t k = 0; k < unsafe.constraints.size(); ++k) {
    const auto& h = unsafe.constraints[k];
    if (h.a.size() != ob.size()) {
      throw InputShapeError("constraint " + std::to_string(k) + " has " + std::to_string(h.a.size()) +
                            " coefficients, output has " + std::to_string(ob.size()));
    }
    const double upper = (h.a.array() * ob.lower.array()).max(h.a.array() * ob.upper.array()).sum();
    out.constraint_upper.push_back(upper);
    if (!(upper < h.b)) all_below = false;
  }
  if (all_below) out.verdict = SafetyVerdict::SafeVerified;
  return out;
}

VerificationOutcome check_safety(const Network& net, const BoxMonitor& monitor,
                                 const UnsafeSet& unsafe) {
  IntervalVector box{monitor.lower, monitor.upper};
  if (monitor.source == FeatureSource::PreActivation) {
    const auto act = net.layer(monitor.layer).activation;
    box = {apply_activation(act, box.lower), apply_activation(act, box.upper)};
  }
  return check_safety(net, monitor.layer, box, unsafe);
}

UnsafeSet parse_unsafe_set(const std::string& json_text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError("", std::string("invalid JSON: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("constraints") || !doc["constraints"].is_array()) {
    throw FormatError("constraints", "expected an array of {a, b} objects");
  }
  UnsafeSet set;
  const auto& arr = doc["constraints"];
  for (std::size_t k = 0; k < arr.size(); ++k) {
    const std::string where = "constraints[" + std::to_string(k) + "]";
    const auto& c = arr[k];
    if (!c.is_object() || !c.contains("a") || !c["a"].is_array() || !c.contains("b") ||
        !c["b"].is_number()) {
      throw FormatError(where, "expected {\"a\": [numbers], \"b\": number}");
    }
    HalfSpace h;
    h.a.resize(static_cast<Index>(c["a"].size()));
    for (std::size_t j = 0; j < c["a"].size(); ++j) {
      if (!c["a"][j].is_number()) throw FormatError(where + ".a[" + std::to_string(j) + "]", "not a number");
      h.a(static_cast<Index>(j)) = c["a"][j].get<double>();
    }
    h.b = c["b"].get<double>();
    if (!h.a.allFinite() || !std::isfinite(h.b)) throw FormatError(where, "coefficients must be finite");
    set.constraints.push_back(std::move(h));
  }
  if (set.constraints.empty()) throw FormatError("constraints", "at least one constraint required");
  return set;
}

UnsafeSet load_unsafe_set(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError(path, "cannot open unsafe-set file");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_unsafe_set(ss.str());
}

}  // namespace nnmon
