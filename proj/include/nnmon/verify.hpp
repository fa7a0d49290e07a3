#pragma once

#include "nnmon/boxes.hpp"
#include "nnmon/network.hpp"
#include "nnmon/types.hpp"

#include <string>
#include <vector>

namespace nnmon {

struct IntervalVector {
  Vector lower;
  Vector upper;

  Index size() const { return lower.size(); }
  bool contains(const Vector& v, double slack = 0.0) const;
};

/// Sound output bounds of layers l+1..L for layer-l values inside `box`.
/// Affine maps use the sign split W+ and W-; activations are monotone.
IntervalVector propagate_intervals(const Network& net, int layer, const IntervalVector& box);

/// a . y >= b over the output vector y.
struct HalfSpace {
  Vector a;
  double b = 0.0;
};

/// Conjunction of half-spaces describing unsafe outputs.
struct UnsafeSet {
  std::vector<HalfSpace> constraints;

  bool contains(const Vector& y) const;
};

enum class SafetyVerdict { SafeVerified, Unknown };

inline std::string to_string(SafetyVerdict v) {
  return v == SafetyVerdict::SafeVerified ? "safe-verified" : "unknown";
}

struct VerificationOutcome {
  SafetyVerdict verdict = SafetyVerdict::Unknown;
  IntervalVector output_bounds;
  /// Interval upper bound of a . y for each constraint, in input order.
  std::vector<double> constraint_upper;
};

/// SafeVerified iff every constraint's linear form stays below its b over the
/// propagated output box. Never claims "unsafe": the bounds over-approximate.
VerificationOutcome check_safety(const Network& net, int layer, const IntervalVector& box,
                                 const UnsafeSet& unsafe);

/// Uses the monitor's box; pre-activation boxes are first passed through the layer's activation.
VerificationOutcome check_safety(const Network& net, const BoxMonitor& monitor,
                                 const UnsafeSet& unsafe);

UnsafeSet load_unsafe_set(const std::string& path);
UnsafeSet parse_unsafe_set(const std::string& json_text);

}  // namespace nnmon
