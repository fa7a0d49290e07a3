#pragma once

#include "nnmon/types.hpp"

#include <optional>
#include <vector>

namespace nnmon {

/// Per-neuron sample mean and standard deviation (divisor n-1).
struct NeuronStats {
  int layer = 0;
  Vector mean;
  Vector stddev;
  std::size_t count = 0;
};

/// Rows are samples. Throws InsufficientDataError below two rows.
NeuronStats fit_stats(const Matrix& samples, int layer = 0);

/// (value - mean_i) / stddev_i. Throws DegenerateNeuronError when stddev_i is 0.
double z_score(const NeuronStats& stats, double value, Index neuron);

enum class BoundMode { Gaussian, Chebyshev };

/// Fraction of values guaranteed (Chebyshev) or expected (Gaussian) inside mean +- width*sd.
double coverage_bound(BoundMode mode, double width);

/// Smallest width whose coverage_bound reaches `coverage` in (0, 1).
double width_for_coverage(BoundMode mode, double coverage);

struct IntervalVerdict {
  Verdict verdict = Verdict::InDist;
  int violations = 0;
};

/// Per-neuron mean +- width*sd bands; reports OoD when more than `tolerance`
/// neurons leave their band.
struct GaussianIntervalMonitor {
  NeuronStats stats;
  double width = 3.0;
  int tolerance = 0;
  BoundMode mode = BoundMode::Gaussian;
  FeatureSource source = FeatureSource::PostActivation;

  IntervalVerdict verdict(const Vector& features) const;
  double coverage() const { return coverage_bound(mode, width); }
};

GaussianIntervalMonitor make_interval_monitor(NeuronStats stats, double width, int tolerance,
                                              BoundMode mode = BoundMode::Gaussian);

/// Class-conditional Gaussians with one tied covariance; the score is the
/// smallest Mahalanobis distance to any class mean.
struct MahalanobisMonitor {
  int layer = 0;
  FeatureSource source = FeatureSource::PostActivation;
  std::vector<Vector> class_means;
  Matrix covariance_inverse;
  double regularization = 0.0;
  double threshold = 0.0;

  double score(const Vector& features) const;
  Verdict verdict(const Vector& features) const {
    return score(features) > threshold ? Verdict::OoD : Verdict::InDist;
  }
};

/// Pooled within-class covariance (divisor n - classes), inverted through a
/// Cholesky factorization of cov + lambda*I. Without `lambda` the default
/// 1e-6 * trace(cov) / d is used. Every class needs two or more samples.
MahalanobisMonitor fit_mahalanobis(const Matrix& features, const std::vector<int>& labels,
                                   std::optional<double> lambda = std::nullopt);

/// Single-Gaussian variant: all rows belong to one class.
MahalanobisMonitor fit_mahalanobis(const Matrix& features,
                                   std::optional<double> lambda = std::nullopt);

}  // namespace nnmon
