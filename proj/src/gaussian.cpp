#include "nnmon/gaussian.hpp"

#include "nnmon/errors.hpp"

#include <Eigen/Cholesky>
#include <boost/math/special_functions/erf.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>

namespace nnmon {

NeuronStats fit_stats(const Matrix& samples, int layer) {
  if (samples.rows() < 2) {
    throw InsufficientDataError("neuron statistics need at least 2 samples, got " +
                                std::to_string(samples.rows()));
  }
  NeuronStats stats;
  stats.layer = layer;
  stats.count = static_cast<std::size_t>(samples.rows());
  stats.mean = samples.colwise().mean().transpose();
  const Matrix centered = samples.rowwise() - stats.mean.transpose();
  stats.stddev = (centered.array().square().colwise().sum() / static_cast<double>(samples.rows() - 1))
                     .sqrt()
                     .transpose();
  return stats;
}

double z_score(const NeuronStats& stats, double value, Index neuron) {
  if (neuron < 0 || neuron >= stats.mean.size()) {
    throw InputShapeError("neuron index " + std::to_string(neuron) + " out of range");
  }
  const double sd = stats.stddev(neuron);
  if (sd == 0.0) {
    throw DegenerateNeuronError("neuron " + std::to_string(neuron) + " has zero deviation");
  }
  return (value - stats.mean(neuron)) / sd;
}

double coverage_bound(BoundMode mode, double width) {
  if (!(width > 0.0)) throw ParameterError("interval width must be positive");
  if (mode == BoundMode::Gaussian) return std::erf(width / std::sqrt(2.0));
  return width <= 1.0 ? 0.0 : 1.0 - 1.0 / (width * width);
}

double width_for_coverage(BoundMode mode, double coverage) {
  if (!(coverage > 0.0 && coverage < 1.0)) throw ParameterError("coverage must lie in (0, 1)");
  if (mode == BoundMode::Gaussian) return std::sqrt(2.0) * boost::math::erf_inv(coverage);
  return 1.0 / std::sqrt(1.0 - coverage);
}

GaussianIntervalMonitor make_interval_monitor(NeuronStats stats, double width, int tolerance,
                                              BoundMode mode) {
  if (!(width > 0.0)) throw ParameterError("interval width must be positive");
  if (tolerance < 0) throw ParameterError("violation tolerance must be non-negative");
  GaussianIntervalMonitor mon;
  mon.stats = std::move(stats);
  mon.width = width;
  mon.tolerance = tolerance;
  mon.mode = mode;
  return mon;
}

IntervalVerdict GaussianIntervalMonitor::verdict(const Vector& features) const {
  if (features.size() != stats.mean.size()) {
    throw InputShapeError("feature length " + std::to_string(features.size()) + ", expected " +
                          std::to_string(stats.mean.size()));
  }
  IntervalVerdict out;
  for (Index i = 0; i < features.size(); ++i) {
    const double sd = stats.stddev(i);
    const double v = features(i);
    const bool outside = sd == 0.0 ? v != stats.mean(i)
                                   : (v < stats.mean(i) - width * sd || v > stats.mean(i) + width * sd);
    if (outside) ++out.violations;
  }
  out.verdict = out.violations > tolerance ? Verdict::OoD : Verdict::InDist;
  return out;
}

double MahalanobisMonitor::score(const Vector& features) const {
  if (features.size() != covariance_inverse.rows()) {
    throw InputShapeError("feature length " + std::to_string(features.size()) + ", expected " +
                          std::to_string(covariance_inverse.rows()));
  }
  double best = std::numeric_limits<double>::infinity();
  for (const auto& mu : class_means) {
    const Vector diff = features - mu;
    best = std::min(best, diff.dot(covariance_inverse * diff));
  }
  return std::sqrt(std::max(best, 0.0));
}

MahalanobisMonitor fit_mahalanobis(const Matrix& features, const std::vector<int>& labels,
                                   std::optional<double> lambda) {
  if (static_cast<std::size_t>(features.rows()) != labels.size()) {
    throw ConsistencyError("feature rows and labels differ in count");
  }
  if (lambda && !(*lambda >= 0.0)) throw ParameterError("regularization must be non-negative");

  std::map<int, std::vector<Index>> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(static_cast<Index>(i));
  if (by_class.empty()) throw InsufficientDataError("no samples");

  const Index d = features.cols();
  MahalanobisMonitor mon;
  Matrix scatter = Matrix::Zero(d, d);
  for (const auto& [label, rows] : by_class) {
    if (rows.size() < 2) {
      throw InsufficientDataError("class " + std::to_string(label) + " has fewer than 2 samples");
    }
    Vector mu = Vector::Zero(d);
    for (Index r : rows) mu += features.row(r).transpose();
    mu /= static_cast<double>(rows.size());
    for (Index r : rows) {
      const Vector dev = features.row(r).transpose() - mu;
      scatter.noalias() += dev * dev.transpose();
    }
    mon.class_means.push_back(std::move(mu));
  }
  const auto dof = static_cast<double>(features.rows()) - static_cast<double>(by_class.size());
  const Matrix cov = scatter / dof;

  mon.regularization = lambda ? *lambda : 1e-6 * cov.trace() / static_cast<double>(d);
  const Matrix regularized = cov + mon.regularization * Matrix::Identity(d, d);
  Eigen::LLT<Matrix> llt(regularized);
  // Rounding can leave a tiny positive pivot on an exactly singular matrix.
  const double tol = static_cast<double>(std::max<Index>(d, 1)) * std::numeric_limits<double>::epsilon() *
                     regularized.diagonal().cwiseAbs().maxCoeff();
  if (llt.info() != Eigen::Success || Vector(llt.matrixL().toDenseMatrix().diagonal()).array().square().minCoeff() <= tol) {
    throw SingularCovarianceError("covariance is not positive definite (lambda = " +
                                  std::to_string(mon.regularization) + ")");
  }
  mon.covariance_inverse = llt.solve(Matrix::Identity(d, d));
  mon.covariance_inverse = 0.5 * (mon.covariance_inverse + mon.covariance_inverse.transpose()).eval();
  return mon;
}

MahalanobisMonitor fit_mahalanobis(const Matrix& features, std::optional<double> lambda) {
  return fit_mahalanobis(features, std::vector<int>(static_cast<std::size_t>(features.rows()), 0),
                         lambda);
}

}  // namespace nnmon
