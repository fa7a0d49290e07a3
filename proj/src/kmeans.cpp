#include "nnmon/kmeans.hpp"

#include "nnmon/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

namespace nnmon {

namespace {

// Platform-independent uniform draw in [0, 1).
double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

Index pick_index(std::mt19937_64& rng, Index n) {
  return std::min<Index>(n - 1, static_cast<Index>(uniform01(rng) * static_cast<double>(n)));
}

int nearest(const Matrix& centroids, const Eigen::Ref<const Vector>& x, double* dist2 = nullptr) {
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (Index c = 0; c < centroids.rows(); ++c) {
    const double d = (centroids.row(c).transpose() - x).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(c);
    }
  }
  if (dist2) *dist2 = best_d;
  return best;
}

}  // namespace

KMeansResult kmeans(const Matrix& points, int k, std::uint64_t seed, int max_iterations) {
  const Index n = points.rows();
  if (k < 1) throw ParameterError("cluster count must be at least 1");
  if (n < k) {
    throw InsufficientDataError("k-means with k = " + std::to_string(k) + " needs at least " +
                                std::to_string(k) + " points, got " + std::to_string(n));
  }
  std::mt19937_64 rng(seed);
  KMeansResult result;
  result.centroids.resize(k, points.cols());

  // k-means++ seeding
  result.centroids.row(0) = points.row(pick_index(rng, n));
  Vector d2(n);
  for (Index i = 0; i < n; ++i) d2(i) = (points.row(i) - result.centroids.row(0)).squaredNorm();
  for (int c = 1; c < k; ++c) {
    const double total = d2.sum();
    Index chosen = 0;
    if (total > 0.0) {
      const double target = uniform01(rng) * total;
      double acc = 0.0;
      chosen = n - 1;
      for (Index i = 0; i < n; ++i) {
        acc += d2(i);
        if (acc > target && d2(i) > 0.0) {
          chosen = i;
          break;
        }
      }
    } else {
      chosen = pick_index(rng, n);
    }
    result.centroids.row(c) = points.row(chosen);
    for (Index i = 0; i < n; ++i) {
      d2(i) = std::min(d2(i), (points.row(i) - result.centroids.row(c)).squaredNorm());
    }
  }

  result.assignment.assign(static_cast<std::size_t>(n), -1);
  for (int iter = 0; iter < max_iterations; ++iter) {
    bool changed = false;
    for (Index i = 0; i < n; ++i) {
      const int c = nearest(result.centroids, points.row(i).transpose());
      if (c != result.assignment[static_cast<std::size_t>(i)]) {
        result.assignment[static_cast<std::size_t>(i)] = c;
        changed = true;
      }
    }
    result.iterations = iter + 1;
    if (!changed) {
      result.converged = true;
      break;
    }
    Matrix sums = Matrix::Zero(k, points.cols());
    std::vector<Index> counts(static_cast<std::size_t>(k), 0);
    for (Index i = 0; i < n; ++i) {
      const int c = result.assignment[static_cast<std::size_t>(i)];
      sums.row(c) += points.row(i);
      ++counts[static_cast<std::size_t>(c)];
    }
    for (int c = 0; c < k; ++c) {
      // an empty cluster keeps its previous centroid
      if (counts[static_cast<std::size_t>(c)] > 0) {
        result.centroids.row(c) = sums.row(c) / static_cast<double>(counts[static_cast<std::size_t>(c)]);
      }
    }
  }
  return result;
}

}  // namespace nnmon
