#pragma once

#include "nnmon/types.hpp"

#include <cstdint>
#include <vector>

namespace nnmon {

struct KMeansResult {
  Matrix centroids;             // k x d
  std::vector<int> assignment;  // cluster of each row
  int iterations = 0;
  bool converged = false;
};

/// Seeded k-means: k-means++ initialization followed by Lloyd iterations until
/// assignments stop changing or `max_iterations` is reached. Euclidean distance,
/// ties to the lowest cluster index. Deterministic for a given seed.
KMeansResult kmeans(const Matrix& points, int k, std::uint64_t seed, int max_iterations = 100);

}  // namespace nnmon
