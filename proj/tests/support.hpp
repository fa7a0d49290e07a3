#pragma once

#include "nnmon/network.hpp"

#include <filesystem>
#include <random>
#include <string>
#include <vector>

namespace nnmon::testing {

inline std::string fixture(const std::string& name) {
  return std::string(NNMON_SOURCE_DIR) + "/tests/fixtures/" + name;
}

inline std::string data_file(const std::string& rel) { return std::string(NNMON_SOURCE_DIR) + "/data/" + rel; }

/// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& tag) {
  auto dir = std::filesystem::temp_directory_path() / ("nnmon_test_" + tag);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline Matrix random_matrix(Index rows, Index cols, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    for (Index j = 0; j < cols; ++j) m(i, j) = n(rng);
  }
  return m;
}

inline Vector random_vector(Index size, std::mt19937_64& rng, double scale = 1.0) {
  return random_matrix(size, 1, rng, scale).col(0);
}

/// ReLU hidden layers, identity output layer. `dims` = d0, d1, ..., dL.
inline Network random_network(const std::vector<Index>& dims, std::mt19937_64& rng) {
  std::vector<Layer> layers;
  for (std::size_t l = 1; l < dims.size(); ++l) {
    const double scale = 1.0 / std::sqrt(static_cast<double>(dims[l - 1]));
    layers.emplace_back(random_matrix(dims[l], dims[l - 1], rng, scale), random_vector(dims[l], rng, 0.5),
                        l + 1 == dims.size() ? Activation::Identity : Activation::ReLU);
  }
  return Network(std::move(layers));
}

inline std::vector<Index> random_dims(std::mt19937_64& rng, int min_layers, int max_layers, Index min_width,
                                      Index max_width) {
  std::uniform_int_distribution<int> nl(min_layers, max_layers);
  std::uniform_int_distribution<Index> w(min_width, max_width);
  std::vector<Index> dims(static_cast<std::size_t>(nl(rng)) + 1);
  for (auto& d : dims) d = w(rng);
  return dims;
}

}  // namespace nnmon::testing
