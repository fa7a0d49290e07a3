#pragma once

#include "nnmon/types.hpp"

#include <vector>

namespace nnmon {

enum class Activation { ReLU, Identity };

/// One dense layer: values = activation(weights * x + bias).
struct Layer {
  Layer(Matrix weights, Vector bias, Activation activation);

  Matrix weights;  // d_l x d_{l-1}
  Vector bias;     // d_l
  Activation activation;

  Index input_dim() const { return weights.cols(); }
  Index output_dim() const { return weights.rows(); }
};

/// Post- and pre-activation values of one layer for one input.
struct FeatureVector {
  int layer = 0;
  Vector values;
  Vector pre_activation;
};

/// Scalar objective differentiated by `Network::input_gradient`.
struct GradientObjective {
  enum class Kind { MaxLogit, LogMaxSoftmax };

  Kind kind = Kind::MaxLogit;
  double temperature = 1.0;

  static GradientObjective max_logit() { return {Kind::MaxLogit, 1.0}; }
  static GradientObjective log_max_softmax(double temperature) {
    return {Kind::LogMaxSoftmax, temperature};
  }
};

/// A trained multi-layer perceptron. Layers are numbered 1..depth(); the last
/// layer produces logits and has Identity activation.
class Network {
 public:
  explicit Network(std::vector<Layer> layers);

  int depth() const { return static_cast<int>(layers_.size()); }
  Index input_dim() const { return layers_.front().input_dim(); }
  Index output_dim() const { return layers_.back().output_dim(); }
  /// d_l for l in 0..depth(); d_0 is the input dimension.
  Index dim(int l) const;
  const Layer& layer(int l) const;
  const std::vector<Layer>& layers() const { return layers_; }

  Vector forward(const Vector& input) const;
  FeatureVector features(const Vector& input, int l) const;

  /// Applies layers l+1..depth() to post-activation values of layer l.
  Vector forward_from(int l, const Vector& values) const;

  /// Batched features: one row per input row. Returns post- or pre-activation values.
  Matrix batch_features(const Matrix& inputs, int l, FeatureSource source) const;
  Matrix batch_logits(const Matrix& inputs) const;

  /// Reverse-mode gradient of the objective w.r.t. the input. The objective
  /// targets the argmax class of the logits; the ReLU derivative at 0 is 0.
  Vector input_gradient(const Vector& input, const GradientObjective& objective) const;

 private:
  void check_input(const Vector& input) const;
  void check_layer(int l) const;

  std::vector<Layer> layers_;
};

Vector apply_activation(Activation activation, const Vector& pre);

/// Temperature-scaled softmax, computed with max-subtraction.
Vector softmax(const Vector& logits, double temperature = 1.0);

/// Index of the largest entry; ties go to the smallest index.
Index argmax(const Vector& v);

}  // namespace nnmon
