#include "nnmon/network.hpp"

#include "nnmon/errors.hpp"

#include <cmath>
#include <string>

namespace nnmon {

namespace {

std::string layer_name(std::size_t index) { return "layer " + std::to_string(index + 1); }

}  // namespace

Layer::Layer(Matrix w, Vector b, Activation act)
    : weights(std::move(w)), bias(std::move(b)), activation(act) {
  if (weights.rows() != bias.size()) {
    throw InputShapeError("weight rows (" + std::to_string(weights.rows()) +
                          ") differ from bias length (" + std::to_string(bias.size()) + ")");
  }
  if (weights.rows() == 0 || weights.cols() == 0) {
    throw InputShapeError("layer has an empty weight matrix");
  }
  if (!weights.allFinite() || !bias.allFinite()) {
    throw InputShapeError("layer parameters must be finite");
  }
}

Network::Network(std::vector<Layer> layers) : layers_(std::move(layers)) {
  if (layers_.empty()) throw InputShapeError("network needs at least one layer");
  for (std::size_t i = 1; i < layers_.size(); ++i) {
    if (layers_[i].input_dim() != layers_[i - 1].output_dim()) {
      throw InputShapeError(layer_name(i) + " expects " + std::to_string(layers_[i].input_dim()) +
                            " inputs but previous layer has " +
                            std::to_string(layers_[i - 1].output_dim()) + " outputs");
    }
  }
  if (layers_.back().activation != Activation::Identity) {
    throw InputShapeError("final layer must use identity activation (logits)");
  }
}

Index Network::dim(int l) const {
  if (l == 0) return input_dim();
  check_layer(l);
  return layers_[static_cast<std::size_t>(l - 1)].output_dim();
}

const Layer& Network::layer(int l) const {
  check_layer(l);
  return layers_[static_cast<std::size_t>(l - 1)];
}

void Network::check_input(const Vector& input) const {
  if (input.size() != input_dim()) {
    throw InputShapeError("input has length " + std::to_string(input.size()) + ", expected " +
                          std::to_string(input_dim()));
  }
}

void Network::check_layer(int l) const {
  if (l < 1 || l > depth()) {
    throw LayerIndexError("layer " + std::to_string(l) + " outside 1.." + std::to_string(depth()));
  }
}

Vector apply_activation(Activation activation, const Vector& pre) {
  if (activation == Activation::Identity) return pre;
  return pre.cwiseMax(0.0);
}

Vector Network::forward(const Vector& input) const {
  check_input(input);
  Vector x = input;
  for (const auto& layer : layers_) {
    x = apply_activation(layer.activation, layer.weights * x + layer.bias);
  }
  return x;
}

FeatureVector Network::features(const Vector& input, int l) const {
  check_input(input);
  check_layer(l);
  FeatureVector out;
  out.layer = l;
  Vector x = input;
  for (int i = 0; i < l; ++i) {
    const auto& layer = layers_[static_cast<std::size_t>(i)];
    out.pre_activation = layer.weights * x + layer.bias;
    x = apply_activation(layer.activation, out.pre_activation);
  }
  out.values = std::move(x);
  return out;
}

Vector Network::forward_from(int l, const Vector& values) const {
  if (l < 0 || l > depth()) {
    throw LayerIndexError("layer " + std::to_string(l) + " outside 0.." + std::to_string(depth()));
  }
  if (values.size() != dim(l)) {
    throw InputShapeError("layer " + std::to_string(l) + " values have length " +
                          std::to_string(values.size()) + ", expected " + std::to_string(dim(l)));
  }
  Vector x = values;
  for (std::size_t i = static_cast<std::size_t>(l); i < layers_.size(); ++i) {
    x = apply_activation(layers_[i].activation, layers_[i].weights * x + layers_[i].bias);
  }
  return x;
}

Matrix Network::batch_features(const Matrix& inputs, int l, FeatureSource source) const {
  check_layer(l);
  if (inputs.cols() != input_dim()) {
    throw InputShapeError("inputs have " + std::to_string(inputs.cols()) + " columns, expected " +
                          std::to_string(input_dim()));
  }
  // Row by row, so every row is bit-identical to features() on that input.
  Matrix out(inputs.rows(), dim(l));
  for (Index r = 0; r < inputs.rows(); ++r) {
    FeatureVector fv = features(inputs.row(r).transpose(), l);
    out.row(r) = source == FeatureSource::PreActivation ? fv.pre_activation.transpose() : fv.values.transpose();
  }
  return out;
}

Matrix Network::batch_logits(const Matrix& inputs) const {
  return batch_features(inputs, depth(), FeatureSource::PostActivation);
}

Vector Network::input_gradient(const Vector& input, const GradientObjective& objective) const {
  check_input(input);
  std::vector<Vector> pre;
  pre.reserve(layers_.size());
  Vector x = input;
  for (const auto& layer : layers_) {
    pre.push_back(layer.weights * x + layer.bias);
    x = apply_activation(layer.activation, pre.back());
  }

  const Index target = argmax(x);
  Vector grad = Vector::Zero(x.size());
  if (objective.kind == GradientObjective::Kind::MaxLogit) {
    grad(target) = 1.0;
  } else {
    if (!(objective.temperature > 0.0)) throw ParameterError("temperature must be positive");
    // d/dz log softmax(z/T)_c = (e_c - softmax(z/T)) / T
    grad = -softmax(x, objective.temperature);
    grad(target) += 1.0;
    grad /= objective.temperature;
  }

  for (std::size_t i = layers_.size(); i-- > 0;) {
    const auto& layer = layers_[i];
    if (layer.activation == Activation::ReLU) {
      grad = (pre[i].array() > 0.0).select(grad, 0.0);
    }
    grad = layer.weights.transpose() * grad;
  }
  return grad;
}

Vector softmax(const Vector& logits, double temperature) {
  if (!(temperature > 0.0)) throw ParameterError("temperature must be positive");
  if (logits.size() == 0) throw InputShapeError("softmax of an empty vector");
  Vector z = logits / temperature;
  z.array() -= z.maxCoeff();
  Vector e = z.array().exp();
  return e / e.sum();
}

Index argmax(const Vector& v) {
  if (v.size() == 0) throw InputShapeError("argmax of an empty vector");
  Index best = 0;
  for (Index i = 1; i < v.size(); ++i) {
    if (v(i) > v(best)) best = i;
  }
  return best;
}

}  // namespace nnmon
