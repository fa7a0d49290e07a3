#include "nnmon/weights.hpp"

#include "nnmon/errors.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <sstream>

namespace nnmon {

using nlohmann::json;

namespace {

constexpr int kWeightsVersion = 1;

std::size_t get_dim(const json& layer, const std::string& where, const char* key) {
  if (!layer.contains(key) || !layer[key].is_number_unsigned() || layer[key].get<std::size_t>() == 0) {
    throw FormatError(where + "." + key, "expected a positive integer");
  }
  return layer[key].get<std::size_t>();
}

std::vector<double> get_numbers(const json& layer, const std::string& where, const char* key,
                                std::size_t expected) {
  const std::string path = where + "." + key;
  if (!layer.contains(key) || !layer[key].is_array()) throw FormatError(path, "expected an array");
  const auto& arr = layer[key];
  if (arr.size() != expected) {
    throw FormatError(path, "has " + std::to_string(arr.size()) + " entries, expected " +
                                std::to_string(expected));
  }
  std::vector<double> out;
  out.reserve(expected);
  for (std::size_t i = 0; i < arr.size(); ++i) {
    if (!arr[i].is_number()) throw FormatError(path + "[" + std::to_string(i) + "]", "not a number");
    out.push_back(arr[i].get<double>());
    if (!std::isfinite(out.back())) throw FormatError(path + "[" + std::to_string(i) + "]", "not finite");
  }
  return out;
}

}  // namespace

Network parse_weights(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw FormatError("", std::string("invalid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw FormatError("", "expected a JSON object");
  if (doc.value("format", "") != "nnmon-weights") throw FormatError("format", "expected \"nnmon-weights\"");
  if (!doc.contains("version") || !doc["version"].is_number_integer()) {
    throw FormatError("version", "missing schema version");
  }
  if (doc["version"].get<int>() != kWeightsVersion) {
    throw FormatError("version", "unsupported schema version " + doc["version"].dump());
  }
  if (!doc.contains("layers") || !doc["layers"].is_array() || doc["layers"].empty()) {
    throw FormatError("layers", "expected a nonempty array");
  }

  std::vector<Layer> layers;
  const auto& arr = doc["layers"];
  for (std::size_t l = 0; l < arr.size(); ++l) {
    const std::string where = "layers[" + std::to_string(l) + "]";
    const auto& layer = arr[l];
    if (!layer.is_object()) throw FormatError(where, "expected an object");
    const std::size_t rows = get_dim(layer, where, "rows");
    const std::size_t cols = get_dim(layer, where, "cols");
    if (l > 0 && cols != static_cast<std::size_t>(layers.back().output_dim())) {
      throw FormatError(where + ".cols", "is " + std::to_string(cols) + " but previous layer has " +
                                             std::to_string(layers.back().output_dim()) + " rows");
    }
    const auto w = get_numbers(layer, where, "weights", rows * cols);
    const auto b = get_numbers(layer, where, "bias", rows);
    const std::string act = layer.value("activation", "");
    Activation activation;
    if (act == "relu") {
      activation = Activation::ReLU;
    } else if (act == "identity") {
      activation = Activation::Identity;
    } else {
      throw FormatError(where + ".activation", "expected \"relu\" or \"identity\", got \"" + act + "\"");
    }
    Matrix weights(static_cast<Index>(rows), static_cast<Index>(cols));
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t c = 0; c < cols; ++c) {
        weights(static_cast<Index>(r), static_cast<Index>(c)) = w[r * cols + c];
      }
    }
    layers.emplace_back(std::move(weights), Eigen::Map<const Vector>(b.data(), static_cast<Index>(rows)),
                        activation);
  }
  if (layers.back().activation != Activation::Identity) {
    throw FormatError("layers[" + std::to_string(arr.size() - 1) + "].activation",
                      "final layer must be \"identity\" (logits)");
  }
  return Network(std::move(layers));
}

Network load_weights(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError(path, "cannot open weight file");
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_weights(ss.str());
  } catch (const FormatError& e) {
    throw FormatError(path + (e.path().empty() ? "" : ":" + e.path()),
                      std::string(e.what()).substr(e.path().empty() ? 0 : e.path().size() + 2));
  }
}

std::string serialize_weights(const Network& net) {
  json doc;
  doc["format"] = "nnmon-weights";
  doc["version"] = kWeightsVersion;
  json layers = json::array();
  for (const auto& layer : net.layers()) {
    json entry;
    entry["rows"] = layer.output_dim();
    entry["cols"] = layer.input_dim();
    std::vector<double> w;
    w.reserve(static_cast<std::size_t>(layer.weights.size()));
    for (Index r = 0; r < layer.weights.rows(); ++r) {
      for (Index c = 0; c < layer.weights.cols(); ++c) w.push_back(layer.weights(r, c));
    }
    entry["weights"] = std::move(w);
    entry["bias"] = std::vector<double>(layer.bias.data(), layer.bias.data() + layer.bias.size());
    entry["activation"] = layer.activation == Activation::ReLU ? "relu" : "identity";
    layers.push_back(std::move(entry));
  }
  doc["layers"] = std::move(layers);
  return doc.dump() + "\n";
}

void save_weights(const Network& net, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw FormatError(path, "cannot open for writing");
  out << serialize_weights(net);
}

}  // namespace nnmon
