#pragma once

#include "nnmon/network.hpp"

#include <string>

namespace nnmon {

/// Weight file (JSON):
///   {"format": "nnmon-weights", "version": 1,
///    "layers": [{"rows": r, "cols": c, "weights": [r*c numbers, row-major],
///                "bias": [r numbers], "activation": "relu" | "identity"}, ...]}
/// Violations raise FormatError naming the field path, e.g. "layers[1].bias".
Network load_weights(const std::string& path);
Network parse_weights(const std::string& json_text);

std::string serialize_weights(const Network& net);
void save_weights(const Network& net, const std::string& path);

}  // namespace nnmon
