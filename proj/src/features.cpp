#include "nnmon/features.hpp"

#include "nnmon/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace nnmon {

FeatureMatrix extract_features(const Network& net, const LabeledDataset& data, int layer,
                               FeatureSource source) {
  FeatureMatrix out;
  out.layer = layer;
  out.source = source;
  out.values = net.batch_features(data.inputs, layer, source);
  out.labels = data.labels;
  return out;
}

Vector monitored_features(const Network& net, const Vector& input, int layer, FeatureSource source) {
  auto fv = net.features(input, layer);
  return source == FeatureSource::PreActivation ? std::move(fv.pre_activation) : std::move(fv.values);
}

void save_features_csv(const FeatureMatrix& features, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw FormatError(path, "cannot open for writing");
  out << "# layer=" << features.layer << " source=" << to_string(features.source) << "\n";
  out << "label";
  for (Index j = 0; j < features.values.cols(); ++j) out << ",n" << j;
  out << "\n";
  char buf[32];
  for (Index i = 0; i < features.values.rows(); ++i) {
    out << (static_cast<std::size_t>(i) < features.labels.size() ? features.labels[static_cast<std::size_t>(i)] : -1);
    for (Index j = 0; j < features.values.cols(); ++j) {
      std::snprintf(buf, sizeof(buf), "%.17g", features.values(i, j));
      out << ',' << buf;
    }
    out << "\n";
  }
}

FeatureMatrix load_features_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError(path, "cannot open feature file");
  FeatureMatrix fm;
  std::string line;
  if (!std::getline(in, line) || line.rfind("# layer=", 0) != 0) {
    throw FormatError(path + ":1", "expected '# layer=<l> source=<post|pre>'");
  }
  {
    int layer = 0;
    char source[8] = {0};
    if (std::sscanf(line.c_str(), "# layer=%d source=%7s", &layer, source) != 2) {
      throw FormatError(path + ":1", "malformed metadata line");
    }
    fm.layer = layer;
    const std::string s(source);
    if (s == "post") {
      fm.source = FeatureSource::PostActivation;
    } else if (s == "pre") {
      fm.source = FeatureSource::PreActivation;
    } else {
      throw FormatError(path + ":1", "unknown source '" + s + "'");
    }
  }
  if (!std::getline(in, line)) throw FormatError(path + ":2", "missing header");
  const auto cols = static_cast<Index>(std::count(line.begin(), line.end(), ','));

  std::vector<std::vector<double>> rows;
  std::size_t lineno = 2;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    bool first = true;
    while (std::getline(ss, cell, ',')) {
      double v = 0.0;
      const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (res.ec != std::errc() || res.ptr != cell.data() + cell.size()) {
        throw FormatError(path + ":" + std::to_string(lineno), "bad number '" + cell + "'");
      }
      if (first) {
        fm.labels.push_back(static_cast<int>(v));
        first = false;
      } else {
        row.push_back(v);
      }
    }
    if (static_cast<Index>(row.size()) != cols) {
      throw FormatError(path + ":" + std::to_string(lineno), "expected " + std::to_string(cols) + " values");
    }
    rows.push_back(std::move(row));
  }
  fm.values.resize(static_cast<Index>(rows.size()), cols);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (Index j = 0; j < cols; ++j) fm.values(static_cast<Index>(i), j) = rows[i][static_cast<std::size_t>(j)];
  }
  return fm;
}

}  // namespace nnmon
