#include "nnmon/monitor_io.hpp"

#include "nnmon/errors.hpp"

#include <boost/beast/core/detail/base64.hpp>
#include <json.hpp>

#include <cmath>
#include <fstream>
#include <sstream>

namespace nnmon {

using nlohmann::json;

namespace {

constexpr int kMonitorVersion = 1;

std::string sub(const std::string& where, const std::string& key) {
  return where.empty() ? key : where + "." + key;
}
std::string idx(const std::string& where, std::size_t i) { return where + "[" + std::to_string(i) + "]"; }

// ---- writing ----

json vec(const Vector& v) {
  json a = json::array();
  for (Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

json mat(const Matrix& m) {
  json a = json::array();
  for (Index r = 0; r < m.rows(); ++r) a.push_back(vec(m.row(r).transpose()));
  return a;
}

template <class T>
void put_le(std::string& out, T v) {
  for (std::size_t b = 0; b < sizeof(T); ++b) out.push_back(static_cast<char>((v >> (8 * b)) & 0xFF));
}

template <class T>
T get_le(const std::string& in, std::size_t pos) {
  T v = 0;
  for (std::size_t b = 0; b < sizeof(T); ++b) {
    v |= static_cast<T>(static_cast<unsigned char>(in[pos + b])) << (8 * b);
  }
  return v;
}

json bdd_image(const BddImage& img) {
  std::string bytes;
  bytes.reserve(img.nodes.size() * 12);
  for (const auto& n : img.nodes) {
    for (auto x : n) put_le<std::uint32_t>(bytes, x);
  }
  return {{"node_count", img.nodes.size()}, {"root", img.root}, {"nodes", base64_encode(bytes)}};
}

// ---- reading ----

const json& field(const json& obj, const std::string& where, const std::string& key) {
  if (!obj.is_object() || !obj.contains(key)) throw FormatError(sub(where, key), "missing field");
  return obj.at(key);
}

double number(const json& obj, const std::string& where, const std::string& key) {
  const json& v = field(obj, where, key);
  if (!v.is_number()) throw FormatError(sub(where, key), "expected a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw FormatError(sub(where, key), "not finite");
  return d;
}

template <class Int>
Int integer(const json& obj, const std::string& where, const std::string& key, Int lo = 0) {
  const json& v = field(obj, where, key);
  if (!v.is_number_integer()) throw FormatError(sub(where, key), "expected an integer");
  if (v.is_number_unsigned()) {
    const auto u = v.get<std::uint64_t>();
    if (u > static_cast<std::uint64_t>(std::numeric_limits<Int>::max())) {
      throw FormatError(sub(where, key), "out of range");
    }
    return static_cast<Int>(u);
  }
  const auto s = v.get<std::int64_t>();
  if (s < static_cast<std::int64_t>(lo)) throw FormatError(sub(where, key), "out of range");
  return static_cast<Int>(s);
}

bool boolean(const json& obj, const std::string& where, const std::string& key) {
  const json& v = field(obj, where, key);
  if (!v.is_boolean()) throw FormatError(sub(where, key), "expected true or false");
  return v.get<bool>();
}

std::string text(const json& obj, const std::string& where, const std::string& key) {
  const json& v = field(obj, where, key);
  if (!v.is_string()) throw FormatError(sub(where, key), "expected a string");
  return v.get<std::string>();
}

Vector read_vec(const json& v, const std::string& path, Index expected = -1) {
  if (!v.is_array()) throw FormatError(path, "expected an array of numbers");
  if (expected >= 0 && static_cast<Index>(v.size()) != expected) {
    throw FormatError(path, "has " + std::to_string(v.size()) + " entries, expected " + std::to_string(expected));
  }
  Vector out(static_cast<Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_number()) throw FormatError(idx(path, i), "not a number");
    out(static_cast<Index>(i)) = v[i].get<double>();
    if (!std::isfinite(out(static_cast<Index>(i)))) throw FormatError(idx(path, i), "not finite");
  }
  return out;
}

Vector vec_field(const json& obj, const std::string& where, const std::string& key, Index expected = -1) {
  return read_vec(field(obj, where, key), sub(where, key), expected);
}

Matrix mat_field(const json& obj, const std::string& where, const std::string& key, Index cols) {
  const json& v = field(obj, where, key);
  const std::string path = sub(where, key);
  if (!v.is_array()) throw FormatError(path, "expected an array of rows");
  Matrix m(static_cast<Index>(v.size()), cols);
  for (std::size_t r = 0; r < v.size(); ++r) m.row(static_cast<Index>(r)) = read_vec(v[r], idx(path, r), cols);
  return m;
}

FeatureSource source_field(const json& obj, const std::string& where) {
  const std::string s = text(obj, where, "source");
  if (s == "post") return FeatureSource::PostActivation;
  if (s == "pre") return FeatureSource::PreActivation;
  throw FormatError(sub(where, "source"), "expected \"post\" or \"pre\"");
}

std::string decode_field(const json& obj, const std::string& where, const std::string& key) {
  const std::string t = text(obj, where, key);
  try {
    return base64_decode(t);
  } catch (const FormatError& e) {
    throw FormatError(sub(where, key), e.what());
  }
}

BddImage read_bdd_image(const json& obj, const std::string& where, std::uint32_t variables) {
  BddImage img;
  img.variables = variables;
  img.root = integer<std::uint32_t>(obj, where, "root");
  const auto count = integer<std::size_t>(obj, where, "node_count");
  const std::string bytes = decode_field(obj, where, "nodes");
  if (bytes.size() != count * 12) {
    throw FormatError(sub(where, "nodes"), "holds " + std::to_string(bytes.size()) + " bytes, expected " +
                                               std::to_string(count * 12));
  }
  img.nodes.resize(count);
  for (std::size_t k = 0; k < count; ++k) {
    for (std::size_t j = 0; j < 3; ++j) img.nodes[k][j] = get_le<std::uint32_t>(bytes, 12 * k + 4 * j);
  }
  return img;
}

// ---- per kind ----

json box_body(const BoxMonitor& m) {
  return {{"lower", vec(m.lower)}, {"upper", vec(m.upper)}};
}

BoxMonitor read_box(const json& obj, const std::string& where, int layer, FeatureSource src, double delta,
                    Index dims = -1) {
  BoxMonitor b;
  b.layer = layer;
  b.source = src;
  b.delta = delta;
  b.lower = vec_field(obj, where, "lower", dims);
  b.upper = vec_field(obj, where, "upper", b.lower.size());
  if ((b.lower.array() > b.upper.array()).any()) throw FormatError(sub(where, "lower"), "exceeds upper bound");
  return b;
}

json to_json(const AnyMonitor& any) {
  json doc = {{"format", "nnmon-monitor"}, {"version", kMonitorVersion}, {"kind", monitor_kind(any)},
              {"layer", monitor_layer(any)}, {"source", to_string(monitor_source(any))}};
  if (const auto* m = std::get_if<BoxMonitor>(&any)) {
    doc["delta"] = m->delta;
    doc["box"] = box_body(*m);
  } else if (const auto* m = std::get_if<MultiBoxMonitor>(&any)) {
    doc["delta"] = m->delta;
    doc["clusters"] = m->clusters;
    doc["seed"] = m->seed;
    doc["standardized"] = m->standardized;
    json boxes = json::array();
    for (const auto& b : m->boxes) boxes.push_back(box_body(b));
    doc["boxes"] = std::move(boxes);
  } else if (const auto* m = std::get_if<NeuronSelectionMonitor>(&any)) {
    doc["neurons"] = m->neurons;
    doc["threshold"] = m->threshold;
    json classes = json::array();
    for (const auto& cls : m->classes) {
      json list = json::array();
      for (const auto& s : cls) {
        list.push_back({{"neuron", s.neuron},
                        {"sign", s.sign == NeuronSign::AlwaysPositive ? "+" : "-"},
                        {"bound", s.bound}});
      }
      classes.push_back(std::move(list));
    }
    doc["classes"] = std::move(classes);
  } else if (const auto* m = std::get_if<PatternMonitor>(&any)) {
    const auto& rule = m->rule();
    doc["rule"] = {{"mode", rule.mode == BinarizationRule::Mode::TwoBit ? "two-bit" : "single"},
                   {"thresholds", mat(rule.thresholds)}};
    doc["kappa"] = m->kappa();
    doc["distance_limit"] = m->distance_limit();
    doc["word_length"] = rule.word_length();
    if (const auto* store = m->bdd()) {
      doc["backend"] = "bdd";
      doc["bdd"] = {{"base", bdd_image(store->manager.export_image(store->base))},
                    {"accepted", bdd_image(store->manager.export_image(store->accepted))}};
    } else {
      const auto* set = m->bitset();
      std::string bytes;
      bytes.reserve(set->rows().size() * 8);
      for (auto r : set->rows()) put_le<std::uint64_t>(bytes, r);
      doc["backend"] = "bitset";
      doc["bitset"] = {{"word_count", set->size()}, {"rows", base64_encode(bytes)}};
    }
  } else if (const auto* m = std::get_if<GaussianIntervalMonitor>(&any)) {
    doc["mean"] = vec(m->stats.mean);
    doc["stddev"] = vec(m->stats.stddev);
    doc["count"] = m->stats.count;
    doc["width"] = m->width;
    doc["tolerance"] = m->tolerance;
    doc["mode"] = m->mode == BoundMode::Chebyshev ? "chebyshev" : "gaussian";
  } else if (const auto* m = std::get_if<MahalanobisMonitor>(&any)) {
    json means = json::array();
    for (const auto& mu : m->class_means) means.push_back(vec(mu));
    doc["class_means"] = std::move(means);
    doc["covariance_inverse"] = mat(m->covariance_inverse);
    doc["regularization"] = m->regularization;
    doc["threshold"] = m->threshold;
  }
  return doc;
}

AnyMonitor from_json(const json& doc) {
  if (!doc.is_object()) throw FormatError("", "expected a JSON object");
  if (text(doc, "", "format") != "nnmon-monitor") throw FormatError("format", "expected \"nnmon-monitor\"");
  if (integer<int>(doc, "", "version") != kMonitorVersion) {
    throw FormatError("version", "unsupported schema version " + doc["version"].dump());
  }
  const std::string kind = text(doc, "", "kind");
  const int layer = integer<int>(doc, "", "layer");
  const FeatureSource src = source_field(doc, "");

  if (kind == "box") {
    const double delta = number(doc, "", "delta");
    return read_box(field(doc, "", "box"), "box", layer, src, delta);
  }
  if (kind == "multibox") {
    MultiBoxMonitor m;
    m.layer = layer;
    m.source = src;
    m.delta = number(doc, "", "delta");
    m.clusters = integer<int>(doc, "", "clusters", 1);
    m.seed = integer<std::uint64_t>(doc, "", "seed");
    m.standardized = boolean(doc, "", "standardized");
    const json& boxes = field(doc, "", "boxes");
    if (!boxes.is_array() || boxes.empty()) throw FormatError("boxes", "expected a nonempty array");
    for (std::size_t i = 0; i < boxes.size(); ++i) {
      m.boxes.push_back(read_box(boxes[i], idx("boxes", i), layer, src, m.delta,
                                 m.boxes.empty() ? -1 : m.boxes.front().dims()));
    }
    return m;
  }
  if (kind == "neuron-select") {
    NeuronSelectionMonitor m;
    m.layer = layer;
    m.neurons = integer<Index>(doc, "", "neurons");
    m.threshold = integer<int>(doc, "", "threshold");
    const json& classes = field(doc, "", "classes");
    if (!classes.is_array()) throw FormatError("classes", "expected an array");
    for (std::size_t c = 0; c < classes.size(); ++c) {
      const std::string where = idx("classes", c);
      if (!classes[c].is_array()) throw FormatError(where, "expected an array");
      std::vector<SelectedNeuron> list;
      for (std::size_t k = 0; k < classes[c].size(); ++k) {
        const std::string w = idx(where, k);
        const json& e = classes[c][k];
        SelectedNeuron s;
        s.neuron = integer<Index>(e, w, "neuron");
        if (s.neuron >= m.neurons) throw FormatError(sub(w, "neuron"), "out of range");
        const std::string sign = text(e, w, "sign");
        if (sign == "+") {
          s.sign = NeuronSign::AlwaysPositive;
        } else if (sign == "-") {
          s.sign = NeuronSign::AlwaysNegative;
        } else {
          throw FormatError(sub(w, "sign"), "expected \"+\" or \"-\"");
        }
        s.bound = number(e, w, "bound");
        list.push_back(s);
      }
      m.classes.push_back(std::move(list));
    }
    return m;
  }
  if (kind == "pattern") {
    const json& r = field(doc, "", "rule");
    const std::string mode = text(r, "rule", "mode");
    BinarizationRule rule;
    try {
      if (mode == "single") {
        rule = BinarizationRule::single(mat_field(r, "rule", "thresholds", 1).col(0), src);
      } else if (mode == "two-bit") {
        rule = BinarizationRule::two_bit(mat_field(r, "rule", "thresholds", 3), src);
      } else {
        throw FormatError("rule.mode", "expected \"single\" or \"two-bit\"");
      }
    } catch (const ParameterError& e) {
      throw FormatError("rule.thresholds", e.what());
    }
    const auto kappa = integer<std::uint32_t>(doc, "", "kappa");
    const auto limit = integer<std::size_t>(doc, "", "distance_limit");
    const auto word_length = integer<std::size_t>(doc, "", "word_length");
    if (word_length != rule.word_length()) throw FormatError("word_length", "does not match the rule");
    const std::string backend = text(doc, "", "backend");
    if (backend == "bdd") {
      const json& b = field(doc, "", "bdd");
      const auto vars = static_cast<std::uint32_t>(word_length);
      PatternMonitor::BddStore store{BddManager(vars), {}, {}};
      store.base = store.manager.import_image(read_bdd_image(field(b, "bdd", "base"), "bdd.base", vars));
      store.accepted =
          store.manager.import_image(read_bdd_image(field(b, "bdd", "accepted"), "bdd.accepted", vars));
      PatternMonitor m(layer, std::move(rule), kappa, std::move(store));
      m.set_distance_limit(limit);
      return m;
    }
    if (backend == "bitset") {
      const json& b = field(doc, "", "bitset");
      const auto count = integer<std::size_t>(b, "bitset", "word_count");
      const std::string bytes = decode_field(b, "bitset", "rows");
      if (bytes.size() % 8 != 0) throw FormatError("bitset.rows", "length is not a multiple of 8 bytes");
      std::vector<std::uint64_t> rows(bytes.size() / 8);
      for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = get_le<std::uint64_t>(bytes, 8 * i);
      BitsetPatternSet set;
      try {
        set = BitsetPatternSet::from_rows(word_length, std::move(rows));
      } catch (const Error& e) {
        throw FormatError("bitset.rows", e.what());
      }
      if (set.size() != count) throw FormatError("bitset.word_count", "does not match the row data");
      PatternMonitor m(layer, std::move(rule), kappa, std::move(set));
      m.set_distance_limit(limit);
      return m;
    }
    throw FormatError("backend", "expected \"bdd\" or \"bitset\"");
  }
  if (kind == "gaussian") {
    GaussianIntervalMonitor m;
    m.source = src;
    m.stats.layer = layer;
    m.stats.mean = vec_field(doc, "", "mean");
    m.stats.stddev = vec_field(doc, "", "stddev", m.stats.mean.size());
    if ((m.stats.stddev.array() < 0.0).any()) throw FormatError("stddev", "negative entry");
    m.stats.count = integer<std::size_t>(doc, "", "count");
    m.width = number(doc, "", "width");
    if (!(m.width > 0.0)) throw FormatError("width", "must be positive");
    m.tolerance = integer<int>(doc, "", "tolerance");
    const std::string mode = text(doc, "", "mode");
    if (mode == "gaussian") {
      m.mode = BoundMode::Gaussian;
    } else if (mode == "chebyshev") {
      m.mode = BoundMode::Chebyshev;
    } else {
      throw FormatError("mode", "expected \"gaussian\" or \"chebyshev\"");
    }
    return m;
  }
  if (kind == "mahalanobis") {
    MahalanobisMonitor m;
    m.layer = layer;
    m.source = src;
    const json& means = field(doc, "", "class_means");
    if (!means.is_array() || means.empty()) throw FormatError("class_means", "expected a nonempty array");
    for (std::size_t c = 0; c < means.size(); ++c) {
      m.class_means.push_back(read_vec(means[c], idx("class_means", c),
                                       m.class_means.empty() ? -1 : m.class_means.front().size()));
    }
    const Index d = m.class_means.front().size();
    m.covariance_inverse = mat_field(doc, "", "covariance_inverse", d);
    if (m.covariance_inverse.rows() != d) throw FormatError("covariance_inverse", "expected a square matrix");
    m.regularization = number(doc, "", "regularization");
    m.threshold = number(doc, "", "threshold");
    return m;
  }
  throw FormatError("kind", "unknown monitor kind \"" + kind + "\"");
}

}  // namespace

std::string base64_encode(const std::string& bytes) {
  namespace b64 = boost::beast::detail::base64;
  std::string out(b64::encoded_size(bytes.size()), '\0');
  out.resize(b64::encode(out.data(), bytes.data(), bytes.size()));
  return out;
}

std::string base64_decode(const std::string& text) {
  namespace b64 = boost::beast::detail::base64;
  if (text.size() % 4 != 0) throw FormatError("", "base64 length is not a multiple of 4");
  std::string out(b64::decoded_size(text.size()), '\0');
  std::size_t body = text.size();
  while (body > 0 && text.size() - body < 2 && text[body - 1] == '=') --body;
  const auto [written, read] = b64::decode(out.data(), text.data(), body);
  if (read != body) throw FormatError("", "invalid base64 character");
  out.resize(written);
  if (base64_encode(out) != text) throw FormatError("", "non-canonical base64");
  return out;
}

std::string serialize_monitor(const AnyMonitor& monitor) { return to_json(monitor).dump(1) + "\n"; }

AnyMonitor parse_monitor(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw FormatError("", std::string("invalid JSON: ") + e.what());
  }
  return from_json(doc);
}

void save_monitor(const AnyMonitor& monitor, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError(path, "cannot open for writing");
  out << serialize_monitor(monitor);
  if (!out) throw FormatError(path, "write failed");
}

AnyMonitor load_monitor(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError(path, "cannot open monitor file");
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_monitor(ss.str());
  } catch (const FormatError& e) {
    throw FormatError(e.path().empty() ? path : path + ":" + e.path(),
                      std::string(e.what()).substr(e.path().empty() ? 0 : e.path().size() + 2));
  }
}

}  // namespace nnmon
