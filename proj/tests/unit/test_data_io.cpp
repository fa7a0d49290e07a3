#include "nnmon/errors.hpp"
#include "nnmon/features.hpp"
#include "nnmon/idx.hpp"
#include "nnmon/metrics.hpp"
#include "nnmon/monitor_io.hpp"
#include "nnmon/weights.hpp"

#include "../support.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

using namespace nnmon;
namespace fs = std::filesystem;

namespace {

Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<Index>(xs.size()));
  Index i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

void write_bytes(const std::string& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

std::string read_text(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Two 2x2 images, labels 3 and 7.
std::vector<std::uint8_t> tiny_images() {
  return {0, 0, 8, 3, 0, 0, 0, 2, 0, 0, 0, 2, 0, 0, 0, 2, 0, 255, 51, 102, 255, 0, 0, 0};
}
std::vector<std::uint8_t> tiny_labels() { return {0, 0, 8, 1, 0, 0, 0, 2, 3, 7}; }

}  // namespace

TEST_CASE("idx: crafted file") {
  const auto dir = nnmon::testing::scratch_dir("idx");
  const auto img = (dir / "img").string();
  const auto lab = (dir / "lab").string();
  write_bytes(img, tiny_images());
  write_bytes(lab, tiny_labels());
  const auto data = load_idx(img, lab, "tiny");
  REQUIRE(data.size() == 2);
  CHECK(data.inputs.cols() == 4);
  CHECK(data.labels == std::vector<int>{3, 7});
  CHECK(data.inputs(0, 1) == 1.0);
  CHECK(data.inputs(0, 2) == 0.2);
  CHECK(data.inputs(1, 0) == 1.0);
  CHECK(data.image_rows == 2);

  const auto part = slice(data, 1, 2);
  CHECK(part.size() == 1);
  CHECK(part.labels[0] == 7);
  CHECK_THROWS_AS(slice(data, 1, 3), ParameterError);

  const auto raw = read_idx_images(img);
  write_idx_images((dir / "copy").string(), raw);
  CHECK(read_idx_images((dir / "copy").string()).pixels == raw.pixels);
}

TEST_CASE("idx: malformed files") {
  const auto dir = nnmon::testing::scratch_dir("idx_bad");
  const auto img = (dir / "img").string();
  const auto lab = (dir / "lab").string();
  write_bytes(lab, tiny_labels());

  auto bad_magic = tiny_images();
  bad_magic[3] = 1;
  write_bytes(img, bad_magic);
  CHECK_THROWS_AS(load_idx(img, lab), FormatError);

  auto truncated = tiny_images();
  truncated.resize(truncated.size() - 3);
  write_bytes(img, truncated);
  CHECK_THROWS_AS(load_idx(img, lab), FormatError);

  write_bytes(img, tiny_images());
  write_bytes(lab, {0, 0, 8, 1, 0, 0, 0, 1, 3});
  CHECK_THROWS_AS(load_idx(img, lab), ConsistencyError);
  CHECK_THROWS_AS(load_idx((dir / "missing").string(), lab), FormatError);
}

TEST_CASE("idx: gzip-compressed MNIST test set") {
  const auto data = load_idx(nnmon::testing::data_file("mnist/t10k-images-idx3-ubyte.gz"),
                             nnmon::testing::data_file("mnist/t10k-labels-idx1-ubyte.gz"));
  CHECK(data.size() == 10000);
  CHECK(data.inputs.cols() == 784);
  CHECK(data.labels[0] == 7);
  CHECK(data.inputs.minCoeff() == 0.0);
  CHECK(data.inputs.maxCoeff() == 1.0);
}

TEST_CASE("weights: golden fixture") {
  const auto net = load_weights(nnmon::testing::fixture("tiny_weights.json"));
  REQUIRE(net.depth() == 2);
  CHECK(net.dim(0) == 2);
  CHECK(net.dim(1) == 3);
  // x = (1, 2): pre = (-1, 3.5, 0.25), h = (0, 3.5, 0.25)
  const Vector y = net.forward(vec({1, 2}));
  CHECK(y(0) == doctest::Approx(-0.15));
  CHECK(y(1) == doctest::Approx(1.775));
}

TEST_CASE("weights: round trip") {
  std::mt19937_64 rng(3);
  const Network net = nnmon::testing::random_network({5, 4, 3}, rng);
  const auto path = (nnmon::testing::scratch_dir("weights") / "w.json").string();
  save_weights(net, path);
  const Network back = load_weights(path);
  for (int l = 1; l <= net.depth(); ++l) {
    CHECK(back.layer(l).weights == net.layer(l).weights);
    CHECK(back.layer(l).bias == net.layer(l).bias);
    CHECK(back.layer(l).activation == net.layer(l).activation);
  }
  CHECK(serialize_weights(back) == serialize_weights(net));
}

TEST_CASE("weights: errors name the offending field") {
  const std::string bad_dims = R"({"format":"nnmon-weights","version":1,"layers":[
    {"rows":2,"cols":2,"weights":[1,0,0,1],"bias":[0,0],"activation":"relu"},
    {"rows":1,"cols":3,"weights":[1,1,1],"bias":[0],"activation":"identity"}]})";
  try {
    parse_weights(bad_dims);
    FAIL("expected FormatError");
  } catch (const FormatError& e) {
    CHECK(e.path().rfind("layers[1]", 0) == 0);
  }
  const std::string short_bias = R"({"format":"nnmon-weights","version":1,"layers":[
    {"rows":2,"cols":2,"weights":[1,0,0,1],"bias":[0],"activation":"identity"}]})";
  CHECK_THROWS_AS(parse_weights(short_bias), FormatError);
  CHECK_THROWS_AS(parse_weights("not json"), FormatError);
  CHECK_THROWS_AS(parse_weights(R"({"format":"other","version":1,"layers":[]})"), FormatError);
}

TEST_CASE("base64") {
  CHECK(base64_encode("") == "");
  CHECK(base64_encode("f") == "Zg==");
  CHECK(base64_encode("foobar") == "Zm9vYmFy");
  CHECK(base64_decode("Zm9vYg==") == "foob");
  std::string bytes;
  for (int i = 0; i < 256; ++i) bytes.push_back(static_cast<char>(i));
  CHECK(base64_decode(base64_encode(bytes)) == bytes);
  CHECK_THROWS_AS(base64_decode("Zm9v!"), FormatError);
  CHECK_THROWS_AS(base64_decode("Zg="), FormatError);
}

TEST_CASE("monitor serialization round trip for every kind") {
  std::mt19937_64 rng(12);
  const Network net = nnmon::testing::random_network({4, 9, 3}, rng);
  const Matrix x = nnmon::testing::random_matrix(40, 4, rng);
  const Matrix q = nnmon::testing::random_matrix(150, 4, rng, 1.5);
  const Matrix post = net.batch_features(x, 1, FeatureSource::PostActivation);
  const Matrix pre = net.batch_features(x, 1, FeatureSource::PreActivation);
  std::vector<int> labels;
  for (Index i = 0; i < x.rows(); ++i) labels.push_back(static_cast<int>(i % 3));

  std::vector<AnyMonitor> monitors;
  monitors.emplace_back(build_box(net, x, 1, 0.05));
  monitors.emplace_back(build_multibox(net, x, 1, 0.05, 3, 4, true));
  monitors.emplace_back(build_neuron_selection(net, x, labels, 1, 1));
  const auto rule = BinarizationRule::single(percentile_threshold(pre, 50), FeatureSource::PreActivation);
  monitors.emplace_back(build_pattern_monitor(net, x, 1, rule, PatternBackend::Bdd, 1));
  monitors.emplace_back(build_pattern_monitor(net, x, 1, rule, PatternBackend::Bitset, 2));
  const auto two_bit =
      BinarizationRule::two_bit(percentile_cutpoints(pre, {25, 50, 75}), FeatureSource::PreActivation);
  monitors.emplace_back(build_pattern_monitor(net, x, 1, two_bit, PatternBackend::Bdd, 0));
  auto gauss = make_interval_monitor(fit_stats(nnmon::testing::random_matrix(40, 9, rng), 1), 2.5, 1,
                                     BoundMode::Chebyshev);
  monitors.emplace_back(gauss);
  auto maha = fit_mahalanobis(nnmon::testing::random_matrix(40, 9, rng), labels);
  maha.layer = 1;
  maha.threshold = 3.25;
  monitors.emplace_back(maha);

  const auto dir = nnmon::testing::scratch_dir("monitors");
  for (const auto& m : monitors) {
    CAPTURE(monitor_kind(m));
    const std::string text = serialize_monitor(m);
    CHECK(text == serialize_monitor(m));
    const auto path = (dir / (monitor_kind(m) + ".json")).string();
    save_monitor(m, path);
    const AnyMonitor back = load_monitor(path);
    CHECK(monitor_kind(back) == monitor_kind(m));
    CHECK(monitor_layer(back) == monitor_layer(m));
    CHECK(monitor_source(back) == monitor_source(m));
    CHECK(serialize_monitor(back) == text);
    for (Index i = 0; i < q.rows(); ++i) {
      const auto a = evaluate(m, net, q.row(i).transpose());
      const auto b = evaluate(back, net, q.row(i).transpose());
      CHECK(a.verdict == b.verdict);
      CHECK(a.score == b.score);
    }
  }
  (void)post;
}

TEST_CASE("monitor parsing errors") {
  CHECK_THROWS_AS(parse_monitor("[]"), FormatError);
  CHECK_THROWS_AS(parse_monitor(R"({"format":"nnmon-monitor","version":2,"kind":"box"})"), FormatError);
  CHECK_THROWS_AS(parse_monitor(R"({"format":"nnmon-monitor","version":1,"kind":"cube"})"), FormatError);
  const std::string box = serialize_monitor(AnyMonitor(build_box(Matrix::Zero(2, 3), 0.0)));
  auto doc = box;
  doc.replace(doc.find("\"upper\""), 7, "\"uppr\"");
  CHECK_THROWS_AS(parse_monitor(doc), FormatError);
  try {
    load_monitor("/nonexistent/m.json");
    FAIL("expected FormatError");
  } catch (const FormatError& e) {
    CHECK(e.path().find("/nonexistent/m.json") != std::string::npos);
  }
}

TEST_CASE("auroc") {
  CHECK(auroc({0.1, 0.2}, {0.8, 0.9}) == 1.0);
  CHECK(auroc({0.8, 0.9}, {0.1, 0.2}) == 0.0);
  CHECK(auroc({0.5, 0.5}, {0.5, 0.5}) == 0.5);
  // sklearn.metrics.roc_auc_score reference.
  CHECK(auroc({0.1, 0.4, 0.35, 0.8, 0.2, 0.5}, {0.8, 0.9, 0.3, 0.5, 0.95}) == doctest::Approx(0.8).epsilon(1e-12));
  CHECK_THROWS_AS(auroc({}, {1.0}), InsufficientDataError);

  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> level(0, 20);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<double> in(37);
    std::vector<double> ood(23);
    for (auto& v : in) v = level(rng);
    for (auto& v : ood) v = level(rng) + 3;
    double wins = 0;
    for (double a : in) {
      for (double b : ood) wins += b > a ? 1.0 : (b == a ? 0.5 : 0.0);
    }
    const double expected = wins / static_cast<double>(in.size() * ood.size());
    CHECK(auroc(in, ood) == doctest::Approx(expected).epsilon(1e-12));
    std::vector<double> in2 = in;
    std::vector<double> ood2 = ood;
    for (auto& v : in2) v = std::exp(0.3 * v) - 7;
    for (auto& v : ood2) v = std::exp(0.3 * v) - 7;
    CHECK(auroc(in2, ood2) == doctest::Approx(auroc(in, ood)).epsilon(1e-12));
  }
}

TEST_CASE("threshold and tnr at tpr") {
  std::vector<double> in;
  for (int i = 1; i <= 20; ++i) in.push_back(i);
  CHECK(threshold_at_acceptance(in, 0.95) == 19.0);
  CHECK(threshold_at_acceptance(in, 1.0) == 20.0);
  CHECK(tnr_at_tpr95(in, {19.5, 25, 3, 30}) == 0.75);
  CHECK(tnr_at_tpr95(in, {1, 2}) == 0.0);
  CHECK_THROWS_AS(threshold_at_acceptance(in, 0.0), ParameterError);
  CHECK_THROWS_AS(tnr_at_tpr95({}, {1.0}), InsufficientDataError);
}

TEST_CASE("confidence histogram") {
  const auto h = confidence_histogram({0.0, 0.04, 0.05, 0.5, 0.999, 1.0});
  CHECK(h[0] == 2);
  CHECK(h[1] == 1);
  CHECK(h[10] == 1);
  CHECK(h[19] == 2);
  std::size_t total = 0;
  for (auto c : h) total += c;
  CHECK(total == 6);
}

TEST_CASE("report csv files") {
  EvalReport r;
  r.in_name = "mnist";
  r.ood_name = "fashion";
  r.in_samples = {{0, 0.1, false, 0.9, 3, 3}, {1, 0.7, true, 0.5, 2, 1}};
  r.ood_samples = {{0, 0.8, true, 0.4, 1, 5}};
  summarize(r);
  CHECK(r.accuracy == 0.5);
  CHECK(r.in_acceptance == 0.5);
  CHECK(r.ood_rejection == 1.0);
  CHECK(r.auroc == 1.0);
  const auto dir = nnmon::testing::scratch_dir("report");
  write_report_csv(r, (dir / "s.csv").string());
  write_histogram_csv(r, (dir / "h.csv").string());
  write_summary_csv(r, (dir / "m.csv").string());
  const auto samples = read_text((dir / "s.csv").string());
  CHECK(samples.rfind("dataset,index,label,predicted,confidence,score,verdict\n", 0) == 0);
  CHECK(samples.find("fashion,0,5,1,") != std::string::npos);
  CHECK(read_text((dir / "h.csv").string()).rfind("bin_low,bin_high,in_count,ood_count\n", 0) == 0);
  CHECK(read_text((dir / "m.csv").string()).find("auroc,1") != std::string::npos);
}

TEST_CASE("feature csv cache") {
  std::mt19937_64 rng(6);
  const Network net = nnmon::testing::random_network({3, 5, 2}, rng);
  LabeledDataset data;
  data.inputs = nnmon::testing::random_matrix(12, 3, rng);
  data.labels.assign(12, 4);
  const auto f = extract_features(net, data, 1, FeatureSource::PreActivation);
  CHECK(f.values.rows() == 12);
  CHECK(f.values.row(3).transpose() == monitored_features(net, data.inputs.row(3).transpose(), 1,
                                                           FeatureSource::PreActivation));
  const auto path = (nnmon::testing::scratch_dir("features") / "f.csv").string();
  save_features_csv(f, path);
  const auto back = load_features_csv(path);
  CHECK(back.layer == 1);
  CHECK(back.source == FeatureSource::PreActivation);
  CHECK(back.values == f.values);
  CHECK(back.labels == f.labels);

  std::ofstream(path) << "# layer=1 source=post\nlabel,n0\n1,abc\n";
  try {
    load_features_csv(path);
    FAIL("expected FormatError");
  } catch (const FormatError& e) {
    CHECK(e.path() == path + ":3");
  }
}
