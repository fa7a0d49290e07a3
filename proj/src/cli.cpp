#include "nnmon/cli.hpp"

#include "nnmon/errors.hpp"
#include "nnmon/features.hpp"
#include "nnmon/idx.hpp"
#include "nnmon/metrics.hpp"
#include "nnmon/monitor.hpp"
#include "nnmon/monitor_io.hpp"
#include "nnmon/scores.hpp"
#include "nnmon/verify.hpp"
#include "nnmon/weights.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <limits>
#include <optional>
#include <sstream>

namespace nnmon::cli {
namespace {

std::string fmt(double v, int digits = 6) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.*g", digits, v);
  return buf;
}

struct DataArgs {
  std::string images;
  std::string labels;
  std::string range;  // "begin:end", empty for all
};

void add_data(CLI::App* app, DataArgs& d, const std::string& prefix, bool required,
              const std::string& what) {
  auto* i = app->add_option("--" + prefix + "images", d.images, what + " IDX images (plain or gzip)");
  auto* l = app->add_option("--" + prefix + "labels", d.labels, what + " IDX labels (plain or gzip)");
  app->add_option("--" + prefix + "range", d.range, what + " sample range BEGIN:END (default all)");
  if (required) {
    i->required();
    l->required();
  } else {
    i->needs(l);
    l->needs(i);
  }
}

LabeledDataset load_data(const DataArgs& d, const std::string& flag) {
  LabeledDataset data = load_idx(d.images, d.labels, d.images);
  if (d.range.empty()) return data;
  const auto colon = d.range.find(':');
  Index begin = 0;
  Index end = data.size();
  try {
    if (colon == std::string::npos) throw std::invalid_argument("no colon");
    if (colon > 0) begin = std::stol(d.range.substr(0, colon));
    if (colon + 1 < d.range.size()) end = std::stol(d.range.substr(colon + 1));
  } catch (const std::exception&) {
    throw ParameterError("--" + flag + "range: expected BEGIN:END, got '" + d.range + "'");
  }
  if (begin < 0 || end > data.size() || begin >= end) {
    throw ParameterError("--" + flag + "range " + d.range + " is outside 0:" + std::to_string(data.size()) +
                         " or empty");
  }
  return slice(data, begin, end);
}

std::ofstream open_out(const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw FormatError(path, "cannot open for writing");
  return f;
}

FeatureSource parse_source(const std::string& s) {
  return s == "pre" ? FeatureSource::PreActivation : FeatureSource::PostActivation;
}

// ---------------------------------------------------------------- features

struct FeaturesCmd {
  std::string model;
  DataArgs data;
  int layer = 1;
  std::string source = "post";
  std::string out;

  void attach(CLI::App& app) {
    auto* c = app.add_subcommand("features", "Extract layer features of a dataset to CSV");
    c->add_option("--model", model, "Weight file")->required();
    add_data(c, data, "", true, "Dataset");
    c->add_option("--layer", layer, "Layer index 1..L")->capture_default_str();
    c->add_option("--source", source, "post or pre activation")
        ->check(CLI::IsMember({"post", "pre"}))
        ->capture_default_str();
    c->add_option("--out", out, "Output CSV")->required();
  }

  int run(std::ostream& out_stream) const {
    const Network net = load_weights(model);
    const LabeledDataset ds = load_data(data, "");
    const FeatureMatrix fm = extract_features(net, ds, layer, parse_source(source));
    save_features_csv(fm, out);
    out_stream << "wrote " << fm.values.rows() << " x " << fm.values.cols() << " features to " << out << "\n";
    return kExitOk;
  }
};

// ---------------------------------------------------------------- monitor build

struct BuildCmd {
  std::string model;
  DataArgs data;
  DataArgs calib;
  std::string kind;
  int layer = 1;
  std::string source;  // empty: kind default
  std::string out;
  // box / multibox
  double delta = 0.0;
  int k = 10;
  std::uint64_t seed = 0;
  bool standardize = false;
  // pattern
  double alpha = 0.0;
  std::optional<double> percentile;
  std::string encoding = "single";
  std::vector<double> cut_percentiles{25.0, 50.0, 75.0};
  std::string backend = "bdd";
  std::uint32_t kappa = 0;
  std::optional<std::size_t> distance_limit;
  // neuron-select
  int theta = 0;
  std::string label_source = "true";
  // gaussian / mahalanobis
  double width = 3.0;
  std::optional<int> tolerance;
  std::string bound = "gaussian";
  std::optional<double> lambda;
  std::optional<double> threshold;
  double accept_rate = 0.95;

  void attach(CLI::App* monitor) {
    auto* c = monitor->add_subcommand("build", "Build a monitor from a dataset and save it");
    c->add_option("--model", model, "Weight file")->required();
    add_data(c, data, "", true, "Build set");
    add_data(c, calib, "calib-", false, "Calibration set for automatic thresholds (default: build set)");
    c->add_option("--kind", kind, "Monitor kind")
        ->required()
        ->check(CLI::IsMember({"box", "multibox", "neuron-select", "pattern", "gaussian", "mahalanobis"}));
    c->add_option("--layer", layer, "Monitored layer 1..L")->capture_default_str();
    c->add_option("--source", source,
                  "post or pre activation (default: pre for neuron-select and percentile patterns, else post)")
        ->check(CLI::IsMember({"post", "pre"}));
    c->add_option("--out", out, "Output monitor file")->required();

    c->add_option("--delta", delta, "Box buffer")->capture_default_str()->check(CLI::NonNegativeNumber);
    c->add_option("--k", k, "Multi-box cluster count")->capture_default_str()->check(CLI::PositiveNumber);
    c->add_option("--seed", seed, "Clustering seed")->capture_default_str();
    c->add_flag("--standardize", standardize, "Cluster on per-neuron standardized values");

    auto* a = c->add_option("--alpha", alpha, "Pattern threshold (single encoding)")->capture_default_str();
    auto* p = c->add_option("--percentile", percentile, "Pattern threshold as per-neuron percentile in (0,100)");
    a->excludes(p);
    c->add_option("--encoding", encoding, "single or two-bit")
        ->check(CLI::IsMember({"single", "two-bit"}))
        ->capture_default_str();
    c->add_option("--cut-percentiles", cut_percentiles, "Two-bit cutpoint percentiles")
        ->expected(3)
        ->delimiter(',')
        ->capture_default_str();
    c->add_option("--backend", backend, "Pattern backend: bdd or bitset")
        ->check(CLI::IsMember({"bdd", "bitset"}))
        ->capture_default_str();
    c->add_option("--kappa", kappa, "Hamming tolerance")->capture_default_str();
    c->add_option("--distance-limit", distance_limit, "Distance search limit (default kappa+2)");

    c->add_option("--theta", theta, "Neuron-selection deviation threshold")
        ->capture_default_str()
        ->check(CLI::NonNegativeNumber);
    c->add_option("--label-source", label_source, "Neuron-selection classes: true labels or predicted")
        ->check(CLI::IsMember({"true", "predicted"}))
        ->capture_default_str();

    c->add_option("--width", width, "Gaussian band half-width in standard deviations")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    c->add_option("--tolerance", tolerance, "Tolerated violations (default: calibrated to --accept-rate)");
    c->add_option("--bound", bound, "gaussian or chebyshev")
        ->check(CLI::IsMember({"gaussian", "chebyshev"}))
        ->capture_default_str();
    c->add_option("--lambda", lambda, "Covariance regularization (default 1e-6*trace/d)");
    c->add_option("--threshold", threshold, "Mahalanobis threshold (default: calibrated to --accept-rate)");
    c->add_option("--accept-rate", accept_rate, "Calibration acceptance rate in (0,1]")
        ->capture_default_str()
        ->check(CLI::Range(0.0, 1.0));
  }

  FeatureSource resolved_source() const {
    if (!source.empty()) return parse_source(source);
    if (kind == "neuron-select" || (kind == "pattern" && (percentile || encoding == "two-bit"))) {
      return FeatureSource::PreActivation;
    }
    return FeatureSource::PostActivation;
  }

  int run(std::ostream& os, std::ostream& log) const {
    const Network net = load_weights(model);
    if (layer < 1 || layer > net.depth()) {
      throw LayerIndexError("--layer " + std::to_string(layer) + " outside 1.." + std::to_string(net.depth()));
    }
    const LabeledDataset ds = load_data(data, "");
    const FeatureSource src = resolved_source();
    log << "resolved source=" << to_string(src) << "\n";
    const Matrix feats = net.batch_features(ds.inputs, layer, src);

    std::optional<AnyMonitor> mon;
    if (kind == "box") {
      mon.emplace(build_box(feats, delta, layer, src));
    } else if (kind == "multibox") {
      mon.emplace(build_multibox(feats, delta, k, seed, standardize, layer, src));
    } else if (kind == "neuron-select") {
      if (src != FeatureSource::PreActivation) throw ParameterError("--source: neuron-select reads pre-activation values");
      std::vector<int> labels = ds.labels;
      if (label_source == "predicted") {
        const Matrix logits = net.batch_logits(ds.inputs);
        for (Index i = 0; i < logits.rows(); ++i) labels[static_cast<std::size_t>(i)] = static_cast<int>(argmax(logits.row(i).transpose()));
      }
      mon.emplace(build_neuron_selection(feats, labels, static_cast<int>(net.output_dim()), theta, layer));
    } else if (kind == "pattern") {
      BinarizationRule rule;
      if (encoding == "two-bit") {
        if (!(cut_percentiles[0] < cut_percentiles[1] && cut_percentiles[1] < cut_percentiles[2])) {
          throw ParameterError("--cut-percentiles must be strictly increasing");
        }
        rule = BinarizationRule::two_bit(
            percentile_cutpoints(feats, {cut_percentiles[0], cut_percentiles[1], cut_percentiles[2]}), src);
      } else if (percentile) {
        rule = BinarizationRule::single(percentile_threshold(feats, *percentile), src);
      } else {
        rule = BinarizationRule::single(Vector::Constant(feats.cols(), alpha), src);
      }
      auto pm = PatternMonitor::build(feats, layer, std::move(rule),
                                      backend == "bitset" ? PatternBackend::Bitset : PatternBackend::Bdd, kappa);
      if (distance_limit) pm.set_distance_limit(*distance_limit);
      mon.emplace(std::move(pm));
    } else if (kind == "gaussian") {
      auto gm = make_interval_monitor(fit_stats(feats, layer), width, 0,
                                      bound == "chebyshev" ? BoundMode::Chebyshev : BoundMode::Gaussian);
      gm.source = src;
      if (tolerance) {
        if (*tolerance < 0) throw ParameterError("--tolerance must be non-negative");
        gm.tolerance = *tolerance;
      } else {
        const Matrix cf = calibration_features(net, ds, src, feats);
        std::vector<double> v;
        for (Index i = 0; i < cf.rows(); ++i) v.push_back(gm.verdict(cf.row(i).transpose()).violations);
        gm.tolerance = static_cast<int>(threshold_at_acceptance(v, accept_rate));
        log << "calibrated tolerance=" << gm.tolerance << "\n";
      }
      mon.emplace(std::move(gm));
    } else if (kind == "mahalanobis") {
      auto mm = fit_mahalanobis(feats, ds.labels, lambda);
      mm.layer = layer;
      mm.source = src;
      if (threshold) {
        mm.threshold = *threshold;
      } else {
        const Matrix cf = calibration_features(net, ds, src, feats);
        std::vector<double> v;
        for (Index i = 0; i < cf.rows(); ++i) v.push_back(mm.score(cf.row(i).transpose()));
        mm.threshold = threshold_at_acceptance(v, accept_rate);
        log << "calibrated threshold=" << fmt(mm.threshold, 17) << "\n";
      }
      mon.emplace(std::move(mm));
    }

    save_monitor(*mon, out);
    std::size_t rejected = 0;
    for (Index i = 0; i < ds.size(); ++i) {
      if (evaluate(*mon, net, ds.inputs.row(i).transpose()).verdict == Verdict::OoD) ++rejected;
    }
    os << "kind: " << monitor_kind(*mon) << "\n"
       << "layer: " << layer << "\n"
       << "source: " << to_string(src) << "\n"
       << "build_samples: " << ds.size() << "\n"
       << "build_rejected: " << rejected << "\n";
    if (const auto* pm = std::get_if<PatternMonitor>(&*mon)) {
      os << "patterns: " << pm->pattern_count() << "\n";
      if (const auto* store = pm->bdd()) os << "bdd_nodes: " << store->manager.size(store->accepted) << "\n";
    }
    if (const auto* mb = std::get_if<MultiBoxMonitor>(&*mon)) os << "boxes: " << mb->boxes.size() << "\n";
    os << "monitor: " << out << "\n";
    return kExitOk;
  }

  Matrix calibration_features(const Network& net, const LabeledDataset& build, FeatureSource src,
                              const Matrix& build_feats) const {
    if (calib.images.empty()) return build_feats;
    (void)build;
    return net.batch_features(load_data(calib, "calib-").inputs, layer, src);
  }
};

// ---------------------------------------------------------------- monitor eval

EvalReport make_report(const std::string& in_name, const std::string& ood_name,
                       const std::function<SampleRecord(const LabeledDataset&, Index)>& judge,
                       const LabeledDataset& in, const LabeledDataset& ood) {
  EvalReport r;
  r.in_name = in_name;
  r.ood_name = ood_name;
  for (Index i = 0; i < in.size(); ++i) r.in_samples.push_back(judge(in, i));
  for (Index i = 0; i < ood.size(); ++i) r.ood_samples.push_back(judge(ood, i));
  summarize(r);
  return r;
}

void print_summary(std::ostream& os, const EvalReport& r) {
  os << "in_samples: " << r.in_samples.size() << "\n"
     << "ood_samples: " << r.ood_samples.size() << "\n"
     << "accuracy: " << fmt(r.accuracy) << "\n"
     << "in_acceptance: " << fmt(r.in_acceptance) << "\n"
     << "ood_rejection: " << fmt(r.ood_rejection) << "\n"
     << "auroc: " << fmt(r.auroc) << "\n"
     << "tnr_at_tpr95: " << fmt(r.tnr_at_tpr95) << "\n";
}

void print_histogram(std::ostream& os, const EvalReport& r) {
  os << "confidence histogram (max softmax, T=1)\n";
  os << "bin            in-dist |      ood\n";
  for (std::size_t b = 0; b < kHistogramBins; ++b) {
    char buf[96];
    std::snprintf(buf, sizeof(buf), "[%.2f,%.2f%c %8zu | %8zu\n", static_cast<double>(b) / kHistogramBins,
                  static_cast<double>(b + 1) / kHistogramBins, b + 1 == kHistogramBins ? ']' : ')',
                  r.in_histogram[b], r.ood_histogram[b]);
    os << buf;
  }
}

void write_report_files(const EvalReport& r, const std::string& prefix, std::ostream& os) {
  if (prefix.empty()) return;
  write_report_csv(r, prefix + "samples.csv");
  write_histogram_csv(r, prefix + "histogram.csv");
  write_summary_csv(r, prefix + "summary.csv");
  os << "wrote " << prefix << "samples.csv, " << prefix << "histogram.csv, " << prefix << "summary.csv\n";
}

struct EvalCmd {
  std::string model;
  std::string monitor;
  DataArgs in;
  DataArgs ood;
  std::string out_prefix;

  void attach(CLI::App* parent) {
    auto* c = parent->add_subcommand("eval", "Evaluate a monitor on in-distribution and OoD data");
    c->add_option("--model", model, "Weight file")->required();
    c->add_option("--monitor", monitor, "Monitor file")->required();
    add_data(c, in, "in-", true, "In-distribution");
    add_data(c, ood, "ood-", true, "Out-of-distribution");
    c->add_option("--out-prefix", out_prefix, "Prefix for samples/histogram/summary CSV files");
  }

  int run(std::ostream& os) const {
    const Network net = load_weights(model);
    const AnyMonitor mon = load_monitor(monitor);
    check_compatible(mon, net);
    const LabeledDataset a = load_data(in, "in-");
    const LabeledDataset b = load_data(ood, "ood-");
    auto judge = [&](const LabeledDataset& d, Index i) {
      const MonitorResult res = evaluate(mon, net, d.inputs.row(i).transpose());
      SampleRecord s;
      s.index = static_cast<std::size_t>(i);
      s.score = res.score;
      s.ood_verdict = res.verdict == Verdict::OoD;
      s.confidence = res.confidence;
      s.predicted = res.predicted;
      s.label = d.labels[static_cast<std::size_t>(i)];
      return s;
    };
    const EvalReport r = make_report(a.name, b.name, judge, a, b);
    os << "monitor: " << monitor_kind(mon) << " (layer " << monitor_layer(mon) << ")\n";
    print_summary(os, r);
    print_histogram(os, r);
    write_report_files(r, out_prefix, os);
    return kExitOk;
  }
};

// ---------------------------------------------------------------- score

struct ScoreCmd {
  std::string model;
  std::string method = "maxsoftmax";
  DataArgs in;
  DataArgs ood;
  double temperature = 1.0;
  double eps = kDefaultOdinEpsilon;
  double tau = 0.6;
  double gamma = 0.1;
  std::optional<int> top_m;
  std::string objective = "log-softmax";
  std::string out;

  void attach(CLI::App& app) {
    auto* c = app.add_subcommand("score", "Confidence-based OoD scores with a max-softmax cutoff");
    c->add_option("--model", model, "Weight file")->required();
    c->add_option("--method", method, "maxsoftmax, odin, entropy or genentropy")
        ->check(CLI::IsMember({"maxsoftmax", "odin", "entropy", "genentropy"}))
        ->capture_default_str();
    add_data(c, in, "", true, "Dataset");
    add_data(c, ood, "ood-", false, "Optional OoD dataset for AUROC");
    c->add_option("--T", temperature, "Softmax temperature")->capture_default_str()->check(CLI::PositiveNumber);
    c->add_option("--eps", eps, "ODIN perturbation step")->capture_default_str()->check(CLI::NonNegativeNumber);
    c->add_option("--tau", tau, "Accept iff max softmax >= tau")->capture_default_str()->check(CLI::Range(0.0, 1.0));
    c->add_option("--gamma", gamma, "Generalized entropy exponent in (0,1)")->capture_default_str();
    c->add_option("--top-m", top_m, "Generalized entropy over the top-M classes (default all)");
    c->add_option("--objective", objective, "ODIN gradient objective: log-softmax or max-logit")
        ->check(CLI::IsMember({"log-softmax", "max-logit"}))
        ->capture_default_str();
    c->add_option("--out", out, "Per-sample CSV (default: standard output)");
  }

  SampleRecord judge(const Network& net, const LabeledDataset& d, Index i) const {
    Vector x = d.inputs.row(i).transpose();
    if (method == "odin") {
      x = odin_perturb(net, x, temperature, eps,
                       objective == "max-logit" ? GradientObjective::Kind::MaxLogit
                                                : GradientObjective::Kind::LogMaxSoftmax);
    }
    const Vector logits = net.forward(x);
    const Vector p = softmax(logits, temperature);
    SampleRecord s;
    s.index = static_cast<std::size_t>(i);
    s.label = d.labels[static_cast<std::size_t>(i)];
    s.predicted = static_cast<int>(argmax(logits));
    s.confidence = p.maxCoeff();
    s.ood_verdict = confidence_verdict(s.confidence, tau) == Verdict::OoD;
    if (method == "entropy") {
      s.score = shannon_entropy(p);
    } else if (method == "genentropy") {
      s.score = generalized_entropy(p, gamma, top_m);
    } else {
      s.score = 1.0 - s.confidence;
    }
    return s;
  }

  int run(std::ostream& os, std::ostream& log) const {
    const Network net = load_weights(model);
    ScoreConfig cfg;
    cfg.temperature = temperature;
    cfg.epsilon = method == "odin" ? eps : 0.0;
    cfg.gamma = gamma;
    cfg.top_m = top_m;
    cfg.validate(net.output_dim());
    const LabeledDataset a = load_data(in, "");
    std::vector<SampleRecord> rows;
    for (Index i = 0; i < a.size(); ++i) rows.push_back(judge(net, a, i));

    std::ofstream file;
    if (!out.empty()) file = open_out(out);
    std::ostream& csv = out.empty() ? os : file;
    csv << "index,label,predicted,confidence,score,verdict\n";
    std::size_t accepted = 0;
    for (const auto& s : rows) {
      csv << s.index << ',' << s.label << ',' << s.predicted << ',' << fmt(s.confidence, 10) << ','
          << fmt(s.score, 10) << ',' << (s.ood_verdict ? "reject" : "accept") << '\n';
      if (!s.ood_verdict) ++accepted;
    }
    std::ostream& summary = out.empty() ? log : os;
    summary << "method: " << method << " T=" << fmt(temperature) << " tau=" << fmt(tau) << "\n"
            << "accepted: " << accepted << " / " << rows.size() << "\n";
    if (!ood.images.empty()) {
      const LabeledDataset b = load_data(ood, "ood-");
      auto j = [&](const LabeledDataset& d, Index i) { return judge(net, d, i); };
      const EvalReport r = make_report(a.name, b.name, j, a, b);
      print_summary(summary, r);
    }
    return kExitOk;
  }
};

// ---------------------------------------------------------------- verify

struct VerifyCmd {
  std::string model;
  std::string monitor;
  std::string unsafe;

  void attach(CLI::App& app) {
    auto* c = app.add_subcommand("verify", "Interval check that a box monitor's region avoids an unsafe output set");
    c->add_option("--model", model, "Weight file")->required();
    c->add_option("--monitor", monitor, "Box or multi-box monitor file")->required();
    c->add_option("--unsafe", unsafe, "Unsafe-set JSON {\"constraints\":[{\"a\":[..],\"b\":x}]}")->required();
  }

  static void print_outcome(std::ostream& os, const VerificationOutcome& o) {
    os << "output_bounds:";
    for (Index i = 0; i < o.output_bounds.size(); ++i) {
      os << " [" << fmt(o.output_bounds.lower(i), 10) << ", " << fmt(o.output_bounds.upper(i), 10) << "]";
    }
    os << "\nconstraint_upper:";
    for (double u : o.constraint_upper) os << ' ' << fmt(u, 10);
    os << "\n";
  }

  int run(std::ostream& os) const {
    const Network net = load_weights(model);
    const AnyMonitor mon = load_monitor(monitor);
    check_compatible(mon, net);
    const UnsafeSet set = load_unsafe_set(unsafe);
    if (const auto* box = std::get_if<BoxMonitor>(&mon)) {
      const auto o = check_safety(net, *box, set);
      print_outcome(os, o);
      os << "verdict: " << to_string(o.verdict) << "\n";
      return kExitOk;
    }
    if (const auto* mb = std::get_if<MultiBoxMonitor>(&mon)) {
      bool all = true;
      for (std::size_t i = 0; i < mb->boxes.size(); ++i) {
        const auto o = check_safety(net, mb->boxes[i], set);
        os << "box " << i << ": " << to_string(o.verdict) << "\n";
        print_outcome(os, o);
        all = all && o.verdict == SafetyVerdict::SafeVerified;
      }
      os << "verdict: " << to_string(all ? SafetyVerdict::SafeVerified : SafetyVerdict::Unknown) << "\n";
      return kExitOk;
    }
    throw ParameterError("--monitor: verify needs a box or multibox monitor, got " + monitor_kind(mon));
  }
};

// ---------------------------------------------------------------- report

struct ReportCmd {
  std::string model;
  DataArgs in;
  DataArgs ood;
  std::vector<double> temperatures{1.0, 3.0};
  double tau = 0.6;
  double eps = 0.0;
  double overconfident = 0.95;
  std::string out_prefix;

  void attach(CLI::App& app) {
    auto* c = app.add_subcommand("report", "Overconfidence histogram and temperature-scaling table");
    c->add_option("--model", model, "Weight file")->required();
    add_data(c, in, "in-", true, "In-distribution");
    add_data(c, ood, "ood-", true, "Out-of-distribution");
    c->add_option("--temperatures", temperatures, "Temperatures to tabulate")->delimiter(',')->capture_default_str();
    c->add_option("--tau", tau, "Confidence cutoff")->capture_default_str()->check(CLI::Range(0.0, 1.0));
    c->add_option("--eps", eps, "ODIN perturbation step (0: plain temperature scaling)")
        ->capture_default_str()
        ->check(CLI::NonNegativeNumber);
    c->add_option("--overconfident", overconfident, "Confidence counted as overconfident")
        ->capture_default_str()
        ->check(CLI::Range(0.0, 1.0));
    c->add_option("--out-prefix", out_prefix, "Prefix for histogram.csv and temperature.csv");
  }

  int run(std::ostream& os) const {
    const Network net = load_weights(model);
    const LabeledDataset a = load_data(in, "in-");
    const LabeledDataset b = load_data(ood, "ood-");
    for (double t : temperatures) {
      if (!(t > 0.0)) throw ParameterError("--temperatures: values must be positive");
    }

    auto judge_at = [&](double t) {
      return [&, t](const LabeledDataset& d, Index i) {
        Vector x = d.inputs.row(i).transpose();
        if (eps > 0.0) x = odin_perturb(net, x, t, eps);
        const Vector logits = net.forward(x);
        SampleRecord s;
        s.index = static_cast<std::size_t>(i);
        s.label = d.labels[static_cast<std::size_t>(i)];
        s.predicted = static_cast<int>(argmax(logits));
        s.confidence = softmax(logits, t).maxCoeff();
        s.score = 1.0 - s.confidence;
        s.ood_verdict = confidence_verdict(s.confidence, tau) == Verdict::OoD;
        return s;
      };
    };

    const EvalReport base = make_report(a.name, b.name, judge_at(1.0), a, b);
    auto count_at_least = [&](const std::vector<SampleRecord>& v) {
      return static_cast<std::size_t>(
          std::count_if(v.begin(), v.end(), [&](const SampleRecord& s) { return s.confidence >= overconfident; }));
    };
    const std::size_t over = count_at_least(base.ood_samples);
    os << "accuracy: " << fmt(base.accuracy) << "\n";
    print_histogram(os, base);
    os << "ood_overconfident: " << over << " / " << base.ood_samples.size() << " ("
       << fmt(static_cast<double>(over) / static_cast<double>(base.ood_samples.size())) << ") at max softmax >= "
       << fmt(overconfident) << "\n";

    std::ofstream table;
    if (!out_prefix.empty()) {
      write_histogram_csv(base, out_prefix + "histogram.csv");
      table = open_out(out_prefix + "temperature.csv");
      table << "T,tau,eps,in_acceptance,ood_rejection,auroc,tnr_at_tpr95\n";
    }
    os << "temperature table (tau=" << fmt(tau) << ", eps=" << fmt(eps) << ")\n";
    os << "       T  in_accept  ood_reject      auroc   tnr@tpr95\n";
    for (double t : temperatures) {
      const EvalReport r = make_report(a.name, b.name, judge_at(t), a, b);
      char buf[128];
      std::snprintf(buf, sizeof(buf), "%8.3g %10.4f %11.4f %10.4f %11.4f\n", t, r.in_acceptance, r.ood_rejection,
                    r.auroc, r.tnr_at_tpr95);
      os << buf;
      if (table) {
        table << fmt(t) << ',' << fmt(tau) << ',' << fmt(eps) << ',' << fmt(r.in_acceptance, 10) << ','
              << fmt(r.ood_rejection, 10) << ',' << fmt(r.auroc, 10) << ',' << fmt(r.tnr_at_tpr95, 10) << '\n';
      }
    }
    return kExitOk;
  }
};

void log_config(std::ostream& err, const CLI::App* sub, const std::string& name) {
  std::istringstream lines(sub->config_to_str(true, false));
  err << "# nnmon " << name << "\n";
  std::string line;
  while (std::getline(lines, line)) {
    if (!line.empty()) err << "#   " << line << "\n";
  }
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"nnmon: runtime monitors for feed-forward classifiers"};
  app.name("nnmon");
  app.require_subcommand(1);

  FeaturesCmd features;
  BuildCmd build;
  EvalCmd eval;
  ScoreCmd score;
  VerifyCmd verify;
  ReportCmd report;

  features.attach(app);
  auto* monitor = app.add_subcommand("monitor", "Build or evaluate monitors");
  monitor->require_subcommand(1);
  build.attach(monitor);
  eval.attach(monitor);
  score.attach(app);
  verify.attach(app);
  report.attach(app);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    // Help requested on a subcommand is reported through the same path.
    return e.get_exit_code() == 0 ? kExitOk : kExitConfig;
  }

  try {
    const CLI::App* sub = app.get_subcommands().front();
    if (sub->get_name() == "monitor") {
      const CLI::App* leaf = sub->get_subcommands().front();
      log_config(err, leaf, "monitor " + leaf->get_name());
      return leaf->get_name() == "build" ? build.run(out, err) : eval.run(out);
    }
    log_config(err, sub, sub->get_name());
    if (sub->get_name() == "features") return features.run(out);
    if (sub->get_name() == "score") return score.run(out, err);
    if (sub->get_name() == "verify") return verify.run(out);
    return report.run(out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << "\n";
    return kExitData;
  }
}

}  // namespace nnmon::cli
