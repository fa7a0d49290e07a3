#include "nnmon/bdd.hpp"
#include "nnmon/boxes.hpp"
#include "nnmon/cli.hpp"
#include "nnmon/errors.hpp"
#include "nnmon/gaussian.hpp"
#include "nnmon/idx.hpp"
#include "nnmon/metrics.hpp"
#include "nnmon/monitor.hpp"
#include "nnmon/monitor_io.hpp"
#include "nnmon/patterns.hpp"
#include "nnmon/scores.hpp"
#include "nnmon/verify.hpp"
#include "nnmon/weights.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <memory>
#include <sstream>

namespace py = pybind11;
using namespace nnmon;

namespace {

// Owns one monitor of any kind; pattern monitors are move-only.
struct MonitorHandle {
  AnyMonitor monitor;
};

FeatureSource parse_source(const std::string& s) {
  if (s == "post") return FeatureSource::PostActivation;
  if (s == "pre") return FeatureSource::PreActivation;
  throw ParameterError("source must be 'post' or 'pre', got '" + s + "'");
}

PatternBackend parse_backend(const std::string& s) {
  if (s == "bdd") return PatternBackend::Bdd;
  if (s == "bitset") return PatternBackend::Bitset;
  throw ParameterError("backend must be 'bdd' or 'bitset', got '" + s + "'");
}

std::string verdict_name(Verdict v) { return v == Verdict::OoD ? "ood" : "in-dist"; }

py::object big_int(const boost::multiprecision::cpp_int& v) {
  return py::module_::import("builtins").attr("int")(v.str());
}

std::unique_ptr<MonitorHandle> wrap(AnyMonitor m) { return std::make_unique<MonitorHandle>(MonitorHandle{std::move(m)}); }

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Runtime out-of-distribution monitors for feed-forward classifiers";

  auto base = py::register_exception<Error>(m, "NnmonError");
  auto config = py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  auto data = py::register_exception<DataError>(m, "DataError", base.ptr());
  (void)config;
  (void)data;

  py::class_<Network>(m, "Network")
      .def_property_readonly("depth", &Network::depth)
      .def("dim", &Network::dim, py::arg("layer"))
      .def("forward", &Network::forward, py::arg("input"))
      .def(
          "features",
          [](const Network& net, const Vector& x, int layer, const std::string& source) {
            const auto f = net.features(x, layer);
            return parse_source(source) == FeatureSource::PreActivation ? f.pre_activation : f.values;
          },
          py::arg("input"), py::arg("layer"), py::arg("source") = "post")
      .def(
          "batch_features",
          [](const Network& net, const Matrix& x, int layer, const std::string& source) {
            return net.batch_features(x, layer, parse_source(source));
          },
          py::arg("inputs"), py::arg("layer"), py::arg("source") = "post")
      .def("batch_logits", &Network::batch_logits, py::arg("inputs"))
      .def(
          "input_gradient",
          [](const Network& net, const Vector& x, const std::string& objective, double temperature) {
            if (objective == "max-logit") return net.input_gradient(x, GradientObjective::max_logit());
            if (objective == "log-softmax") return net.input_gradient(x, GradientObjective::log_max_softmax(temperature));
            throw ParameterError("objective must be 'max-logit' or 'log-softmax'");
          },
          py::arg("input"), py::arg("objective") = "max-logit", py::arg("temperature") = 1.0);

  m.def("load_weights", &load_weights, py::arg("path"));
  m.def("softmax", &softmax, py::arg("logits"), py::arg("temperature") = 1.0);
  m.def(
      "max_softmax_score", [](const Vector& logits, double t) { return max_softmax_score(logits, t).value; },
      py::arg("logits"), py::arg("temperature") = 1.0);
  m.def(
      "odin_score",
      [](const Network& net, const Vector& x, double t, double eps) { return odin_score(net, x, t, eps).value; },
      py::arg("net"), py::arg("input"), py::arg("temperature"), py::arg("epsilon") = kDefaultOdinEpsilon);
  m.def("shannon_entropy", &shannon_entropy, py::arg("p"));
  m.def("generalized_entropy", &generalized_entropy, py::arg("p"), py::arg("gamma"), py::arg("top_m") = py::none());

  m.def(
      "load_idx",
      [](const std::string& images, const std::string& labels) {
        auto d = load_idx(images, labels);
        return py::make_tuple(d.inputs, d.labels);
      },
      py::arg("images"), py::arg("labels"), "Returns (inputs scaled to [0, 1], labels).");

  m.def("auroc", &auroc, py::arg("in_scores"), py::arg("ood_scores"));
  m.def("tnr_at_tpr95", &tnr_at_tpr95, py::arg("in_scores"), py::arg("ood_scores"));
  m.def("percentile_threshold", &percentile_threshold, py::arg("samples"), py::arg("p"));

  py::class_<MonitorHandle>(m, "Monitor")
      .def_property_readonly("kind", [](const MonitorHandle& h) { return monitor_kind(h.monitor); })
      .def_property_readonly("layer", [](const MonitorHandle& h) { return monitor_layer(h.monitor); })
      .def(
          "evaluate",
          [](const MonitorHandle& h, const Network& net, const Vector& x) {
            const auto r = evaluate(h.monitor, net, x);
            py::dict d;
            d["verdict"] = verdict_name(r.verdict);
            d["score"] = r.score;
            d["predicted"] = r.predicted;
            d["confidence"] = r.confidence;
            return d;
          },
          py::arg("net"), py::arg("input"))
      .def("serialize", [](const MonitorHandle& h) { return serialize_monitor(h.monitor); })
      .def("save", [](const MonitorHandle& h, const std::string& path) { save_monitor(h.monitor, path); },
           py::arg("path"));

  m.def("load_monitor", [](const std::string& path) { return wrap(load_monitor(path)); }, py::arg("path"));
  m.def("parse_monitor", [](const std::string& text) { return wrap(parse_monitor(text)); }, py::arg("text"));
  m.def(
      "build_box",
      [](const Network& net, const Matrix& x, int layer, double delta, const std::string& source) {
        return wrap(build_box(net, x, layer, delta, parse_source(source)));
      },
      py::arg("net"), py::arg("inputs"), py::arg("layer"), py::arg("delta") = 0.0, py::arg("source") = "post");
  m.def(
      "build_multibox",
      [](const Network& net, const Matrix& x, int layer, double delta, int k, std::uint64_t seed, bool standardize) {
        return wrap(build_multibox(net, x, layer, delta, k, seed, standardize));
      },
      py::arg("net"), py::arg("inputs"), py::arg("layer"), py::arg("delta") = 0.0, py::arg("k") = 10,
      py::arg("seed") = 0, py::arg("standardize") = false);
  m.def(
      "build_pattern",
      [](const Network& net, const Matrix& x, int layer, double percentile, std::uint32_t kappa,
         const std::string& backend) {
        const Matrix pre = net.batch_features(x, layer, FeatureSource::PreActivation);
        auto rule = BinarizationRule::single(percentile_threshold(pre, percentile), FeatureSource::PreActivation);
        return wrap(build_pattern_monitor(net, x, layer, std::move(rule), parse_backend(backend), kappa));
      },
      py::arg("net"), py::arg("inputs"), py::arg("layer"), py::arg("percentile") = 50.0, py::arg("kappa") = 0,
      py::arg("backend") = "bdd", "Single-threshold patterns on pre-activations, thresholds at a percentile.");
  m.def(
      "build_neuron_selection",
      [](const Network& net, const Matrix& x, const std::vector<int>& labels, int layer, int threshold) {
        return wrap(build_neuron_selection(net, x, labels, layer, threshold));
      },
      py::arg("net"), py::arg("inputs"), py::arg("labels"), py::arg("layer"), py::arg("threshold") = 0);
  m.def(
      "fit_gaussian",
      [](const Network& net, const Matrix& x, int layer, double width, int tolerance, const std::string& bound) {
        if (bound != "gaussian" && bound != "chebyshev") throw ParameterError("bound must be 'gaussian' or 'chebyshev'");
        auto stats = fit_stats(net.batch_features(x, layer, FeatureSource::PostActivation), layer);
        return wrap(make_interval_monitor(std::move(stats), width, tolerance,
                                          bound == "chebyshev" ? BoundMode::Chebyshev : BoundMode::Gaussian));
      },
      py::arg("net"), py::arg("inputs"), py::arg("layer"), py::arg("width") = 3.0, py::arg("tolerance") = 0,
      py::arg("bound") = "gaussian");
  m.def(
      "fit_mahalanobis",
      [](const Network& net, const Matrix& x, const std::vector<int>& labels, int layer, double threshold,
         std::optional<double> lambda) {
        auto mon = fit_mahalanobis(net.batch_features(x, layer, FeatureSource::PostActivation), labels, lambda);
        mon.layer = layer;
        mon.threshold = threshold;
        return wrap(std::move(mon));
      },
      py::arg("net"), py::arg("inputs"), py::arg("labels"), py::arg("layer"), py::arg("threshold"),
      py::arg("regularization") = py::none());

  m.def(
      "propagate_intervals",
      [](const Network& net, int layer, const Vector& lower, const Vector& upper) {
        const auto out = propagate_intervals(net, layer, {lower, upper});
        return py::make_tuple(out.lower, out.upper);
      },
      py::arg("net"), py::arg("layer"), py::arg("lower"), py::arg("upper"));
  m.def(
      "check_safety",
      [](const Network& net, int layer, const Vector& lower, const Vector& upper,
         const std::vector<std::pair<Vector, double>>& constraints) {
        UnsafeSet unsafe;
        for (const auto& [a, b] : constraints) unsafe.constraints.push_back({a, b});
        return to_string(check_safety(net, layer, {lower, upper}, unsafe).verdict);
      },
      py::arg("net"), py::arg("layer"), py::arg("lower"), py::arg("upper"), py::arg("constraints"),
      "Constraints are (a, b) pairs meaning a . y >= b; returns 'safe-verified' or 'unknown'.");

  py::class_<NodeId>(m, "BddNode").def("__eq__", [](const NodeId& a, const NodeId& b) { return a == b; });
  py::class_<BddManager>(m, "BddManager")
      .def(py::init<std::uint32_t>(), py::arg("variables"))
      .def_property_readonly("variables", &BddManager::variables)
      .def("zero", &BddManager::zero)
      .def("one", &BddManager::one)
      .def("word", [](BddManager& b, const std::string& bits) { return b.word(BitWord::from_string(bits)); },
           py::arg("bits"))
      .def("unite", &BddManager::unite)
      .def("intersect", &BddManager::intersect)
      .def("hamming_expand", &BddManager::hamming_expand, py::arg("set"), py::arg("radius"))
      .def("contains",
           [](const BddManager& b, NodeId set, const std::string& bits) {
             return b.eval(set, BitWord::from_string(bits));
           },
           py::arg("set"), py::arg("bits"))
      .def("satcount", [](const BddManager& b, NodeId set) { return big_int(b.satcount(set)); }, py::arg("set"))
      .def("size", &BddManager::size, py::arg("set"));

  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::vector<std::string> all{"nnmon"};
        all.insert(all.end(), args.begin(), args.end());
        std::vector<const char*> argv;
        for (const auto& a : all) argv.push_back(a.c_str());
        std::ostringstream out;
        std::ostringstream err;
        const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Runs the nnmon command line in-process; returns (exit_code, stdout, stderr).");
}
