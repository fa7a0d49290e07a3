#include "nnmon/metrics.hpp"

#include "nnmon/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

namespace nnmon {
namespace {

void require_nonempty(const std::vector<double>& v, const char* what) {
  if (v.empty()) throw InsufficientDataError(std::string(what) + " scores are empty");
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

}  // namespace

double auroc(const std::vector<double>& in_scores, const std::vector<double>& ood_scores) {
  require_nonempty(in_scores, "in-distribution");
  require_nonempty(ood_scores, "OoD");
  // Mann-Whitney U over the merged sample, average ranks on ties.
  struct Item {
    double score;
    bool ood;
  };
  std::vector<Item> all;
  all.reserve(in_scores.size() + ood_scores.size());
  for (double s : in_scores) all.push_back({s, false});
  for (double s : ood_scores) all.push_back({s, true});
  std::sort(all.begin(), all.end(), [](const Item& a, const Item& b) { return a.score < b.score; });

  double ood_rank_sum = 0.0;
  std::size_t i = 0;
  while (i < all.size()) {
    std::size_t j = i;
    while (j < all.size() && all[j].score == all[i].score) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);  // ranks i+1..j
    for (std::size_t k = i; k < j; ++k) {
      if (all[k].ood) ood_rank_sum += avg_rank;
    }
    i = j;
  }
  const double n_ood = static_cast<double>(ood_scores.size());
  const double n_in = static_cast<double>(in_scores.size());
  const double u = ood_rank_sum - n_ood * (n_ood + 1.0) / 2.0;
  return u / (n_ood * n_in);
}

double threshold_at_acceptance(const std::vector<double>& in_scores, double rate) {
  require_nonempty(in_scores, "in-distribution");
  if (!(rate > 0.0 && rate <= 1.0)) throw ParameterError("acceptance rate must lie in (0, 1]");
  std::vector<double> sorted = in_scores;
  std::sort(sorted.begin(), sorted.end());
  const auto n = static_cast<double>(sorted.size());
  auto need = static_cast<std::size_t>(std::ceil(rate * n - 1e-9));
  need = std::clamp<std::size_t>(need, 1, sorted.size());
  return sorted[need - 1];
}

double tnr_at_tpr(const std::vector<double>& in_scores, const std::vector<double>& ood_scores,
                  double tpr) {
  require_nonempty(ood_scores, "OoD");
  const double t = threshold_at_acceptance(in_scores, tpr);
  const auto rejected = std::count_if(ood_scores.begin(), ood_scores.end(), [t](double s) { return s > t; });
  return static_cast<double>(rejected) / static_cast<double>(ood_scores.size());
}

ConfidenceHistogram confidence_histogram(const std::vector<double>& confidences) {
  ConfidenceHistogram h{};
  for (double c : confidences) {
    if (!(c >= 0.0 && c <= 1.0)) throw DataError("confidence outside [0, 1]");
    auto bin = static_cast<std::size_t>(c * static_cast<double>(kHistogramBins));
    h[std::min(bin, kHistogramBins - 1)]++;
  }
  return h;
}

void summarize(EvalReport& r) {
  std::vector<double> in_scores;
  std::vector<double> ood_scores;
  std::vector<double> in_conf;
  std::vector<double> ood_conf;
  std::size_t correct = 0;
  std::size_t labelled = 0;
  std::size_t accepted = 0;
  std::size_t rejected = 0;
  for (const auto& s : r.in_samples) {
    in_scores.push_back(s.score);
    in_conf.push_back(s.confidence);
    if (s.label >= 0) {
      ++labelled;
      if (s.label == s.predicted) ++correct;
    }
    if (!s.ood_verdict) ++accepted;
  }
  for (const auto& s : r.ood_samples) {
    ood_scores.push_back(s.score);
    ood_conf.push_back(s.confidence);
    if (s.ood_verdict) ++rejected;
  }
  r.auroc = auroc(in_scores, ood_scores);
  r.tnr_at_tpr95 = tnr_at_tpr95(in_scores, ood_scores);
  r.accuracy = labelled ? static_cast<double>(correct) / static_cast<double>(labelled) : 0.0;
  r.in_acceptance = static_cast<double>(accepted) / static_cast<double>(r.in_samples.size());
  r.ood_rejection = static_cast<double>(rejected) / static_cast<double>(r.ood_samples.size());
  r.in_histogram = confidence_histogram(in_conf);
  r.ood_histogram = confidence_histogram(ood_conf);
}

void write_report_csv(const EvalReport& r, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw FormatError(path, "cannot open for writing");
  out << "dataset,index,label,predicted,confidence,score,verdict\n";
  auto rows = [&](const std::string& name, const std::vector<SampleRecord>& samples) {
    for (const auto& s : samples) {
      out << name << ',' << s.index << ',' << s.label << ',' << s.predicted << ',' << fmt(s.confidence)
          << ',' << fmt(s.score) << ',' << (s.ood_verdict ? "ood" : "in-dist") << '\n';
    }
  };
  rows(r.in_name, r.in_samples);
  rows(r.ood_name, r.ood_samples);
}

void write_histogram_csv(const EvalReport& r, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw FormatError(path, "cannot open for writing");
  out << "bin_low,bin_high,in_count,ood_count\n";
  for (std::size_t b = 0; b < kHistogramBins; ++b) {
    out << fmt(static_cast<double>(b) / kHistogramBins) << ','
        << fmt(static_cast<double>(b + 1) / kHistogramBins) << ',' << r.in_histogram[b] << ','
        << r.ood_histogram[b] << '\n';
  }
}

void write_summary_csv(const EvalReport& r, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw FormatError(path, "cannot open for writing");
  out << "metric,value\n"
      << "in_samples," << r.in_samples.size() << '\n'
      << "ood_samples," << r.ood_samples.size() << '\n'
      << "accuracy," << fmt(r.accuracy) << '\n'
      << "auroc," << fmt(r.auroc) << '\n'
      << "tnr_at_tpr95," << fmt(r.tnr_at_tpr95) << '\n'
      << "in_acceptance," << fmt(r.in_acceptance) << '\n'
      << "ood_rejection," << fmt(r.ood_rejection) << '\n';
}

}  // namespace nnmon
