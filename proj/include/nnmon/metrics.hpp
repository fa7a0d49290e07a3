#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

namespace nnmon {

/// Area under the ROC curve with OoD as the positive class (higher score = OoD);
/// computed from the rank statistic, ties counting one half.
double auroc(const std::vector<double>& in_scores, const std::vector<double>& ood_scores);

/// Score threshold t accepting (score <= t) at least `rate` of the in-distribution scores.
double threshold_at_acceptance(const std::vector<double>& in_scores, double rate);

/// Fraction of OoD scores rejected (score > t) at the threshold accepting `tpr` of in-distribution.
double tnr_at_tpr(const std::vector<double>& in_scores, const std::vector<double>& ood_scores,
                  double tpr);
inline double tnr_at_tpr95(const std::vector<double>& in_scores,
                           const std::vector<double>& ood_scores) {
  return tnr_at_tpr(in_scores, ood_scores, 0.95);
}

inline constexpr std::size_t kHistogramBins = 20;
using ConfidenceHistogram = std::array<std::size_t, kHistogramBins>;

/// Counts of values in 20 equal bins over [0, 1]; 1.0 falls into the last bin.
ConfidenceHistogram confidence_histogram(const std::vector<double>& confidences);

struct SampleRecord {
  std::size_t index = 0;
  double score = 0.0;
  bool ood_verdict = false;
  double confidence = 0.0;  // max softmax probability
  int predicted = -1;
  int label = -1;
};

struct EvalReport {
  std::string in_name;
  std::string ood_name;
  std::vector<SampleRecord> in_samples;
  std::vector<SampleRecord> ood_samples;
  double auroc = 0.5;
  double tnr_at_tpr95 = 0.0;
  double accuracy = 0.0;  // in-distribution classification accuracy
  double in_acceptance = 0.0;
  double ood_rejection = 0.0;
  ConfidenceHistogram in_histogram{};
  ConfidenceHistogram ood_histogram{};
};

/// Fills the aggregate fields of a report from its sample records.
void summarize(EvalReport& report);

/// Per-sample CSV: dataset,index,label,predicted,confidence,score,verdict
void write_report_csv(const EvalReport& report, const std::string& path);
/// bin_low,bin_high,in_count,ood_count
void write_histogram_csv(const EvalReport& report, const std::string& path);
/// metric,value
void write_summary_csv(const EvalReport& report, const std::string& path);

}  // namespace nnmon
