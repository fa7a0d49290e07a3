#pragma once

#include "nnmon/bdd.hpp"
#include "nnmon/bitword.hpp"
#include "nnmon/network.hpp"
#include "nnmon/types.hpp"

#include <algorithm>
#include <array>
#include <cstdint>
#include <optional>
#include <variant>
#include <vector>

namespace nnmon {

/// Maps a feature vector to a binary word. SingleThreshold emits bit i = 1 iff
/// f_i > alpha_i. TwoBit emits two bits per neuron holding the index of the
/// interval (number of cutpoints strictly below f_i), most significant bit first.
struct BinarizationRule {
  enum class Mode { SingleThreshold, TwoBit };

  Mode mode = Mode::SingleThreshold;
  Matrix thresholds;  // d x 1 (single) or d x 3 (two-bit, strictly increasing per row)
  FeatureSource source = FeatureSource::PostActivation;

  static BinarizationRule single(Vector alpha, FeatureSource source = FeatureSource::PostActivation);
  static BinarizationRule two_bit(Matrix cutpoints, FeatureSource source = FeatureSource::PostActivation);

  Index neurons() const { return thresholds.rows(); }
  std::size_t word_length() const {
    return static_cast<std::size_t>(neurons()) * (mode == Mode::TwoBit ? 2 : 1);
  }
  BitWord apply(const Vector& features) const;
};

/// Per-neuron p-th percentile (0 < p < 100) with linear interpolation between
/// order statistics at position (n-1)*p/100.
Vector percentile_threshold(const Matrix& samples, double p);

/// Three per-neuron percentiles as TwoBit cutpoints (ps must be increasing).
/// Ties are separated by the smallest representable step so rows stay strictly increasing.
Matrix percentile_cutpoints(const Matrix& samples, const std::array<double, 3>& ps);

/// Packed array of distinct binary words, matched by XOR + popcount.
class BitsetPatternSet {
 public:
  BitsetPatternSet() = default;
  BitsetPatternSet(std::size_t word_length, const std::vector<BitWord>& words);

  std::size_t word_length() const { return word_length_; }
  std::size_t blocks_per_word() const { return blocks_; }
  std::size_t size() const { return blocks_ == 0 ? count_ : rows_.size() / blocks_; }
  const std::vector<std::uint64_t>& rows() const { return rows_; }

  bool contains(const BitWord& w) const;
  std::optional<std::size_t> min_distance(const BitWord& w, std::size_t limit) const;

  /// Rebuilds from a packed row array (as produced by rows()).
  static BitsetPatternSet from_rows(std::size_t word_length, std::vector<std::uint64_t> rows);

 private:
  std::size_t word_length_ = 0;
  std::size_t blocks_ = 0;
  std::size_t count_ = 0;  // only used for zero-length words
  std::vector<std::uint64_t> rows_;
};

enum class PatternBackend { Bdd, Bitset };

struct PatternVerdict {
  Verdict verdict = Verdict::InDist;
  /// Exact minimum Hamming distance to a stored word, nullopt when above the search limit.
  std::optional<std::size_t> min_distance;
  /// False for TwoBit words, whose bit flips do not correspond to single neurons.
  bool distance_is_physical = true;
};

/// Activation-pattern monitor: the set of binarized build-set features, with
/// an optional Hamming tolerance kappa.
class PatternMonitor {
 public:
  struct BddStore {
    BddManager manager;
    NodeId base;      // observed patterns
    NodeId accepted;  // base expanded by the Hamming radius
  };

  PatternMonitor(int layer, BinarizationRule rule, std::uint32_t kappa, BddStore store);
  PatternMonitor(int layer, BinarizationRule rule, std::uint32_t kappa, BitsetPatternSet store);

  /// Rows of `features` are the monitored layer's values (per rule.source).
  static PatternMonitor build(const Matrix& features, int layer, BinarizationRule rule,
                              PatternBackend backend, std::uint32_t kappa);

  int layer() const { return layer_; }
  const BinarizationRule& rule() const { return rule_; }
  std::uint32_t kappa() const { return kappa_; }
  PatternBackend backend() const {
    return std::holds_alternative<BddStore>(store_) ? PatternBackend::Bdd : PatternBackend::Bitset;
  }
  std::size_t distance_limit() const { return distance_limit_; }
  void set_distance_limit(std::size_t limit) { distance_limit_ = std::max<std::size_t>(limit, kappa_); }

  const BddStore* bdd() const { return std::get_if<BddStore>(&store_); }
  const BitsetPatternSet* bitset() const { return std::get_if<BitsetPatternSet>(&store_); }

  /// Number of distinct stored (unexpanded) patterns.
  std::size_t pattern_count() const;

  PatternVerdict verdict(const Vector& features) const;
  PatternVerdict verdict_word(const BitWord& word) const;

 private:
  int layer_;
  BinarizationRule rule_;
  std::uint32_t kappa_;
  std::size_t distance_limit_;
  std::variant<BddStore, BitsetPatternSet> store_;
};

PatternMonitor build_pattern_monitor(const Network& net, const Matrix& inputs, int layer,
                                     BinarizationRule rule, PatternBackend backend,
                                     std::uint32_t kappa);

}  // namespace nnmon
