#include "nnmon/patterns.hpp"

#include "nnmon/errors.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <string>

namespace nnmon {

BinarizationRule BinarizationRule::single(Vector alpha, FeatureSource source) {
  BinarizationRule rule;
  rule.mode = Mode::SingleThreshold;
  rule.thresholds = std::move(alpha);
  rule.source = source;
  return rule;
}

BinarizationRule BinarizationRule::two_bit(Matrix cutpoints, FeatureSource source) {
  if (cutpoints.cols() != 3) throw ParameterError("two-bit encoding needs 3 cutpoints per neuron");
  for (Index i = 0; i < cutpoints.rows(); ++i) {
    if (!(cutpoints(i, 0) < cutpoints(i, 1) && cutpoints(i, 1) < cutpoints(i, 2))) {
      throw ParameterError("cutpoints of neuron " + std::to_string(i) + " are not strictly increasing");
    }
  }
  BinarizationRule rule;
  rule.mode = Mode::TwoBit;
  rule.thresholds = std::move(cutpoints);
  rule.source = source;
  return rule;
}

BitWord BinarizationRule::apply(const Vector& features) const {
  if (features.size() != neurons()) {
    throw InputShapeError("feature length " + std::to_string(features.size()) + ", rule covers " +
                          std::to_string(neurons()) + " neurons");
  }
  BitWord w(word_length());
  if (mode == Mode::SingleThreshold) {
    for (Index i = 0; i < features.size(); ++i) {
      w.set(static_cast<std::size_t>(i), features(i) > thresholds(i, 0));
    }
  } else {
    for (Index i = 0; i < features.size(); ++i) {
      const int interval = (features(i) > thresholds(i, 0)) + (features(i) > thresholds(i, 1)) +
                           (features(i) > thresholds(i, 2));
      w.set(static_cast<std::size_t>(2 * i), (interval & 2) != 0);
      w.set(static_cast<std::size_t>(2 * i + 1), (interval & 1) != 0);
    }
  }
  return w;
}

namespace {

double percentile_of_sorted(const std::vector<double>& sorted, double p) {
  const double pos = (static_cast<double>(sorted.size()) - 1.0) * p / 100.0;
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

void check_percentile(double p) {
  if (!(p > 0.0 && p < 100.0)) throw ParameterError("percentile must lie in (0, 100)");
}

}  // namespace

Vector percentile_threshold(const Matrix& samples, double p) {
  check_percentile(p);
  if (samples.rows() == 0) throw InsufficientDataError("percentile of an empty sample set");
  Vector alpha(samples.cols());
  std::vector<double> column(static_cast<std::size_t>(samples.rows()));
  for (Index j = 0; j < samples.cols(); ++j) {
    for (Index i = 0; i < samples.rows(); ++i) column[static_cast<std::size_t>(i)] = samples(i, j);
    std::sort(column.begin(), column.end());
    alpha(j) = percentile_of_sorted(column, p);
  }
  return alpha;
}

Matrix percentile_cutpoints(const Matrix& samples, const std::array<double, 3>& ps) {
  if (!(ps[0] < ps[1] && ps[1] < ps[2])) throw ParameterError("percentiles must be increasing");
  Matrix cuts(samples.cols(), 3);
  for (int k = 0; k < 3; ++k) cuts.col(k) = percentile_threshold(samples, ps[static_cast<std::size_t>(k)]);
  const double inf = std::numeric_limits<double>::infinity();
  for (Index i = 0; i < cuts.rows(); ++i) {
    for (int k = 1; k < 3; ++k) {
      if (cuts(i, k) <= cuts(i, k - 1)) cuts(i, k) = std::nextafter(cuts(i, k - 1), inf);
    }
  }
  return cuts;
}

BitsetPatternSet::BitsetPatternSet(std::size_t word_length, const std::vector<BitWord>& words)
    : word_length_(word_length), blocks_((word_length + 63) / 64) {
  std::vector<BitWord> sorted = words;
  for (const auto& w : sorted) {
    if (w.size() != word_length) throw WordLengthError("pattern of length " + std::to_string(w.size()));
  }
  std::sort(sorted.begin(), sorted.end(),
            [](const BitWord& a, const BitWord& b) { return a.blocks() < b.blocks(); });
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  count_ = sorted.size();
  rows_.reserve(sorted.size() * blocks_);
  for (const auto& w : sorted) rows_.insert(rows_.end(), w.blocks().begin(), w.blocks().end());
}

BitsetPatternSet BitsetPatternSet::from_rows(std::size_t word_length, std::vector<std::uint64_t> rows) {
  BitsetPatternSet set;
  set.word_length_ = word_length;
  set.blocks_ = (word_length + 63) / 64;
  if (set.blocks_ == 0) {
    set.count_ = rows.empty() ? 0 : 1;
    return set;
  }
  if (rows.size() % set.blocks_ != 0) {
    throw FormatError("patterns.rows", "packed array length is not a multiple of the row width");
  }
  const std::size_t tail = word_length % 64;
  if (tail != 0) {
    const std::uint64_t mask = ~((std::uint64_t{1} << tail) - 1);
    for (std::size_t r = set.blocks_ - 1; r < rows.size(); r += set.blocks_) {
      if (rows[r] & mask) throw FormatError("patterns.rows", "bits set beyond the word length");
    }
  }
  set.rows_ = std::move(rows);
  set.count_ = set.rows_.size() / set.blocks_;
  return set;
}

bool BitsetPatternSet::contains(const BitWord& w) const {
  const auto d = min_distance(w, 0);
  return d.has_value();
}

std::optional<std::size_t> BitsetPatternSet::min_distance(const BitWord& w, std::size_t limit) const {
  if (w.size() != word_length_) {
    throw WordLengthError("query of length " + std::to_string(w.size()) + ", patterns have " +
                          std::to_string(word_length_));
  }
  if (blocks_ == 0) return count_ > 0 ? std::optional<std::size_t>(0) : std::nullopt;
  const std::uint64_t* q = w.blocks().data();
  std::size_t best = std::numeric_limits<std::size_t>::max();
  for (std::size_t r = 0; r < rows_.size(); r += blocks_) {
    std::size_t d = 0;
    for (std::size_t b = 0; b < blocks_ && d < best; ++b) {
      d += static_cast<std::size_t>(std::popcount(rows_[r + b] ^ q[b]));
    }
    if (d < best) {
      best = d;
      if (best == 0) break;
    }
  }
  if (best > limit) return std::nullopt;
  return best;
}

PatternMonitor::PatternMonitor(int layer, BinarizationRule rule, std::uint32_t kappa, BddStore store)
    : layer_(layer),
      rule_(std::move(rule)),
      kappa_(kappa),
      distance_limit_(std::size_t{kappa} + 2),
      store_(std::move(store)) {
  auto& s = std::get<BddStore>(store_);
  if (s.manager.variables() != rule_.word_length()) {
    throw ConsistencyError("BDD variable count differs from the rule's word length");
  }
  s.manager.freeze();
}

PatternMonitor::PatternMonitor(int layer, BinarizationRule rule, std::uint32_t kappa,
                               BitsetPatternSet store)
    : layer_(layer),
      rule_(std::move(rule)),
      kappa_(kappa),
      distance_limit_(std::size_t{kappa} + 2),
      store_(std::move(store)) {
  if (std::get<BitsetPatternSet>(store_).word_length() != rule_.word_length()) {
    throw ConsistencyError("pattern word length differs from the rule's word length");
  }
}

PatternMonitor PatternMonitor::build(const Matrix& features, int layer, BinarizationRule rule,
                                     PatternBackend backend, std::uint32_t kappa) {
  if (features.rows() == 0) throw InsufficientDataError("pattern monitor needs a nonempty build set");
  if (features.cols() != rule.neurons()) {
    throw InputShapeError("features have " + std::to_string(features.cols()) +
                          " columns, rule covers " + std::to_string(rule.neurons()) + " neurons");
  }
  const std::size_t n = rule.word_length();
  if (kappa > n) throw ParameterError("kappa exceeds the word length");
  std::vector<BitWord> words;
  words.reserve(static_cast<std::size_t>(features.rows()));
  for (Index i = 0; i < features.rows(); ++i) words.push_back(rule.apply(features.row(i).transpose()));

  if (backend == PatternBackend::Bitset) {
    return PatternMonitor(layer, std::move(rule), kappa, BitsetPatternSet(n, words));
  }
  BddManager manager(static_cast<std::uint32_t>(n));
  NodeId base = manager.zero();
  for (const auto& w : words) base = manager.unite(base, manager.word(w));
  const NodeId accepted = manager.hamming_expand(base, kappa);
  return PatternMonitor(layer, std::move(rule), kappa, BddStore{std::move(manager), base, accepted});
}

std::size_t PatternMonitor::pattern_count() const {
  if (const auto* s = bitset()) return s->size();
  const auto* b = bdd();
  return b->manager.satcount(b->base).convert_to<std::size_t>();
}

PatternVerdict PatternMonitor::verdict(const Vector& features) const {
  return verdict_word(rule_.apply(features));
}

PatternVerdict PatternMonitor::verdict_word(const BitWord& word) const {
  PatternVerdict out;
  out.distance_is_physical = rule_.mode == BinarizationRule::Mode::SingleThreshold;
  if (const auto* s = bitset()) {
    out.min_distance = s->min_distance(word, distance_limit_);
    out.verdict = out.min_distance && *out.min_distance <= kappa_ ? Verdict::InDist : Verdict::OoD;
  } else {
    const auto* b = bdd();
    out.verdict = b->manager.eval(b->accepted, word) ? Verdict::InDist : Verdict::OoD;
    out.min_distance = b->manager.min_distance(b->base, word, distance_limit_);
  }
  return out;
}

PatternMonitor build_pattern_monitor(const Network& net, const Matrix& inputs, int layer,
                                     BinarizationRule rule, PatternBackend backend,
                                     std::uint32_t kappa) {
  const Matrix features = net.batch_features(inputs, layer, rule.source);
  return PatternMonitor::build(features, layer, std::move(rule), backend, kappa);
}

}  // namespace nnmon
