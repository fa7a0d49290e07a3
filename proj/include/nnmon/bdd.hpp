#pragma once

#include "nnmon/bitword.hpp"

#include <boost/multiprecision/cpp_int.hpp>

#include <array>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace nnmon {

/// Handle to a node of one particular BddManager.
struct NodeId {
  std::uint64_t manager = 0;
  std::uint32_t index = 0;

  friend bool operator==(const NodeId&, const NodeId&) = default;
};

/// Portable node list: entries are (var, low, high); ids 0 and 1 are the
/// FALSE/TRUE terminals and entry k has id k + 2. Children precede parents.
struct BddImage {
  std::uint32_t variables = 0;
  std::vector<std::array<std::uint32_t, 3>> nodes;
  std::uint32_t root = 0;
};

/// Reduced ordered BDD over a fixed number of variables in natural order
/// (variable 0 at the root), representing sets of binary words. The node
/// store is append-only and hash-consed, so equal sets have equal NodeIds.
class BddManager {
 public:
  explicit BddManager(std::uint32_t variables);

  BddManager(const BddManager&) = delete;
  BddManager& operator=(const BddManager&) = delete;
  BddManager(BddManager&&) noexcept = default;
  BddManager& operator=(BddManager&&) noexcept = default;

  std::uint32_t variables() const { return variables_; }
  NodeId zero() const { return {id_, kFalse}; }
  NodeId one() const { return {id_, kTrue}; }

  /// Singleton set {bits}.
  NodeId word(const BitWord& bits);
  NodeId unite(NodeId a, NodeId b);
  NodeId intersect(NodeId a, NodeId b);
  /// Substitutes x_var -> not x_var.
  NodeId flip(NodeId set, std::uint32_t var);
  /// One expansion round: set | flip_0(set) | ... | flip_{n-1}(set), fused into one pass.
  NodeId expand_once(NodeId set);
  /// All words within Hamming distance `radius` of some word in `set`
  /// (`radius` rounds of expand_once, stopping early at a fixed point).
  NodeId hamming_expand(NodeId set, std::uint32_t radius);

  bool eval(NodeId set, const BitWord& bits) const;
  /// As eval, also reporting the number of internal nodes visited.
  bool eval(NodeId set, const BitWord& bits, std::size_t& visits) const;

  static constexpr std::size_t kNoWord = std::numeric_limits<std::size_t>::max();
  /// Minimum Hamming distance from `bits` to the set, kNoWord if the set is empty.
  std::size_t min_distance(NodeId set, const BitWord& bits) const;
  /// Same, but only searched up to `limit`; nullopt means "greater than limit".
  std::optional<std::size_t> min_distance(NodeId set, const BitWord& bits, std::size_t limit) const;

  boost::multiprecision::cpp_int satcount(NodeId set) const;
  /// Words of the set in lexicographic order, at most `limit` of them.
  std::vector<BitWord> enumerate(NodeId set, std::size_t limit) const;

  /// Internal nodes reachable from `set`.
  std::size_t size(NodeId set) const;
  /// All nodes in the store, terminals included.
  std::size_t store_size() const { return nodes_.size(); }

  /// After freezing, only queries are allowed; they are safe to run concurrently.
  void freeze() { frozen_ = true; }
  bool frozen() const { return frozen_; }

  /// Checks reduction, uniqueness and ordering of the whole store. Returns an
  /// empty string when sound, otherwise a description of the first defect.
  std::string audit() const;

  BddImage export_image(NodeId root) const;
  NodeId import_image(const BddImage& image);

 private:
  static constexpr std::uint32_t kFalse = 0;
  static constexpr std::uint32_t kTrue = 1;

  enum class Op : std::uint8_t { And, Or, Flip, Ball1 };

  struct Node {
    std::uint32_t var;
    std::uint32_t low;
    std::uint32_t high;
  };

  struct CacheKey {
    Op op;
    std::uint32_t a;
    std::uint32_t b;
    friend bool operator==(const CacheKey&, const CacheKey&) = default;
  };
  struct CacheKeyHash {
    std::size_t operator()(const CacheKey& k) const noexcept;
  };
  struct NodeHash {
    std::size_t operator()(const std::array<std::uint32_t, 3>& n) const noexcept;
  };

  std::uint32_t make(std::uint32_t var, std::uint32_t low, std::uint32_t high);
  std::uint32_t apply(Op op, std::uint32_t a, std::uint32_t b);
  std::uint32_t flip_rec(std::uint32_t node, std::uint32_t var);
  std::uint32_t ball1_rec(std::uint32_t node);
  std::uint32_t check(NodeId n) const;
  void check_mutable() const;
  void check_word(const BitWord& bits) const;
  NodeId wrap(std::uint32_t index) const { return {id_, index}; }

  std::uint64_t id_;
  std::uint32_t variables_;
  bool frozen_ = false;
  std::vector<Node> nodes_;
  std::unordered_map<std::array<std::uint32_t, 3>, std::uint32_t, NodeHash> unique_;
  std::unordered_map<CacheKey, std::uint32_t, CacheKeyHash> cache_;
};

}  // namespace nnmon
