#include "nnmon/bdd.hpp"

#include "nnmon/errors.hpp"

#include <algorithm>
#include <atomic>
#include <functional>
#include <unordered_set>

namespace nnmon {

namespace {

std::atomic<std::uint64_t> next_manager_id{1};

inline std::size_t mix(std::size_t seed, std::uint64_t v) {
  v *= 0x9e3779b97f4a7c15ULL;
  v ^= v >> 32;
  return seed ^ (v + 0x9e3779b9 + (seed << 6) + (seed >> 2));
}

}  // namespace

std::size_t BddManager::CacheKeyHash::operator()(const CacheKey& k) const noexcept {
  return mix(mix(static_cast<std::size_t>(k.op), k.a), k.b);
}

std::size_t BddManager::NodeHash::operator()(const std::array<std::uint32_t, 3>& n) const noexcept {
  return mix(mix(mix(0, n[0]), n[1]), n[2]);
}

BddManager::BddManager(std::uint32_t variables)
    : id_(next_manager_id.fetch_add(1)), variables_(variables) {
  nodes_.push_back({variables_, kFalse, kFalse});
  nodes_.push_back({variables_, kTrue, kTrue});
}

std::uint32_t BddManager::check(NodeId n) const {
  if (n.manager != id_) throw ManagerMismatchError("node belongs to a different BDD manager");
  if (n.index >= nodes_.size()) throw ManagerMismatchError("dangling BDD node handle");
  return n.index;
}

void BddManager::check_mutable() const {
  if (frozen_) throw FrozenError("BDD manager is frozen");
}

void BddManager::check_word(const BitWord& bits) const {
  if (bits.size() != variables_) {
    throw WordLengthError("word of length " + std::to_string(bits.size()) + ", manager has " +
                          std::to_string(variables_) + " variables");
  }
}

std::uint32_t BddManager::make(std::uint32_t var, std::uint32_t low, std::uint32_t high) {
  if (low == high) return low;
  const std::array<std::uint32_t, 3> key{var, low, high};
  if (auto it = unique_.find(key); it != unique_.end()) return it->second;
  const auto index = static_cast<std::uint32_t>(nodes_.size());
  nodes_.push_back({var, low, high});
  unique_.emplace(key, index);
  return index;
}

NodeId BddManager::word(const BitWord& bits) {
  check_mutable();
  check_word(bits);
  std::uint32_t node = kTrue;
  for (std::uint32_t v = variables_; v-- > 0;) {
    node = bits.get(v) ? make(v, kFalse, node) : make(v, node, kFalse);
  }
  return wrap(node);
}

std::uint32_t BddManager::apply(Op op, std::uint32_t a, std::uint32_t b) {
  if (op == Op::And) {
    if (a == kFalse || b == kFalse) return kFalse;
    if (a == kTrue) return b;
    if (b == kTrue || a == b) return a;
  } else {
    if (a == kTrue || b == kTrue) return kTrue;
    if (a == kFalse) return b;
    if (b == kFalse || a == b) return a;
  }
  if (a > b) std::swap(a, b);
  const CacheKey key{op, a, b};
  if (auto it = cache_.find(key); it != cache_.end()) return it->second;

  const Node na = nodes_[a];
  const Node nb = nodes_[b];
  const std::uint32_t var = std::min(na.var, nb.var);
  const std::uint32_t a0 = na.var == var ? na.low : a;
  const std::uint32_t a1 = na.var == var ? na.high : a;
  const std::uint32_t b0 = nb.var == var ? nb.low : b;
  const std::uint32_t b1 = nb.var == var ? nb.high : b;
  const std::uint32_t low = apply(op, a0, b0);
  const std::uint32_t high = apply(op, a1, b1);
  const std::uint32_t result = make(var, low, high);
  cache_.emplace(key, result);
  return result;
}

NodeId BddManager::unite(NodeId a, NodeId b) {
  const auto ia = check(a);
  const auto ib = check(b);
  check_mutable();
  return wrap(apply(Op::Or, ia, ib));
}

NodeId BddManager::intersect(NodeId a, NodeId b) {
  const auto ia = check(a);
  const auto ib = check(b);
  check_mutable();
  return wrap(apply(Op::And, ia, ib));
}

std::uint32_t BddManager::flip_rec(std::uint32_t node, std::uint32_t var) {
  const Node n = nodes_[node];
  // Below `var` (or terminal) the function does not depend on x_var.
  if (n.var > var) return node;
  if (n.var == var) return make(var, n.high, n.low);
  const CacheKey key{Op::Flip, node, var};
  if (auto it = cache_.find(key); it != cache_.end()) return it->second;
  const std::uint32_t low = flip_rec(n.low, var);
  const std::uint32_t high = flip_rec(n.high, var);
  const std::uint32_t result = make(n.var, low, high);
  cache_.emplace(key, result);
  return result;
}

NodeId BddManager::flip(NodeId set, std::uint32_t var) {
  const auto root = check(set);
  check_mutable();
  if (var >= variables_) throw ParameterError("variable " + std::to_string(var) + " out of range");
  return wrap(flip_rec(root, var));
}

NodeId BddManager::hamming_expand(NodeId set, std::uint32_t radius) {
  std::uint32_t current = check(set);
  check_mutable();
  if (radius > variables_) {
    throw ParameterError("Hamming radius " + std::to_string(radius) + " exceeds word length " +
                         std::to_string(variables_));
  }
  for (std::uint32_t step = 0; step < radius; ++step) {
    const std::uint32_t next = ball1_rec(current);
    if (next == current) break;
    current = next;
  }
  return wrap(current);
}

NodeId BddManager::expand_once(NodeId set) {
  const auto root = check(set);
  check_mutable();
  return wrap(ball1_rec(root));
}

// Words within distance 1 of the node's language, i.e. M | flip_0(M) | ... | flip_{n-1}(M).
// Variables skipped between a node and its children are free, so flipping them changes nothing.
std::uint32_t BddManager::ball1_rec(std::uint32_t node) {
  if (node <= kTrue) return node;
  const CacheKey key{Op::Ball1, node, 0};
  if (auto it = cache_.find(key); it != cache_.end()) return it->second;
  const Node n = nodes_[node];
  const std::uint32_t low = apply(Op::Or, ball1_rec(n.low), n.high);
  const std::uint32_t high = apply(Op::Or, ball1_rec(n.high), n.low);
  const std::uint32_t result = make(n.var, low, high);
  cache_.emplace(key, result);
  return result;
}

bool BddManager::eval(NodeId set, const BitWord& bits) const {
  std::size_t visits = 0;
  return eval(set, bits, visits);
}

bool BddManager::eval(NodeId set, const BitWord& bits, std::size_t& visits) const {
  std::uint32_t node = check(set);
  check_word(bits);
  visits = 0;
  while (node > kTrue) {
    ++visits;
    const Node& n = nodes_[node];
    node = bits.get(n.var) ? n.high : n.low;
  }
  return node == kTrue;
}

std::size_t BddManager::min_distance(NodeId set, const BitWord& bits) const {
  const std::uint32_t root = check(set);
  check_word(bits);
  std::unordered_map<std::uint32_t, std::size_t> memo;
  std::function<std::size_t(std::uint32_t)> rec = [&](std::uint32_t node) -> std::size_t {
    if (node == kTrue) return 0;
    if (node == kFalse) return kNoWord;
    if (auto it = memo.find(node); it != memo.end()) return it->second;
    const Node& n = nodes_[node];
    const bool bit = bits.get(n.var);
    const std::size_t match = rec(bit ? n.high : n.low);
    const std::size_t other = rec(bit ? n.low : n.high);
    const std::size_t best = std::min(match, other == kNoWord ? kNoWord : other + 1);
    memo.emplace(node, best);
    return best;
  };
  return rec(root);
}

std::optional<std::size_t> BddManager::min_distance(NodeId set, const BitWord& bits,
                                                    std::size_t limit) const {
  const std::uint32_t root = check(set);
  check_word(bits);
  limit = std::min<std::size_t>(limit, variables_);
  // memo key: node and remaining mismatch budget
  std::unordered_map<std::uint64_t, std::size_t> memo;
  std::function<std::size_t(std::uint32_t, std::size_t)> rec =
      [&](std::uint32_t node, std::size_t budget) -> std::size_t {
    if (node == kTrue) return 0;
    if (node == kFalse) return kNoWord;
    const std::uint64_t key = (std::uint64_t{node} << 16) | budget;
    if (auto it = memo.find(key); it != memo.end()) return it->second;
    const Node& n = nodes_[node];
    const bool bit = bits.get(n.var);
    std::size_t best = rec(bit ? n.high : n.low, budget);
    if (budget > 0 && best > 0) {
      const std::size_t other = rec(bit ? n.low : n.high, budget - 1);
      if (other != kNoWord) best = std::min(best, other + 1);
    }
    if (best != kNoWord && best > budget) best = kNoWord;
    memo.emplace(key, best);
    return best;
  };
  const std::size_t d = rec(root, limit);
  if (d == kNoWord) return std::nullopt;
  return d;
}

boost::multiprecision::cpp_int BddManager::satcount(NodeId set) const {
  using boost::multiprecision::cpp_int;
  const std::uint32_t root = check(set);
  std::unordered_map<std::uint32_t, cpp_int> memo;
  // count(node) = satisfying assignments of variables var(node)..n-1
  std::function<cpp_int(std::uint32_t)> rec = [&](std::uint32_t node) -> cpp_int {
    if (node == kFalse) return 0;
    if (node == kTrue) return 1;
    if (auto it = memo.find(node); it != memo.end()) return it->second;
    const Node& n = nodes_[node];
    cpp_int c = (rec(n.low) << (nodes_[n.low].var - n.var - 1)) +
                (rec(n.high) << (nodes_[n.high].var - n.var - 1));
    memo.emplace(node, c);
    return c;
  };
  return rec(root) << nodes_[root].var;
}

std::vector<BitWord> BddManager::enumerate(NodeId set, std::size_t limit) const {
  const std::uint32_t root = check(set);
  std::vector<BitWord> out;
  BitWord current(variables_);
  // var: next variable to assign; node: current node (its var >= var)
  std::function<void(std::uint32_t, std::uint32_t)> rec = [&](std::uint32_t var, std::uint32_t node) {
    if (out.size() >= limit || node == kFalse) return;
    if (var == variables_) {
      out.push_back(current);
      return;
    }
    const Node& n = nodes_[node];
    const std::uint32_t low = n.var == var ? n.low : node;
    const std::uint32_t high = n.var == var ? n.high : node;
    current.set(var, false);
    rec(var + 1, low);
    current.set(var, true);
    rec(var + 1, high);
    current.set(var, false);
  };
  rec(0, root);
  return out;
}

std::size_t BddManager::size(NodeId set) const {
  const std::uint32_t root = check(set);
  std::unordered_set<std::uint32_t> seen;
  std::vector<std::uint32_t> stack{root};
  while (!stack.empty()) {
    const auto node = stack.back();
    stack.pop_back();
    if (node <= kTrue || !seen.insert(node).second) continue;
    stack.push_back(nodes_[node].low);
    stack.push_back(nodes_[node].high);
  }
  return seen.size();
}

std::string BddManager::audit() const {
  std::unordered_set<std::array<std::uint32_t, 3>, NodeHash> seen;
  for (std::size_t i = 2; i < nodes_.size(); ++i) {
    const Node& n = nodes_[i];
    const std::string where = "node " + std::to_string(i) + ": ";
    if (n.var >= variables_) return where + "variable out of range";
    if (n.low == n.high) return where + "redundant (low == high)";
    if (n.low >= i || n.high >= i) return where + "child created after parent";
    if (nodes_[n.low].var <= n.var || nodes_[n.high].var <= n.var) return where + "order violated";
    if (!seen.insert({n.var, n.low, n.high}).second) return where + "duplicate node";
  }
  return {};
}

BddImage BddManager::export_image(NodeId root) const {
  const std::uint32_t r = check(root);
  BddImage image;
  image.variables = variables_;
  std::unordered_map<std::uint32_t, std::uint32_t> renumber{{kFalse, 0}, {kTrue, 1}};
  std::function<std::uint32_t(std::uint32_t)> rec = [&](std::uint32_t node) -> std::uint32_t {
    if (auto it = renumber.find(node); it != renumber.end()) return it->second;
    const Node& n = nodes_[node];
    const auto low = rec(n.low);
    const auto high = rec(n.high);
    const auto id = static_cast<std::uint32_t>(image.nodes.size() + 2);
    image.nodes.push_back({n.var, low, high});
    renumber.emplace(node, id);
    return id;
  };
  image.root = rec(r);
  return image;
}

NodeId BddManager::import_image(const BddImage& image) {
  check_mutable();
  if (image.variables != variables_) {
    throw FormatError("bdd.variables", "image has " + std::to_string(image.variables) +
                                           " variables, manager has " + std::to_string(variables_));
  }
  std::vector<std::uint32_t> local{kFalse, kTrue};
  local.reserve(image.nodes.size() + 2);
  for (std::size_t k = 0; k < image.nodes.size(); ++k) {
    const auto [var, low, high] = image.nodes[k];
    const std::string where = "bdd.nodes[" + std::to_string(k) + "]";
    if (var >= variables_) throw FormatError(where, "variable out of range");
    if (low >= local.size() || high >= local.size()) throw FormatError(where, "child not yet defined");
    if (low == high) throw FormatError(where, "redundant node");
    const std::uint32_t l = local[low];
    const std::uint32_t h = local[high];
    if (nodes_[l].var <= var || nodes_[h].var <= var) throw FormatError(where, "variable order violated");
    local.push_back(make(var, l, h));
  }
  if (image.root >= local.size()) throw FormatError("bdd.root", "root id out of range");
  return wrap(local[image.root]);
}

}  // namespace nnmon
