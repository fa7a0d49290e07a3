#pragma once

#include <bit>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace nnmon {

/// Fixed-length binary word packed into 64-bit blocks. Bit 0 is the first
/// character of the string form and the root variable of a BDD.
class BitWord {
 public:
  BitWord() = default;
  explicit BitWord(std::size_t size) : size_(size), blocks_((size + 63) / 64, 0) {}

  /// Parses "0101..." (first character is bit 0).
  static BitWord from_string(std::string_view bits);
  static BitWord from_bools(const std::vector<bool>& bits);

  std::size_t size() const { return size_; }
  bool get(std::size_t i) const { return (blocks_[i >> 6] >> (i & 63)) & 1U; }
  void set(std::size_t i, bool value) {
    const std::uint64_t mask = std::uint64_t{1} << (i & 63);
    if (value) {
      blocks_[i >> 6] |= mask;
    } else {
      blocks_[i >> 6] &= ~mask;
    }
  }
  void flip(std::size_t i) { blocks_[i >> 6] ^= std::uint64_t{1} << (i & 63); }

  const std::vector<std::uint64_t>& blocks() const { return blocks_; }
  std::size_t popcount() const;
  std::string to_string() const;

  friend bool operator==(const BitWord&, const BitWord&) = default;
  friend auto operator<=>(const BitWord&, const BitWord&) = default;

 private:
  std::size_t size_ = 0;
  std::vector<std::uint64_t> blocks_;
};

/// Hamming distance; both words must have equal length.
std::size_t hamming_distance(const BitWord& a, const BitWord& b);

}  // namespace nnmon
