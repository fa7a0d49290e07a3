#include "nnmon/bitword.hpp"

#include "nnmon/errors.hpp"

namespace nnmon {

BitWord BitWord::from_string(std::string_view bits) {
  BitWord w(bits.size());
  for (std::size_t i = 0; i < bits.size(); ++i) {
    if (bits[i] == '1') {
      w.set(i, true);
    } else if (bits[i] != '0') {
      throw FormatError("", "binary word may only contain '0' and '1'");
    }
  }
  return w;
}

BitWord BitWord::from_bools(const std::vector<bool>& bits) {
  BitWord w(bits.size());
  for (std::size_t i = 0; i < bits.size(); ++i) w.set(i, bits[i]);
  return w;
}

std::size_t BitWord::popcount() const {
  std::size_t n = 0;
  for (auto b : blocks_) n += static_cast<std::size_t>(std::popcount(b));
  return n;
}

std::string BitWord::to_string() const {
  std::string s(size_, '0');
  for (std::size_t i = 0; i < size_; ++i) {
    if (get(i)) s[i] = '1';
  }
  return s;
}

std::size_t hamming_distance(const BitWord& a, const BitWord& b) {
  if (a.size() != b.size()) {
    throw WordLengthError("words of length " + std::to_string(a.size()) + " and " +
                          std::to_string(b.size()));
  }
  std::size_t d = 0;
  for (std::size_t i = 0; i < a.blocks().size(); ++i) {
    d += static_cast<std::size_t>(std::popcount(a.blocks()[i] ^ b.blocks()[i]));
  }
  return d;
}

}  // namespace nnmon
