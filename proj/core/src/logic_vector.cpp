#include "blink/logic_vector.hpp"

#include <algorithm>
#include <bit>

namespace blink {

namespace {

std::uint64_t low_mask(unsigned bits) {
  return bits >= 64 ? ~std::uint64_t{0} : ((std::uint64_t{1} << bits) - 1);
}

std::optional<LogicBit> decode_char(char c) {
  switch (c) {
    case '0': return LogicBit::k0;
    case '1': return LogicBit::k1;
    case 'x': case 'X': return LogicBit::kX;
    case 'z': case 'Z': return LogicBit::kZ;
    default: return std::nullopt;
  }
}

}  // namespace

LogicVector::LogicVector(unsigned width) : width_(width) {
  words_.assign(2 * words_per_lane(), 0);
  for (unsigned w = 0; w < words_per_lane(); ++w) {
    const unsigned bits = std::min(kWordBits, width_ - w * kWordBits);
    words_[2 * w + 1] = low_mask(bits);
  }
}

LogicVector LogicVector::from_uint(unsigned width, std::uint64_t value) {
  LogicVector v(width);
  for (auto& word : v.words_) word = 0;
  if (width > 0) v.words_[0] = value & low_mask(std::min(width, kWordBits));
  return v;
}

std::optional<LogicVector> LogicVector::parse(std::string_view bits, unsigned width) {
  if (bits.empty() || bits.size() > width) return std::nullopt;
  LogicVector v(width);
  const auto lead = decode_char(bits.front());
  if (!lead) return std::nullopt;
  const LogicBit fill = (*lead == LogicBit::kX || *lead == LogicBit::kZ) ? *lead : LogicBit::k0;
  const unsigned n = static_cast<unsigned>(bits.size());
  for (unsigned i = 0; i < n; ++i) {
    const auto b = decode_char(bits[n - 1 - i]);
    if (!b) return std::nullopt;
    v.set_bit(i, *b);
  }
  for (unsigned i = n; i < width; ++i) v.set_bit(i, fill);
  return v;
}

LogicBit LogicVector::bit(unsigned index) const noexcept {
  const unsigned w = index / kWordBits;
  const std::uint64_t m = std::uint64_t{1} << (index % kWordBits);
  const bool val = words_[2 * w] & m;
  const bool unk = words_[2 * w + 1] & m;
  if (unk) return val ? LogicBit::kZ : LogicBit::kX;
  return val ? LogicBit::k1 : LogicBit::k0;
}

void LogicVector::set_bit(unsigned index, LogicBit value) noexcept {
  const unsigned w = index / kWordBits;
  const std::uint64_t m = std::uint64_t{1} << (index % kWordBits);
  const bool val = value == LogicBit::k1 || value == LogicBit::kZ;
  const bool unk = value == LogicBit::kX || value == LogicBit::kZ;
  words_[2 * w] = val ? (words_[2 * w] | m) : (words_[2 * w] & ~m);
  words_[2 * w + 1] = unk ? (words_[2 * w + 1] | m) : (words_[2 * w + 1] & ~m);
}

bool LogicVector::is_binary() const noexcept {
  for (unsigned w = 0; w < words_per_lane(); ++w)
    if (words_[2 * w + 1] != 0) return false;
  return true;
}

std::optional<std::uint64_t> LogicVector::to_uint() const noexcept {
  if (!is_binary()) return std::nullopt;
  return words_.empty() ? 0 : words_[0];
}

std::string LogicVector::to_string() const {
  static constexpr char kChars[] = {'0', '1', 'x', 'z'};
  std::string out(width_, '0');
  for (unsigned i = 0; i < width_; ++i)
    out[width_ - 1 - i] = kChars[static_cast<int>(bit(i))];
  return out;
}

unsigned toggled_bits(const LogicVector& before, const LogicVector& after) noexcept {
  const unsigned lanes = std::min(before.words_per_lane(), after.words_per_lane());
  const unsigned width = std::min(before.width_, after.width_);
  unsigned count = 0;
  for (unsigned w = 0; w < lanes; ++w) {
    const unsigned bits = std::min(LogicVector::kWordBits, width - w * LogicVector::kWordBits);
    const std::uint64_t known = ~(before.words_[2 * w + 1] | after.words_[2 * w + 1]);
    const std::uint64_t diff = (before.words_[2 * w] ^ after.words_[2 * w]) & known & low_mask(bits);
    count += static_cast<unsigned>(std::popcount(diff));
  }
  return count;
}

}  // namespace blink
