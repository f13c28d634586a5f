#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include <boost/container/small_vector.hpp>

namespace blink {

enum class LogicBit : std::uint8_t { k0, k1, kX, kZ };

/// Four-state bit vector as found in VCD value changes.
///
/// Storage is one (value, unknown) word pair per 64 bits. A bit with the
/// unknown flag set is `x` when its value bit is 0 and `z` when it is 1.
/// Bit 0 is the least significant bit.
class LogicVector {
 public:
  LogicVector() = default;

  /// All bits `x`.
  explicit LogicVector(unsigned width);

  static LogicVector from_uint(unsigned width, std::uint64_t value);

  /// Parses VCD value characters (MSB first, `01xzXZ`). Strings shorter
  /// than `width` are left-extended with 0, or with x/z when the leftmost
  /// character is x/z. Returns nullopt on a bad character or when the
  /// string is longer than `width`.
  static std::optional<LogicVector> parse(std::string_view bits, unsigned width);

  unsigned width() const noexcept { return width_; }
  LogicBit bit(unsigned index) const noexcept;
  void set_bit(unsigned index, LogicBit value) noexcept;

  bool is_binary() const noexcept;
  /// Binary value of the low 64 bits; nullopt if any bit is x/z.
  std::optional<std::uint64_t> to_uint() const noexcept;
  /// MSB-first character form, full width.
  std::string to_string() const;

  /// Number of bits that moved 0->1 or 1->0. Bits that are x/z on either
  /// side never count. Vectors of different width compare over the
  /// narrower one.
  friend unsigned toggled_bits(const LogicVector& before,
                               const LogicVector& after) noexcept;

  friend bool operator==(const LogicVector& a, const LogicVector& b) noexcept {
    return a.width_ == b.width_ && a.words_ == b.words_;
  }

 private:
  static constexpr unsigned kWordBits = 64;
  unsigned words_per_lane() const noexcept { return (width_ + kWordBits - 1) / kWordBits; }

  unsigned width_ = 0;
  // Interleaved: [value0, unknown0, value1, unknown1, ...].
  boost::container::small_vector<std::uint64_t, 2> words_;
};

}  // namespace blink
