#pragma once

#include <array>
#include <cstdint>
#include <istream>
#include <ostream>
#include <string>
#include <variant>
#include <vector>

namespace blink::columnar {

// Layout, all integers little-endian:
//   char[4]  magic
//   u16      version
//   u16      reserved (0)
//   i64      window length in femtoseconds
//   u32      row count
//   u32      column count
//   per column: u8 dtype (1 = u32, 2 = f64), u8 tag, u16 name length, name bytes
//   per column: row-count values of its dtype
inline constexpr std::uint16_t kVersion = 1;
inline constexpr std::uint8_t kNoTag = 0xFF;

struct Column {
  std::string name;
  std::uint8_t tag = kNoTag;
  std::variant<std::vector<std::uint32_t>, std::vector<double>> data;
};

struct Table {
  std::array<char, 4> magic{};
  std::int64_t window_len_fs = 0;
  std::uint32_t rows = 0;
  std::vector<Column> columns;
};

void write(std::ostream& out, const Table& table);
/// Throws Error(kBadFormat) on a wrong magic, unsupported version or
/// truncated input.
Table read(std::istream& in, const std::array<char, 4>& expected_magic);

}  // namespace blink::columnar
