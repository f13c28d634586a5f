#include "blink/columnar.hpp"

#include <bit>
#include <cstring>
#include <limits>

#include <fmt/format.h>

#include "blink/error.hpp"

namespace blink::columnar {

namespace {

constexpr std::uint8_t kDtypeU32 = 1;
constexpr std::uint8_t kDtypeF64 = 2;

template <typename U>
void put(std::ostream& out, U value) {
  char bytes[sizeof(U)];
  for (std::size_t i = 0; i < sizeof(U); ++i)
    bytes[i] = static_cast<char>((static_cast<std::uint64_t>(value) >> (8 * i)) & 0xFF);
  out.write(bytes, sizeof(U));
}

template <typename U>
U take(std::istream& in) {
  unsigned char bytes[sizeof(U)];
  if (!in.read(reinterpret_cast<char*>(bytes), sizeof(U)))
    throw Error(ErrorCode::kBadFormat, "columnar file truncated");
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
  return static_cast<U>(v);
}

}  // namespace

void write(std::ostream& out, const Table& table) {
  out.write(table.magic.data(), 4);
  put<std::uint16_t>(out, kVersion);
  put<std::uint16_t>(out, 0);
  put<std::uint64_t>(out, static_cast<std::uint64_t>(table.window_len_fs));
  put<std::uint32_t>(out, table.rows);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(table.columns.size()));
  for (const auto& col : table.columns) {
    if (col.name.size() > std::numeric_limits<std::uint16_t>::max())
      throw Error(ErrorCode::kInvalidArgument, "column name too long");
    put<std::uint8_t>(out, std::holds_alternative<std::vector<std::uint32_t>>(col.data) ? kDtypeU32 : kDtypeF64);
    put<std::uint8_t>(out, col.tag);
    put<std::uint16_t>(out, static_cast<std::uint16_t>(col.name.size()));
    out.write(col.name.data(), static_cast<std::streamsize>(col.name.size()));
  }
  for (const auto& col : table.columns) {
    if (const auto* u = std::get_if<std::vector<std::uint32_t>>(&col.data)) {
      if (u->size() != table.rows) throw Error(ErrorCode::kInvalidArgument, "column length != row count");
      for (auto v : *u) put<std::uint32_t>(out, v);
    } else {
      const auto& d = std::get<std::vector<double>>(col.data);
      if (d.size() != table.rows) throw Error(ErrorCode::kInvalidArgument, "column length != row count");
      for (auto v : d) put<std::uint64_t>(out, std::bit_cast<std::uint64_t>(v));
    }
  }
  if (!out) throw Error(ErrorCode::kIo, "failed writing columnar file");
}

Table read(std::istream& in, const std::array<char, 4>& expected_magic) {
  Table table;
  if (!in.read(table.magic.data(), 4)) throw Error(ErrorCode::kBadFormat, "columnar file truncated");
  if (table.magic != expected_magic)
    throw Error(ErrorCode::kBadFormat,
                fmt::format("bad magic, expected '{}'", std::string(expected_magic.data(), 4)));
  const auto version = take<std::uint16_t>(in);
  if (version != kVersion) throw Error(ErrorCode::kBadFormat, fmt::format("unsupported version {}", version));
  take<std::uint16_t>(in);
  table.window_len_fs = static_cast<std::int64_t>(take<std::uint64_t>(in));
  table.rows = take<std::uint32_t>(in);
  const auto n_cols = take<std::uint32_t>(in);
  std::vector<std::uint8_t> dtypes;
  for (std::uint32_t c = 0; c < n_cols; ++c) {
    Column col;
    const auto dtype = take<std::uint8_t>(in);
    if (dtype != kDtypeU32 && dtype != kDtypeF64)
      throw Error(ErrorCode::kBadFormat, fmt::format("unknown column dtype {}", dtype));
    dtypes.push_back(dtype);
    col.tag = take<std::uint8_t>(in);
    col.name.resize(take<std::uint16_t>(in));
    if (!in.read(col.name.data(), static_cast<std::streamsize>(col.name.size())))
      throw Error(ErrorCode::kBadFormat, "columnar file truncated");
    table.columns.push_back(std::move(col));
  }
  for (std::uint32_t c = 0; c < n_cols; ++c) {
    if (dtypes[c] == kDtypeU32) {
      std::vector<std::uint32_t> v(table.rows);
      for (auto& x : v) x = take<std::uint32_t>(in);
      table.columns[c].data = std::move(v);
    } else {
      std::vector<double> v(table.rows);
      for (auto& x : v) x = std::bit_cast<double>(take<std::uint64_t>(in));
      table.columns[c].data = std::move(v);
    }
  }
  return table;
}

}  // namespace blink::columnar
