#pragma once

#include <chrono>
#include <cstdint>
#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "blink/logic_vector.hpp"

namespace blink {

/// Durations are carried as exact integer femtoseconds throughout.
using Femtoseconds = std::chrono::duration<std::int64_t, std::femto>;

enum class TimeUnit { kFs, kPs, kNs, kUs, kMs };

struct Timescale {
  int multiplier = 1;  // 1, 10 or 100
  TimeUnit unit = TimeUnit::kNs;

  /// Length of one tick.
  Femtoseconds tick() const noexcept;
  std::string to_string() const;
  /// Accepts "1ns", "10 ps", ...; nullopt for anything else.
  static std::optional<Timescale> parse(std::string_view text);

  friend bool operator==(const Timescale&, const Timescale&) = default;
};

/// Converts a duration to whole ticks, rounding up.
std::int64_t to_ticks_ceil(Femtoseconds d, const Timescale& ts);

enum class VarKind { kWire, kReg };
enum class PortRole { kInput, kOutput, kInternal };

std::string_view to_string(VarKind kind) noexcept;
std::string_view to_string(PortRole role) noexcept;

struct SignalEntry {
  std::string id_code;
  std::string hier_name;
  unsigned width = 1;
  VarKind kind = VarKind::kWire;
  PortRole port_role = PortRole::kInternal;

  friend bool operator==(const SignalEntry&, const SignalEntry&) = default;
};

/// Hierarchy-resolved view of a VCD header.
class SignalTable {
 public:
  using Index = std::uint32_t;

  /// Throws MalformedHeader on a duplicate id-code or hierarchical name.
  Index add(SignalEntry entry);

  const std::vector<SignalEntry>& entries() const noexcept { return entries_; }
  std::vector<SignalEntry>& mutable_entries() noexcept { return entries_; }
  const SignalEntry& operator[](Index i) const { return entries_[i]; }
  std::size_t size() const noexcept { return entries_.size(); }

  std::optional<Index> find_id(std::string_view id_code) const;
  std::optional<Index> find_name(std::string_view hier_name) const;

  Timescale timescale;
  std::string top_scope;

  nlohmann::json to_json() const;
  static SignalTable from_json(const nlohmann::json& j);

  friend bool operator==(const SignalTable& a, const SignalTable& b) {
    return a.entries_ == b.entries_ && a.timescale == b.timescale &&
           a.top_scope == b.top_scope;
  }

 private:
  std::vector<SignalEntry> entries_;
  std::unordered_map<std::string, Index> by_id_;
  std::unordered_map<std::string, Index> by_name_;
};

struct ValueEvent {
  std::int64_t time = 0;          // ticks of the table's timescale
  SignalTable::Index signal = 0;  // index into the SignalTable
  LogicVector value;
};

/// Pull-style stream of value changes in non-decreasing time order.
class EventSource {
 public:
  virtual ~EventSource() = default;
  /// Fills `event` and returns true, or returns false at end of stream.
  virtual bool next(ValueEvent& event) = 0;
};

/// Replays an in-memory event list.
class VectorEventSource final : public EventSource {
 public:
  explicit VectorEventSource(const std::vector<ValueEvent>& events) : events_(events) {}
  bool next(ValueEvent& event) override;

 private:
  const std::vector<ValueEvent>& events_;
  std::size_t pos_ = 0;
};

/// Single-pass streaming reader for four-state IEEE 1364 VCD.
///
/// Memory use is bounded by the signal table plus a fixed read buffer.
class VcdReader final : public EventSource {
 public:
  explicit VcdReader(std::istream& in);

  /// Reads declarations up to `$enddefinitions`. Must be called once,
  /// before next(). Throws MalformedHeader.
  const SignalTable& parse_header();
  const SignalTable& table() const noexcept { return table_; }

  /// Throws MalformedBody on undeclared id-codes, bad values or time
  /// going backwards.
  bool next(ValueEvent& event) override;

  /// Bytes consumed so far.
  std::uint64_t offset() const noexcept { return consumed_ + pos_; }

 private:
  bool fill();
  int peek();
  int get();
  // Next whitespace-delimited token; empty at end of input.
  std::string_view token(std::uint64_t* start = nullptr);
  void skip_to_end(std::string_view section);

  std::istream& in_;
  std::vector<char> buf_;
  std::size_t pos_ = 0;
  std::size_t len_ = 0;
  std::uint64_t consumed_ = 0;
  std::string tok_;

  SignalTable table_;
  bool header_done_ = false;
  std::int64_t now_ = 0;
  bool seen_time_ = false;
};

/// Convenience: parse only the header of a stream.
SignalTable parse_header(std::istream& in);

/// Scope/role filter selecting the model's candidate signals.
///
/// Patterns are fnmatch-style globs where `*` also matches `.`. Role rules
/// containing a `.` match the full hierarchical name; others match only the
/// leaf name. The first matching rule assigns the role.
struct CandidateFilter {
  struct RoleRule {
    std::string pattern;
    PortRole role;
  };

  std::vector<std::string> include{"*"};
  std::vector<std::string> exclude{"*.clk", "*.rst*"};
  std::vector<RoleRule> role_rules{
      {"i_*", PortRole::kInput},  {"*_i", PortRole::kInput},  {"*_in", PortRole::kInput},
      {"o_*", PortRole::kOutput}, {"*_o", PortRole::kOutput}, {"*_out", PortRole::kOutput},
  };
  bool inputs = true;
  bool outputs = true;
  bool internals = false;
  /// Signals declared directly in the top scope are skipped unless set.
  bool top_level = false;
};

bool glob_match(std::string_view pattern, std::string_view text);

/// Sets every entry's port_role from the filter's role rules.
void assign_port_roles(SignalTable& table, const CandidateFilter& filter);

/// Lexicographically ordered candidates. Uses the roles already stored in
/// the table. Throws Error(kEmptyCandidateSet) if nothing matches.
std::vector<SignalEntry> resolve_candidates(const SignalTable& table,
                                            const CandidateFilter& filter);

}  // namespace blink
