#include "blink/vcd.hpp"

#include <charconv>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "blink/error.hpp"

namespace blink {

namespace {

constexpr std::size_t kReadChunk = 1 << 16;

bool is_space(int c) { return c == ' ' || c == '\n' || c == '\r' || c == '\t' || c == '\f' || c == '\v'; }

template <typename Int>
std::optional<Int> parse_int(std::string_view s) {
  Int value{};
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  return value;
}

std::optional<VarKind> parse_var_kind(std::string_view type) {
  static constexpr std::string_view kWires[] = {
      "wire", "tri", "tri0", "tri1", "triand", "trior", "trireg",
      "wand", "wor", "supply0", "supply1", "uwire", "parameter", "event"};
  static constexpr std::string_view kRegs[] = {"reg", "integer", "time", "logic", "bit"};
  for (auto w : kWires)
    if (type == w) return VarKind::kWire;
  for (auto r : kRegs)
    if (type == r) return VarKind::kReg;
  return std::nullopt;
}

std::optional<PortRole> parse_role(std::string_view s) {
  if (s == "input") return PortRole::kInput;
  if (s == "output") return PortRole::kOutput;
  if (s == "internal") return PortRole::kInternal;
  return std::nullopt;
}

}  // namespace

// ---------------------------------------------------------------------------
// Timescale

Femtoseconds Timescale::tick() const noexcept {
  std::int64_t fs = 1;
  switch (unit) {
    case TimeUnit::kFs: fs = 1; break;
    case TimeUnit::kPs: fs = 1'000; break;
    case TimeUnit::kNs: fs = 1'000'000; break;
    case TimeUnit::kUs: fs = 1'000'000'000; break;
    case TimeUnit::kMs: fs = 1'000'000'000'000; break;
  }
  return Femtoseconds{fs * multiplier};
}

std::string Timescale::to_string() const {
  static constexpr std::string_view kUnits[] = {"fs", "ps", "ns", "us", "ms"};
  return fmt::format("{}{}", multiplier, kUnits[static_cast<int>(unit)]);
}

std::optional<Timescale> Timescale::parse(std::string_view text) {
  std::string compact;
  for (char c : text)
    if (!is_space(static_cast<unsigned char>(c))) compact.push_back(c);
  std::size_t digits = 0;
  while (digits < compact.size() && compact[digits] >= '0' && compact[digits] <= '9') ++digits;
  const auto mult = parse_int<int>(std::string_view(compact).substr(0, digits));
  if (!mult || (*mult != 1 && *mult != 10 && *mult != 100)) return std::nullopt;
  const std::string_view unit = std::string_view(compact).substr(digits);
  Timescale ts;
  ts.multiplier = *mult;
  if (unit == "fs") ts.unit = TimeUnit::kFs;
  else if (unit == "ps") ts.unit = TimeUnit::kPs;
  else if (unit == "ns") ts.unit = TimeUnit::kNs;
  else if (unit == "us") ts.unit = TimeUnit::kUs;
  else if (unit == "ms") ts.unit = TimeUnit::kMs;
  else return std::nullopt;
  return ts;
}

std::int64_t to_ticks_ceil(Femtoseconds d, const Timescale& ts) {
  const std::int64_t tick = ts.tick().count();
  return (d.count() + tick - 1) / tick;
}

std::string_view to_string(VarKind kind) noexcept {
  return kind == VarKind::kReg ? "reg" : "wire";
}

std::string_view to_string(PortRole role) noexcept {
  switch (role) {
    case PortRole::kInput: return "input";
    case PortRole::kOutput: return "output";
    case PortRole::kInternal: return "internal";
  }
  return "internal";
}

// ---------------------------------------------------------------------------
// SignalTable

SignalTable::Index SignalTable::add(SignalEntry entry) {
  if (entry.width < 1) throw MalformedHeader(entry.id_code, "signal width must be >= 1");
  if (by_id_.count(entry.id_code))
    throw MalformedHeader(entry.id_code, fmt::format("duplicate id-code for '{}'", entry.hier_name));
  if (by_name_.count(entry.hier_name))
    throw MalformedHeader(entry.hier_name, "duplicate hierarchical name");
  const auto index = static_cast<Index>(entries_.size());
  by_id_.emplace(entry.id_code, index);
  by_name_.emplace(entry.hier_name, index);
  entries_.push_back(std::move(entry));
  return index;
}

std::optional<SignalTable::Index> SignalTable::find_id(std::string_view id_code) const {
  const auto it = by_id_.find(std::string(id_code));
  if (it == by_id_.end()) return std::nullopt;
  return it->second;
}

std::optional<SignalTable::Index> SignalTable::find_name(std::string_view hier_name) const {
  const auto it = by_name_.find(std::string(hier_name));
  if (it == by_name_.end()) return std::nullopt;
  return it->second;
}

nlohmann::json SignalTable::to_json() const {
  nlohmann::json signals = nlohmann::json::array();
  for (const auto& e : entries_) {
    signals.push_back({{"id", e.id_code},
                       {"name", e.hier_name},
                       {"width", e.width},
                       {"kind", to_string(e.kind)},
                       {"role", to_string(e.port_role)}});
  }
  return {{"timescale", timescale.to_string()}, {"top_scope", top_scope}, {"signals", signals}};
}

SignalTable SignalTable::from_json(const nlohmann::json& j) {
  SignalTable table;
  const auto ts = Timescale::parse(j.at("timescale").get<std::string>());
  if (!ts) throw Error(ErrorCode::kBadFormat, "signal table: bad timescale");
  table.timescale = *ts;
  table.top_scope = j.at("top_scope").get<std::string>();
  for (const auto& s : j.at("signals")) {
    SignalEntry e;
    e.id_code = s.at("id").get<std::string>();
    e.hier_name = s.at("name").get<std::string>();
    e.width = s.at("width").get<unsigned>();
    const auto kind = parse_var_kind(s.at("kind").get<std::string>());
    const auto role = parse_role(s.at("role").get<std::string>());
    if (!kind || !role) throw Error(ErrorCode::kBadFormat, "signal table: bad kind or role");
    e.kind = *kind;
    e.port_role = *role;
    table.add(std::move(e));
  }
  return table;
}

// ---------------------------------------------------------------------------
// Event sources

bool VectorEventSource::next(ValueEvent& event) {
  if (pos_ >= events_.size()) return false;
  event = events_[pos_++];
  return true;
}

VcdReader::VcdReader(std::istream& in) : in_(in), buf_(kReadChunk) {}

bool VcdReader::fill() {
  consumed_ += len_;
  pos_ = 0;
  in_.read(buf_.data(), static_cast<std::streamsize>(buf_.size()));
  len_ = static_cast<std::size_t>(in_.gcount());
  return len_ > 0;
}

int VcdReader::peek() {
  if (pos_ >= len_ && !fill()) return -1;
  return static_cast<unsigned char>(buf_[pos_]);
}

int VcdReader::get() {
  const int c = peek();
  if (c >= 0) ++pos_;
  return c;
}

std::string_view VcdReader::token(std::uint64_t* start) {
  int c = peek();
  while (c >= 0 && is_space(c)) {
    ++pos_;
    c = peek();
  }
  if (start) *start = offset();
  tok_.clear();
  while (c >= 0 && !is_space(c)) {
    tok_.push_back(static_cast<char>(c));
    ++pos_;
    c = peek();
  }
  return tok_;
}

void VcdReader::skip_to_end(std::string_view section) {
  for (;;) {
    const auto t = token();
    if (t.empty()) throw MalformedHeader(std::string(section), "unterminated section");
    if (t == "$end") return;
  }
}

const SignalTable& VcdReader::parse_header() {
  std::vector<std::string> scopes;
  for (;;) {
    const std::string tok(token());
    if (tok.empty()) throw MalformedHeader("<eof>", "missing $enddefinitions");
    if (tok == "$enddefinitions") {
      skip_to_end(tok);
      break;
    }
    if (tok == "$date" || tok == "$version" || tok == "$comment") {
      skip_to_end(tok);
    } else if (tok == "$timescale") {
      std::string text;
      for (auto t = token(); t != "$end"; t = token()) {
        if (t.empty()) throw MalformedHeader(tok, "unterminated $timescale");
        text += t;
      }
      const auto ts = Timescale::parse(text);
      if (!ts) throw MalformedHeader(text, "unknown timescale");
      table_.timescale = *ts;
    } else if (tok == "$scope") {
      std::vector<std::string> parts;
      for (auto t = token(); t != "$end"; t = token()) {
        if (t.empty()) throw MalformedHeader(tok, "unterminated $scope");
        parts.emplace_back(t);
      }
      if (parts.size() != 2) throw MalformedHeader(tok, "expected '$scope <type> <name> $end'");
      if (scopes.empty() && table_.top_scope.empty()) table_.top_scope = parts[1];
      scopes.push_back(parts[1]);
    } else if (tok == "$upscope") {
      skip_to_end(tok);
      if (scopes.empty()) throw MalformedHeader(tok, "$upscope without open scope");
      scopes.pop_back();
    } else if (tok == "$var") {
      std::vector<std::string> parts;
      for (auto t = token(); t != "$end"; t = token()) {
        if (t.empty()) throw MalformedHeader(tok, "unterminated $var");
        parts.emplace_back(t);
      }
      if (parts.size() < 4) throw MalformedHeader(tok, "expected '$var <type> <size> <id> <name> $end'");
      if (parts[0] == "real" || parts[0] == "realtime")
        throw MalformedHeader(parts[0], fmt::format("real variable '{}' is not supported", parts[3]));
      const auto kind = parse_var_kind(parts[0]);
      if (!kind) throw MalformedHeader(parts[0], "unknown variable type");
      const auto width = parse_int<unsigned>(parts[1]);
      if (!width || *width == 0) throw MalformedHeader(parts[1], "bad variable width");
      std::string hier;
      for (const auto& s : scopes) {
        hier += s;
        hier += '.';
      }
      hier += parts[3];
      table_.add(SignalEntry{parts[2], std::move(hier), *width, *kind, PortRole::kInternal});
    } else {
      throw MalformedHeader(tok, "unexpected token in header");
    }
  }
  header_done_ = true;
  return table_;
}

bool VcdReader::next(ValueEvent& event) {
  if (!header_done_) throw Error(ErrorCode::kInvalidArgument, "VcdReader::next before parse_header");
  for (;;) {
    std::uint64_t start = 0;
    const std::string_view tok = token(&start);
    if (tok.empty()) return false;
    const char c = tok.front();
    if (c == '#') {
      const auto t = parse_int<std::int64_t>(tok.substr(1));
      if (!t || *t < 0) throw MalformedBody(start, fmt::format("bad timestamp '{}'", tok));
      if (seen_time_ && *t < now_)
        throw MalformedBody(start, fmt::format("time goes backwards: {} after {}", *t, now_));
      now_ = *t;
      seen_time_ = true;
      continue;
    }
    if (c == '$') {
      if (tok == "$comment") {
        for (auto t = token(); t != "$end"; t = token())
          if (t.empty()) throw MalformedBody(start, "unterminated $comment");
        continue;
      }
      if (tok == "$dumpvars" || tok == "$dumpall" || tok == "$dumpon" || tok == "$dumpoff" ||
          tok == "$end")
        continue;
      throw MalformedBody(start, fmt::format("unexpected command '{}'", tok));
    }

    std::string bits;
    std::string id;
    if (c == 'b' || c == 'B') {
      bits.assign(tok.substr(1));
      id.assign(token());
    } else if (c == '0' || c == '1' || c == 'x' || c == 'X' || c == 'z' || c == 'Z') {
      bits.assign(1, c);
      id.assign(tok.substr(1));
    } else if (c == 'r' || c == 'R') {
      throw MalformedBody(start, "real value changes are not supported");
    } else {
      throw MalformedBody(start, fmt::format("unexpected token '{}'", tok));
    }
    if (id.empty()) throw MalformedBody(start, "value change without id-code");
    const auto index = table_.find_id(id);
    if (!index) throw MalformedBody(start, fmt::format("undeclared id-code '{}'", id));
    auto value = LogicVector::parse(bits, table_[*index].width);
    if (!value)
      throw MalformedBody(start, fmt::format("bad value '{}' for {}-bit signal '{}'", bits,
                                             table_[*index].width, table_[*index].hier_name));
    event.time = now_;
    event.signal = *index;
    event.value = std::move(*value);
    return true;
  }
}

SignalTable parse_header(std::istream& in) {
  VcdReader reader(in);
  return reader.parse_header();
}

}  // namespace blink
