#include "blink/activity.hpp"

#include <algorithm>
#include <limits>

#include <fmt/format.h>

#include "blink/columnar.hpp"
#include "blink/error.hpp"

namespace blink {

std::string_view to_string(CounterType type) noexcept {
  return type == CounterType::kSingleToggle ? "ST" : "HW";
}

std::optional<CounterType> parse_counter_type(std::string_view text) noexcept {
  if (text == "HW") return CounterType::kHammingWeight;
  if (text == "ST") return CounterType::kSingleToggle;
  return std::nullopt;
}

std::string to_string(const FeatureDesc& f) {
  return fmt::format("{}:{}", f.signal, to_string(f.counter_type));
}

std::optional<std::size_t> ActivityMatrix::find(const FeatureDesc& f) const {
  const auto it = std::find(features.begin(), features.end(), f);
  if (it == features.end()) return std::nullopt;
  return static_cast<std::size_t>(it - features.begin());
}

Transition merge_same_timestamp(const LogicVector& before, std::span<const LogicVector> changes) {
  if (changes.empty()) return {before, before};
  return {before, changes.back()};
}

TriggerWindow detect_trigger_window(EventSource& events, const SignalTable& table,
                                    std::string_view trigger_name, Femtoseconds settle_delay) {
  const auto index = table.find_name(trigger_name);
  if (!index)
    throw Error(ErrorCode::kNoTriggerEdge, fmt::format("trigger signal '{}' not declared", trigger_name));
  if (table[*index].width != 1)
    throw Error(ErrorCode::kTriggerNotScalar,
                fmt::format("trigger '{}' is {} bits wide", trigger_name, table[*index].width));

  // Net value per timestamp: an edge needs the settled value to change.
  LogicBit settled = LogicBit::kX;
  LogicBit pending = LogicBit::kX;
  std::int64_t pending_time = 0;
  bool has_pending = false;
  std::optional<std::int64_t> rise;
  std::optional<std::int64_t> fall;

  auto commit = [&] {
    if (!has_pending) return;
    if (!rise && settled == LogicBit::k0 && pending == LogicBit::k1) rise = pending_time;
    else if (rise && !fall && settled == LogicBit::k1 && pending == LogicBit::k0) fall = pending_time;
    settled = pending;
    has_pending = false;
  };

  ValueEvent ev;
  while (!fall && events.next(ev)) {
    if (ev.signal != *index) continue;
    if (has_pending && ev.time != pending_time) commit();
    pending = ev.value.bit(0);
    pending_time = ev.time;
    has_pending = true;
  }
  commit();

  if (!rise) throw Error(ErrorCode::kNoTriggerEdge, fmt::format("trigger '{}' never rises", trigger_name));
  if (!fall)
    throw Error(ErrorCode::kNoTriggerEdge,
                fmt::format("trigger '{}' has no falling edge after t={}", trigger_name, *rise));
  TriggerWindow w{*rise, *fall, to_ticks_ceil(settle_delay, table.timescale)};
  if (w.analysis_start() >= w.t_end)
    throw Error(ErrorCode::kResolutionTooCoarse,
                fmt::format("settle delay of {} ticks covers the whole trigger window [{}, {})",
                            w.settle_delay, w.t_start, w.t_end));
  return w;
}

namespace {

class Accumulator {
 public:
  Accumulator(ActivityMatrix& m, std::int64_t start, std::int64_t window_ticks)
      : m_(m), start_(start), window_ticks_(window_ticks),
        end_(start + window_ticks * static_cast<std::int64_t>(m.n_windows)) {}

  std::int64_t end() const noexcept { return end_; }

  void count(std::size_t slot, std::int64_t time, const LogicVector& before, const LogicVector& after) {
    if (time < start_ || time >= end_) return;
    const unsigned hw = toggled_bits(before, after);
    if (hw == 0) return;
    const auto w = static_cast<std::size_t>((time - start_) / window_ticks_);
    bump(2 * slot, w, hw);
    bump(2 * slot + 1, w, 1);
  }

 private:
  void bump(std::size_t feature, std::size_t window, unsigned by) {
    auto& c = m_.counts[feature * m_.n_windows + window];
    if (c > std::numeric_limits<std::uint32_t>::max() - by)
      throw Error(ErrorCode::kParamOutOfRange,
                  fmt::format("count overflow for {}", to_string(m_.features[feature])));
    c += by;
  }

  ActivityMatrix& m_;
  std::int64_t start_;
  std::int64_t window_ticks_;
  std::int64_t end_;
};

}  // namespace

ActivityMatrix window_activity(EventSource& events, const SignalTable& table,
                               std::span<const SignalEntry> candidates,
                               const TriggerWindow& window, Femtoseconds resolution,
                               const ActivityOptions& options) {
  const std::int64_t tick = table.timescale.tick().count();
  if (resolution.count() <= 0 || resolution.count() % tick != 0)
    throw Error(ErrorCode::kInvalidArgument,
                fmt::format("resolution of {} fs is not a whole number of {} ticks",
                            resolution.count(), table.timescale.to_string()));
  const std::int64_t window_ticks = resolution.count() / tick;
  const std::int64_t span = window.t_end - window.analysis_start();
  const std::int64_t n = span > 0 ? span / window_ticks : 0;
  if (n <= 0)
    throw Error(ErrorCode::kResolutionTooCoarse,
                fmt::format("analysis span of {} ticks holds no whole {}-tick window", span, window_ticks));

  ActivityMatrix m;
  m.window_len = resolution;
  m.n_windows = static_cast<std::size_t>(n);
  std::vector<std::int32_t> slot_of(table.size(), -1);
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const auto index = table.find_name(candidates[i].hier_name);
    if (!index)
      throw Error(ErrorCode::kInvalidArgument,
                  fmt::format("candidate '{}' is not in the signal table", candidates[i].hier_name));
    if (slot_of[*index] >= 0)
      throw Error(ErrorCode::kInvalidArgument, fmt::format("duplicate candidate '{}'", candidates[i].hier_name));
    slot_of[*index] = static_cast<std::int32_t>(i);
    m.features.push_back({candidates[i].hier_name, CounterType::kHammingWeight});
    m.features.push_back({candidates[i].hier_name, CounterType::kSingleToggle});
  }
  m.counts.assign(m.features.size() * m.n_windows, 0);

  Accumulator acc(m, window.analysis_start(), window_ticks);
  std::vector<LogicVector> settled;
  std::vector<LogicVector> pending(candidates.size());
  settled.reserve(candidates.size());
  for (const auto& c : candidates) settled.emplace_back(c.width);
  std::vector<std::size_t> dirty;
  std::vector<char> is_dirty(candidates.size(), 0);
  std::int64_t now = std::numeric_limits<std::int64_t>::min();

  auto flush = [&] {
    for (auto slot : dirty) {
      acc.count(slot, now, settled[slot], pending[slot]);
      std::swap(settled[slot], pending[slot]);
      is_dirty[slot] = 0;
    }
    dirty.clear();
  };

  ValueEvent ev;
  while (events.next(ev)) {
    if (ev.time != now) {
      flush();
      now = ev.time;
      if (now >= acc.end()) break;
    }
    const auto slot = slot_of[ev.signal];
    if (slot < 0) continue;
    const auto s = static_cast<std::size_t>(slot);
    if (!options.merge_same_timestamp) {
      acc.count(s, ev.time, settled[s], ev.value);
      settled[s] = std::move(ev.value);
      continue;
    }
    pending[s] = std::move(ev.value);
    if (!is_dirty[s]) {
      is_dirty[s] = 1;
      dirty.push_back(s);
    }
  }
  flush();
  return m;
}

// ---------------------------------------------------------------------------
// Serialization

namespace {
constexpr std::array<char, 4> kActivityMagic{'B', 'L', 'K', 'A'};
}

void write_activity(std::ostream& out, const ActivityMatrix& m) {
  if (m.n_windows > std::numeric_limits<std::uint32_t>::max())
    throw Error(ErrorCode::kInvalidArgument, "too many windows for the columnar format");
  columnar::Table t;
  t.magic = kActivityMagic;
  t.window_len_fs = m.window_len.count();
  t.rows = static_cast<std::uint32_t>(m.n_windows);
  for (std::size_t f = 0; f < m.n_features(); ++f) {
    auto col = m.column(f);
    t.columns.push_back({m.features[f].signal, static_cast<std::uint8_t>(m.features[f].counter_type),
                         std::vector<std::uint32_t>(col.begin(), col.end())});
  }
  columnar::write(out, t);
}

ActivityMatrix read_activity(std::istream& in) {
  const auto t = columnar::read(in, kActivityMagic);
  ActivityMatrix m;
  m.window_len = Femtoseconds{t.window_len_fs};
  m.n_windows = t.rows;
  for (const auto& col : t.columns) {
    const auto* data = std::get_if<std::vector<std::uint32_t>>(&col.data);
    if (!data || col.tag > 1) throw Error(ErrorCode::kBadFormat, "activity column is not a u32 counter column");
    m.features.push_back({col.name, static_cast<CounterType>(col.tag)});
    m.counts.insert(m.counts.end(), data->begin(), data->end());
  }
  return m;
}

void write_activity_text(std::ostream& out, const ActivityMatrix& m) {
  out << "window";
  for (const auto& f : m.features) out << '\t' << to_string(f);
  out << '\n';
  for (std::size_t w = 0; w < m.n_windows; ++w) {
    out << w;
    for (std::size_t f = 0; f < m.n_features(); ++f) out << '\t' << m.at(w, f);
    out << '\n';
  }
}

}  // namespace blink
