#pragma once

#include <compare>
#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "blink/logic_vector.hpp"
#include "blink/vcd.hpp"

namespace blink {

/// Hamming-weight counters add the number of bits that flipped; single-toggle
/// counters add one per value change that flipped at least one bit.
enum class CounterType : std::uint8_t { kHammingWeight = 0, kSingleToggle = 1 };

std::string_view to_string(CounterType type) noexcept;  // "HW" / "ST"
std::optional<CounterType> parse_counter_type(std::string_view text) noexcept;

struct FeatureDesc {
  std::string signal;
  CounterType counter_type = CounterType::kHammingWeight;

  friend auto operator<=>(const FeatureDesc&, const FeatureDesc&) = default;
};

std::string to_string(const FeatureDesc& f);  // "top.a.b:HW"

/// Span framed by the trigger signal, in ticks. The analysed region is
/// [t_start + settle_delay, t_end).
struct TriggerWindow {
  std::int64_t t_start = 0;
  std::int64_t t_end = 0;
  std::int64_t settle_delay = 0;

  std::int64_t analysis_start() const noexcept { return t_start + settle_delay; }
  friend bool operator==(const TriggerWindow&, const TriggerWindow&) = default;
};

/// First 0->1 edge of `trigger_name` and the first 1->0 edge after it.
/// Value changes at one timestamp are collapsed to their net value, so a
/// zero-width glitch is not an edge. Throws NoTriggerEdge, TriggerNotScalar
/// or ResolutionTooCoarse (settle delay swallows the whole window).
TriggerWindow detect_trigger_window(EventSource& events, const SignalTable& table,
                                    std::string_view trigger_name, Femtoseconds settle_delay);

/// Per-window switching counts. Column-major storage.
struct ActivityMatrix {
  Femtoseconds window_len{0};
  std::size_t n_windows = 0;
  std::vector<FeatureDesc> features;
  std::vector<std::uint32_t> counts;  // counts[f * n_windows + w]

  std::size_t n_features() const noexcept { return features.size(); }
  std::uint32_t at(std::size_t window, std::size_t feature) const {
    return counts[feature * n_windows + window];
  }
  std::span<const std::uint32_t> column(std::size_t feature) const {
    return {counts.data() + feature * n_windows, n_windows};
  }
  std::optional<std::size_t> find(const FeatureDesc& f) const;

  friend bool operator==(const ActivityMatrix&, const ActivityMatrix&) = default;
};

/// The settled effect of several changes of one signal at one timestamp.
struct Transition {
  LogicVector before;
  LogicVector after;

  unsigned toggled() const noexcept { return toggled_bits(before, after); }
};

/// Only the net first-value to last-value transition survives.
Transition merge_same_timestamp(const LogicVector& before, std::span<const LogicVector> changes);

struct ActivityOptions {
  bool merge_same_timestamp = true;
};

/// Accumulates HW and ST counts for every candidate over whole windows of
/// `resolution` starting at window.analysis_start(). An event at time t is
/// in window floor((t - start) / resolution); the trailing partial window
/// is dropped. Throws ResolutionTooCoarse if no whole window fits.
ActivityMatrix window_activity(EventSource& events, const SignalTable& table,
                               std::span<const SignalEntry> candidates,
                               const TriggerWindow& window, Femtoseconds resolution,
                               const ActivityOptions& options = {});

/// Columnar container, magic "BLKA".
void write_activity(std::ostream& out, const ActivityMatrix& m);
ActivityMatrix read_activity(std::istream& in);
/// Tab-separated dump: header row of feature names, one row per window.
void write_activity_text(std::ostream& out, const ActivityMatrix& m);

}  // namespace blink
