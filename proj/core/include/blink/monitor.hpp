#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "blink/activity.hpp"
#include "blink/logic_vector.hpp"
#include "blink/model.hpp"
#include "blink/vcd.hpp"

namespace blink {

/// Fixed-point form of a PowerModel: value = integer * 2^-frac_bits.
struct QuantizedModel {
  int frac_bits = 0;
  unsigned weight_width = 16;
  std::int64_t intercept = 0;
  std::vector<FeatureDesc> features;
  std::vector<std::int64_t> weights;

  double scale_back() const noexcept;  // watts per LSB
};

/// Picks the largest frac_bits <= max_frac_bits such that the intercept and
/// every weight, rounded to nearest, fit a signed `weight_width` integer.
/// Throws WeightOverflow when even frac_bits = 0 does not fit.
QuantizedModel quantize_weights(const PowerModel& model, unsigned weight_width = 16, int max_frac_bits = 24);

struct MonitorTap {
  std::string hier_name;
  unsigned width = 1;
  CounterType counter_type = CounterType::kHammingWeight;
  unsigned counter_width = 1;
};

/// Everything the RTL emitter and the behavioural simulator need.
struct MonitorSpec {
  std::uint64_t window_cycles = 1;
  std::vector<MonitorTap> taps;
  std::vector<std::int64_t> q_weights;
  int frac_bits = 0;
  std::int64_t q_intercept = 0;
  unsigned weight_width = 16;
  unsigned output_width = 32;

  /// Throws InvalidArgument when a counter could overflow inside one
  /// window, a weight does not fit, or widths are out of range.
  void validate() const;
  unsigned window_counter_width() const noexcept;
  /// Signed width of the multiply-accumulate before saturation.
  unsigned accumulator_width() const noexcept;
  double scale_back() const noexcept;
};

/// Smallest counter that cannot wrap within `window_cycles` cycles when the
/// signal changes at most once per cycle.
unsigned min_counter_width(CounterType type, unsigned signal_width, std::uint64_t window_cycles) noexcept;

/// Taps take their widths from `table`. Throws UnresolvableTap for a
/// feature whose signal is not in the table.
MonitorSpec make_monitor_spec(const QuantizedModel& q, const SignalTable& table, std::uint64_t window_cycles,
                              unsigned output_width = 32);

/// b_q + sum(w_q * count), saturated to the signed output width.
std::int64_t quantized_estimate(const MonitorSpec& spec, std::span<const std::uint64_t> counts);

/// Quantized estimate for every row of an activity matrix. Taps are looked
/// up by feature; throws FeatureMismatch if one is missing.
std::vector<std::int64_t> quantized_predict(const MonitorSpec& spec, const ActivityMatrix& activity);

struct CycleEvent {
  std::int64_t cycle = 0;  // negative cycles only set the initial state
  std::uint32_t tap = 0;
  LogicVector value;
};

struct MonitorRun {
  std::vector<std::int64_t> estimates;  // one per completed window
  bool counter_wrapped = false;
  bool saturated = false;
};

/// Cycle-accurate model of the emitted hardware. Reset is released at
/// cycle 0 with each previous-value register holding the tap's value from
/// cycle -1. Per cycle, the last value of each tap is sampled; counters add
/// popcount(prev ^ cur) for HW taps and (prev != cur) for ST taps, bits
/// that are x/z on either side never count. On the last cycle of a window
/// the saturated MAC of the updated counts is latched and counters clear.
/// `events` must be sorted by cycle.
MonitorRun simulate_monitor(const MonitorSpec& spec, std::span<const CycleEvent> events, std::int64_t n_cycles);

/// Converts value changes of the monitor's taps to clock cycles:
/// cycle = floor((t - origin) / period), both in ticks. Changes before
/// `origin` land on negative cycles. Throws UnresolvableTap.
std::vector<CycleEvent> collect_cycle_events(EventSource& events, const SignalTable& table, const MonitorSpec& spec,
                                             std::int64_t origin, std::int64_t period);

struct OverheadEstimate {
  std::uint64_t ff = 0;
  std::uint64_t lut = 0;
  std::uint64_t ff_tap_registers = 0;
  std::uint64_t ff_counters = 0;
  std::uint64_t ff_window_counter = 0;
  std::uint64_t ff_estimate = 0;
  std::uint64_t lut_popcount = 0;
  std::uint64_t lut_counters = 0;
  std::uint64_t lut_mac = 0;
  std::uint64_t lut_control = 0;
};

/// FF count follows the emitted registers exactly; the LUT count is a
/// pre-synthesis approximation (popcount trees of width-1 6-input LUTs,
/// one LUT per counter bit, shift-add MAC with one adder bit per set
/// weight bit, saturation and window control).
OverheadEstimate estimate_overhead(const MonitorSpec& spec);

nlohmann::json monitor_spec_to_json(const MonitorSpec& spec);
MonitorSpec monitor_spec_from_json(const nlohmann::json& j);
nlohmann::json overhead_to_json(const OverheadEstimate& o);

// ---------------------------------------------------------------------------
// RTL emission

/// Verilog-2001 text of module `blink_monitor`. Pure function of `spec`.
std::string emit_monitor_rtl(const MonitorSpec& spec);

enum class PortDirection { kInput, kOutput, kInout };

struct PortDecl {
  std::string name;
  PortDirection direction = PortDirection::kInput;
  unsigned width = 1;
};

struct DutInterface {
  std::string module_name;
  /// Hierarchical prefix of the DUT instance in the tap names, e.g. "top".
  std::string instance_scope;
  std::vector<PortDecl> ports;
  /// Every hierarchical signal name known inside the DUT.
  std::vector<std::string> hierarchy;
  std::string clock_port = "clk";
  std::string reset_port = "rst_n";
  bool reset_active_low = true;
};

struct TapConnection {
  std::string hier_name;
  std::string expression;  // what the monitor's tap port is bound to
  bool hierarchical = false;
};

struct WrapperRtl {
  std::string text;
  std::vector<TapConnection> connections;
};

/// Module `blink_wrapper`: the unmodified DUT plus `blink_monitor`, taps
/// bound directly to DUT ports or through hierarchical references.
/// Throws UnresolvableTap.
WrapperRtl emit_wrapper(const MonitorSpec& spec, const DutInterface& dut);

}  // namespace blink
