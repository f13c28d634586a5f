#include "blink/monitor.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "blink/error.hpp"

namespace blink {

namespace {

std::int64_t signed_max(unsigned width) { return (std::int64_t{1} << (width - 1)) - 1; }
std::int64_t signed_min(unsigned width) { return -(std::int64_t{1} << (width - 1)); }

// Symmetric range: the most negative code is never produced.
bool fits_signed(std::int64_t v, unsigned width) { return v >= -signed_max(width) && v <= signed_max(width); }

std::optional<std::int64_t> scaled(double value, int frac_bits, unsigned width) {
  const double s = std::ldexp(value, frac_bits);
  if (!std::isfinite(s) || std::abs(s) > 0x1.0p62) return std::nullopt;
  const auto q = std::llround(s);
  if (!fits_signed(q, width)) return std::nullopt;
  return q;
}

std::int64_t saturate(std::int64_t acc, unsigned width, bool* saturated) {
  const auto hi = signed_max(width);
  const auto lo = signed_min(width);
  if (acc > hi || acc < lo) {
    if (saturated) *saturated = true;
    return acc > hi ? hi : lo;
  }
  return acc;
}

}  // namespace

// ---------------------------------------------------------------------------
// Quantization

double QuantizedModel::scale_back() const noexcept { return std::ldexp(1.0, -frac_bits); }

QuantizedModel quantize_weights(const PowerModel& model, unsigned weight_width, int max_frac_bits) {
  if (weight_width < 2 || weight_width > 32)
    throw Error(ErrorCode::kInvalidArgument, fmt::format("weight width {} outside [2, 32]", weight_width));
  if (max_frac_bits < 0) throw Error(ErrorCode::kInvalidArgument, "max_frac_bits must be >= 0");

  auto attempt = [&](int f) -> std::optional<QuantizedModel> {
    QuantizedModel q;
    q.frac_bits = f;
    q.weight_width = weight_width;
    const auto b = scaled(model.intercept, f, weight_width);
    if (!b) return std::nullopt;
    q.intercept = *b;
    for (const auto& t : model.terms) {
      const auto w = scaled(t.weight, f, weight_width);
      if (!w) return std::nullopt;
      q.features.push_back(t.feature);
      q.weights.push_back(*w);
    }
    return q;
  };

  for (int f = max_frac_bits; f >= 0; --f)
    if (auto q = attempt(f)) return *q;
  throw Error(ErrorCode::kWeightOverflow,
              fmt::format("model coefficients do not fit {}-bit signed integers even without fraction bits",
                          weight_width));
}

// ---------------------------------------------------------------------------
// MonitorSpec

unsigned min_counter_width(CounterType type, unsigned signal_width, std::uint64_t window_cycles) noexcept {
  const std::uint64_t max_count =
      type == CounterType::kHammingWeight ? signal_width * window_cycles : window_cycles;
  return static_cast<unsigned>(std::bit_width(max_count));
}

unsigned MonitorSpec::window_counter_width() const noexcept {
  return std::max(1u, static_cast<unsigned>(std::bit_width(window_cycles - 1)));
}

unsigned MonitorSpec::accumulator_width() const noexcept {
  unsigned widest = 0;
  for (const auto& t : taps) widest = std::max(widest, t.counter_width);
  const unsigned terms = static_cast<unsigned>(taps.size()) + 1;
  const unsigned need = weight_width + widest + 1 + static_cast<unsigned>(std::bit_width(terms));
  return std::max(output_width + 1, need);
}

double MonitorSpec::scale_back() const noexcept { return std::ldexp(1.0, -frac_bits); }

void MonitorSpec::validate() const {
  if (window_cycles < 1) throw Error(ErrorCode::kInvalidArgument, "window must be at least one cycle");
  if (weight_width < 2 || weight_width > 32)
    throw Error(ErrorCode::kInvalidArgument, fmt::format("weight width {} outside [2, 32]", weight_width));
  if (output_width < 2 || output_width > 48)
    throw Error(ErrorCode::kInvalidArgument, fmt::format("output width {} outside [2, 48]", output_width));
  if (taps.size() != q_weights.size())
    throw Error(ErrorCode::kInvalidArgument, "tap and weight counts differ");
  if (!fits_signed(q_intercept, weight_width))
    throw Error(ErrorCode::kInvalidArgument, "quantized intercept does not fit the weight width");
  for (std::size_t i = 0; i < taps.size(); ++i) {
    const auto& t = taps[i];
    if (t.width < 1 || t.width > 4096)
      throw Error(ErrorCode::kInvalidArgument, fmt::format("tap '{}' has width {}", t.hier_name, t.width));
    const unsigned need = min_counter_width(t.counter_type, t.width, window_cycles);
    if (t.counter_width < need)
      throw Error(ErrorCode::kInvalidArgument,
                  fmt::format("tap '{}' counter of {} bits can overflow, needs {}", t.hier_name, t.counter_width,
                              need));
    if (!fits_signed(q_weights[i], weight_width))
      throw Error(ErrorCode::kInvalidArgument, fmt::format("weight of tap '{}' does not fit", t.hier_name));
  }
  if (accumulator_width() > 63)
    throw Error(ErrorCode::kInvalidArgument,
                fmt::format("accumulator needs {} bits, limit is 63", accumulator_width()));
}

MonitorSpec make_monitor_spec(const QuantizedModel& q, const SignalTable& table, std::uint64_t window_cycles,
                              unsigned output_width) {
  MonitorSpec spec;
  spec.window_cycles = window_cycles;
  spec.frac_bits = q.frac_bits;
  spec.q_intercept = q.intercept;
  spec.weight_width = q.weight_width;
  spec.output_width = output_width;
  spec.q_weights = q.weights;
  for (const auto& f : q.features) {
    const auto index = table.find_name(f.signal);
    if (!index) throw Error(ErrorCode::kUnresolvableTap, fmt::format("model signal '{}' is not in the design", f.signal));
    const unsigned width = table[*index].width;
    spec.taps.push_back({f.signal, width, f.counter_type, min_counter_width(f.counter_type, width, window_cycles)});
  }
  spec.validate();
  return spec;
}

std::int64_t quantized_estimate(const MonitorSpec& spec, std::span<const std::uint64_t> counts) {
  std::int64_t acc = spec.q_intercept;
  for (std::size_t i = 0; i < spec.taps.size(); ++i) acc += spec.q_weights[i] * static_cast<std::int64_t>(counts[i]);
  return saturate(acc, spec.output_width, nullptr);
}

std::vector<std::int64_t> quantized_predict(const MonitorSpec& spec, const ActivityMatrix& activity) {
  std::vector<std::size_t> column;
  for (const auto& t : spec.taps) {
    const auto f = activity.find({t.hier_name, t.counter_type});
    if (!f) throw Error(ErrorCode::kFeatureMismatch, fmt::format("activity lacks {}:{}", t.hier_name, to_string(t.counter_type)));
    column.push_back(*f);
  }
  std::vector<std::int64_t> out;
  std::vector<std::uint64_t> counts(spec.taps.size());
  for (std::size_t w = 0; w < activity.n_windows; ++w) {
    for (std::size_t i = 0; i < column.size(); ++i) counts[i] = activity.at(w, column[i]);
    out.push_back(quantized_estimate(spec, counts));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Behavioural simulation

MonitorRun simulate_monitor(const MonitorSpec& spec, std::span<const CycleEvent> events, std::int64_t n_cycles) {
  spec.validate();
  const std::size_t n_taps = spec.taps.size();
  std::vector<LogicVector> cur;
  for (const auto& t : spec.taps) cur.emplace_back(t.width);

  std::size_t e = 0;
  auto check = [&](const CycleEvent& ev) {
    if (ev.tap >= n_taps) throw Error(ErrorCode::kInvalidArgument, fmt::format("event for unknown tap {}", ev.tap));
    if (e > 0 && events[e - 1].cycle > ev.cycle)
      throw Error(ErrorCode::kInvalidArgument, "monitor events are not sorted by cycle");
  };
  for (; e < events.size() && events[e].cycle < 0; ++e) {
    check(events[e]);
    cur[events[e].tap] = events[e].value;
  }
  std::vector<LogicVector> prev = cur;
  std::vector<char> changed(n_taps, 0);
  std::vector<std::uint64_t> counts(n_taps, 0);
  std::vector<std::uint64_t> next(n_taps, 0);

  MonitorRun run;
  const auto window = static_cast<std::int64_t>(spec.window_cycles);
  for (std::int64_t c = 0; c < n_cycles; ++c) {
    for (; e < events.size() && events[e].cycle == c; ++e) {
      check(events[e]);
      cur[events[e].tap] = events[e].value;
      changed[events[e].tap] = 1;
    }
    for (std::size_t i = 0; i < n_taps; ++i) {
      std::uint64_t inc = 0;
      if (changed[i]) {
        const unsigned flipped = toggled_bits(prev[i], cur[i]);
        inc = spec.taps[i].counter_type == CounterType::kHammingWeight ? flipped : (flipped > 0 ? 1 : 0);
        prev[i] = cur[i];
        changed[i] = 0;
      }
      const std::uint64_t mask = (std::uint64_t{1} << spec.taps[i].counter_width) - 1;
      next[i] = counts[i] + inc;
      if (next[i] > mask) {
        run.counter_wrapped = true;
        next[i] &= mask;
      }
    }
    if (c % window == window - 1) {
      std::int64_t acc = spec.q_intercept;
      for (std::size_t i = 0; i < n_taps; ++i) acc += spec.q_weights[i] * static_cast<std::int64_t>(next[i]);
      run.estimates.push_back(saturate(acc, spec.output_width, &run.saturated));
      std::fill(counts.begin(), counts.end(), 0);
    } else {
      counts = next;
    }
  }
  return run;
}

std::vector<CycleEvent> collect_cycle_events(EventSource& events, const SignalTable& table, const MonitorSpec& spec,
                                             std::int64_t origin, std::int64_t period) {
  if (period <= 0) throw Error(ErrorCode::kInvalidArgument, "clock period must be positive");
  std::vector<std::int32_t> tap_of(table.size(), -1);
  for (std::size_t i = 0; i < spec.taps.size(); ++i) {
    const auto index = table.find_name(spec.taps[i].hier_name);
    if (!index)
      throw Error(ErrorCode::kUnresolvableTap, fmt::format("tap '{}' is not in the design", spec.taps[i].hier_name));
    tap_of[*index] = static_cast<std::int32_t>(i);
  }
  std::vector<CycleEvent> out;
  ValueEvent ev;
  while (events.next(ev)) {
    const auto tap = tap_of[ev.signal];
    if (tap < 0) continue;
    const std::int64_t rel = ev.time - origin;
    const std::int64_t cycle = rel >= 0 ? rel / period : -((-rel + period - 1) / period);
    out.push_back({cycle, static_cast<std::uint32_t>(tap), std::move(ev.value)});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Overhead

OverheadEstimate estimate_overhead(const MonitorSpec& spec) {
  spec.validate();
  OverheadEstimate o;
  const std::uint64_t acc = spec.accumulator_width();
  for (std::size_t i = 0; i < spec.taps.size(); ++i) {
    const auto& t = spec.taps[i];
    o.ff_tap_registers += t.width;
    o.ff_counters += t.counter_width;
    if (t.counter_type == CounterType::kHammingWeight) o.lut_popcount += t.width - 1;
    else o.lut_popcount += (t.width + 2) / 3;  // 6-input compare of 3 bit pairs
    o.lut_counters += t.counter_width;
    const auto magnitude = static_cast<std::uint64_t>(std::abs(spec.q_weights[i]));
    o.lut_mac += static_cast<std::uint64_t>(std::popcount(magnitude)) * acc;
  }
  o.ff_window_counter = spec.window_counter_width();
  o.ff_estimate = spec.output_width;
  o.lut_mac += acc;  // intercept add
  o.lut_control = spec.output_width + spec.window_counter_width();  // saturation mux + window compare
  o.ff = o.ff_tap_registers + o.ff_counters + o.ff_window_counter + o.ff_estimate;
  o.lut = o.lut_popcount + o.lut_counters + o.lut_mac + o.lut_control;
  return o;
}

// ---------------------------------------------------------------------------
// JSON

nlohmann::json monitor_spec_to_json(const MonitorSpec& spec) {
  nlohmann::json taps = nlohmann::json::array();
  for (std::size_t i = 0; i < spec.taps.size(); ++i) {
    const auto& t = spec.taps[i];
    taps.push_back({{"signal", t.hier_name},
                    {"width", t.width},
                    {"counter_type", to_string(t.counter_type)},
                    {"counter_width", t.counter_width},
                    {"q_weight", spec.q_weights[i]}});
  }
  return {{"window_cycles", spec.window_cycles},
          {"frac_bits", spec.frac_bits},
          {"weight_width", spec.weight_width},
          {"output_width", spec.output_width},
          {"accumulator_width", spec.accumulator_width()},
          {"q_intercept", spec.q_intercept},
          {"scale_back_w_per_lsb", spec.scale_back()},
          {"taps", taps}};
}

MonitorSpec monitor_spec_from_json(const nlohmann::json& j) {
  MonitorSpec spec;
  spec.window_cycles = j.at("window_cycles").get<std::uint64_t>();
  spec.frac_bits = j.at("frac_bits").get<int>();
  spec.weight_width = j.at("weight_width").get<unsigned>();
  spec.output_width = j.at("output_width").get<unsigned>();
  spec.q_intercept = j.at("q_intercept").get<std::int64_t>();
  for (const auto& t : j.at("taps")) {
    const auto type = parse_counter_type(t.at("counter_type").get<std::string>());
    if (!type) throw Error(ErrorCode::kBadFormat, "monitor tap has an unknown counter type");
    spec.taps.push_back({t.at("signal").get<std::string>(), t.at("width").get<unsigned>(), *type,
                         t.at("counter_width").get<unsigned>()});
    spec.q_weights.push_back(t.at("q_weight").get<std::int64_t>());
  }
  spec.validate();
  return spec;
}

nlohmann::json overhead_to_json(const OverheadEstimate& o) {
  return {{"basis", "pre-synthesis analytic approximation (FF exact, LUT approximate)"},
          {"ff", o.ff},
          {"lut", o.lut},
          {"ff_breakdown",
           {{"tap_registers", o.ff_tap_registers},
            {"counters", o.ff_counters},
            {"window_counter", o.ff_window_counter},
            {"estimate_register", o.ff_estimate}}},
          {"lut_breakdown",
           {{"popcount", o.lut_popcount}, {"counters", o.lut_counters}, {"mac", o.lut_mac}, {"control", o.lut_control}}}};
}

}  // namespace blink
