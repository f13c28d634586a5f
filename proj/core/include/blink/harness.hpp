#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "blink/activity.hpp"
#include "blink/model.hpp"
#include "blink/power_trace.hpp"
#include "blink/vcd.hpp"

/// Synthetic fixtures: a signal hierarchy with a phased workload, its VCD,
/// the ground-truth linear power model and a matching scope capture.
namespace blink::harness {

enum class Profile { kPhased, kIdle };

struct DesignParams {
  std::size_t n_signals = 40;  // candidate port signals, <= 4096
  unsigned max_width = 32;     // <= 64
  std::size_t clusters = 2;
  std::size_t cores_per_cluster = 2;
  std::size_t support_size = 5;
  bool mixed_sign_weights = false;
  Profile profile = Profile::kPhased;
  double glitch_probability = 0.02;  // same-timestamp churn per change
  std::int64_t clock_period_ns = 100;
  std::int64_t resolution_ns = 10'000;
  std::int64_t settle_delay_ns = 50'000;
};

struct SignalSpec {
  std::string hier_name;
  unsigned width = 1;
  bool candidate = true;  // port signal; internal registers are not
};

/// Per-signal behaviour during one phase, indexed like SyntheticDesign::signals.
struct Phase {
  std::size_t windows = 1;
  std::vector<double> rates;       // change probability per clock cycle
  std::vector<double> single_bit;  // probability a change flips exactly one bit
};

struct SyntheticDesign {
  std::uint64_t seed = 0;
  DesignParams params;
  std::vector<SignalSpec> signals;  // clusters' signals, sorted by name
  PowerModel truth;
  std::vector<Phase> phases;  // repeats cyclically over the windows

  std::int64_t cycles_per_window() const noexcept { return params.resolution_ns / params.clock_period_ns; }
  std::vector<std::string> module_scopes() const;
  /// Signals matching the default candidate filter, sorted.
  std::vector<std::string> candidates() const;
};

/// Deterministic per seed. Throws ParamOutOfRange.
SyntheticDesign gen_design(std::uint64_t seed, const DesignParams& params = {});

struct VcdFixture {
  std::string text;
  ActivityMatrix truth;       // brute-force counts, independent of window_activity
  std::int64_t trigger_rise_ns = 0;
  std::int64_t trigger_fall_ns = 0;
  std::int64_t first_cycle = 0;  // clock cycle where window 0 starts
  std::size_t value_changes = 0;
};

/// Renders `n_windows` windows (>= 10) of the workload. Timescale 1ns; the
/// trigger `top.trg` rises on a clock edge after a random pre-roll and falls
/// half a window after the last whole window.
VcdFixture render_vcd(const SyntheticDesign& design, std::size_t n_windows);

struct TraceOptions {
  double noise_sigma = 0.0;         // per sample, fraction of peak window power
  double window_noise_sigma = 0.0;  // per window, fraction of peak window power
  double scope_rate = 10e6;         // samples per second
  double r_shunt = 0.1;
  double v_supply = 1.0;
  std::uint64_t seed = 0;
};

struct TraceFixture {
  ScopeCapture capture;
  std::vector<double> window_power;  // noiseless truth per window
  std::size_t trigger_sample = 0;
};

/// Scope capture whose windows carry the truth model applied to `acts`.
/// Throws InvalidArgument unless a window spans a whole number >= 100 of
/// samples.
TraceFixture render_power_trace(const SyntheticDesign& design, const ActivityMatrix& acts,
                                const TraceOptions& options);

nlohmann::json truth_to_json(const SyntheticDesign& design, const VcdFixture& vcd, const TraceFixture& trace,
                             const TraceOptions& options);

struct FixtureParams {
  DesignParams design;
  TraceOptions trace;
  std::size_t n_windows = 500;
};

/// Writes design.vcd, scope.csv, truth.json and blink.ini into `dir`.
/// Byte-identical for equal arguments.
void write_fixture(const std::filesystem::path& dir, std::uint64_t seed, const FixtureParams& params);

}  // namespace blink::harness
