#pragma once

#include <cstddef>
#include <filesystem>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace blink {

/// One oscilloscope export. Voltages in volts, period in seconds.
struct ScopeCapture {
  double sample_period = 0.0;
  std::vector<double> shunt;
  std::vector<double> supply;  // empty when the export has no supply column
  std::vector<double> trigger;
  std::string capture_id;
  std::string instrument;

  bool has_supply() const noexcept { return !supply.empty(); }
  std::size_t size() const noexcept { return shunt.size(); }
};

/// Reads a delimited scope export. The header row names the columns
/// `time`, `shunt`, `trigger` and optionally `supply` (any order,
/// case-insensitive; `,`, `;` or tab separated). Lines starting with `#`
/// are comments; `# capture_id: ...` and `# instrument: ...` fill the
/// metadata. Throws MissingColumn, NonUniformSampling or BadFormat.
ScopeCapture load_scope_csv(std::istream& in);
ScopeCapture load_scope_csv(const std::filesystem::path& path);

/// Writes the export format read by load_scope_csv. Time is relative to
/// `time_origin_sample`. Values use shortest round-trip formatting.
void write_scope_csv(std::ostream& out, const ScopeCapture& cap, std::size_t time_origin_sample = 0);

/// Index of the first rising crossing of the midpoint between the
/// channel's min and max. Throws NoTriggerCrossing.
std::size_t find_trigger_edge(std::span<const double> trigger);

/// Merges two captures of the same run taken by separate instruments.
/// Both are aligned on their first trigger edge; where they overlap the
/// first capture's samples are kept. Throws InvalidArgument when periods
/// or column layout differ, or when the second capture leaves a gap.
ScopeCapture stitch_captures(const ScopeCapture& first, const ScopeCapture& second);

struct PowerTrace {
  double sample_period = 0.0;
  std::vector<double> samples;  // watts, >= 0
  std::size_t t0_trigger = 0;
  std::size_t clamped_samples = 0;  // negative samples forced to zero
};

/// P = (V_shunt / R) * (V_supply - V_shunt). The supply is `v_supply` when
/// given, otherwise the capture's supply channel. Throws SupplyBelowDrop,
/// NoTriggerCrossing or InvalidArgument (r_shunt <= 0, no supply at all).
PowerTrace compute_power(const ScopeCapture& cap, double r_shunt, std::optional<double> v_supply);

struct WindowedPower {
  double window_len = 0.0;  // seconds
  std::vector<double> values;  // mean watts per window
};

/// Window k is the mean of the samples whose time falls in
/// [t0 + delay + k*T, t0 + delay + (k+1)*T). Throws TraceTooShort.
WindowedPower align_and_resample(const PowerTrace& trace, double settle_delay, double resolution,
                                 std::size_t n_windows_expected);

/// First sample index of window `k` under the same boundary rule.
std::size_t window_boundary(const PowerTrace& trace, double settle_delay, double resolution, std::size_t k);

/// Columnar container, magic "BLKP", one f64 column "power_w".
void write_windowed_power(std::ostream& out, const WindowedPower& p);
WindowedPower read_windowed_power(std::istream& in);

}  // namespace blink
