#pragma once

#include <filesystem>
#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "blink/model.hpp"
#include "blink/monitor.hpp"
#include "blink/vcd.hpp"

namespace blink {

/// Effective settings of one pipeline run.
///
/// Precedence, lowest first: built-in defaults, the INI file,
/// BLINK_OUTPUT_ROOT (base for a relative output path), `--set` overrides.
struct PipelineConfig {
  std::filesystem::path vcd;
  std::vector<std::filesystem::path> scopes;  // stitched in order
  std::filesystem::path output_dir;
  std::string id;  // row label in the report table, defaults to the output directory name

  CandidateFilter filter;
  std::string trigger = "top.trg";
  Femtoseconds resolution{10'000'000'000};    // 10 us
  Femtoseconds settle_delay{50'000'000'000};  // 50 us
  bool merge_same_timestamp = true;

  double r_shunt = 0.1;
  std::optional<double> v_supply;

  double split_ratio = 0.8;
  std::uint64_t seed = 1;
  IdentifyOptions identify;
  Normalizer normalizer = Normalizer::kPeak;

  double clock_hz = 100e6;
  unsigned weight_width = 16;
  int max_frac_bits = 24;
  unsigned output_width = 32;

  std::string dut_module;       // defaults to the VCD top scope
  std::vector<PortDecl> dut_ports;  // empty: derived from the top scope's signals
  std::string clock_port = "clk";
  std::string reset_port = "rst_n";
  bool reset_active_low = true;

  /// Throws Error(kConfig).
  void validate() const;
  /// Every effective value, paths as given after resolution.
  nlohmann::json to_json() const;
};

/// Parses "10us", "50 us", "1.5ms", "200ns". Throws Error(kConfig).
Femtoseconds parse_duration(std::string_view text);
std::string format_duration(Femtoseconds d);

/// `overrides` are "section.key=value". Relative paths resolve against
/// `base_dir`. Throws Error(kConfig) on unknown keys or bad values.
PipelineConfig parse_config(std::istream& in, const std::filesystem::path& base_dir,
                            const std::vector<std::string>& overrides = {});
/// Throws Error(kMissingInput) when the file does not exist.
PipelineConfig load_config(const std::filesystem::path& path, const std::vector<std::string>& overrides = {});

}  // namespace blink
