#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "blink/config.hpp"
#include "blink/error.hpp"

namespace blink {

enum class Phase { kExtractActivity, kIngestPower, kIdentify, kEmitMonitor };

std::string_view to_string(Phase phase) noexcept;
/// A single phase name, or "all" for every phase in order.
std::optional<std::vector<Phase>> parse_phases(std::string_view name);

/// A module error raised while running `phase`; keeps the original code.
class PhaseError : public Error {
 public:
  PhaseError(Phase phase, const Error& cause);

  Phase phase() const noexcept { return phase_; }

 private:
  Phase phase_;
};

/// Process exit status for an error code: 2 configuration, 3 missing
/// input, 4 data mismatch or malformed input, 5 identification failure,
/// 1 anything else.
int exit_code(ErrorCode code) noexcept;

struct RunOptions {
  bool force = false;
};

struct PhaseOutcome {
  Phase phase = Phase::kExtractActivity;
  bool ran = false;  // false: up to date, no work done
  double seconds = 0.0;
};

struct RunResult {
  std::vector<PhaseOutcome> phases;
  nlohmann::json report;
};

/// Runs `phases` in order against `cfg.output_dir`, which the call holds
/// locked. A phase whose input digests, configuration and artifacts are
/// unchanged since its last successful run is skipped unless forced.
/// Artifacts and the report are replaced atomically. Throws PhaseError,
/// or Error(kConfig) when another run holds the lock.
RunResult run_pipeline(std::span<const Phase> phases, const PipelineConfig& cfg, const RunOptions& options = {});

/// The report in `output_dir`, or nullopt if there is none.
std::optional<nlohmann::json> load_report(const std::filesystem::path& output_dir);

}  // namespace blink
