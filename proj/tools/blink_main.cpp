// Command-line front end: pipeline phases, fixture generation, reports.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "blink/config.hpp"
#include "blink/error.hpp"
#include "blink/harness.hpp"
#include "blink/pipeline.hpp"
#include "blink/report.hpp"
#include "blink/version.hpp"

namespace {

int run_command(const std::string& phase_name, const std::filesystem::path& config,
                const std::vector<std::string>& overrides, bool force) {
  const auto phases = blink::parse_phases(phase_name);
  if (!phases) {
    fmt::print(stderr, "error: unknown phase '{}' (extract-activity, ingest-power, identify, emit-monitor, all)\n",
               phase_name);
    return 2;
  }
  const auto cfg = blink::load_config(config, overrides);
  const auto result = blink::run_pipeline(*phases, cfg, {force});
  for (const auto& p : result.phases) {
    if (p.ran) fmt::print("{:<18} done        {:.3f} s\n", blink::to_string(p.phase), p.seconds);
    else fmt::print("{:<18} up-to-date\n", blink::to_string(p.phase));
  }
  fmt::print("\n{}", blink::render_report_table(result.report));
  return 0;
}

int report_command(const std::filesystem::path& config, const std::vector<std::string>& overrides,
                   const std::string& output, bool as_json) {
  std::filesystem::path dir = output;
  if (dir.empty()) dir = blink::load_config(config, overrides).output_dir;
  const auto report = blink::load_report(dir);
  if (!report) throw blink::Error(blink::ErrorCode::kMissingInput, fmt::format("no report in '{}'", dir.string()));
  if (as_json) std::cout << report->dump(2) << '\n';
  else std::cout << blink::render_report_table(*report);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"blink: switching-activity power models and run-time power monitors"};
  app.require_subcommand(1);

  std::filesystem::path config = "blink.ini";
  std::vector<std::string> overrides;

  auto* run = app.add_subcommand("run", "Run a pipeline phase (extract-activity, ingest-power, identify, emit-monitor, all)");
  std::string phase;
  bool force = false;
  run->add_option("phase", phase, "Phase to run")->required();
  run->add_option("-c,--config", config, "INI configuration file")->capture_default_str();
  run->add_option("--set", overrides, "Override a setting, section.key=value");
  run->add_flag("-f,--force", force, "Run even when outputs are up to date");

  auto* gen = app.add_subcommand("gen-fixture", "Write a synthetic fixture directory");
  std::uint64_t seed = 1;
  std::filesystem::path out_dir;
  blink::harness::FixtureParams fx;
  gen->add_option("--seed", seed, "Generator seed")->capture_default_str();
  gen->add_option("-o,--out", out_dir, "Fixture directory")->required();
  gen->add_option("--signals", fx.design.n_signals, "Candidate signals (<= 4096)")->capture_default_str();
  gen->add_option("--max-width", fx.design.max_width, "Widest signal in bits (<= 64)")->capture_default_str();
  gen->add_option("--support", fx.design.support_size, "Signals in the ground-truth model")->capture_default_str();
  gen->add_option("--windows", fx.n_windows, "Windows inside the trigger frame")->capture_default_str();
  gen->add_option("--noise", fx.trace.noise_sigma, "Per-sample noise, fraction of peak power")->capture_default_str();
  gen->add_option("--window-noise", fx.trace.window_noise_sigma, "Per-window noise, fraction of peak power")
      ->capture_default_str();
  gen->add_flag("--mixed-sign", fx.design.mixed_sign_weights, "Allow negative ground-truth weights");

  auto* rep = app.add_subcommand("report", "Print the report of an output directory");
  std::string output;
  bool as_json = false;
  rep->add_option("-c,--config", config, "INI configuration file")->capture_default_str();
  rep->add_option("--set", overrides, "Override a setting, section.key=value");
  rep->add_option("-o,--output", output, "Output directory (instead of the configured one)");
  rep->add_flag("--json", as_json, "Print the JSON report");

  app.add_subcommand("version", "Print the version");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*run) return run_command(phase, config, overrides, force);
    if (*gen) {
      blink::harness::write_fixture(out_dir, seed, fx);
      fmt::print("fixture written to {}\n", out_dir.string());
      return 0;
    }
    if (*rep) return report_command(config, overrides, output, as_json);
    fmt::print("blink {}\n", blink::kVersion);
    return 0;
  } catch (const blink::Error& e) {
    fmt::print(stderr, "error [{}]: {}\n", blink::to_string(e.code()), e.what());
    return blink::exit_code(e.code());
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 1;
  }
}
