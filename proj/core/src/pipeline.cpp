#include "blink/pipeline.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include <fmt/chrono.h>
#include <fmt/format.h>

#include "blink/activity.hpp"
#include "blink/digest.hpp"
#include "blink/model.hpp"
#include "blink/monitor.hpp"
#include "blink/power_trace.hpp"
#include "blink/report.hpp"
#include "blink/vcd.hpp"
#include "blink/version.hpp"

namespace blink {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kSignals = "signals.json";
constexpr const char* kActivity = "activity.blka";
constexpr const char* kActivityText = "activity.tsv";
constexpr const char* kPower = "power.blkp";
constexpr const char* kModel = "model.json";
constexpr const char* kMonitorRtl = "blink_monitor.v";
constexpr const char* kWrapperRtl = "blink_wrapper.v";
constexpr const char* kMonitor = "monitor.json";
constexpr const char* kReport = "report.json";
constexpr const char* kReportText = "report.txt";
constexpr const char* kLock = ".blink.lock";

constexpr Phase kAllPhases[] = {Phase::kExtractActivity, Phase::kIngestPower, Phase::kIdentify, Phase::kEmitMonitor};

std::string utc_now() {
  return fmt::format("{:%Y-%m-%dT%H:%M:%SZ}", fmt::gmtime(std::time(nullptr)));
}

double seconds(Femtoseconds d) { return static_cast<double>(d.count()) * 1e-15; }

void write_atomic(const fs::path& path, std::string_view content) {
  fs::path tmp = path;
  tmp += fmt::format(".tmp{}", ::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::kIo, fmt::format("cannot write '{}'", tmp.string()));
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw Error(ErrorCode::kIo, fmt::format("write to '{}' failed", tmp.string()));
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw Error(ErrorCode::kIo, fmt::format("cannot replace '{}': {}", path.string(), ec.message()));
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kMissingInput, fmt::format("cannot open '{}'", path.string()));
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::ifstream open_input(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kMissingInput, fmt::format("input '{}' not found", path.string()));
  return in;
}

std::string digest_of(const fs::path& path, std::string_view hint) {
  auto d = sha256_file(path);
  if (!d) {
    if (hint.empty()) throw Error(ErrorCode::kMissingInput, fmt::format("input '{}' not found", path.string()));
    throw Error(ErrorCode::kMissingInput, fmt::format("'{}' not found; {}", path.string(), hint));
  }
  return *d;
}

/// Exclusive flock on the output directory for the lifetime of the object.
class DirectoryLock {
 public:
  explicit DirectoryLock(const fs::path& dir) {
    const auto path = dir / kLock;
    fd_ = ::open(path.c_str(), O_CREAT | O_RDWR | O_CLOEXEC, 0644);
    if (fd_ < 0) throw Error(ErrorCode::kIo, fmt::format("cannot open lock file '{}'", path.string()));
    if (::flock(fd_, LOCK_EX | LOCK_NB) != 0) {
      ::close(fd_);
      throw Error(ErrorCode::kConfig, fmt::format("output directory '{}' is locked by another run", dir.string()));
    }
  }
  ~DirectoryLock() {
    ::flock(fd_, LOCK_UN);
    ::close(fd_);
  }
  DirectoryLock(const DirectoryLock&) = delete;
  DirectoryLock& operator=(const DirectoryLock&) = delete;

 private:
  int fd_ = -1;
};

struct Artifact {
  std::string name;
  std::string content;
};

struct PhaseWork {
  std::vector<Artifact> artifacts;
  json summary;
};

class Runner {
 public:
  Runner(const PipelineConfig& cfg, json report) : cfg_(cfg), report_(std::move(report)) {}

  PhaseOutcome run(Phase phase, bool force);
  json& report() { return report_; }
  void refresh_derived();

 private:
  fs::path out(const char* name) const { return cfg_.output_dir / name; }
  std::string fingerprint(Phase phase, const json& inputs) const;
  json inputs_of(Phase phase) const;
  bool up_to_date(const json& entry, const std::string& fp) const;
  PhaseWork work(Phase phase);
  PhaseWork extract_activity();
  PhaseWork ingest_power();
  PhaseWork identify();
  PhaseWork emit_monitor();
  DutInterface dut_interface(const SignalTable& table) const;

  const PipelineConfig& cfg_;
  json report_;
};

json Runner::inputs_of(Phase phase) const {
  const json c = cfg_.to_json();
  json in;
  switch (phase) {
    case Phase::kExtractActivity:
      in["vcd"] = digest_of(cfg_.vcd, "");
      in["config"] = c["activity"];
      break;
    case Phase::kIngestPower: {
      if (cfg_.scopes.empty()) throw Error(ErrorCode::kConfig, "paths.scope is not set");
      json scopes = json::array();
      for (const auto& s : cfg_.scopes) scopes.push_back(digest_of(s, ""));
      in["scope"] = scopes;
      in[kActivity] = digest_of(out(kActivity), "run extract-activity first");
      in["config"] = {{"power", c["power"]},
                      {"resolution", c["activity"]["resolution"]},
                      {"settle_delay", c["activity"]["settle_delay"]}};
      break;
    }
    case Phase::kIdentify:
      in[kActivity] = digest_of(out(kActivity), "run extract-activity first");
      in[kPower] = digest_of(out(kPower), "run ingest-power first");
      in["config"] = c["model"];
      break;
    case Phase::kEmitMonitor:
      in["vcd"] = digest_of(cfg_.vcd, "");
      in[kSignals] = digest_of(out(kSignals), "run extract-activity first");
      in[kActivity] = digest_of(out(kActivity), "run extract-activity first");
      in[kModel] = digest_of(out(kModel), "run identify first");
      in["config"] = {{"monitor", c["monitor"]}, {"dut", c["dut"]}, {"resolution", c["activity"]["resolution"]}};
      break;
  }
  return in;
}

std::string Runner::fingerprint(Phase phase, const json& inputs) const {
  const json doc = {{"phase", to_string(phase)}, {"tool", kVersion}, {"inputs", inputs}};
  return sha256_hex(doc.dump());
}

bool Runner::up_to_date(const json& entry, const std::string& fp) const {
  if (!entry.is_object() || entry.value("status", "") != "done" || entry.value("fingerprint", "") != fp) return false;
  for (const auto& a : entry.value("artifacts", json::array())) {
    const auto d = sha256_file(cfg_.output_dir / a.at("name").get<std::string>());
    if (!d || *d != a.at("sha256").get<std::string>()) return false;
  }
  return true;
}

PhaseOutcome Runner::run(Phase phase, bool force) {
  const std::string name(to_string(phase));
  PhaseOutcome outcome{phase, false, 0.0};
  json& entry = report_["phases"][name];
  try {
    const std::string fp = fingerprint(phase, inputs_of(phase));
    if (!force && up_to_date(entry, fp)) return outcome;

    const auto start = std::chrono::steady_clock::now();
    PhaseWork w = work(phase);
    json artifacts = json::array();
    for (const auto& a : w.artifacts) {
      write_atomic(out(a.name.c_str()), a.content);
      artifacts.push_back({{"name", a.name}, {"sha256", sha256_hex(a.content)}});
    }
    outcome.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    outcome.ran = true;
    entry = {{"status", "done"},
             {"fingerprint", fp},
             {"duration_s", outcome.seconds},
             {"completed_utc", utc_now()},
             {"artifacts", artifacts},
             {"summary", w.summary}};
    // Everything downstream was built from the previous outputs.
    bool downstream = false;
    for (Phase p : kAllPhases) {
      if (downstream && report_["phases"].contains(std::string(to_string(p))))
        report_["phases"][std::string(to_string(p))]["status"] = "stale";
      if (p == phase) downstream = true;
    }
    return outcome;
  } catch (const Error& e) {
    entry = {{"status", "failed"}, {"error", {{"code", to_string(e.code())}, {"message", e.what()}}}};
    throw PhaseError(phase, e);
  } catch (const std::exception& e) {
    entry = {{"status", "failed"}, {"error", {{"code", "Internal"}, {"message", e.what()}}}};
    throw PhaseError(phase, Error(ErrorCode::kIo, e.what()));
  }
}

PhaseWork Runner::work(Phase phase) {
  switch (phase) {
    case Phase::kExtractActivity: return extract_activity();
    case Phase::kIngestPower: return ingest_power();
    case Phase::kIdentify: return identify();
    case Phase::kEmitMonitor: return emit_monitor();
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown phase");
}

PhaseWork Runner::extract_activity() {
  auto in = open_input(cfg_.vcd);
  VcdReader reader(in);
  SignalTable table = reader.parse_header();
  assign_port_roles(table, cfg_.filter);
  const auto candidates = resolve_candidates(table, cfg_.filter);
  const auto trigger = detect_trigger_window(reader, table, cfg_.trigger, cfg_.settle_delay);

  auto again = open_input(cfg_.vcd);
  VcdReader replay(again);
  replay.parse_header();
  const auto activity = window_activity(replay, table, candidates, trigger, cfg_.resolution,
                                        ActivityOptions{cfg_.merge_same_timestamp});

  json names = json::array();
  for (const auto& c : candidates) names.push_back(c.hier_name);
  const json trig = {{"signal", cfg_.trigger},
                     {"t_start", trigger.t_start},
                     {"t_end", trigger.t_end},
                     {"settle_delay", trigger.settle_delay},
                     {"analysis_start", trigger.analysis_start()}};
  const json signals = {{"schema", "blink.signals/1"},
                        {"table", table.to_json()},
                        {"candidates", names},
                        {"trigger_ticks", trig},
                        {"n_windows", activity.n_windows}};

  std::ostringstream bin, text;
  write_activity(bin, activity);
  write_activity_text(text, activity);
  std::uint64_t total = 0;
  for (auto c : activity.counts) total += c;
  return {{{kSignals, signals.dump(2) + "\n"}, {kActivity, bin.str()}, {kActivityText, text.str()}},
          {{"signals", table.size()},
           {"candidates", candidates.size()},
           {"features", activity.n_features()},
           {"windows", activity.n_windows},
           {"total_counts", total},
           {"timescale", table.timescale.to_string()},
           {"trigger_ticks", trig}}};
}

PhaseWork Runner::ingest_power() {
  auto act_in = open_input(out(kActivity));
  const auto activity = read_activity(act_in);

  ScopeCapture cap = load_scope_csv(cfg_.scopes.front());
  for (std::size_t i = 1; i < cfg_.scopes.size(); ++i) cap = stitch_captures(cap, load_scope_csv(cfg_.scopes[i]));
  const auto trace = compute_power(cap, cfg_.r_shunt, cfg_.v_supply);
  const auto windows =
      align_and_resample(trace, seconds(cfg_.settle_delay), seconds(cfg_.resolution), activity.n_windows);

  std::ostringstream bin;
  write_windowed_power(bin, windows);
  double sum = 0, peak = 0;
  for (double v : windows.values) {
    sum += v;
    peak = std::max(peak, v);
  }
  return {{{kPower, bin.str()}},
          {{"captures", cfg_.scopes.size()},
           {"samples", trace.samples.size()},
           {"sample_period_s", trace.sample_period},
           {"trigger_sample", trace.t0_trigger},
           {"clamped_samples", trace.clamped_samples},
           {"windows", windows.values.size()},
           {"mean_power_w", windows.values.empty() ? 0.0 : sum / static_cast<double>(windows.values.size())},
           {"peak_power_w", peak}}};
}

PhaseWork Runner::identify() {
  auto act_in = open_input(out(kActivity));
  const auto activity = read_activity(act_in);
  auto pw_in = open_input(out(kPower));
  const auto power = read_windowed_power(pw_in);

  const auto data = assemble_dataset(activity, power);
  const auto split = split_dataset(data, cfg_.split_ratio, cfg_.seed);
  const auto id = identify_model(split.train, cfg_.identify);

  ModelProvenance prov;
  prov.resolution_us = seconds(cfg_.resolution) * 1e6;
  prov.seed = cfg_.seed;
  prov.normalizer = cfg_.normalizer;
  prov.train_metrics = evaluate(id.model, split.train, cfg_.normalizer);
  prov.test_metrics = evaluate(id.model, split.test, cfg_.normalizer);
  const json model = model_to_json(id.model, prov);

  json steps = json::array();
  for (const auto& s : id.steps) steps.push_back({{"added", to_string(s.added)}, {"train_rmse_w", s.train_rmse}});
  json degenerate = json::array();
  for (const auto& f : id.degenerate) degenerate.push_back(to_string(f));
  json removed = json::array();
  for (const auto& f : id.removed_negative) removed.push_back(to_string(f));
  json exchanges = json::array();
  for (const auto& e : id.exchanges) exchanges.push_back({{"removed", to_string(e.removed)}, {"added", to_string(e.added)}});
  return {{{kModel, model.dump(2) + "\n"}},
          {{"mode", to_string(cfg_.identify.mode)},
           {"train_rows", split.train.rows()},
           {"test_rows", split.test.rows()},
           {"terms", id.model.terms.size()},
           {"baseline_rmse_w", id.baseline_rmse},
           {"train_rmse_w", id.train_rmse},
           {"least_squares_fits", id.fits},
           {"steps", steps},
           {"degenerate", degenerate},
           {"removed_negative", removed},
           {"exchanges", exchanges}}};
}

DutInterface Runner::dut_interface(const SignalTable& table) const {
  DutInterface dut;
  dut.module_name = cfg_.dut_module.empty() ? table.top_scope : cfg_.dut_module;
  dut.instance_scope = table.top_scope;
  dut.clock_port = cfg_.clock_port;
  dut.reset_port = cfg_.reset_port;
  dut.reset_active_low = cfg_.reset_active_low;
  for (const auto& e : table.entries()) dut.hierarchy.push_back(e.hier_name);
  if (!cfg_.dut_ports.empty()) {
    dut.ports = cfg_.dut_ports;
    return dut;
  }
  // Without a declared port list, every signal of the top scope is a port.
  const std::string prefix = table.top_scope + ".";
  for (const auto& e : table.entries()) {
    if (!e.hier_name.starts_with(prefix)) continue;
    const std::string leaf = e.hier_name.substr(prefix.size());
    if (leaf.find('.') != std::string::npos) continue;
    PortDecl p{leaf, PortDirection::kInput, e.width};
    if (leaf != cfg_.clock_port && leaf != cfg_.reset_port &&
        (e.port_role == PortRole::kOutput || e.hier_name == cfg_.trigger))
      p.direction = PortDirection::kOutput;
    dut.ports.push_back(p);
  }
  return dut;
}

PhaseWork Runner::emit_monitor() {
  const json signals = json::parse(read_text(out(kSignals)));
  SignalTable table = SignalTable::from_json(signals.at("table"));
  assign_port_roles(table, cfg_.filter);
  const PowerModel model = model_from_json(json::parse(read_text(out(kModel))));
  auto act_in = open_input(out(kActivity));
  const auto activity = read_activity(act_in);

  const double cycles = seconds(cfg_.resolution) * cfg_.clock_hz;
  const double whole = std::round(cycles);
  if (whole < 1 || std::abs(cycles - whole) > 1e-6 * whole)
    throw Error(ErrorCode::kConfig, fmt::format("resolution {} is {} clock cycles at {} Hz, not a whole number",
                                                format_duration(cfg_.resolution), cycles, cfg_.clock_hz));
  const auto window_cycles = static_cast<std::uint64_t>(whole);

  const auto q = quantize_weights(model, cfg_.weight_width, cfg_.max_frac_bits);
  const auto spec = make_monitor_spec(q, table, window_cycles, cfg_.output_width);
  const std::string rtl = emit_monitor_rtl(spec);
  const auto wrapper = emit_wrapper(spec, dut_interface(table));
  const auto overhead = estimate_overhead(spec);

  // Oracle: the monitor's behavioural model against the quantized model
  // applied to the extracted activity, and against the float model.
  const auto expected = quantized_predict(spec, activity);
  const auto predicted = model.predict(activity_dataset(activity));
  std::uint64_t max_count = 1;
  for (const auto& t : model.terms)
    if (const auto f = activity.find(t.feature))
      for (auto c : activity.column(*f)) max_count = std::max<std::uint64_t>(max_count, c);
  double max_dev = 0.0;
  for (std::size_t w = 0; w < activity.n_windows; ++w)
    max_dev = std::max(max_dev, std::abs(predicted[static_cast<Eigen::Index>(w)] -
                                         spec.scale_back() * static_cast<double>(expected[w])));
  const double bound = static_cast<double>(spec.taps.size() + 1) * std::ldexp(1.0, -(spec.frac_bits + 1)) *
                       static_cast<double>(max_count);

  json oracle = {{"windows", activity.n_windows},
                 {"max_float_deviation_w", max_dev},
                 {"quantization_bound_w", bound},
                 {"within_bound", max_dev <= bound}};
  const std::int64_t tick_fs = table.timescale.tick().count();
  const double period_fs = 1e15 / cfg_.clock_hz;
  const double period_ticks = period_fs / static_cast<double>(tick_fs);
  if (std::abs(period_ticks - std::round(period_ticks)) < 1e-9 && std::round(period_ticks) >= 1) {
    auto in = open_input(cfg_.vcd);
    VcdReader reader(in);
    reader.parse_header();
    const auto events = collect_cycle_events(reader, table, spec,
                                             signals.at("trigger_ticks").at("analysis_start").get<std::int64_t>(),
                                             static_cast<std::int64_t>(std::round(period_ticks)));
    const auto run = simulate_monitor(spec, events, static_cast<std::int64_t>(activity.n_windows * window_cycles));
    std::size_t mismatched = 0;
    for (std::size_t w = 0; w < activity.n_windows; ++w)
      if (w >= run.estimates.size() || run.estimates[w] != expected[w]) ++mismatched;
    oracle["simulated"] = true;
    oracle["mismatched_windows"] = mismatched;
    oracle["exact"] = mismatched == 0;
    oracle["counter_wrapped"] = run.counter_wrapped;
    oracle["saturated"] = run.saturated;
  } else {
    oracle["simulated"] = false;
    oracle["reason"] = "clock period is not a whole number of VCD ticks";
  }

  json connections = json::array();
  json references = json::array();
  for (const auto& c : wrapper.connections) {
    connections.push_back({{"signal", c.hier_name}, {"expression", c.expression}, {"hierarchical", c.hierarchical}});
    if (c.hierarchical) references.push_back(c.expression);
  }
  const json monitor = {{"schema", "blink.monitor/1"},
                        {"spec", monitor_spec_to_json(spec)},
                        {"scale_back_w_per_lsb", spec.scale_back()},
                        {"overhead", overhead_to_json(overhead)},
                        {"connections", connections},
                        {"oracle_check", oracle}};
  return {{{kMonitorRtl, rtl}, {kWrapperRtl, wrapper.text}, {kMonitor, monitor.dump(2) + "\n"}},
          {{"taps", spec.taps.size()},
           {"window_cycles", spec.window_cycles},
           {"frac_bits", spec.frac_bits},
           {"accumulator_width", spec.accumulator_width()},
           {"hierarchical_references", references},
           {"oracle_exact", oracle.value("exact", false)}}};
}

void Runner::refresh_derived() {
  auto done = [&](Phase p) {
    const auto& phases = report_["phases"];
    const std::string name(to_string(p));
    return phases.contains(name) && phases[name].value("status", "") == "done";
  };
  report_["taps"] = nullptr;
  report_["metrics"] = nullptr;
  report_["overhead"] = nullptr;
  report_["monitor"] = nullptr;
  if (done(Phase::kIdentify)) {
    if (const auto text = sha256_file(out(kModel))) {
      const json model = json::parse(read_text(out(kModel)));
      const auto m = model_from_json(model);
      json taps = json::array();
      for (const auto& t : m.terms)
        taps.push_back({{"signal", t.feature.signal}, {"counter_type", to_string(t.feature.counter_type)}});
      report_["taps"] = {{"hw", m.hw_terms()}, {"st", m.st_terms()}, {"signals", taps}};
      report_["metrics"] = model.at("metrics");
    }
  }
  if (done(Phase::kEmitMonitor)) {
    if (const auto text = sha256_file(out(kMonitor))) {
      const json monitor = json::parse(read_text(out(kMonitor)));
      report_["overhead"] = monitor.at("overhead");
      json refs = json::array();
      for (const auto& c : monitor.at("connections"))
        if (c.at("hierarchical").get<bool>()) refs.push_back({{"signal", c.at("signal")}, {"expression", c.at("expression")}});
      const auto& spec = monitor.at("spec");
      report_["monitor"] = {{"window_cycles", spec.at("window_cycles")},
                            {"frac_bits", spec.at("frac_bits")},
                            {"weight_width", spec.at("weight_width")},
                            {"output_width", spec.at("output_width")},
                            {"accumulator_width", spec.at("accumulator_width")},
                            {"scale_back_w_per_lsb", monitor.at("scale_back_w_per_lsb")},
                            {"hierarchical_references", refs},
                            {"oracle_check", monitor.at("oracle_check")}};
    }
  }
  json artifacts = json::array();
  for (Phase p : kAllPhases) {
    const std::string name(to_string(p));
    if (!report_["phases"].contains(name)) continue;
    for (const auto& a : report_["phases"][name].value("artifacts", json::array()))
      artifacts.push_back({{"name", a.at("name")}, {"sha256", a.at("sha256")}, {"phase", name}});
  }
  report_["artifacts"] = artifacts;
}

json fresh_report() {
  json phases = json::object();
  return {{"schema", kReportSchema}, {"phases", phases}};
}

void write_report(const PipelineConfig& cfg, json& report) {
  const std::string text = render_report_table(report);
  write_atomic(cfg.output_dir / kReportText, text);
  auto& artifacts = report["artifacts"];
  artifacts.push_back({{"name", kReportText}, {"sha256", sha256_hex(text)}, {"phase", "report"}});
  write_atomic(cfg.output_dir / kReport, report.dump(2) + "\n");
}

}  // namespace

std::string_view to_string(Phase phase) noexcept {
  switch (phase) {
    case Phase::kExtractActivity: return "extract-activity";
    case Phase::kIngestPower: return "ingest-power";
    case Phase::kIdentify: return "identify";
    case Phase::kEmitMonitor: return "emit-monitor";
  }
  return "unknown";
}

std::optional<std::vector<Phase>> parse_phases(std::string_view name) {
  if (name == "all") return std::vector<Phase>(std::begin(kAllPhases), std::end(kAllPhases));
  for (Phase p : kAllPhases)
    if (to_string(p) == name) return std::vector<Phase>{p};
  return std::nullopt;
}

PhaseError::PhaseError(Phase phase, const Error& cause)
    : Error(cause.code(), fmt::format("phase {}: {}", to_string(phase), cause.what())), phase_(phase) {}

int exit_code(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::kConfig:
    case ErrorCode::kParamOutOfRange: return 2;
    case ErrorCode::kMissingInput: return 3;
    case ErrorCode::kMalformedHeader:
    case ErrorCode::kMalformedBody:
    case ErrorCode::kEmptyCandidateSet:
    case ErrorCode::kNoTriggerEdge:
    case ErrorCode::kTriggerNotScalar:
    case ErrorCode::kResolutionTooCoarse:
    case ErrorCode::kNonUniformSampling:
    case ErrorCode::kMissingColumn:
    case ErrorCode::kSupplyBelowDrop:
    case ErrorCode::kNoTriggerCrossing:
    case ErrorCode::kTraceTooShort:
    case ErrorCode::kWindowCountMismatch:
    case ErrorCode::kResolutionMismatch:
    case ErrorCode::kFeatureMismatch:
    case ErrorCode::kWeightOverflow:
    case ErrorCode::kUnresolvableTap:
    case ErrorCode::kBadFormat: return 4;
    case ErrorCode::kTooFewRows:
    case ErrorCode::kDegenerateDesign: return 5;
    case ErrorCode::kInvalidArgument:
    case ErrorCode::kIo: return 1;
  }
  return 1;
}

std::optional<json> load_report(const fs::path& output_dir) {
  std::ifstream in(output_dir / kReport);
  if (!in) return std::nullopt;
  try {
    return json::parse(in);
  } catch (const json::exception&) {
    return std::nullopt;
  }
}

RunResult run_pipeline(std::span<const Phase> phases, const PipelineConfig& cfg, const RunOptions& options) {
  cfg.validate();
  std::error_code ec;
  fs::create_directories(cfg.output_dir, ec);
  if (ec) throw Error(ErrorCode::kIo, fmt::format("cannot create '{}': {}", cfg.output_dir.string(), ec.message()));
  DirectoryLock lock(cfg.output_dir);

  json report = load_report(cfg.output_dir).value_or(fresh_report());
  if (report.value("schema", "") != kReportSchema || !report.contains("phases")) report = fresh_report();
  report["tool"] = {{"name", "blink"}, {"version", kVersion}};
  report["id"] = cfg.id;
  report["config"] = cfg.to_json();
  report["reference_figures"] = reference_figures();
  // A missing input has a null digest.
  auto input = [](const fs::path& p) {
    const auto d = sha256_file(p);
    return json{{"path", p.string()}, {"sha256", d ? json(*d) : json()}};
  };
  json scopes = json::array();
  for (const auto& s : cfg.scopes) scopes.push_back(input(s));
  report["inputs"] = {{"vcd", input(cfg.vcd)}, {"scope", scopes}};

  json invocation = {{"started_utc", utc_now()},
                     {"force", options.force},
                     {"ran", json::array()},
                     {"up_to_date", json::array()}};
  Runner runner(cfg, std::move(report));
  RunResult result;
  auto finish = [&] {
    invocation["finished_utc"] = utc_now();
    runner.report()["last_invocation"] = invocation;
    runner.refresh_derived();
    write_report(cfg, runner.report());
  };
  try {
    for (Phase p : phases) {
      const auto outcome = runner.run(p, options.force);
      invocation[outcome.ran ? "ran" : "up_to_date"].push_back(to_string(p));
      result.phases.push_back(outcome);
      finish();
    }
  } catch (const PhaseError& e) {
    invocation["failed"] = {{"phase", to_string(e.phase())}, {"code", to_string(e.code())}, {"message", e.what()}};
    finish();
    throw;
  }
  if (phases.empty()) finish();
  result.report = runner.report();
  return result;
}

}  // namespace blink
