// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any FAIL.

#include <unistd.h>

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <regex>
#include <sstream>
#include <string>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "blink/activity.hpp"
#include "blink/config.hpp"
#include "blink/digest.hpp"
#include "blink/harness.hpp"
#include "blink/model.hpp"
#include "blink/monitor.hpp"
#include "blink/pipeline.hpp"
#include "blink/power_trace.hpp"
#include "blink/rng.hpp"
#include "blink/vcd.hpp"
#include "golden_specs.hpp"
#include "oracles.hpp"
#include "reference_vcd.hpp"

namespace {

using namespace blink;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

Femtoseconds ns(std::int64_t n) { return Femtoseconds{n * 1'000'000}; }

struct Verdict {
  bool pass = false;
  std::string detail;
};

// Activity for a rendered fixture, computed by the library the way the
// pipeline does it.
struct Extracted {
  SignalTable table;
  TriggerWindow window;
  ActivityMatrix activity;
};

Extracted extract(const harness::SyntheticDesign& design, const std::string& vcd) {
  Extracted x;
  {
    std::istringstream in(vcd);
    VcdReader r(in);
    x.table = r.parse_header();
    x.window = detect_trigger_window(r, x.table, "top.trg", ns(design.params.settle_delay_ns));
  }
  CandidateFilter filter;
  assign_port_roles(x.table, filter);
  const auto candidates = resolve_candidates(x.table, filter);
  std::istringstream in(vcd);
  VcdReader r(in);
  r.parse_header();
  x.activity = window_activity(r, x.table, candidates, x.window, ns(design.params.resolution_ns));
  return x;
}

WindowedPower ingest(const harness::SyntheticDesign& design, const harness::TraceFixture& tr, std::size_t windows) {
  const auto p = compute_power(tr.capture, 0.1, 1.0);
  return align_and_resample(p, static_cast<double>(design.params.settle_delay_ns) * 1e-9,
                            static_cast<double>(design.params.resolution_ns) * 1e-9, windows);
}

Verdict activity_oracle() {
  const auto t0 = Clock::now();
  double oracle_s = 0.0;
  int exact = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto design = harness::gen_design(1000 + seed, {.n_signals = 50});
    const auto fx = harness::render_vcd(design, 1000);
    const auto x = extract(design, fx.text);

    const auto to = Clock::now();
    const auto ref = testing::reference_parse(fx.text);
    const auto trig = testing::reference_trigger(ref, "top.trg");
    const auto brute = testing::brute_force_activity(ref, design.candidates(), trig.rise + design.params.settle_delay_ns,
                                                     trig.fall, design.params.resolution_ns, x.activity.window_len);
    oracle_s += since(to);
    exact += x.activity.n_windows == 1000 && x.activity == fx.truth && x.activity == brute;
  }
  const double total = since(t0) - oracle_s;
  return {exact == 20 && total < 30.0,
          fmt::format("{}/20 seeds exact against both oracles; library time {:.2f} s (limit 30 s)", exact, total)};
}

Verdict noiseless_recovery() {
  double identify_s = 0.0;
  const auto t0 = Clock::now();
  int recovered = 0;
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto design = harness::gen_design(2000 + seed, {.n_signals = 40, .support_size = 5});
    const auto fx = harness::render_vcd(design, 500);
    const auto tr = harness::render_power_trace(design, fx.truth, {.seed = seed});
    const auto x = extract(design, fx.text);
    const auto d = assemble_dataset(x.activity, ingest(design, tr, x.activity.n_windows));
    const auto split = split_dataset(d, 0.8, seed);
    const auto ti = Clock::now();
    const auto id = identify_model(split.train, {.budget = 5});
    identify_s += since(ti);

    bool ok = id.model.terms.size() == 5;
    for (const auto& t : design.truth.terms) {
      const auto it = std::find_if(id.model.terms.begin(), id.model.terms.end(),
                                   [&](const PowerTerm& m) { return m.feature == t.feature; });
      if (it == id.model.terms.end()) {
        ok = false;
        continue;
      }
      const double rel = std::abs(it->weight - t.weight) / std::abs(t.weight);
      worst = std::max(worst, rel);
      ok &= rel <= 1e-6;
    }
    recovered += ok;
  }
  const double total = since(t0);
  return {recovered == 20 && total < 10.0,
          fmt::format("{}/20 exact supports, worst weight error {:.2e} relative; {:.2f} s end to end, {:.3f} s in "
                      "identification (limit 10 s)",
                      recovered, worst, total, identify_s)};
}

Verdict noisy_accuracy() {
  int within = 0;
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto design = harness::gen_design(3000 + seed, {.n_signals = 40, .support_size = 5});
    const auto fx = harness::render_vcd(design, 500);
    const auto tr = harness::render_power_trace(design, fx.truth, {.window_noise_sigma = 0.02, .seed = seed});
    const auto x = extract(design, fx.text);
    const auto d = assemble_dataset(x.activity, ingest(design, tr, x.activity.n_windows));
    const auto split = split_dataset(d, 0.8, seed);
    const auto id = identify_model(split.train, {.budget = 8});
    const auto m = evaluate(id.model, split.test, Normalizer::kPeak);
    worst = std::max(worst, m.nrmse);
    within += m.nrmse <= 5.0;
  }
  return {within >= 18,
          fmt::format("{}/20 seeds with held-out NRMSE <= 5% (need 18); worst {:.2f}%", within, worst)};
}

Verdict greedy_vs_exhaustive() {
  const auto t0 = Clock::now();
  int close = 0, never_worse = 0, matches_oracle = 0;
  Rng rng(4242);
  for (int inst = 0; inst < 100; ++inst) {
    // Twelve features on twelve signals, pairwise correlated through a shared driver.
    const std::size_t rows = 120;
    Dataset d;
    d.x.resize(rows, 12);
    d.y.resize(rows);
    for (std::size_t f = 0; f < 12; ++f)
      d.features.push_back({fmt::format("top.s{:02}", f), f % 2 ? CounterType::kSingleToggle : CounterType::kHammingWeight});
    for (std::size_t r = 0; r < rows; ++r) {
      double shared = static_cast<double>(rng.below(40));
      for (Eigen::Index f = 0; f < 12; ++f)
        d.x(static_cast<Eigen::Index>(r), f) = std::round(shared * rng.uniform(0.0, 1.0)) + static_cast<double>(rng.below(20));
    }
    Eigen::VectorXd w = Eigen::VectorXd::Zero(12);
    for (int k = 0; k < 4; ++k) w(static_cast<Eigen::Index>(rng.below(12))) += rng.uniform(-0.05, 0.1);
    for (Eigen::Index r = 0; r < static_cast<Eigen::Index>(rows); ++r) d.y(r) = 0.2 + d.x.row(r).dot(w) + 0.05 * rng.normal();

    const auto gr = identify_model(d, {.budget = 3, .min_relative_improvement = 0.0});
    const auto ex = identify_model(d, {.budget = 3, .mode = SelectionMode::kExhaustive, .min_relative_improvement = 0.0});
    const auto oracle = testing::brute_force_best_subset(d, 3);
    close += gr.train_rmse <= 1.10 * ex.train_rmse;
    never_worse += ex.train_rmse <= gr.train_rmse * (1 + 1e-12);
    matches_oracle += std::abs(ex.train_rmse - oracle.rmse) <= 1e-9 * (1 + oracle.rmse);
  }
  const double total = since(t0);
  return {close >= 95 && never_worse == 100 && matches_oracle == 100 && total < 60.0,
          fmt::format("greedy within 10% in {}/100 (need 95); exhaustive never worse {}/100, equals brute force "
                      "{}/100; {:.2f} s (limit 60 s)",
                      close, never_worse, matches_oracle, total)};
}

Verdict alignment() {
  Rng rng(55);
  int edges = 0, conserved = 0;
  double worst_energy = 0.0;
  for (std::uint64_t i = 0; i < 50; ++i) {
    const auto design = harness::gen_design(5000 + i, {.n_signals = 12});
    const auto fx = harness::render_vcd(design, 40);
    const double rate = std::array{10e6, 20e6, 25e6, 50e6}[rng.below(4)];
    const auto tr = harness::render_power_trace(
        design, fx.truth, {.noise_sigma = rng.uniform(0.0, 0.05), .scope_rate = rate, .seed = i});
    const auto p = compute_power(tr.capture, 0.1, 1.0);
    const auto dist = p.t0_trigger > tr.trigger_sample ? p.t0_trigger - tr.trigger_sample : tr.trigger_sample - p.t0_trigger;
    edges += dist <= 1;

    const double settle = static_cast<double>(design.params.settle_delay_ns) * 1e-9;
    const double res = static_cast<double>(design.params.resolution_ns) * 1e-9;
    const auto w = align_and_resample(p, settle, res, 40);
    const auto a = window_boundary(p, settle, res, 0), b = window_boundary(p, settle, res, 40);
    double integral = 0.0;
    for (std::size_t s = a; s < b; ++s) integral += p.samples[s] * p.sample_period;
    double windows = 0.0;
    for (std::size_t k = 0; k < 40; ++k) {
      const double len = static_cast<double>(window_boundary(p, settle, res, k + 1) - window_boundary(p, settle, res, k)) *
                         p.sample_period;
      windows += w.values[k] * len;
    }
    const double rel = std::abs(windows - integral) / integral;
    worst_energy = std::max(worst_energy, rel);
    conserved += rel <= 1e-9;
  }
  return {edges == 50 && conserved == 50,
          fmt::format("{}/50 trigger edges within one sample; energy conserved in {}/50, worst {:.2e} relative", edges,
                      conserved, worst_energy)};
}

Verdict monitor_oracle() {
  int exact = 0, bounded = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto design =
        harness::gen_design(6000 + seed, {.n_signals = 30, .support_size = 5, .mixed_sign_weights = seed % 2 == 1});
    const auto fx = harness::render_vcd(design, 200);
    const auto x = extract(design, fx.text);
    const auto q = quantize_weights(design.truth);
    const auto window = static_cast<std::uint64_t>(design.cycles_per_window());
    const auto spec = make_monitor_spec(q, x.table, window);

    std::istringstream in(fx.text);
    VcdReader r(in);
    r.parse_header();
    const auto events = collect_cycle_events(r, x.table, spec, x.window.analysis_start(), design.params.clock_period_ns);
    const auto run = simulate_monitor(spec, events, static_cast<std::int64_t>(window * x.activity.n_windows));
    const auto expected = quantized_predict(spec, x.activity);
    exact += run.estimates == expected && !run.counter_wrapped && !run.saturated;

    const auto predicted = design.truth.predict(activity_dataset(x.activity));
    std::uint64_t max_count = 1;
    for (const auto& t : design.truth.terms)
      for (auto c : x.activity.column(*x.activity.find(t.feature))) max_count = std::max<std::uint64_t>(max_count, c);
    const double bound =
        static_cast<double>(spec.taps.size() + 1) * std::ldexp(1.0, -(spec.frac_bits + 1)) * static_cast<double>(max_count);
    bool ok = true;
    for (std::size_t w = 0; w < run.estimates.size(); ++w)
      ok &= std::abs(predicted[static_cast<Eigen::Index>(w)] - spec.scale_back() * static_cast<double>(run.estimates[w])) <=
            bound;
    bounded += ok;
  }
  int golden = 0;
  const auto texts = testing::golden_texts();
  for (const auto& [name, text] : texts) {
    std::ifstream f(fs::path(BLINK_GOLDEN_DIR) / name, std::ios::binary);
    std::stringstream buf;
    buf << f.rdbuf();
    golden += f && buf.str() == text;
  }
  return {exact == 20 && bounded == 20 && golden == static_cast<int>(texts.size()),
          fmt::format("{}/20 seeds bit-exact, {}/20 within the quantization bound; {}/{} golden RTL files identical",
                      exact, bounded, golden, texts.size())};
}

std::map<std::string, std::string> artifacts(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (!e.is_regular_file() || e.path().filename().string().front() == '.') continue;
    std::ifstream in(e.path(), std::ios::binary);
    std::stringstream buf;
    buf << in.rdbuf();
    out[e.path().filename().string()] = buf.str();
  }
  return out;
}

// report.json minus wall-clock fields and the output location. The digest
// of report.txt is checked against the file and then dropped, since that
// table carries phase durations.
nlohmann::json without_timestamps(nlohmann::json j, const std::string& table) {
  j.erase("last_invocation");
  j["config"]["paths"].erase("output");
  for (auto& [name, phase] : j["phases"].items()) {
    phase.erase("completed_utc");
    phase.erase("duration_s");
  }
  auto& list = j["artifacts"];
  for (auto it = list.begin(); it != list.end(); ++it) {
    if ((*it)["name"] != "report.txt") continue;
    if ((*it)["sha256"] != sha256_hex(table)) return nullptr;
    list.erase(it);
    break;
  }
  return j;
}

// report.txt with the seconds column blanked.
std::string without_durations(const std::string& table) {
  static const std::regex seconds(R"(^(\S+\s+(?:done|stale|failed)\s+)[0-9.]+$)");
  std::istringstream in(table);
  std::string out, line;
  while (std::getline(in, line)) out += std::regex_replace(line, seconds, "$1-") + "\n";
  return out;
}

struct Workspace {
  fs::path root;
  Workspace() : root(fs::temp_directory_path() / fmt::format("blink_acceptance_{}", ::getpid())) {
    fs::remove_all(root);
    harness::FixtureParams p;
    p.design.n_signals = 40;
    p.trace.noise_sigma = 0.01;
    harness::write_fixture(root / "fixture", 77, p);
  }
  ~Workspace() { fs::remove_all(root); }
};

Verdict idempotence(const Workspace& ws) {
  const auto all = *parse_phases("all");
  const fs::path ini = ws.root / "fixture" / "blink.ini";
  const auto cfg_a = load_config(ini, {"paths.output=" + (ws.root / "a").string()});
  const auto cfg_b = load_config(ini, {"paths.output=" + (ws.root / "b").string()});
  const auto first = run_pipeline(all, cfg_a);
  const auto before = artifacts(cfg_a.output_dir);
  const auto second = run_pipeline(all, cfg_a);
  const auto after = artifacts(cfg_a.output_dir);
  run_pipeline(all, cfg_b);
  const auto other = artifacts(cfg_b.output_dir);

  const bool first_ran = std::all_of(first.phases.begin(), first.phases.end(), [](auto& o) { return o.ran; });
  const bool zero_work = std::none_of(second.phases.begin(), second.phases.end(), [](auto& o) { return o.ran; });
  auto same_files = [](const auto& x, const auto& y) {
    if (x.size() != y.size()) return false;
    for (const auto& [name, text] : x) {
      if (!y.contains(name)) return false;
      if (name == "report.txt") {
        if (without_durations(text) != without_durations(y.at(name))) return false;
      } else if (name == "report.json") {
        const auto a = without_timestamps(nlohmann::json::parse(text), x.at("report.txt"));
        const auto b = without_timestamps(nlohmann::json::parse(y.at(name)), y.at("report.txt"));
        if (a.is_null() || a != b) return false;
      } else if (text != y.at(name)) {
        return false;
      }
    }
    return true;
  };
  const bool rerun_same = same_files(before, after);
  const bool fresh_same = same_files(before, other);
  return {first_ran && zero_work && rerun_same && fresh_same,
          fmt::format("second run {} phase work; artifacts identical on rerun: {}, in a fresh directory: {} ({} files)",
                      zero_work ? "did no" : "DID", rerun_same ? "yes" : "no", fresh_same ? "yes" : "no",
                      before.size())};
}

Verdict reference_statement(const Workspace& ws) {
  const auto cfg = load_config(ws.root / "fixture" / "blink.ini", {"paths.output=" + (ws.root / "a").string()});
  const auto report = load_report(cfg.output_dir);
  if (!report) return {false, "no report"};
  const auto& ref = (*report)["reference_figures"];
  const auto& a10 = ref["design_a10"];
  const bool figures = ref["reproduced"] == false && a10["hw_counters"] == 9 && a10["st_counters"] == 1 &&
                       a10["lut_overhead_pct"] == 1.9 && a10["ff_overhead_pct"] == 1.4 &&
                       a10["power_overhead_pct"] == 0.1 && a10["nrmse_pct"] == 3.9 &&
                       ref["time_to_solution_speedup"] == 18.12;
  const bool estimates = (*report)["overhead"].contains("lut") && (*report)["overhead"].contains("ff") &&
                         (*report)["overhead"]["basis"].get<std::string>().find("approximation") != std::string::npos;
  std::ifstream in(cfg.output_dir / "report.txt");
  std::stringstream buf;
  buf << in.rdbuf();
  const bool table = buf.str().find("reference (not reproduced)") != std::string::npos;
  return {figures && estimates && table,
          fmt::format("reference figures flagged not reproduced: {}; analytic estimates labelled: {}; table line: {}",
                      figures ? "yes" : "no", estimates ? "yes" : "no", table ? "yes" : "no")};
}

}  // namespace

int main() {
  int failed = 0;
  auto report = [&](int n, const char* name, const std::function<Verdict()>& fn) {
    const auto t0 = Clock::now();
    Verdict v;
    try {
      v = fn();
    } catch (const std::exception& e) {
      v = {false, fmt::format("threw: {}", e.what())};
    }
    failed += !v.pass;
    fmt::print("{} {} {}: {} [{:.1f} s]\n", v.pass ? "PASS" : "FAIL", n, name, v.detail, since(t0));
    std::fflush(stdout);
  };
  report(1, "activity-oracle", activity_oracle);
  report(2, "noiseless-recovery", noiseless_recovery);
  report(3, "noisy-accuracy", noisy_accuracy);
  report(4, "greedy-vs-exhaustive", greedy_vs_exhaustive);
  report(5, "alignment", alignment);
  report(6, "monitor-oracle", monitor_oracle);
  std::optional<Workspace> ws;
  try {
    ws.emplace();
  } catch (const std::exception& e) {
    fmt::print("fixture setup failed: {}\n", e.what());
  }
  report(7, "pipeline-idempotence", [&] { return ws ? idempotence(*ws) : Verdict{false, "no fixture"}; });
  report(8, "reference-statement", [&] { return ws ? reference_statement(*ws) : Verdict{false, "no fixture"}; });
  return failed == 0 ? 0 : 1;
}
