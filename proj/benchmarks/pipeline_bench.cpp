// Throughput of the hot paths on synthetic fixtures.

#include <sstream>
#include <string>

#include <benchmark/benchmark.h>

#include "blink/activity.hpp"
#include "blink/harness.hpp"
#include "blink/model.hpp"
#include "blink/monitor.hpp"
#include "blink/power_trace.hpp"
#include "blink/vcd.hpp"

namespace {

using namespace blink;

Femtoseconds ns(std::int64_t n) { return Femtoseconds{n * 1'000'000}; }

struct Fixture {
  harness::SyntheticDesign design;
  harness::VcdFixture vcd;
  SignalTable table;
  TriggerWindow window;
  std::vector<SignalEntry> candidates;
  ActivityMatrix activity;
};

Fixture make_fixture(std::size_t n_signals, std::size_t n_windows) {
  Fixture f;
  f.design = harness::gen_design(99, {.n_signals = n_signals, .support_size = 5});
  f.vcd = harness::render_vcd(f.design, n_windows);
  {
    std::istringstream in(f.vcd.text);
    VcdReader r(in);
    f.table = r.parse_header();
    f.window = detect_trigger_window(r, f.table, "top.trg", ns(f.design.params.settle_delay_ns));
  }
  CandidateFilter filter;
  assign_port_roles(f.table, filter);
  f.candidates = resolve_candidates(f.table, filter);
  std::istringstream in(f.vcd.text);
  VcdReader r(in);
  r.parse_header();
  f.activity = window_activity(r, f.table, f.candidates, f.window, ns(f.design.params.resolution_ns));
  return f;
}

const Fixture& fixture(std::size_t n_signals) {
  static const Fixture small = make_fixture(40, 500);
  static const Fixture large = make_fixture(160, 500);
  return n_signals <= 40 ? small : large;
}

void BM_VcdParse(benchmark::State& state) {
  const auto& f = fixture(static_cast<std::size_t>(state.range(0)));
  std::size_t events = 0;
  for (auto _ : state) {
    std::istringstream in(f.vcd.text);
    VcdReader r(in);
    r.parse_header();
    ValueEvent e;
    while (r.next(e)) ++events;
  }
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * f.vcd.text.size()));
  state.counters["events"] = benchmark::Counter(static_cast<double>(events), benchmark::Counter::kIsRate);
}
BENCHMARK(BM_VcdParse)->Arg(40)->Arg(160)->Unit(benchmark::kMillisecond);

void BM_WindowActivity(benchmark::State& state) {
  const auto& f = fixture(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    std::istringstream in(f.vcd.text);
    VcdReader r(in);
    r.parse_header();
    benchmark::DoNotOptimize(
        window_activity(r, f.table, f.candidates, f.window, ns(f.design.params.resolution_ns)));
  }
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * f.vcd.text.size()));
}
BENCHMARK(BM_WindowActivity)->Arg(40)->Arg(160)->Unit(benchmark::kMillisecond);

void BM_Identify(benchmark::State& state) {
  const auto& f = fixture(static_cast<std::size_t>(state.range(0)));
  const auto tr = harness::render_power_trace(f.design, f.activity, {.noise_sigma = 0.01, .seed = 1});
  const auto power = align_and_resample(compute_power(tr.capture, 0.1, 1.0),
                                        static_cast<double>(f.design.params.settle_delay_ns) * 1e-9,
                                        static_cast<double>(f.design.params.resolution_ns) * 1e-9,
                                        f.activity.n_windows);
  const auto d = assemble_dataset(f.activity, power);
  const auto split = split_dataset(d, 0.8, 1);
  const bool exchange = state.range(1) != 0;
  for (auto _ : state) benchmark::DoNotOptimize(identify_model(split.train, {.budget = 8, .exchange = exchange}));
}
BENCHMARK(BM_Identify)->Args({40, 0})->Args({40, 1})->Args({160, 0})->Args({160, 1})->Unit(benchmark::kMillisecond);

void BM_SimulateMonitor(benchmark::State& state) {
  const auto& f = fixture(40);
  const auto q = quantize_weights(f.design.truth);
  const auto window = static_cast<std::uint64_t>(f.design.cycles_per_window());
  const auto spec = make_monitor_spec(q, f.table, window);
  std::istringstream in(f.vcd.text);
  VcdReader r(in);
  r.parse_header();
  const auto events = collect_cycle_events(r, f.table, spec, f.window.analysis_start(), f.design.params.clock_period_ns);
  const auto n_cycles = static_cast<std::int64_t>(window * f.activity.n_windows);
  for (auto _ : state) benchmark::DoNotOptimize(simulate_monitor(spec, events, n_cycles));
  state.SetItemsProcessed(state.iterations() * n_cycles);
}
BENCHMARK(BM_SimulateMonitor)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
