#include "blink/harness.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <iterator>
#include <numbers>
#include <sstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "blink/config.hpp"
#include "blink/error.hpp"
#include "blink/rng.hpp"

namespace blink::harness {

namespace {

constexpr std::uint64_t kVcdStream = 0x9e3779b97f4a7c15ULL;
constexpr std::uint64_t kTraceStream = 0xc2b2ae3d27d4eb4fULL;
constexpr double kTermPower = 0.02;  // watts a typical support term contributes
constexpr double kTriggerHigh = 3.3;
constexpr double kRingingHz = 1e6;

void require(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorCode::kParamOutOfRange, what);
}

std::uint64_t mask(unsigned width) { return width >= 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << width) - 1; }

std::string vcd_id(std::size_t index) {
  std::string id;
  do {
    id.push_back(static_cast<char>('!' + index % 94));
    index /= 94;
  } while (index > 0);
  return id;
}

double expected_flips(unsigned width, double single_bit) {
  if (width == 1) return 1.0;
  const double w = width;
  const double random_value = w * std::ldexp(1.0, static_cast<int>(width) - 1) / (std::ldexp(1.0, static_cast<int>(width)) - 1);
  return single_bit + (1.0 - single_bit) * random_value;
}

std::uint64_t next_value(Rng& rng, const SignalSpec& s, double single_bit, std::uint64_t current) {
  if (s.width == 1) return current ^ 1;
  if (rng.chance(single_bit)) return current ^ (std::uint64_t{1} << rng.below(s.width));
  std::uint64_t v = rng.bits() & mask(s.width);
  while (v == current) v = rng.bits() & mask(s.width);
  return v;
}

void put_value(std::string& out, unsigned width, std::uint64_t value, const std::string& id) {
  if (width == 1) fmt::format_to(std::back_inserter(out), "{}{}\n", value & 1, id);
  else fmt::format_to(std::back_inserter(out), "b{:b} {}\n", value, id);
}

}  // namespace

std::vector<std::string> SyntheticDesign::module_scopes() const {
  std::vector<std::string> scopes;
  for (std::size_t c = 0; c < params.clusters; ++c)
    for (std::size_t k = 0; k < params.cores_per_cluster; ++k) scopes.push_back(fmt::format("top.cluster{}.core{}", c, k));
  return scopes;
}

std::vector<std::string> SyntheticDesign::candidates() const {
  std::vector<std::string> out;
  for (const auto& s : signals)
    if (s.candidate) out.push_back(s.hier_name);
  return out;
}

SyntheticDesign gen_design(std::uint64_t seed, const DesignParams& params) {
  require(params.n_signals >= 1 && params.n_signals <= 4096,
          fmt::format("n_signals {} outside [1, 4096]", params.n_signals));
  require(params.max_width >= 1 && params.max_width <= 64, fmt::format("max_width {} outside [1, 64]", params.max_width));
  require(params.clusters >= 1 && params.clusters <= 64 && params.cores_per_cluster >= 1 && params.cores_per_cluster <= 64,
          "clusters and cores_per_cluster must be in [1, 64]");
  require(params.support_size <= params.n_signals, "support larger than the candidate set");
  require(params.glitch_probability >= 0 && params.glitch_probability <= 1, "glitch probability outside [0, 1]");
  require(params.clock_period_ns >= 2 && params.clock_period_ns % 2 == 0, "clock period must be an even number of ns");
  require(params.resolution_ns > 0 && params.resolution_ns % params.clock_period_ns == 0,
          "resolution must be a whole number of clock periods");
  require(params.settle_delay_ns >= 0 && params.settle_delay_ns % params.clock_period_ns == 0,
          "settle delay must be a whole number of clock periods");

  SyntheticDesign d;
  d.seed = seed;
  d.params = params;
  Rng rng(seed);

  static constexpr const char* kWords[] = {"data", "addr", "req", "ack", "sel", "valid", "op", "res", "cnt", "flag"};
  const auto scopes = d.module_scopes();
  const unsigned mw = params.max_width;
  std::vector<std::size_t> module_of;
  for (std::size_t i = 0; i < params.n_signals; ++i) {
    SignalSpec s;
    const std::size_t module = rng.below(scopes.size());
    const bool input = rng.chance(0.5);
    const double r = rng.uniform();
    unsigned width = 1;
    if (r >= 0.35 && mw > 1) {
      if (r < 0.7) width = static_cast<unsigned>(rng.between(2, std::min(8u, mw)));
      else if (r < 0.95 || mw <= 32) width = static_cast<unsigned>(rng.between(std::min(9u, mw), std::min(32u, mw)));
      else width = static_cast<unsigned>(rng.between(33, mw));
    }
    s.width = width;
    s.hier_name = fmt::format("{}.{}{}{}", scopes[module], input ? "i_" : "o_", kWords[rng.below(std::size(kWords))], i);
    d.signals.push_back(std::move(s));
    module_of.push_back(module);
  }
  for (std::size_t m = 0; m < scopes.size(); ++m) {
    d.signals.push_back({scopes[m] + ".state_q", 8, false});
    module_of.push_back(m);
  }

  // Phases: each module is enabled or idle. Inside an enabled module most
  // signals are busy at their own rate, and how many bits a change flips
  // shifts from phase to phase (counter-like versus data-like traffic).
  const std::size_t n_phases = params.profile == Profile::kIdle ? 1 : 128;
  for (std::size_t p = 0; p < n_phases; ++p) {
    Phase phase;
    phase.windows = static_cast<std::size_t>(rng.between(2, 12));
    std::vector<bool> enabled(scopes.size());
    for (std::size_t m = 0; m < scopes.size(); ++m) enabled[m] = rng.chance(0.5);
    for (std::size_t i = 0; i < d.signals.size(); ++i) {
      const bool busy = enabled[module_of[i]] && rng.chance(0.6);
      double rate = busy ? rng.uniform(0.03, 0.3) : rng.uniform(0.0, 0.01);
      if (params.profile == Profile::kIdle) rate = 0.0;
      phase.rates.push_back(rate);
      phase.single_bit.push_back(rng.chance(0.5) ? rng.uniform(0.9, 1.0) : rng.uniform(0.0, 0.1));
    }
    d.phases.push_back(std::move(phase));
  }

  // Keep the signal list sorted by name; permute the per-signal data along.
  std::vector<std::size_t> order(d.signals.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return d.signals[a].hier_name < d.signals[b].hier_name; });
  std::vector<SignalSpec> sorted;
  for (auto i : order) sorted.push_back(d.signals[i]);
  d.signals = std::move(sorted);
  for (auto& phase : d.phases) {
    std::vector<double> rates, single_bit;
    for (auto i : order) {
      rates.push_back(phase.rates[i]);
      single_bit.push_back(phase.single_bit[i]);
    }
    phase.rates = std::move(rates);
    phase.single_bit = std::move(single_bit);
  }

  // Ground truth over a random subset of the candidates.
  std::vector<std::size_t> pool;
  for (std::size_t i = 0; i < d.signals.size(); ++i)
    if (d.signals[i].candidate) pool.push_back(i);
  for (std::size_t i = 0; i < params.support_size; ++i) std::swap(pool[i], pool[i + rng.below(pool.size() - i)]);

  double total_windows = 0;
  for (const auto& phase : d.phases) total_windows += static_cast<double>(phase.windows);
  d.truth.intercept = rng.uniform(0.1, 0.2);
  d.truth.budget = params.support_size;
  double headroom = 0.0;
  for (std::size_t i = 0; i < params.support_size; ++i) {
    const auto& s = d.signals[pool[i]];
    const CounterType type =
        s.width == 1 || rng.chance(0.5) ? CounterType::kHammingWeight : CounterType::kSingleToggle;
    double mean_count = 0;
    for (const auto& phase : d.phases) {
      const double per_change =
          type == CounterType::kHammingWeight ? expected_flips(s.width, phase.single_bit[pool[i]]) : 1.0;
      mean_count += phase.rates[pool[i]] * per_change * static_cast<double>(phase.windows);
    }
    mean_count /= total_windows;
    const double expected = std::max(mean_count * static_cast<double>(d.cycles_per_window()), 1.0);
    double weight = rng.uniform(0.5, 1.5) * kTermPower / expected;
    if (params.mixed_sign_weights && rng.chance(0.5)) weight = -weight;
    headroom += std::abs(weight) * expected * 4.0;
    d.truth.terms.push_back({{s.hier_name, type}, weight});
  }
  if (params.mixed_sign_weights) d.truth.intercept += headroom;
  std::sort(d.truth.terms.begin(), d.truth.terms.end(),
            [](const PowerTerm& a, const PowerTerm& b) { return a.feature < b.feature; });
  return d;
}

VcdFixture render_vcd(const SyntheticDesign& design, std::size_t n_windows) {
  require(n_windows >= 10, "a fixture needs at least 10 windows");
  const auto& p = design.params;
  const std::int64_t period = p.clock_period_ns;
  const std::int64_t cpw = design.cycles_per_window();
  Rng rng(design.seed ^ kVcdStream);

  VcdFixture fx;
  const std::int64_t rise_cycle = rng.between(20, 200);
  fx.first_cycle = rise_cycle + p.settle_delay_ns / period;
  fx.trigger_rise_ns = rise_cycle * period;
  fx.trigger_fall_ns = fx.trigger_rise_ns + p.settle_delay_ns + static_cast<std::int64_t>(n_windows) * p.resolution_ns +
                       p.resolution_ns / 2;
  const std::int64_t n_cycles = fx.first_cycle + static_cast<std::int64_t>(n_windows + 1) * cpw;

  // Id codes: clk, rst_n, trg, then the design signals in name order.
  const std::size_t n = design.signals.size();
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < n; ++i) ids.push_back(vcd_id(i + 3));
  const std::string clk = vcd_id(0), rst = vcd_id(1), trg = vcd_id(2);

  std::string& out = fx.text;
  auto it = std::back_inserter(out);
  out.reserve(static_cast<std::size_t>(n_cycles) * (24 + n * 4));
  fmt::format_to(it, "$date\n  synthetic seed {}\n$end\n$version\n  blink synthetic harness\n$end\n", design.seed);
  fmt::format_to(it, "$timescale 1ns $end\n$scope module top $end\n");
  fmt::format_to(it, "$var wire 1 {} clk $end\n$var wire 1 {} rst_n $end\n$var wire 1 {} trg $end\n", clk, rst, trg);
  std::string open_cluster, open_core;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& s = design.signals[i];
    // top.<cluster>.<core>.<leaf>
    const auto a = s.hier_name.find('.');
    const auto b = s.hier_name.find('.', a + 1);
    const auto c = s.hier_name.find('.', b + 1);
    const std::string cluster = s.hier_name.substr(a + 1, b - a - 1);
    const std::string core = s.hier_name.substr(b + 1, c - b - 1);
    if (cluster != open_cluster) {
      if (!open_core.empty()) out += "$upscope $end\n";
      if (!open_cluster.empty()) out += "$upscope $end\n";
      fmt::format_to(it, "$scope module {} $end\n", cluster);
      open_cluster = cluster;
      open_core.clear();
    }
    if (core != open_core) {
      if (!open_core.empty()) out += "$upscope $end\n";
      fmt::format_to(it, "$scope module {} $end\n", core);
      open_core = core;
    }
    const char* kind = s.candidate ? "wire" : "reg";
    if (s.width == 1) fmt::format_to(it, "$var {} 1 {} {} $end\n", kind, ids[i], s.hier_name.substr(c + 1));
    else fmt::format_to(it, "$var {} {} {} {} [{}:0] $end\n", kind, s.width, ids[i], s.hier_name.substr(c + 1), s.width - 1);
  }
  if (!open_core.empty()) out += "$upscope $end\n";
  if (!open_cluster.empty()) out += "$upscope $end\n";
  out += "$upscope $end\n$enddefinitions $end\n";

  out += "#0\n$dumpvars\n";
  fmt::format_to(it, "0{}\n0{}\n0{}\n", clk, rst, trg);
  for (std::size_t i = 0; i < n; ++i) {
    if (design.signals[i].width == 1) fmt::format_to(it, "x{}\n", ids[i]);
    else fmt::format_to(it, "bx {}\n", ids[i]);
  }
  out += "$end\n";

  // Brute-force truth: candidate columns in name order, HW then ST.
  std::vector<std::size_t> column(n, SIZE_MAX);
  for (std::size_t i = 0; i < n; ++i) {
    if (!design.signals[i].candidate) continue;
    column[i] = fx.truth.features.size();
    fx.truth.features.push_back({design.signals[i].hier_name, CounterType::kHammingWeight});
    fx.truth.features.push_back({design.signals[i].hier_name, CounterType::kSingleToggle});
  }
  fx.truth.window_len = std::chrono::duration_cast<Femtoseconds>(std::chrono::nanoseconds(p.resolution_ns));
  fx.truth.n_windows = n_windows;
  fx.truth.counts.assign(fx.truth.features.size() * n_windows, 0);

  // Phase of each window, cycling through the schedule.
  std::vector<std::size_t> phase_of(n_windows + 1);
  {
    std::size_t phase = 0, left = design.phases[0].windows;
    for (std::size_t w = 0; w <= n_windows; ++w) {
      if (left == 0) {
        phase = (phase + 1) % design.phases.size();
        left = design.phases[phase].windows;
      }
      phase_of[w] = phase;
      --left;
    }
  }
  const std::size_t idle_phase = design.phases.size() - 1;

  std::vector<std::uint64_t> value(n, 0);
  const double glitch = p.glitch_probability;
  for (std::int64_t cycle = 1; cycle < n_cycles; ++cycle) {
    const std::int64_t t = cycle * period;
    fmt::format_to(it, "#{}\n1{}\n", t, clk);
    if (cycle == 2) fmt::format_to(it, "1{}\n", rst);
    if (cycle == rise_cycle) fmt::format_to(it, "1{}\n", trg);
    if (t == fx.trigger_fall_ns) fmt::format_to(it, "0{}\n", trg);
    if (cycle == 1) {
      for (std::size_t i = 0; i < n; ++i) {
        value[i] = rng.bits() & mask(design.signals[i].width);
        put_value(out, design.signals[i].width, value[i], ids[i]);
      }
    } else {
      const std::int64_t rel = cycle - fx.first_cycle;
      const std::int64_t window = rel >= 0 ? rel / cpw : -1;
      const bool counted = window >= 0 && window < static_cast<std::int64_t>(n_windows);
      const auto& phase = design.phases[window >= 0 ? phase_of[static_cast<std::size_t>(window)] : idle_phase];
      const auto& rates = phase.rates;
      for (std::size_t i = 0; i < n; ++i) {
        const double rate = rates[i];
        if (rate <= 0.0) continue;
        const double u = rng.uniform();
        if (u >= rate * (1.0 + glitch)) continue;
        const auto& s = design.signals[i];
        if (u >= rate) {
          // Zero-net churn: away and back within one timestamp.
          put_value(out, s.width, next_value(rng, s, phase.single_bit[i], value[i]), ids[i]);
          put_value(out, s.width, value[i], ids[i]);
          fx.value_changes += 2;
          continue;
        }
        const std::uint64_t v = next_value(rng, s, phase.single_bit[i], value[i]);
        if (rng.chance(glitch)) {
          put_value(out, s.width, next_value(rng, s, phase.single_bit[i], value[i]), ids[i]);
          ++fx.value_changes;
        }
        put_value(out, s.width, v, ids[i]);
        ++fx.value_changes;
        if (counted && column[i] != SIZE_MAX) {
          const auto w = static_cast<std::size_t>(window);
          fx.truth.counts[column[i] * n_windows + w] += static_cast<std::uint32_t>(std::popcount(v ^ value[i]));
          fx.truth.counts[(column[i] + 1) * n_windows + w] += 1;
        }
        value[i] = v;
      }
    }
    const std::int64_t half = t + period / 2;
    fmt::format_to(it, "#{}\n0{}\n", half, clk);
    if (half == fx.trigger_fall_ns) fmt::format_to(it, "0{}\n", trg);
  }
  return fx;
}

TraceFixture render_power_trace(const SyntheticDesign& design, const ActivityMatrix& acts, const TraceOptions& options) {
  const double window_s = static_cast<double>(design.params.resolution_ns) * 1e-9;
  const double settle_s = static_cast<double>(design.params.settle_delay_ns) * 1e-9;
  const double per_window = window_s * options.scope_rate;
  if (!(per_window >= 100.0) || std::abs(per_window - std::round(per_window)) > 1e-6)
    throw Error(ErrorCode::kInvalidArgument,
                fmt::format("scope rate gives {} samples per window, need a whole number >= 100", per_window));
  if (!(options.r_shunt > 0) || !(options.v_supply > 0) || options.noise_sigma < 0 || options.window_noise_sigma < 0)
    throw Error(ErrorCode::kInvalidArgument, "trace options out of range");

  // Truth per window from the same model the pipeline is meant to recover.
  const Dataset d = activity_dataset(acts);
  const Eigen::VectorXd truth = design.truth.predict(d);

  TraceFixture fx;
  fx.window_power.assign(truth.begin(), truth.end());
  const double peak = *std::max_element(fx.window_power.begin(), fx.window_power.end());

  Rng rng(design.seed ^ kTraceStream ^ options.seed);
  const double dt = 1.0 / options.scope_rate;
  fx.trigger_sample = static_cast<std::size_t>(rng.between(200, 1000));
  PowerTrace grid;
  grid.sample_period = dt;
  grid.t0_trigger = fx.trigger_sample;
  std::vector<std::size_t> bounds;
  for (std::size_t k = 0; k <= acts.n_windows; ++k) bounds.push_back(window_boundary(grid, settle_s, window_s, k));
  const std::size_t fall = bounds.back() + static_cast<std::size_t>(per_window / 2);
  const std::size_t total = bounds.back() + static_cast<std::size_t>(rng.between(200, 600)) + static_cast<std::size_t>(per_window);

  const double idle = design.truth.intercept;
  std::vector<double> power(total, idle);
  for (std::size_t i = fx.trigger_sample; i < bounds.front(); ++i) {
    const double t = static_cast<double>(i - fx.trigger_sample) * dt;
    power[i] = idle * (1.0 + 0.5 * std::exp(-t / (settle_s / 5.0)) * std::sin(2.0 * std::numbers::pi * kRingingHz * t));
  }
  for (std::size_t k = 0; k < acts.n_windows; ++k) {
    const double level = fx.window_power[k] + options.window_noise_sigma * peak * rng.normal();
    for (std::size_t i = bounds[k]; i < bounds[k + 1]; ++i) power[i] = level;
  }
  if (options.noise_sigma > 0)
    for (auto& v : power) v += options.noise_sigma * peak * rng.normal();

  auto& cap = fx.capture;
  cap.sample_period = dt;
  cap.capture_id = fmt::format("synthetic-{}", design.seed);
  cap.instrument = "blink harness";
  const double v = options.v_supply;
  const double r = options.r_shunt;
  for (std::size_t i = 0; i < total; ++i) {
    const double disc = v * v - 4.0 * power[i] * r;
    if (!(disc > 0))
      throw Error(ErrorCode::kInvalidArgument,
                  fmt::format("{} W exceeds what a {} ohm shunt at {} V can deliver", power[i], r, v));
    // Stable root of P = (Vs / R) * (V - Vs) on the small-drop branch.
    cap.shunt.push_back(2.0 * power[i] * r / (v + std::sqrt(disc)));
    cap.supply.push_back(v);
    double trigger = 0.0;
    if (i == fx.trigger_sample) trigger = 0.6 * kTriggerHigh;
    else if (i > fx.trigger_sample && i < fall) trigger = kTriggerHigh;
    cap.trigger.push_back(trigger);
  }
  return fx;
}

nlohmann::json truth_to_json(const SyntheticDesign& design, const VcdFixture& vcd, const TraceFixture& trace,
                             const TraceOptions& options) {
  nlohmann::json terms = nlohmann::json::array();
  for (const auto& t : design.truth.terms)
    terms.push_back({{"signal", t.feature.signal},
                     {"counter_type", to_string(t.feature.counter_type)},
                     {"weight_w_per_count", t.weight}});
  const auto& p = design.params;
  return {{"schema", "blink.truth/1"},
          {"seed", design.seed},
          {"params",
           {{"n_signals", p.n_signals},
            {"max_width", p.max_width},
            {"clusters", p.clusters},
            {"cores_per_cluster", p.cores_per_cluster},
            {"support_size", p.support_size},
            {"mixed_sign_weights", p.mixed_sign_weights},
            {"profile", p.profile == Profile::kIdle ? "idle" : "phased"},
            {"glitch_probability", p.glitch_probability}}},
          {"intercept_w", design.truth.intercept},
          {"terms", terms},
          {"timing",
           {{"clock_period_ns", p.clock_period_ns},
            {"resolution_ns", p.resolution_ns},
            {"settle_delay_ns", p.settle_delay_ns},
            {"trigger_rise_ns", vcd.trigger_rise_ns},
            {"trigger_fall_ns", vcd.trigger_fall_ns},
            {"first_cycle", vcd.first_cycle},
            {"n_windows", vcd.truth.n_windows}}},
          {"scope",
           {{"rate_hz", options.scope_rate},
            {"trigger_sample", trace.trigger_sample},
            {"r_shunt_ohm", options.r_shunt},
            {"v_supply_v", options.v_supply},
            {"noise_sigma", options.noise_sigma},
            {"window_noise_sigma", options.window_noise_sigma}}},
          {"window_power_w", trace.window_power}};
}

void write_fixture(const std::filesystem::path& dir, std::uint64_t seed, const FixtureParams& params) {
  const auto design = gen_design(seed, params.design);
  const auto vcd = render_vcd(design, params.n_windows);
  const auto trace = render_power_trace(design, vcd.truth, params.trace);

  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::kIo, fmt::format("cannot create '{}': {}", dir.string(), ec.message()));
  auto open = [&](const char* name) {
    std::ofstream f(dir / name, std::ios::binary | std::ios::trunc);
    if (!f) throw Error(ErrorCode::kIo, fmt::format("cannot write '{}'", (dir / name).string()));
    return f;
  };
  {
    auto f = open("design.vcd");
    f << vcd.text;
  }
  {
    auto f = open("scope.csv");
    write_scope_csv(f, trace.capture, trace.trigger_sample);
  }
  {
    auto f = open("truth.json");
    f << truth_to_json(design, vcd, trace, params.trace).dump(2) << '\n';
  }
  {
    auto f = open("blink.ini");
    const auto& p = params.design;
    f << "# Synthetic fixture, seed " << seed << "\n"
      << "[run]\nid = synthetic-" << seed << "\n\n"
      << "[paths]\nvcd = design.vcd\nscope = scope.csv\noutput = out\n\n"
      << "[activity]\ntrigger = top.trg\n"
      << "resolution = " << format_duration(std::chrono::nanoseconds(p.resolution_ns)) << "\n"
      << "settle_delay = " << format_duration(std::chrono::nanoseconds(p.settle_delay_ns)) << "\n\n"
      << "[power]\nr_shunt = " << fmt::format("{}", params.trace.r_shunt) << "\n\n"
      << "[model]\nbudget = " << std::max<std::size_t>(p.support_size, 1) << "\nseed = " << seed << "\n\n"
      << "[monitor]\nclock_hz = " << 1'000'000'000 / p.clock_period_ns << "\n";
  }
}

}  // namespace blink::harness
