#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "blink/error.hpp"
#include "blink/harness.hpp"
#include "blink/power_trace.hpp"
#include "blink/vcd.hpp"
#include "oracles.hpp"
#include "reference_vcd.hpp"

namespace blink::harness {
namespace {

namespace fs = std::filesystem;

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

TEST(Harness, DeterministicPerSeed) {
  const auto a = gen_design(5), b = gen_design(5), c = gen_design(6);
  EXPECT_EQ(render_vcd(a, 20).text, render_vcd(b, 20).text);
  EXPECT_NE(render_vcd(a, 20).text, render_vcd(c, 20).text);
  EXPECT_EQ(a.truth.terms.size(), b.truth.terms.size());
  for (std::size_t i = 0; i < a.truth.terms.size(); ++i) EXPECT_EQ(a.truth.terms[i].weight, b.truth.terms[i].weight);
}

TEST(Harness, ParameterRanges) {
  try {
    gen_design(1, {.n_signals = 5000});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kParamOutOfRange);
  }
  EXPECT_THROW(gen_design(1, {.max_width = 65}), Error);
  EXPECT_THROW(gen_design(1, {.n_signals = 3, .support_size = 4}), Error);
  EXPECT_THROW(render_vcd(gen_design(1), 9), Error);
}

TEST(Harness, SupportVariesAcrossSeeds) {
  std::set<std::vector<FeatureDesc>> supports;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto d = gen_design(seed, {.n_signals = 40, .support_size = 5});
    std::vector<FeatureDesc> s;
    for (const auto& t : d.truth.terms) {
      s.push_back(t.feature);
      EXPECT_GT(t.weight, 0.0);
      if (d.signals.end() ==
          std::find_if(d.signals.begin(), d.signals.end(), [&](const SignalSpec& x) { return x.hier_name == t.feature.signal; }))
        ADD_FAILURE() << "support signal missing";
    }
    ASSERT_EQ(s.size(), 5u);
    supports.insert(s);
  }
  EXPECT_GT(supports.size(), 90u);
}

TEST(Harness, CandidatesMatchTheDefaultFilter) {
  const auto d = gen_design(3, {.n_signals = 30});
  const auto fx = render_vcd(d, 12);
  std::istringstream in(fx.text);
  auto table = parse_header(in);
  CandidateFilter f;
  assign_port_roles(table, f);
  std::vector<std::string> names;
  for (const auto& e : resolve_candidates(table, f)) names.push_back(e.hier_name);
  EXPECT_EQ(names, d.candidates());
  EXPECT_EQ(names.size(), 30u);
}

// Three one-bit signals, one enabled module: counts follow the rendered text.
TEST(Harness, MicroCase) {
  const auto d = gen_design(2, {.n_signals = 3, .max_width = 1, .clusters = 1, .cores_per_cluster = 1,
                                .support_size = 1, .glitch_probability = 0.0});
  ASSERT_EQ(d.candidates().size(), 3u);
  const auto fx = render_vcd(d, 10);
  const auto ref = testing::reference_parse(fx.text);
  const auto trig = testing::reference_trigger(ref, "top.trg");
  EXPECT_EQ(trig.rise, fx.trigger_rise_ns);
  EXPECT_EQ(trig.fall, fx.trigger_fall_ns);
  EXPECT_EQ(fx.trigger_fall_ns - fx.trigger_rise_ns, d.params.settle_delay_ns + 10 * d.params.resolution_ns +
                                                         d.params.resolution_ns / 2);
  const auto oracle = testing::brute_force_activity(ref, d.candidates(), trig.rise + d.params.settle_delay_ns,
                                                    trig.fall, d.params.resolution_ns, fx.truth.window_len);
  EXPECT_EQ(oracle, fx.truth);
  for (std::size_t f = 0; f < fx.truth.n_features(); f += 2)
    for (std::size_t w = 0; w < 10; ++w) EXPECT_EQ(fx.truth.at(w, f), fx.truth.at(w, f + 1));  // 1-bit: HW == ST
}

TEST(Harness, TriggerSampleMatchesEdge) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto d = gen_design(seed, {.n_signals = 8});
    const auto fx = render_vcd(d, 15);
    const auto tr = render_power_trace(d, fx.truth, {.noise_sigma = 0.01, .seed = seed});
    const auto edge = find_trigger_edge(tr.capture.trigger);
    EXPECT_LE(edge > tr.trigger_sample ? edge - tr.trigger_sample : tr.trigger_sample - edge, 1u);
  }
  const auto d = gen_design(1, {.n_signals = 8});
  const auto fx = render_vcd(d, 15);
  EXPECT_THROW(render_power_trace(d, fx.truth, {.scope_rate = 5e6}), Error);
}

TEST(Harness, FixtureFilesAreReproducible) {
  const fs::path root = fs::temp_directory_path() / "blink_harness_test";
  fs::remove_all(root);
  FixtureParams p;
  p.design.n_signals = 10;
  p.n_windows = 20;
  write_fixture(root / "a", 9, p);
  write_fixture(root / "b", 9, p);
  for (const char* f : {"design.vcd", "scope.csv", "truth.json", "blink.ini"}) {
    ASSERT_TRUE(fs::exists(root / "a" / f)) << f;
    EXPECT_EQ(slurp(root / "a" / f), slurp(root / "b" / f)) << f;
  }
  const auto truth = nlohmann::json::parse(slurp(root / "a" / "truth.json"));
  EXPECT_EQ(truth["seed"], 9);
  EXPECT_EQ(truth["terms"].size(), 5u);
  fs::remove_all(root);
}

}  // namespace
}  // namespace blink::harness
