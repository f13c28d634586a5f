#include <gtest/gtest.h>

#include <sstream>

#include <nlohmann/json.hpp>

#include "blink/error.hpp"
#include "blink/harness.hpp"
#include "blink/vcd.hpp"
#include "reference_vcd.hpp"

namespace blink {
namespace {

std::vector<ValueEvent> read_all(VcdReader& r) {
  std::vector<ValueEvent> out;
  ValueEvent e;
  while (r.next(e)) out.push_back(e);
  return out;
}

TEST(Timescale, ParseAndTick) {
  EXPECT_EQ(Timescale::parse("1ns")->tick().count(), 1'000'000);
  EXPECT_EQ(Timescale::parse("10 ps")->tick().count(), 10'000);
  EXPECT_EQ(Timescale::parse("100us")->tick().count(), 100'000'000'000);
  EXPECT_FALSE(Timescale::parse("3ns"));
  EXPECT_FALSE(Timescale::parse("1s"));
  EXPECT_EQ(to_ticks_ceil(Femtoseconds{10'000'000'000}, *Timescale::parse("1ns")), 10'000);
}

TEST(VcdHeader, MinimalScalar) {
  std::istringstream in("$timescale 1ns $end $scope module top $end $var wire 1 ! clk $end $upscope $end "
                        "$enddefinitions $end");
  const auto table = parse_header(in);
  ASSERT_EQ(table.size(), 1u);
  EXPECT_EQ(table[0].hier_name, "top.clk");
  EXPECT_EQ(table[0].width, 1u);
  EXPECT_EQ(table.top_scope, "top");
  EXPECT_EQ(table.timescale.tick().count(), 1'000'000);
}

TEST(VcdHeader, NestedScopes) {
  std::istringstream in(
      "$timescale 10ps $end\n$scope module top $end\n$scope module aes_cluster $end\n$scope module core0 $end\n"
      "$var reg 8 # state [7:0] $end\n$upscope $end\n$upscope $end\n$upscope $end\n$enddefinitions $end\n");
  const auto table = parse_header(in);
  ASSERT_EQ(table.size(), 1u);
  EXPECT_EQ(table[0].hier_name, "top.aes_cluster.core0.state");
  EXPECT_EQ(table[0].width, 8u);
  EXPECT_EQ(table[0].kind, VarKind::kReg);
}

TEST(VcdHeader, DuplicateIdRejected) {
  std::istringstream in("$timescale 1ns $end $scope module top $end $var wire 1 ! a $end $var wire 1 ! b $end "
                        "$upscope $end $enddefinitions $end");
  EXPECT_THROW(parse_header(in), MalformedHeader);
}

TEST(VcdHeader, ErrorsNameTheToken) {
  std::istringstream missing("$timescale 1ns $end $scope module top $end $var wire 1 ! a $end");
  EXPECT_THROW(parse_header(missing), MalformedHeader);
  std::istringstream bad_scale("$timescale 7ns $end $enddefinitions $end");
  try {
    parse_header(bad_scale);
    FAIL();
  } catch (const MalformedHeader& e) {
    EXPECT_FALSE(e.token().empty());
  }
  std::istringstream real("$timescale 1ns $end $scope module top $end $var real 64 ! r $end $upscope $end "
                          "$enddefinitions $end");
  EXPECT_THROW(parse_header(real), MalformedHeader);
}

TEST(VcdHeader, TableJsonRoundTrip) {
  std::istringstream in("$timescale 100fs $end $scope module top $end $var wire 1 ! clk $end $scope module u $end "
                        "$var reg 12 \"\" data $end $upscope $end $upscope $end $enddefinitions $end");
  auto table = parse_header(in);
  table.mutable_entries()[1].port_role = PortRole::kOutput;
  EXPECT_EQ(SignalTable::from_json(table.to_json()), table);
}

TEST(VcdBody, ScalarEvents) {
  std::istringstream in("$timescale 1ns $end $scope module top $end $var wire 1 ! a $end $upscope $end "
                        "$enddefinitions $end #0 0! #10 1!");
  VcdReader r(in);
  r.parse_header();
  const auto ev = read_all(r);
  ASSERT_EQ(ev.size(), 2u);
  EXPECT_EQ(ev[0].time, 0);
  EXPECT_EQ(ev[0].value.to_string(), "0");
  EXPECT_EQ(ev[1].time, 10);
  EXPECT_EQ(ev[1].value.to_string(), "1");
}

TEST(VcdBody, VectorZeroExtension) {
  std::istringstream in("$timescale 1ns $end $scope module top $end $var wire 8 \" v $end $upscope $end "
                        "$enddefinitions $end #25 b1010 \"");
  VcdReader r(in);
  r.parse_header();
  const auto ev = read_all(r);
  ASSERT_EQ(ev.size(), 1u);
  EXPECT_EQ(ev[0].time, 25);
  EXPECT_EQ(ev[0].value.to_string(), "00001010");
}

TEST(VcdBody, SkipsDumpSectionsAndComments) {
  std::istringstream in("$timescale 1ns $end $scope module top $end $var wire 2 ! a $end $upscope $end "
                        "$enddefinitions $end #0 $dumpvars bx ! $end $comment ignored 1! $end #5 b11 !");
  VcdReader r(in);
  r.parse_header();
  const auto ev = read_all(r);
  ASSERT_EQ(ev.size(), 2u);
  EXPECT_EQ(ev[0].value.to_string(), "xx");
  EXPECT_EQ(ev[1].value.to_string(), "11");
}

TEST(VcdBody, UndeclaredIdReportsOffset) {
  const std::string text = "$timescale 1ns $end $scope module top $end $var wire 1 ! a $end $upscope $end "
                           "$enddefinitions $end\n#0 0!\n#1 1?\n";
  std::istringstream in(text);
  VcdReader r(in);
  r.parse_header();
  try {
    read_all(r);
    FAIL();
  } catch (const MalformedBody& e) {
    EXPECT_EQ(e.offset(), text.find("1?"));
  }
}

TEST(VcdBody, TimeGoingBackwards) {
  std::istringstream in("$timescale 1ns $end $scope module top $end $var wire 1 ! a $end $upscope $end "
                        "$enddefinitions $end #10 0! #5 1!");
  VcdReader r(in);
  r.parse_header();
  EXPECT_THROW(read_all(r), MalformedBody);
}

// Streaming equivalence against a whole-buffer parse, and the generator's
// own count of emitted value changes.
TEST(VcdBody, StreamingMatchesReferenceParse) {
  const auto design = harness::gen_design(11, {.n_signals = 30});
  const auto fx = harness::render_vcd(design, 40);
  const auto ref = testing::reference_parse(fx.text);

  std::istringstream in(fx.text);
  VcdReader r(in);
  const auto& table = r.parse_header();
  const auto ev = read_all(r);
  ASSERT_EQ(ev.size(), ref.events.size());
  for (std::size_t i = 0; i < ev.size(); ++i) {
    ASSERT_EQ(ev[i].time, ref.events[i].time);
    ASSERT_EQ(table[ev[i].signal].id_code, ref.events[i].id);
    ASSERT_EQ(ev[i].value.to_string(), ref.events[i].value);
  }
  for (std::size_t i = 1; i < ev.size(); ++i) ASSERT_LE(ev[i - 1].time, ev[i].time);

  // Design-signal changes after the $dumpvars block.
  const std::size_t clk_rst_trg = 3;
  std::size_t counted = 0;
  for (const auto& e : ev)
    if (e.time > 0 && e.signal >= clk_rst_trg) ++counted;
  EXPECT_EQ(counted, fx.value_changes + design.signals.size());  // + initial values at cycle 1
}

TEST(Candidates, DefaultFilterKeepsModulePorts) {
  std::istringstream in(
      "$timescale 1ns $end $scope module top $end $var wire 1 ! clk $end $var wire 1 \" i_top $end "
      "$scope module core $end $var wire 1 # clk $end $var wire 1 $ rst_n $end $var wire 4 % i_a $end "
      "$var wire 4 & o_b $end $var wire 4 ' c_out $end $var reg 4 ( s1 $end $var reg 4 ) s2 $end "
      "$var reg 4 * s3 $end $var reg 4 + s4 $end $var reg 4 , s5 $end $upscope $end $upscope $end "
      "$enddefinitions $end");
  auto table = parse_header(in);
  CandidateFilter filter;
  assign_port_roles(table, filter);
  const auto c = resolve_candidates(table, filter);
  std::vector<std::string> names;
  for (const auto& e : c) names.push_back(e.hier_name);
  EXPECT_EQ(names, (std::vector<std::string>{"top.core.c_out", "top.core.i_a", "top.core.o_b"}));

  filter.internals = true;
  const auto all = resolve_candidates(table, filter);
  EXPECT_EQ(all.size(), 8u);  // clk and rst_n stay excluded
  for (const auto& e : all) EXPECT_NE(e.hier_name, "top.core.clk");
}

TEST(Candidates, GlobSelectsCluster) {
  std::istringstream in(
      "$timescale 1ns $end $scope module top $end $scope module aes_0 $end $var wire 1 ! i_k $end $upscope $end "
      "$scope module gsm $end $var wire 1 \" i_k $end $upscope $end $scope module aes_1 $end $var wire 1 # o_q $end "
      "$upscope $end $upscope $end $enddefinitions $end");
  auto table = parse_header(in);
  CandidateFilter filter;
  filter.include = {"top.aes_*.*"};
  assign_port_roles(table, filter);
  const auto c = resolve_candidates(table, filter);
  ASSERT_EQ(c.size(), 2u);
  EXPECT_EQ(c[0].hier_name, "top.aes_0.i_k");
  EXPECT_EQ(c[1].hier_name, "top.aes_1.o_q");

  filter.include = {"nothing.*"};
  EXPECT_THROW(
      {
        try {
          resolve_candidates(table, filter);
        } catch (const Error& e) {
          EXPECT_EQ(e.code(), ErrorCode::kEmptyCandidateSet);
          throw;
        }
      },
      Error);
}

}  // namespace
}  // namespace blink
