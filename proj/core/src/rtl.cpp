#include <algorithm>
#include <bit>
#include <cctype>
#include <iterator>
#include <set>

#include <fmt/format.h>

#include "blink/error.hpp"
#include "blink/monitor.hpp"

namespace blink {

namespace {

using Out = std::back_insert_iterator<std::string>;

bool simple_identifier(std::string_view s) {
  if (s.empty() || !(std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_')) return false;
  return std::all_of(s.begin(), s.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '$';
  });
}

// Verilog escaped identifiers end at whitespace, so the trailing space is part of the token.
std::string identifier(std::string_view s) {
  if (simple_identifier(s)) return std::string(s);
  return fmt::format("\\{} ", s);
}

std::string hierarchical_path(std::string_view dotted) {
  std::string out;
  std::size_t start = 0;
  while (true) {
    const auto dot = dotted.find('.', start);
    if (!out.empty()) out += '.';
    out += identifier(dotted.substr(start, dot - start));
    if (dot == std::string_view::npos) break;
    start = dot + 1;
  }
  return out;
}

std::string range(unsigned width) { return width > 1 ? fmt::format("[{}:0] ", width - 1) : std::string(); }

std::string signed_literal(unsigned width, std::int64_t v) {
  if (v < 0) return fmt::format("-{}'sd{}", width, -v);
  return fmt::format("{}'sd{}", width, v);
}

// Balanced adder tree over the bits of `diff`; returns the expression of the root.
std::string emit_popcount(Out out, std::size_t tap, unsigned width) {
  struct Node {
    std::string expr;
    unsigned max;
  };
  std::vector<Node> level;
  for (unsigned b = 0; b < width; ++b)
    level.push_back({width > 1 ? fmt::format("diff_{}[{}]", tap, b) : fmt::format("diff_{}", tap), 1});
  unsigned depth = 0;
  while (level.size() > 1) {
    std::vector<Node> next;
    for (std::size_t i = 0; i + 1 < level.size(); i += 2) {
      const unsigned max = level[i].max + level[i + 1].max;
      const auto name = fmt::format("pc_{}_{}_{}", tap, depth, i / 2);
      fmt::format_to(out, "  wire {}{} = {} + {};\n", range(std::bit_width(max)), name, level[i].expr,
                     level[i + 1].expr);
      next.push_back({name, max});
    }
    if (level.size() % 2 == 1) next.push_back(level.back());
    level = std::move(next);
    ++depth;
  }
  return level.front().expr;
}

}  // namespace

std::string emit_monitor_rtl(const MonitorSpec& spec) {
  spec.validate();
  const unsigned acc = spec.accumulator_width();
  const unsigned ow = spec.output_width;
  const unsigned ww = spec.weight_width;
  const unsigned wcw = spec.window_counter_width();
  const std::int64_t out_max = (std::int64_t{1} << (ow - 1)) - 1;

  std::string text;
  auto out = std::back_inserter(text);
  fmt::format_to(out, "// blink_monitor: generated file, do not edit.\n");
  fmt::format_to(out, "// {} taps, window {} cycles, estimate = power_estimate * 2^-{} W\n", spec.taps.size(),
                 spec.window_cycles, spec.frac_bits);
  fmt::format_to(out, "module blink_monitor (\n  input  wire clk,\n  input  wire rst_n,\n");
  for (std::size_t i = 0; i < spec.taps.size(); ++i) {
    const auto& t = spec.taps[i];
    fmt::format_to(out, "  input  wire {}tap_{},  // {} ({})\n", range(t.width), i, t.hier_name,
                   to_string(t.counter_type));
  }
  fmt::format_to(out, "  output reg  signed [{}:0] power_estimate,\n  output reg  estimate_valid\n);\n\n", ow - 1);

  fmt::format_to(out, "  localparam signed [{}:0] INTERCEPT = {};\n", ww - 1, signed_literal(ww, spec.q_intercept));
  for (std::size_t i = 0; i < spec.taps.size(); ++i)
    fmt::format_to(out, "  localparam signed [{}:0] WEIGHT_{} = {};\n", ww - 1, i, signed_literal(ww, spec.q_weights[i]));
  fmt::format_to(out, "  localparam signed [{}:0] OUT_MAX = {};\n", acc - 1, signed_literal(acc, out_max));
  fmt::format_to(out, "  localparam signed [{}:0] OUT_MIN = -{}'sd{};\n\n", acc - 1, acc, out_max + 1);

  fmt::format_to(out, "  reg {}window_count;\n", range(wcw));
  fmt::format_to(out, "  wire window_end = (window_count == {}'d{});\n\n", wcw, spec.window_cycles - 1);

  for (std::size_t i = 0; i < spec.taps.size(); ++i) {
    const auto& t = spec.taps[i];
    const unsigned cw = t.counter_width;
    fmt::format_to(out, "  // tap {}: {} {}\n", i, t.hier_name, to_string(t.counter_type));
    fmt::format_to(out, "  reg {}prev_{};\n", range(t.width), i);
    fmt::format_to(out, "  reg {}count_{};\n", range(cw), i);
    std::string inc;
    if (t.counter_type == CounterType::kHammingWeight) {
      fmt::format_to(out, "  wire {}diff_{} = prev_{} ^ tap_{};\n", range(t.width), i, i, i);
      inc = emit_popcount(out, i, t.width);
    } else {
      fmt::format_to(out, "  wire toggle_{} = (prev_{} != tap_{});\n", i, i, i);
      inc = fmt::format("toggle_{}", i);
    }
    fmt::format_to(out, "  wire {}next_{} = count_{} + {};\n", range(cw), i, i, inc);
    fmt::format_to(out, "  wire signed [{}:0] term_{} = {{1'b0, next_{}}};\n\n", cw, i, i);
  }

  fmt::format_to(out, "  wire signed [{}:0] mac = INTERCEPT", acc - 1);
  for (std::size_t i = 0; i < spec.taps.size(); ++i) fmt::format_to(out, "\n    + WEIGHT_{} * term_{}", i, i);
  fmt::format_to(out, ";\n");
  fmt::format_to(out,
                 "  wire signed [{}:0] clipped = (mac > OUT_MAX) ? OUT_MAX : ((mac < OUT_MIN) ? OUT_MIN : mac);\n\n",
                 acc - 1);

  fmt::format_to(out, "  always @(posedge clk) begin\n    if (!rst_n) begin\n");
  fmt::format_to(out, "      window_count <= {}'d0;\n", wcw);
  for (std::size_t i = 0; i < spec.taps.size(); ++i)
    fmt::format_to(out, "      prev_{} <= tap_{};\n      count_{} <= {}'d0;\n", i, i, i, spec.taps[i].counter_width);
  fmt::format_to(out, "      power_estimate <= {}'sd0;\n      estimate_valid <= 1'b0;\n", ow);
  fmt::format_to(out, "    end else begin\n");
  for (std::size_t i = 0; i < spec.taps.size(); ++i) fmt::format_to(out, "      prev_{} <= tap_{};\n", i, i);
  fmt::format_to(out, "      estimate_valid <= window_end;\n      if (window_end) begin\n");
  fmt::format_to(out, "        window_count <= {}'d0;\n", wcw);
  for (std::size_t i = 0; i < spec.taps.size(); ++i)
    fmt::format_to(out, "        count_{} <= {}'d0;\n", i, spec.taps[i].counter_width);
  fmt::format_to(out, "        power_estimate <= clipped[{}:0];\n", ow - 1);
  fmt::format_to(out, "      end else begin\n");
  fmt::format_to(out, "        window_count <= window_count + {}'d1;\n", wcw);
  for (std::size_t i = 0; i < spec.taps.size(); ++i) fmt::format_to(out, "        count_{} <= next_{};\n", i, i);
  fmt::format_to(out, "      end\n    end\n  end\n\nendmodule\n");
  return text;
}

WrapperRtl emit_wrapper(const MonitorSpec& spec, const DutInterface& dut) {
  spec.validate();
  if (!simple_identifier(dut.module_name))
    throw Error(ErrorCode::kInvalidArgument, fmt::format("DUT module name '{}' is not a Verilog identifier", dut.module_name));

  auto port = [&](std::string_view name) -> const PortDecl* {
    const auto it = std::find_if(dut.ports.begin(), dut.ports.end(), [&](const PortDecl& p) { return p.name == name; });
    return it == dut.ports.end() ? nullptr : &*it;
  };
  const PortDecl* clock = port(dut.clock_port);
  const PortDecl* reset = port(dut.reset_port);
  if (!clock || !reset)
    throw Error(ErrorCode::kInvalidArgument,
                fmt::format("DUT '{}' lacks clock '{}' or reset '{}' port", dut.module_name, dut.clock_port,
                            dut.reset_port));
  for (const auto& name : {std::string("power_estimate"), std::string("estimate_valid"), std::string("monitor_rst_n")})
    if (port(name))
      throw Error(ErrorCode::kInvalidArgument, fmt::format("DUT port '{}' collides with the wrapper", name));

  const std::set<std::string, std::less<>> hierarchy(dut.hierarchy.begin(), dut.hierarchy.end());
  const std::string prefix = dut.instance_scope.empty() ? std::string() : dut.instance_scope + ".";

  WrapperRtl result;
  for (const auto& t : spec.taps) {
    if (!std::string_view(t.hier_name).starts_with(prefix))
      throw Error(ErrorCode::kUnresolvableTap,
                  fmt::format("tap '{}' is outside DUT scope '{}'", t.hier_name, dut.instance_scope));
    const std::string relative = t.hier_name.substr(prefix.size());
    const PortDecl* p = relative.find('.') == std::string::npos ? port(relative) : nullptr;
    if (p) {
      if (p->width != t.width)
        throw Error(ErrorCode::kUnresolvableTap,
                    fmt::format("tap '{}' is {} bits but port '{}' is {}", t.hier_name, t.width, p->name, p->width));
      result.connections.push_back({t.hier_name, identifier(p->name), false});
    } else if (hierarchy.contains(t.hier_name)) {
      result.connections.push_back({t.hier_name, "u_dut." + hierarchical_path(relative), true});
    } else {
      throw Error(ErrorCode::kUnresolvableTap,
                  fmt::format("tap '{}' is neither a port nor a signal of '{}'", t.hier_name, dut.module_name));
    }
  }

  auto out = std::back_inserter(result.text);
  fmt::format_to(out, "// blink_wrapper: generated file, do not edit.\n");
  fmt::format_to(out, "// {} instrumented with blink_monitor; hierarchical taps:\n", dut.module_name);
  bool any = false;
  for (const auto& c : result.connections) {
    if (!c.hierarchical) continue;
    fmt::format_to(out, "//   {} -> {}\n", c.hier_name, c.expression);
    any = true;
  }
  if (!any) fmt::format_to(out, "//   (none)\n");
  fmt::format_to(out, "module blink_wrapper (\n");
  for (const auto& p : dut.ports) {
    const char* dir = p.direction == PortDirection::kInput ? "input " : p.direction == PortDirection::kOutput ? "output" : "inout ";
    fmt::format_to(out, "  {} wire {}{},\n", dir, range(p.width), identifier(p.name));
  }
  fmt::format_to(out, "  output wire signed [{}:0] power_estimate,\n  output wire estimate_valid\n);\n\n",
                 spec.output_width - 1);

  fmt::format_to(out, "  wire monitor_rst_n = {}{};\n\n", dut.reset_active_low ? "" : "!", identifier(reset->name));

  fmt::format_to(out, "  {} u_dut (", dut.module_name);
  for (std::size_t i = 0; i < dut.ports.size(); ++i)
    fmt::format_to(out, "{}\n    .{}({})", i ? "," : "", identifier(dut.ports[i].name), identifier(dut.ports[i].name));
  fmt::format_to(out, "\n  );\n\n");

  fmt::format_to(out, "  blink_monitor u_monitor (\n    .clk({}),\n    .rst_n(monitor_rst_n),\n", identifier(clock->name));
  for (std::size_t i = 0; i < result.connections.size(); ++i)
    fmt::format_to(out, "    .tap_{}({}),\n", i, result.connections[i].expression);
  fmt::format_to(out, "    .power_estimate(power_estimate),\n    .estimate_valid(estimate_valid)\n  );\n\nendmodule\n");
  return result;
}

}  // namespace blink
