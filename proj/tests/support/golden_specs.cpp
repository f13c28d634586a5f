#include "golden_specs.hpp"

namespace blink::testing {

MonitorSpec single_st_spec() {
  MonitorSpec s;
  s.window_cycles = 1000;
  s.taps = {{"top.core0.o_state", 4, CounterType::kSingleToggle,
             min_counter_width(CounterType::kSingleToggle, 4, 1000)}};
  s.q_weights = {256};
  s.frac_bits = 8;
  return s;
}

MonitorSpec intercept_only_spec() {
  MonitorSpec s;
  s.window_cycles = 500;
  s.frac_bits = 20;
  s.q_intercept = 31000;
  return s;
}

MonitorSpec a10_shape_spec() {
  MonitorSpec s;
  s.window_cycles = 1000;
  s.frac_bits = 14;
  s.q_intercept = 5000;
  for (int i = 0; i < 9; ++i) {
    const unsigned w = 1u << (i % 6);
    s.taps.push_back({"top.aes.hw" + std::to_string(i), w, CounterType::kHammingWeight,
                      min_counter_width(CounterType::kHammingWeight, w, 1000)});
    s.q_weights.push_back(100 * (i + 1) - 450);
  }
  s.taps.push_back({"top.aes.st", 8, CounterType::kSingleToggle,
                    min_counter_width(CounterType::kSingleToggle, 8, 1000)});
  s.q_weights.push_back(77);
  return s;
}

DutInterface fixture_dut() {
  DutInterface dut;
  dut.module_name = "top";
  dut.instance_scope = "top";
  dut.ports = {{"clk", PortDirection::kInput, 1},
               {"rst_n", PortDirection::kInput, 1},
               {"trg", PortDirection::kOutput, 1},
               {"o_result", PortDirection::kOutput, 8}};
  dut.hierarchy = {"top.clk", "top.rst_n", "top.trg", "top.o_result", "top.cluster0.core1.state",
                   "top.core0.o_state"};
  return dut;
}

std::vector<std::pair<std::string, std::string>> golden_texts() {
  auto hier = single_st_spec();
  hier.taps[0].hier_name = "top.cluster0.core1.state";
  return {{"monitor_single_st.v", emit_monitor_rtl(single_st_spec())},
          {"monitor_intercept_only.v", emit_monitor_rtl(intercept_only_spec())},
          {"monitor_a10_shape.v", emit_monitor_rtl(a10_shape_spec())},
          {"wrapper_hierarchical.v", emit_wrapper(hier, fixture_dut()).text}};
}

}  // namespace blink::testing
