#include "blink/report.hpp"

#include <iterator>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

namespace blink {

namespace {

std::string cell(const nlohmann::json& j, const nlohmann::json::json_pointer& p, const char* format = "{}") {
  if (!j.contains(p) || j.at(p).is_null()) return "n/a";
  const auto& v = j.at(p);
  if (v.is_number_float()) return fmt::format(fmt::runtime(format), v.get<double>());
  if (v.is_number_integer()) return fmt::format("{}", v.get<std::int64_t>());
  if (v.is_string()) return v.get<std::string>();
  return v.dump();
}

}  // namespace

nlohmann::json reference_figures() {
  return {{"reproduced", false},
          {"note",
           "Measured on a physical FPGA board with vendor synthesis; hardware- and toolchain-bound. "
           "Listed for narrative comparison only, never used as a target."},
          {"design_a10",
           {{"hw_counters", 9},
            {"st_counters", 1},
            {"lut_overhead_pct", 1.9},
            {"ff_overhead_pct", 1.4},
            {"power_overhead_pct", 0.1},
            {"design_power_w", 0.40},
            {"clock_mhz", 100},
            {"nrmse_pct", 3.9}}},
          {"time_to_solution_speedup", 18.12}};
}

std::string render_report_table(const nlohmann::json& report) {
  using P = nlohmann::json::json_pointer;
  std::string out;
  auto it = std::back_inserter(out);
  const std::string id = cell(report, P("/id"));
  const std::string hw = cell(report, P("/taps/hw"));
  const std::string st = cell(report, P("/taps/st"));
  const std::string lut = cell(report, P("/overhead/lut"));
  const std::string ff = cell(report, P("/overhead/ff"));
  const std::string pwr = cell(report, P("/overhead/power_w"));
  std::string nrmse = cell(report, P("/metrics/test/nrmse_pct"), "{:.2f}");
  if (nrmse != "n/a") nrmse += "%";

  const auto width = std::max<std::size_t>(id.size(), 2);
  fmt::format_to(it, "{:<{}}  {:>3}  {:>3}  {:>9}  {:>8}  {:>4}  {:>7}\n", "ID", width, "HW", "ST", "LUT(est)",
                 "FF(est)", "Pwr", "NRMSE");
  fmt::format_to(it, "{:<{}}  {:>3}  {:>3}  {:>9}  {:>8}  {:>4}  {:>7}\n", id, width, hw, st, lut, ff, pwr, nrmse);

  if (report.contains("phases")) {
    fmt::format_to(it, "\n{:<18}  {:<10}  {:>10}\n", "phase", "status", "seconds");
    static constexpr const char* kOrder[] = {"extract-activity", "ingest-power", "identify", "emit-monitor"};
    const auto& phases = report.at("phases");
    for (const char* name : kOrder)
      if (phases.contains(name))
        fmt::format_to(it, "{:<18}  {:<10}  {:>10}\n", name, cell(phases.at(name), P("/status")),
                       cell(phases.at(name), P("/duration_s"), "{:.3f}"));
  }
  if (report.contains("metrics") && !report.at("metrics").is_null()) {
    fmt::format_to(it, "\nmetrics ({} normalizer): train RMSE {} W, test RMSE {} W, test R2 {}\n",
                   cell(report, P("/metrics/normalizer")), cell(report, P("/metrics/train/rmse_w"), "{:.6g}"),
                   cell(report, P("/metrics/test/rmse_w"), "{:.6g}"), cell(report, P("/metrics/test/r2"), "{:.4f}"));
    fmt::format_to(it, "measured power: mean {} W, peak {} W\n",
                   cell(report, P("/phases/ingest-power/summary/mean_power_w"), "{:.4f}"),
                   cell(report, P("/phases/ingest-power/summary/peak_power_w"), "{:.4f}"));
  }
  if (report.contains("overhead") && !report.at("overhead").is_null())
    fmt::format_to(it, "overhead: {}\n", cell(report, P("/overhead/basis")));
  const auto ref = reference_figures();
  fmt::format_to(it,
                 "\nreference (not reproduced): A10 prototype with {} HW + {} ST counters measured LUT {}%, FF {}%, "
                 "Pwr {}%, NRMSE {}%; time-to-solution speedup {}x.\n",
                 ref["design_a10"]["hw_counters"].get<int>(), ref["design_a10"]["st_counters"].get<int>(),
                 ref["design_a10"]["lut_overhead_pct"].get<double>(), ref["design_a10"]["ff_overhead_pct"].get<double>(),
                 ref["design_a10"]["power_overhead_pct"].get<double>(), ref["design_a10"]["nrmse_pct"].get<double>(),
                 ref["time_to_solution_speedup"].get<double>());
  return out;
}

}  // namespace blink
