#pragma once

#include <string>
#include <string_view>

#include <nlohmann/json_fwd.hpp>

namespace blink {

inline constexpr std::string_view kReportSchema = "blink.report/1";

/// Published measurements of a hardware prototype (design A10 and the
/// end-to-end time-to-solution speedup), carried for side-by-side reading
/// only. They depend on the physical board and vendor toolchain and are
/// neither reproduced nor checked.
nlohmann::json reference_figures();

/// Human-readable summary: the ID/HW/ST/LUT/FF/Pwr/NRMSE row, phase
/// timings and the reference figures. Missing values print as "n/a".
std::string render_report_table(const nlohmann::json& report);

}  // namespace blink
