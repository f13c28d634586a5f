#include "blink/power_trace.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>

#include <fmt/format.h>

#include "blink/columnar.hpp"
#include "blink/error.hpp"

namespace blink {

namespace {

constexpr double kUniformTolerance = 1e-6;  // relative, on the sample step
constexpr double kBoundarySnap = 1e-6;      // in samples

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

// "Time (s)" -> "time"
std::string column_key(std::string_view raw) {
  auto s = trim(raw);
  if (!s.empty() && s.front() == '"' && s.back() == '"' && s.size() >= 2) s = s.substr(1, s.size() - 2);
  const auto paren = s.find_first_of("([");
  if (paren != std::string_view::npos) s = trim(s.substr(0, paren));
  std::string key(s);
  std::transform(key.begin(), key.end(), key.begin(), [](unsigned char c) { return std::tolower(c); });
  return key;
}

std::vector<std::string_view> split(std::string_view line, char delim) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(delim, start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::optional<double> to_double(std::string_view s) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

void append_double(std::string& out, double v) {
  std::array<char, 32> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  out.append(buf.data(), ptr);
}

std::size_t boundary_index(std::size_t t0, double dt, double offset) {
  const double x = offset / dt;
  const double r = std::round(x);
  const double snapped = std::abs(x - r) < kBoundarySnap ? r : std::ceil(x);
  const double idx = static_cast<double>(t0) + snapped;
  return idx <= 0 ? 0 : static_cast<std::size_t>(idx);
}

}  // namespace

ScopeCapture load_scope_csv(std::istream& in) {
  ScopeCapture cap;
  std::string line;
  std::size_t line_no = 0;
  char delim = ',';
  int col_time = -1, col_shunt = -1, col_trigger = -1, col_supply = -1;
  std::size_t n_cols = 0;
  bool have_header = false;
  std::vector<double> time;

  while (std::getline(in, line)) {
    ++line_no;
    std::string_view sv = trim(line);
    if (sv.empty()) continue;
    if (sv.front() == '#') {
      sv.remove_prefix(1);
      const auto colon = sv.find(':');
      if (colon != std::string_view::npos) {
        const auto key = trim(sv.substr(0, colon));
        const auto value = trim(sv.substr(colon + 1));
        if (key == "capture_id") cap.capture_id = value;
        else if (key == "instrument") cap.instrument = value;
      }
      continue;
    }
    if (!have_header) {
      delim = sv.find(',') != std::string_view::npos ? ','
            : sv.find(';') != std::string_view::npos ? ';'
                                                      : '\t';
      const auto names = split(sv, delim);
      n_cols = names.size();
      for (std::size_t i = 0; i < names.size(); ++i) {
        const auto key = column_key(names[i]);
        const int idx = static_cast<int>(i);
        if (key == "time") col_time = idx;
        else if (key == "shunt") col_shunt = idx;
        else if (key == "trigger") col_trigger = idx;
        else if (key == "supply") col_supply = idx;
      }
      for (auto [col, name] : {std::pair{col_time, "time"}, {col_shunt, "shunt"}, {col_trigger, "trigger"}})
        if (col < 0) throw Error(ErrorCode::kMissingColumn, fmt::format("scope export has no '{}' column", name));
      have_header = true;
      continue;
    }
    const auto fields = split(sv, delim);
    if (fields.size() != n_cols)
      throw Error(ErrorCode::kBadFormat,
                  fmt::format("line {}: expected {} fields, got {}", line_no, n_cols, fields.size()));
    auto field = [&](int col) {
      const auto v = to_double(fields[static_cast<std::size_t>(col)]);
      if (!v) throw Error(ErrorCode::kBadFormat, fmt::format("line {}: bad number '{}'", line_no, fields[col]));
      return *v;
    };
    time.push_back(field(col_time));
    cap.shunt.push_back(field(col_shunt));
    cap.trigger.push_back(field(col_trigger));
    if (col_supply >= 0) cap.supply.push_back(field(col_supply));
  }
  if (!have_header) throw Error(ErrorCode::kMissingColumn, "scope export has no header row");
  if (time.size() < 2) throw Error(ErrorCode::kBadFormat, "scope export needs at least two samples");

  const double dt = (time.back() - time.front()) / static_cast<double>(time.size() - 1);
  if (!(dt > 0)) throw Error(ErrorCode::kNonUniformSampling, "time column is not increasing");
  for (std::size_t i = 1; i < time.size(); ++i) {
    const double step = time[i] - time[i - 1];
    if (std::abs(step - dt) > kUniformTolerance * dt)
      throw Error(ErrorCode::kNonUniformSampling,
                  fmt::format("sample {} step {:.6g}s deviates from mean step {:.6g}s", i, step, dt));
  }
  cap.sample_period = dt;
  return cap;
}

ScopeCapture load_scope_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kMissingInput, fmt::format("cannot open scope export '{}'", path.string()));
  return load_scope_csv(in);
}

void write_scope_csv(std::ostream& out, const ScopeCapture& cap, std::size_t time_origin_sample) {
  std::string text;
  if (!cap.capture_id.empty()) text += fmt::format("# capture_id: {}\n", cap.capture_id);
  if (!cap.instrument.empty()) text += fmt::format("# instrument: {}\n", cap.instrument);
  text += cap.has_supply() ? "time,shunt,supply,trigger\n" : "time,shunt,trigger\n";
  const auto origin = static_cast<double>(time_origin_sample);
  for (std::size_t i = 0; i < cap.size(); ++i) {
    append_double(text, (static_cast<double>(i) - origin) * cap.sample_period);
    text += ',';
    append_double(text, cap.shunt[i]);
    if (cap.has_supply()) {
      text += ',';
      append_double(text, cap.supply[i]);
    }
    text += ',';
    append_double(text, cap.trigger[i]);
    text += '\n';
    if (text.size() > (1 << 20)) {
      out << text;
      text.clear();
    }
  }
  out << text;
  if (!out) throw Error(ErrorCode::kIo, "failed writing scope export");
}

std::size_t find_trigger_edge(std::span<const double> trigger) {
  if (trigger.size() < 2) throw Error(ErrorCode::kNoTriggerCrossing, "trigger channel too short");
  const auto [lo, hi] = std::minmax_element(trigger.begin(), trigger.end());
  if (!(*hi > *lo)) throw Error(ErrorCode::kNoTriggerCrossing, "trigger channel has no swing");
  const double threshold = 0.5 * (*hi + *lo);
  for (std::size_t i = 1; i < trigger.size(); ++i)
    if (trigger[i - 1] < threshold && trigger[i] >= threshold) return i;
  throw Error(ErrorCode::kNoTriggerCrossing, "trigger channel never rises through its midpoint");
}

ScopeCapture stitch_captures(const ScopeCapture& first, const ScopeCapture& second) {
  if (std::abs(first.sample_period - second.sample_period) > kUniformTolerance * first.sample_period)
    throw Error(ErrorCode::kInvalidArgument, "captures have different sample periods");
  if (first.has_supply() != second.has_supply())
    throw Error(ErrorCode::kInvalidArgument, "captures have different column layouts");
  const auto ea = static_cast<std::ptrdiff_t>(find_trigger_edge(first.trigger));
  const auto eb = static_cast<std::ptrdiff_t>(find_trigger_edge(second.trigger));
  // Index in `first` of second's sample 0.
  const std::ptrdiff_t offset = ea - eb;
  const auto n_first = static_cast<std::ptrdiff_t>(first.size());
  if (offset > n_first) throw Error(ErrorCode::kInvalidArgument, "second capture starts after the first ends");

  ScopeCapture out = first;
  out.capture_id = first.capture_id + "+" + second.capture_id;
  for (std::ptrdiff_t j = std::max<std::ptrdiff_t>(0, n_first - offset);
       j < static_cast<std::ptrdiff_t>(second.size()); ++j) {
    const auto s = static_cast<std::size_t>(j);
    out.shunt.push_back(second.shunt[s]);
    out.trigger.push_back(second.trigger[s]);
    if (second.has_supply()) out.supply.push_back(second.supply[s]);
  }
  return out;
}

PowerTrace compute_power(const ScopeCapture& cap, double r_shunt, std::optional<double> v_supply) {
  if (!(r_shunt > 0)) throw Error(ErrorCode::kInvalidArgument, "shunt resistance must be positive");
  if (!v_supply && !cap.has_supply())
    throw Error(ErrorCode::kInvalidArgument, "no supply voltage given and the capture has no supply channel");
  if (v_supply) {
    const double max_drop = cap.shunt.empty() ? 0.0 : *std::max_element(cap.shunt.begin(), cap.shunt.end());
    if (!(*v_supply > max_drop))
      throw Error(ErrorCode::kSupplyBelowDrop,
                  fmt::format("supply {} V does not exceed the largest shunt drop {} V", *v_supply, max_drop));
  }

  PowerTrace trace;
  trace.sample_period = cap.sample_period;
  trace.samples.resize(cap.size());
  for (std::size_t i = 0; i < cap.size(); ++i) {
    const double supply = v_supply ? *v_supply : cap.supply[i];
    if (!(supply > cap.shunt[i]))
      throw Error(ErrorCode::kSupplyBelowDrop,
                  fmt::format("sample {}: supply {} V does not exceed shunt drop {} V", i, supply, cap.shunt[i]));
    double p = (cap.shunt[i] / r_shunt) * (supply - cap.shunt[i]);
    if (p < 0) {
      p = 0;
      ++trace.clamped_samples;
    }
    trace.samples[i] = p;
  }
  trace.t0_trigger = find_trigger_edge(cap.trigger);
  return trace;
}

std::size_t window_boundary(const PowerTrace& trace, double settle_delay, double resolution, std::size_t k) {
  return boundary_index(trace.t0_trigger, trace.sample_period,
                        settle_delay + static_cast<double>(k) * resolution);
}

WindowedPower align_and_resample(const PowerTrace& trace, double settle_delay, double resolution,
                                 std::size_t n_windows_expected) {
  if (!(resolution > 0) || !(settle_delay >= 0))
    throw Error(ErrorCode::kInvalidArgument, "resolution must be positive and settle delay non-negative");
  if (resolution < trace.sample_period)
    throw Error(ErrorCode::kInvalidArgument, "resolution is shorter than one scope sample");

  const std::size_t n = trace.samples.size();
  if (window_boundary(trace, settle_delay, resolution, n_windows_expected) > n) {
    std::size_t coverable = 0;
    while (coverable < n_windows_expected &&
           window_boundary(trace, settle_delay, resolution, coverable + 1) <= n)
      ++coverable;
    throw TraceTooShort(n_windows_expected, coverable);
  }

  WindowedPower out;
  out.window_len = resolution;
  out.values.reserve(n_windows_expected);
  std::size_t begin = window_boundary(trace, settle_delay, resolution, 0);
  for (std::size_t k = 0; k < n_windows_expected; ++k) {
    const std::size_t end = window_boundary(trace, settle_delay, resolution, k + 1);
    double sum = 0;
    for (std::size_t i = begin; i < end; ++i) sum += trace.samples[i];
    out.values.push_back(sum / static_cast<double>(end - begin));
    begin = end;
  }
  return out;
}

namespace {
constexpr std::array<char, 4> kPowerMagic{'B', 'L', 'K', 'P'};
}

void write_windowed_power(std::ostream& out, const WindowedPower& p) {
  columnar::Table t;
  t.magic = kPowerMagic;
  t.window_len_fs = std::llround(p.window_len * 1e15);
  t.rows = static_cast<std::uint32_t>(p.values.size());
  t.columns.push_back({"power_w", columnar::kNoTag, p.values});
  columnar::write(out, t);
}

WindowedPower read_windowed_power(std::istream& in) {
  const auto t = columnar::read(in, kPowerMagic);
  if (t.columns.size() != 1 || !std::holds_alternative<std::vector<double>>(t.columns[0].data))
    throw Error(ErrorCode::kBadFormat, "power file must hold exactly one f64 column");
  WindowedPower p;
  p.window_len = static_cast<double>(t.window_len_fs) * 1e-15;
  p.values = std::get<std::vector<double>>(t.columns[0].data);
  return p;
}

}  // namespace blink
