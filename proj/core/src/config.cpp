#include "blink/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>

#include <boost/algorithm/string.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "blink/error.hpp"

namespace blink {

namespace {

namespace fs = std::filesystem;

[[noreturn]] void config_error(const std::string& message) { throw Error(ErrorCode::kConfig, message); }

std::string trimmed(std::string_view s) { return boost::algorithm::trim_copy(std::string(s)); }

// Drops a trailing "; ..." or "# ..." that follows whitespace.
std::string without_comment(const std::string& value) {
  for (std::size_t i = 1; i < value.size(); ++i)
    if ((value[i] == ';' || value[i] == '#') && std::isspace(static_cast<unsigned char>(value[i - 1])))
      return value.substr(0, i);
  return value;
}

std::vector<std::string> split_list(std::string_view text) {
  std::vector<std::string> parts;
  boost::algorithm::split(parts, text, boost::algorithm::is_any_of(","));
  std::vector<std::string> out;
  for (auto& p : parts) {
    auto t = trimmed(p);
    if (!t.empty()) out.push_back(std::move(t));
  }
  return out;
}

template <typename T>
T parse_number(std::string_view key, std::string_view text) {
  const auto s = trimmed(text);
  T value{};
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || end != s.data() + s.size() || s.empty())
    config_error(fmt::format("{}: '{}' is not a valid number", key, text));
  return value;
}

bool parse_bool(std::string_view key, std::string_view text) {
  const auto s = boost::algorithm::to_lower_copy(trimmed(text));
  if (s == "true" || s == "yes" || s == "on" || s == "1") return true;
  if (s == "false" || s == "no" || s == "off" || s == "0") return false;
  config_error(fmt::format("{}: '{}' is not a boolean", key, text));
}

PortDecl parse_port(std::string_view text) {
  std::vector<std::string> f;
  boost::algorithm::split(f, text, boost::algorithm::is_any_of(":"));
  for (auto& s : f) s = trimmed(s);
  if (f.empty() || f.size() > 3 || f[0].empty()) config_error(fmt::format("dut.ports: bad entry '{}'", text));
  PortDecl p;
  p.name = f[0];
  if (f.size() >= 2) {
    if (f[1] == "in" || f[1] == "input") p.direction = PortDirection::kInput;
    else if (f[1] == "out" || f[1] == "output") p.direction = PortDirection::kOutput;
    else if (f[1] == "inout") p.direction = PortDirection::kInout;
    else config_error(fmt::format("dut.ports: unknown direction '{}'", f[1]));
  }
  if (f.size() == 3) p.width = parse_number<unsigned>("dut.ports", f[2]);
  if (p.width == 0) config_error(fmt::format("dut.ports: port '{}' has width 0", p.name));
  return p;
}

std::string_view to_string(PortDirection d) {
  switch (d) {
    case PortDirection::kInput: return "in";
    case PortDirection::kOutput: return "out";
    case PortDirection::kInout: return "inout";
  }
  return "in";
}

struct Context {
  fs::path base;
  fs::path output_base;
};

using Setter = std::function<void(PipelineConfig&, const std::string&, const Context&)>;

const std::map<std::string, Setter, std::less<>>& setters() {
  static const std::map<std::string, Setter, std::less<>> table = [] {
    std::map<std::string, Setter, std::less<>> t;
    auto path_under = [](const fs::path& base, const std::string& v) {
      const fs::path p(trimmed(v));
      return (p.is_absolute() ? p : base / p).lexically_normal();
    };
    t["paths.vcd"] = [=](auto& c, auto& v, auto& ctx) { c.vcd = path_under(ctx.base, v); };
    t["paths.scope"] = [=](auto& c, auto& v, auto& ctx) {
      c.scopes.clear();
      for (const auto& s : split_list(v)) c.scopes.push_back(path_under(ctx.base, s));
    };
    t["paths.output"] = [=](auto& c, auto& v, auto& ctx) { c.output_dir = path_under(ctx.output_base, v); };
    t["run.id"] = [](auto& c, auto& v, auto&) { c.id = trimmed(v); };

    t["activity.trigger"] = [](auto& c, auto& v, auto&) { c.trigger = trimmed(v); };
    t["activity.resolution"] = [](auto& c, auto& v, auto&) { c.resolution = parse_duration(v); };
    t["activity.settle_delay"] = [](auto& c, auto& v, auto&) { c.settle_delay = parse_duration(v); };
    t["activity.merge_same_timestamp"] = [](auto& c, auto& v, auto&) {
      c.merge_same_timestamp = parse_bool("activity.merge_same_timestamp", v);
    };
    t["activity.include"] = [](auto& c, auto& v, auto&) { c.filter.include = split_list(v); };
    t["activity.exclude"] = [](auto& c, auto& v, auto&) { c.filter.exclude = split_list(v); };
    t["activity.inputs"] = [](auto& c, auto& v, auto&) { c.filter.inputs = parse_bool("activity.inputs", v); };
    t["activity.outputs"] = [](auto& c, auto& v, auto&) { c.filter.outputs = parse_bool("activity.outputs", v); };
    t["activity.internals"] = [](auto& c, auto& v, auto&) { c.filter.internals = parse_bool("activity.internals", v); };
    t["activity.top_level"] = [](auto& c, auto& v, auto&) { c.filter.top_level = parse_bool("activity.top_level", v); };

    t["power.r_shunt"] = [](auto& c, auto& v, auto&) { c.r_shunt = parse_number<double>("power.r_shunt", v); };
    t["power.v_supply"] = [](auto& c, auto& v, auto&) {
      if (trimmed(v).empty()) c.v_supply.reset();
      else c.v_supply = parse_number<double>("power.v_supply", v);
    };

    t["model.budget"] = [](auto& c, auto& v, auto&) { c.identify.budget = parse_number<std::size_t>("model.budget", v); };
    t["model.mode"] = [](auto& c, auto& v, auto&) {
      const auto m = parse_selection_mode(trimmed(v));
      if (!m) config_error(fmt::format("model.mode: unknown mode '{}'", v));
      c.identify.mode = *m;
    };
    t["model.split_ratio"] = [](auto& c, auto& v, auto&) { c.split_ratio = parse_number<double>("model.split_ratio", v); };
    t["model.seed"] = [](auto& c, auto& v, auto&) { c.seed = parse_number<std::uint64_t>("model.seed", v); };
    t["model.non_negative"] = [](auto& c, auto& v, auto&) {
      c.identify.non_negative = parse_bool("model.non_negative", v);
    };
    t["model.exchange"] = [](auto& c, auto& v, auto&) { c.identify.exchange = parse_bool("model.exchange", v); };
    t["model.min_improvement"] = [](auto& c, auto& v, auto&) {
      c.identify.min_relative_improvement = parse_number<double>("model.min_improvement", v);
    };
    t["model.normalizer"] = [](auto& c, auto& v, auto&) {
      const auto n = parse_normalizer(trimmed(v));
      if (!n) config_error(fmt::format("model.normalizer: unknown normalizer '{}'", v));
      c.normalizer = *n;
    };

    t["monitor.clock_hz"] = [](auto& c, auto& v, auto&) { c.clock_hz = parse_number<double>("monitor.clock_hz", v); };
    t["monitor.weight_width"] = [](auto& c, auto& v, auto&) {
      c.weight_width = parse_number<unsigned>("monitor.weight_width", v);
    };
    t["monitor.max_frac_bits"] = [](auto& c, auto& v, auto&) {
      c.max_frac_bits = parse_number<int>("monitor.max_frac_bits", v);
    };
    t["monitor.output_width"] = [](auto& c, auto& v, auto&) {
      c.output_width = parse_number<unsigned>("monitor.output_width", v);
    };

    t["dut.module"] = [](auto& c, auto& v, auto&) { c.dut_module = trimmed(v); };
    t["dut.ports"] = [](auto& c, auto& v, auto&) {
      c.dut_ports.clear();
      for (const auto& p : split_list(v)) c.dut_ports.push_back(parse_port(p));
    };
    t["dut.clock"] = [](auto& c, auto& v, auto&) { c.clock_port = trimmed(v); };
    t["dut.reset"] = [](auto& c, auto& v, auto&) { c.reset_port = trimmed(v); };
    t["dut.reset_active_low"] = [](auto& c, auto& v, auto&) {
      c.reset_active_low = parse_bool("dut.reset_active_low", v);
    };
    return t;
  }();
  return table;
}

}  // namespace

Femtoseconds parse_duration(std::string_view text) {
  const auto s = trimmed(text);
  std::size_t split = 0;
  while (split < s.size() && (std::isdigit(static_cast<unsigned char>(s[split])) || s[split] == '.')) ++split;
  const std::string number = s.substr(0, split);
  const std::string unit = trimmed(s.substr(split));
  static const std::map<std::string, double, std::less<>> scale = {
      {"fs", 1.0}, {"ps", 1e3}, {"ns", 1e6}, {"us", 1e9}, {"ms", 1e12}, {"s", 1e15}};
  const auto it = scale.find(unit);
  if (number.empty() || it == scale.end())
    config_error(fmt::format("'{}' is not a duration (expected e.g. 10us)", text));
  const double fs = parse_number<double>("duration", number) * it->second;
  const double whole = std::round(fs);
  if (!(whole > 0) || whole > 9.2e18 || std::abs(fs - whole) > 1e-6 * std::max(1.0, whole))
    config_error(fmt::format("duration '{}' is not a positive whole number of femtoseconds", text));
  return Femtoseconds{static_cast<std::int64_t>(whole)};
}

std::string format_duration(Femtoseconds d) {
  static constexpr std::pair<std::int64_t, const char*> kUnits[] = {
      {1'000'000'000'000'000, "s"}, {1'000'000'000'000, "ms"}, {1'000'000'000, "us"},
      {1'000'000, "ns"},            {1'000, "ps"},             {1, "fs"}};
  for (const auto& [fs, name] : kUnits)
    if (d.count() % fs == 0) return fmt::format("{}{}", d.count() / fs, name);
  return fmt::format("{}fs", d.count());
}

void PipelineConfig::validate() const {
  if (vcd.empty()) config_error("paths.vcd is not set");
  if (output_dir.empty()) config_error("paths.output is not set");
  if (trigger.empty()) config_error("activity.trigger is not set");
  if (resolution.count() <= 0 || settle_delay.count() < 0) config_error("durations must be positive");
  if (!(r_shunt > 0)) config_error("power.r_shunt must be > 0");
  if (v_supply && !(*v_supply > 0)) config_error("power.v_supply must be > 0");
  if (!(split_ratio > 0 && split_ratio < 1)) config_error("model.split_ratio must be in (0, 1)");
  if (identify.budget < 1) config_error("model.budget must be >= 1");
  if (!(identify.min_relative_improvement >= 0)) config_error("model.min_improvement must be >= 0");
  if (!(clock_hz > 0)) config_error("monitor.clock_hz must be > 0");
  if (weight_width < 2 || weight_width > 32) config_error("monitor.weight_width must be in [2, 32]");
  if (output_width < 2 || output_width > 48) config_error("monitor.output_width must be in [2, 48]");
  if (max_frac_bits < 0 || max_frac_bits > 48) config_error("monitor.max_frac_bits must be in [0, 48]");
}

nlohmann::json PipelineConfig::to_json() const {
  nlohmann::json scope_list = nlohmann::json::array();
  for (const auto& s : scopes) scope_list.push_back(s.string());
  nlohmann::json ports = nlohmann::json::array();
  for (const auto& p : dut_ports) ports.push_back(fmt::format("{}:{}:{}", p.name, to_string(p.direction), p.width));
  return {{"paths", {{"vcd", vcd.string()}, {"scope", scope_list}, {"output", output_dir.string()}}},
          {"run", {{"id", id}}},
          {"activity",
           {{"trigger", trigger},
            {"resolution", format_duration(resolution)},
            {"settle_delay", format_duration(settle_delay)},
            {"merge_same_timestamp", merge_same_timestamp},
            {"include", filter.include},
            {"exclude", filter.exclude},
            {"inputs", filter.inputs},
            {"outputs", filter.outputs},
            {"internals", filter.internals},
            {"top_level", filter.top_level}}},
          {"power", {{"r_shunt", r_shunt}, {"v_supply", v_supply ? nlohmann::json(*v_supply) : nlohmann::json()}}},
          {"model",
           {{"budget", identify.budget},
            {"mode", to_string(identify.mode)},
            {"split_ratio", split_ratio},
            {"seed", seed},
            {"non_negative", identify.non_negative},
            {"exchange", identify.exchange},
            {"min_improvement", identify.min_relative_improvement},
            {"normalizer", to_string(normalizer)}}},
          {"monitor",
           {{"clock_hz", clock_hz},
            {"weight_width", weight_width},
            {"max_frac_bits", max_frac_bits},
            {"output_width", output_width}}},
          {"dut",
           {{"module", dut_module},
            {"ports", ports},
            {"clock", clock_port},
            {"reset", reset_port},
            {"reset_active_low", reset_active_low}}}};
}

PipelineConfig parse_config(std::istream& in, const fs::path& base_dir, const std::vector<std::string>& overrides) {
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    config_error(fmt::format("config line {}: {}", e.line(), e.message()));
  }

  Context ctx{base_dir, base_dir};
  if (const char* root = std::getenv("BLINK_OUTPUT_ROOT"); root && *root) ctx.output_base = root;

  PipelineConfig cfg;
  cfg.output_dir = (ctx.output_base / "blink-out").lexically_normal();
  const auto& table = setters();
  auto apply = [&](const std::string& key, const std::string& value) {
    const auto it = table.find(key);
    if (it == table.end()) config_error(fmt::format("unknown setting '{}'", key));
    it->second(cfg, value, ctx);
  };
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty()) config_error(fmt::format("setting '{}' outside a section", section));
    for (const auto& [key, value] : body) apply(section + "." + key, without_comment(value.data()));
  }
  for (const auto& o : overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos) config_error(fmt::format("override '{}' is not section.key=value", o));
    apply(trimmed(o.substr(0, eq)), o.substr(eq + 1));
  }
  if (cfg.id.empty()) cfg.id = cfg.output_dir.filename().string();
  cfg.validate();
  return cfg;
}

PipelineConfig load_config(const fs::path& path, const std::vector<std::string>& overrides) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kMissingInput, fmt::format("config file '{}' not found", path.string()));
  const fs::path base = fs::absolute(path).parent_path();
  return parse_config(in, base, overrides);
}

}  // namespace blink
