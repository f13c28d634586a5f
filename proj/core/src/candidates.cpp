#include <fnmatch.h>

#include <algorithm>
#include <string>

#include "blink/error.hpp"
#include "blink/vcd.hpp"

namespace blink {

namespace {

std::string_view leaf_of(std::string_view hier_name) {
  const auto dot = hier_name.rfind('.');
  return dot == std::string_view::npos ? hier_name : hier_name.substr(dot + 1);
}

std::string_view scope_of(std::string_view hier_name) {
  const auto dot = hier_name.rfind('.');
  return dot == std::string_view::npos ? std::string_view{} : hier_name.substr(0, dot);
}

bool any_match(const std::vector<std::string>& patterns, std::string_view text) {
  return std::any_of(patterns.begin(), patterns.end(),
                     [&](const std::string& p) { return glob_match(p, text); });
}

}  // namespace

bool glob_match(std::string_view pattern, std::string_view text) {
  return ::fnmatch(std::string(pattern).c_str(), std::string(text).c_str(), 0) == 0;
}

void assign_port_roles(SignalTable& table, const CandidateFilter& filter) {
  for (auto& entry : table.mutable_entries()) {
    entry.port_role = PortRole::kInternal;
    for (const auto& rule : filter.role_rules) {
      const bool full = rule.pattern.find('.') != std::string::npos;
      if (glob_match(rule.pattern, full ? std::string_view(entry.hier_name) : leaf_of(entry.hier_name))) {
        entry.port_role = rule.role;
        break;
      }
    }
  }
}

std::vector<SignalEntry> resolve_candidates(const SignalTable& table,
                                            const CandidateFilter& filter) {
  std::vector<SignalEntry> out;
  for (const auto& e : table.entries()) {
    if (!filter.top_level && scope_of(e.hier_name) == table.top_scope) continue;
    const bool role_ok = (e.port_role == PortRole::kInput && filter.inputs) ||
                         (e.port_role == PortRole::kOutput && filter.outputs) ||
                         (e.port_role == PortRole::kInternal && filter.internals);
    if (!role_ok) continue;
    if (!any_match(filter.include, e.hier_name)) continue;
    if (any_match(filter.exclude, e.hier_name)) continue;
    out.push_back(e);
  }
  if (out.empty()) throw Error(ErrorCode::kEmptyCandidateSet, "no signal matches the candidate filter");
  std::sort(out.begin(), out.end(),
            [](const SignalEntry& a, const SignalEntry& b) { return a.hier_name < b.hier_name; });
  return out;
}

}  // namespace blink
