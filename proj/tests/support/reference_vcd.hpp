#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace blink::testing {

/// Whole-buffer VCD reader written independently of blink::VcdReader.
/// Values are stored as strings of exactly `width` characters from
/// "01xz", MSB first, already extended.
struct RefVar {
  std::string id;
  std::string name;  // full dotted path
  unsigned width = 1;
};

struct RefEvent {
  std::int64_t time = 0;
  std::string id;
  std::string value;
};

struct RefVcd {
  std::string timescale;
  std::vector<RefVar> vars;
  std::vector<RefEvent> events;

  const RefVar* by_name(std::string_view name) const;
  const RefVar* by_id(std::string_view id) const;
};

RefVcd reference_parse(std::string_view text);

}  // namespace blink::testing
