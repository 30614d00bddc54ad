#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace agora {

/// UTC instant, milliseconds since the Unix epoch.
struct Timestamp {
  std::int64_t ms = 0;

  auto operator<=>(const Timestamp&) const = default;

  Timestamp plus_ms(std::int64_t delta) const { return Timestamp{ms + delta}; }
};

/// "2021-02-09T13:45:27.000Z"
std::string to_iso8601(Timestamp t);
std::optional<Timestamp> parse_iso8601(std::string_view text);

}  // namespace agora
