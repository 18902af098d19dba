#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace tracer {

using SystemTime = std::chrono::system_clock::time_point;

// "2024-05-01T12:30:00Z"
std::string format_iso8601(SystemTime t);
// 14-digit archive timestamp, "20240501123000".
std::string format_timestamp14(SystemTime t);
// Accepts RFC 3339 date-times (any offset, optional fraction).
std::optional<SystemTime> parse_rfc3339(std::string_view text);
// Converts a WARC-Date value to its 14-digit form; returns nullopt if malformed.
std::optional<std::string> timestamp14_from_iso(std::string_view iso);

// Milliseconds on the steady clock since an arbitrary process-wide origin.
std::int64_t monotonic_ms();

} // namespace tracer
