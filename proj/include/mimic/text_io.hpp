#pragma once

// Small helpers shared by the line-oriented text formats.

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace mimic::text {

/// 17 significant digits, enough to round-trip any double exactly.
std::string format_double(double value);

/// Strict parse: the whole token must be consumed. Throws ParseError tagged with `line`.
double parse_double(std::string_view token, std::size_t line);
long parse_long(std::string_view token, std::size_t line);
bool parse_bool(std::string_view token, std::size_t line);

/// Splits on a single separator character; empty fields are preserved.
std::vector<std::string_view> split(std::string_view text, char separator);

/// Parses `key=value` and checks the key. Throws ParseError on mismatch.
std::string_view expect_field(std::string_view token, std::string_view key, std::size_t line);

/// Strips a trailing '\r' so files written on Windows still parse.
std::string_view trim_line(std::string_view line);

}  // namespace mimic::text
