#include "mimic/text_io.hpp"

#include <charconv>
#include <cmath>

#include "mimic/error.hpp"

namespace mimic::text {

std::string format_double(double value) {
  char buffer[64];
  auto [end, ec] = std::to_chars(buffer, buffer + sizeof(buffer), value, std::chars_format::general, 17);
  if (ec != std::errc{}) throw Error("format_double: buffer too small");
  return std::string(buffer, end);
}

double parse_double(std::string_view token, std::size_t line) {
  double value = 0.0;
  const char* first = token.data();
  const char* last = token.data() + token.size();
  // from_chars rejects a leading '+', which some writers emit.
  if (first != last && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (token.empty() || ec != std::errc{} || ptr != last) {
    throw ParseError(line, "expected a number, got '" + std::string(token) + "'");
  }
  return value;
}

long parse_long(std::string_view token, std::size_t line) {
  long value = 0;
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
  if (token.empty() || ec != std::errc{} || ptr != token.data() + token.size()) {
    throw ParseError(line, "expected an integer, got '" + std::string(token) + "'");
  }
  return value;
}

bool parse_bool(std::string_view token, std::size_t line) {
  if (token == "true") return true;
  if (token == "false") return false;
  throw ParseError(line, "expected true or false, got '" + std::string(token) + "'");
}

std::vector<std::string_view> split(std::string_view text, char separator) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = text.find(separator, start);
    if (pos == std::string_view::npos) {
      fields.push_back(text.substr(start));
      return fields;
    }
    fields.push_back(text.substr(start, pos - start));
    start = pos + 1;
  }
}

std::string_view expect_field(std::string_view token, std::string_view key, std::size_t line) {
  const std::size_t eq = token.find('=');
  if (eq == std::string_view::npos || token.substr(0, eq) != key) {
    throw ParseError(line, "expected '" + std::string(key) + "=<value>', got '" + std::string(token) + "'");
  }
  return token.substr(eq + 1);
}

std::string_view trim_line(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  return line;
}

}  // namespace mimic::text
