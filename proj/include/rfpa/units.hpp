#pragma once

#include <cctype>
#include <charconv>
#include <optional>
#include <string>
#include <string_view>
#include <system_error>

namespace rfpa {

namespace detail {

inline char lower(char c) {
  return static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
}

inline bool iequals(std::string_view a, std::string_view b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (lower(a[i]) != lower(b[i])) return false;
  return true;
}

inline std::string to_lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = lower(c);
  return out;
}

}  // namespace detail

// Parses a number with an optional SPICE scale suffix
// (f p n u m k Meg G, case-insensitive). The suffix is folded into the
// decimal exponent before conversion, so "22n" is bit-identical to 22e-9.
inline std::optional<double> parse_value(std::string_view text) {
  std::size_t i = 0;
  std::string significand;
  if (i < text.size() && (text[i] == '+' || text[i] == '-'))
    significand += text[i++];
  std::size_t digits = 0;
  while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) {
    significand += text[i++];
    ++digits;
  }
  if (i < text.size() && text[i] == '.') {
    significand += text[i++];
    while (i < text.size() &&
           std::isdigit(static_cast<unsigned char>(text[i]))) {
      significand += text[i++];
      ++digits;
    }
  }
  if (digits == 0) return std::nullopt;

  long exponent = 0;
  if (i < text.size() && (text[i] == 'e' || text[i] == 'E')) {
    std::size_t j = i + 1;
    if (j < text.size() && (text[j] == '+' || text[j] == '-')) ++j;
    if (j < text.size() && std::isdigit(static_cast<unsigned char>(text[j]))) {
      auto [ptr, ec] =
          std::from_chars(text.data() + (text[i + 1] == '+' ? i + 2 : i + 1),
                          text.data() + text.size(), exponent);
      if (ec != std::errc()) return std::nullopt;
      i = static_cast<std::size_t>(ptr - text.data());
    }
  }

  std::string suffix = detail::to_lower(text.substr(i));
  if (suffix == "f") exponent -= 15;
  else if (suffix == "p") exponent -= 12;
  else if (suffix == "n") exponent -= 9;
  else if (suffix == "u") exponent -= 6;
  else if (suffix == "m") exponent -= 3;
  else if (suffix == "k") exponent += 3;
  else if (suffix == "meg") exponent += 6;
  else if (suffix == "g") exponent += 9;
  else if (!suffix.empty()) return std::nullopt;

  std::string canonical = significand + "e" + std::to_string(exponent);
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(canonical.data(),
                                   canonical.data() + canonical.size(), value);
  if (ec != std::errc() || ptr != canonical.data() + canonical.size())
    return std::nullopt;
  return value;
}

// Shortest text that parses back to exactly `value`.
inline std::string format_exact(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, ptr);
}

}  // namespace rfpa
