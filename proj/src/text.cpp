#include "packdim/text.hpp"

#include <array>
#include <cctype>
#include <charconv>
#include <cstdio>

#include "packdim/error.hpp"

namespace packdim {

std::string format_double(double value) {
  std::array<char, 64> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  return std::string(buf.data(), end);
}

bool parse_size(std::string_view text, std::size_t& out) {
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  return ec == std::errc{} && ptr == text.data() + text.size();
}

bool parse_double(std::string_view text, double& out) {
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  return ec == std::errc{} && ptr == text.data() + text.size();
}

bool parse_doubles(std::string_view line, std::vector<double>& out) {
  out.clear();
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    if (i == line.size()) break;
    std::size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
    double v = 0.0;
    if (!parse_double(line.substr(i, j - i), v)) return false;
    out.push_back(v);
    i = j;
  }
  return true;
}

double parse_ratio(std::string_view text) {
  const auto slash = text.find('/');
  double value = 0.0;
  if (slash == std::string_view::npos) {
    if (!parse_double(text, value)) throw ParameterError("not a number: '" + std::string(text) + "'");
    return value;
  }
  double num = 0.0;
  double den = 0.0;
  if (!parse_double(text.substr(0, slash), num) || !parse_double(text.substr(slash + 1), den) || den == 0.0) {
    throw ParameterError("not a fraction: '" + std::string(text) + "'");
  }
  return num / den;
}

std::string fnv1a_hex(std::string_view bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  std::array<char, 17> buf{};
  std::snprintf(buf.data(), buf.size(), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf.data(), 16);
}

}  // namespace packdim
