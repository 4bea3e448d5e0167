#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace packdim {

/// Shortest decimal text that round-trips to the same double.
std::string format_double(double value);

bool parse_size(std::string_view text, std::size_t& out);
bool parse_double(std::string_view text, double& out);

/// Whitespace-separated doubles; false on any unparsable token.
bool parse_doubles(std::string_view line, std::vector<double>& out);

/// Accepts decimal text or a fraction "p/q".
double parse_ratio(std::string_view text);

/// 64-bit FNV-1a, rendered as 16 hex digits.
std::string fnv1a_hex(std::string_view bytes);

}  // namespace packdim
