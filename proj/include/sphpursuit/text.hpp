#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace sphpursuit {

/// Shortest decimal form that parses back to the same double.
std::string format_double(double v);

/// Strict parse of the whole field; throws std::invalid_argument.
double parse_double(std::string_view s);
int parse_int(std::string_view s);

std::vector<std::string_view> split(std::string_view line, char sep);
std::string_view trim(std::string_view s);

}  // namespace sphpursuit
