#ifndef PIVRP_FORMAT_HPP
#define PIVRP_FORMAT_HPP

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace pivrp {

// 17 significant digits; parses back to the identical double.
std::string format_real(double value);

std::optional<double> parse_real(std::string_view token);
std::optional<long long> parse_integer(std::string_view token);

// Whitespace-separated tokens.
std::vector<std::string_view> split_tokens(std::string_view line);

}  // namespace pivrp

#endif  // PIVRP_FORMAT_HPP
