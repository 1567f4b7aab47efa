#pragma once

// Decimal-string numerics used by every JSON format in the project.
// Doubles are written in shortest round-trip form, so parse(format(x)) == x
// bit for bit.

#include <json.hpp>

#include <string>
#include <string_view>

namespace ubrl {

std::string format_decimal(double value);

/// Throws Error(ParseError) on anything that is not a complete decimal literal.
double parse_decimal(std::string_view text);

/// Accepts either a decimal string or a JSON number.
double json_decimal(const nlohmann::json& value);

} // namespace ubrl
