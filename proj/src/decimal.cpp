#include "ubrl/decimal.hpp"

#include "ubrl/error.hpp"

#include <array>
#include <charconv>
#include <cmath>

namespace ubrl {

std::string format_decimal(double value) {
    if (!std::isfinite(value))
        fail(ErrorKind::ParseError, "cannot serialize non-finite value");
    if (value == 0.0)
        value = 0.0; // drop the sign of -0
    std::array<char, 64> buf{};
    auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
    return std::string(buf.data(), end);
}

double parse_decimal(std::string_view text) {
    if (!text.empty() && text.front() == '+')
        text.remove_prefix(1);
    double value = 0.0;
    auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (text.empty() || ec != std::errc() || end != text.data() + text.size() || !std::isfinite(value))
        fail(ErrorKind::ParseError, "not a decimal number: '" + std::string(text) + "'");
    return value;
}

double json_decimal(const nlohmann::json& value) {
    if (value.is_string())
        return parse_decimal(value.get_ref<const std::string&>());
    if (value.is_number())
        return value.get<double>();
    fail(ErrorKind::ParseError, "expected a decimal string, got " + value.dump());
}

} // namespace ubrl
