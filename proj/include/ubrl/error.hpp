#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ubrl {

enum class ErrorKind {
    InvalidMdp,
    PolicyUndefined,
    WrongFamily,
    EmptyDistribution,
    InvalidAlpha,
    InvalidRange,
    ExplosionCap,
    BinExplosion,
    ConfigError,
    SupportTooNarrow,
    InvalidGeometry,
    InvalidParams,
    StorageFull,
    Conflict,
    NotFound,
    RangeError,
    OffGrid,
    ParseError,
};

std::string_view to_string(ErrorKind kind);

/// Every domain failure in the library is reported through this type; the
/// kind is what callers (CLI exit codes, HTTP status mapping) switch on.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
    throw Error(kind, message);
}

} // namespace ubrl
