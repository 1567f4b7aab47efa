#include "ubrl/error.hpp"

namespace ubrl {

std::string_view to_string(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::InvalidMdp: return "InvalidMdp";
    case ErrorKind::PolicyUndefined: return "PolicyUndefined";
    case ErrorKind::WrongFamily: return "WrongFamily";
    case ErrorKind::EmptyDistribution: return "EmptyDistribution";
    case ErrorKind::InvalidAlpha: return "InvalidAlpha";
    case ErrorKind::InvalidRange: return "InvalidRange";
    case ErrorKind::ExplosionCap: return "ExplosionCap";
    case ErrorKind::BinExplosion: return "BinExplosion";
    case ErrorKind::ConfigError: return "ConfigError";
    case ErrorKind::SupportTooNarrow: return "SupportTooNarrow";
    case ErrorKind::InvalidGeometry: return "InvalidGeometry";
    case ErrorKind::InvalidParams: return "InvalidParams";
    case ErrorKind::StorageFull: return "StorageFull";
    case ErrorKind::Conflict: return "Conflict";
    case ErrorKind::NotFound: return "NotFound";
    case ErrorKind::RangeError: return "RangeError";
    case ErrorKind::OffGrid: return "OffGrid";
    case ErrorKind::ParseError: return "ParseError";
    }
    return "Unknown";
}

} // namespace ubrl
