#include "ryno/error.hpp"

namespace ryno {

std::string_view to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::Parse: return "parse";
        case ErrorKind::Validation: return "validation";
        case ErrorKind::Config: return "config";
        case ErrorKind::Precondition: return "precondition";
        case ErrorKind::Rejected: return "rejected";
        case ErrorKind::Scoring: return "scoring";
        case ErrorKind::UndefinedCorrelation: return "undefined_correlation";
        case ErrorKind::Unparseable: return "unparseable";
        case ErrorKind::Replay: return "replay";
        case ErrorKind::Integrity: return "integrity";
        case ErrorKind::Storage: return "storage";
        case ErrorKind::NotFound: return "not_found";
        case ErrorKind::Timeout: return "timeout";
        case ErrorKind::Auth: return "auth";
        case ErrorKind::RateLimit: return "rate_limit";
        case ErrorKind::MalformedPayload: return "malformed_payload";
        case ErrorKind::Transport: return "transport";
    }
    return "unknown";
}

}  // namespace ryno
