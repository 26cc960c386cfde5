#pragma once

#include <chrono>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace ryno {

enum class ErrorKind {
    Parse,
    Validation,
    Config,
    Precondition,
    Rejected,            // retryable input rejection (e.g. empty player message)
    Scoring,
    UndefinedCorrelation,
    Unparseable,         // classifier reply had no True/False token
    Replay,
    Integrity,
    Storage,
    NotFound,
    Timeout,
    Auth,
    RateLimit,
    MalformedPayload,
    Transport,
};

std::string_view to_string(ErrorKind kind);

// Root of every error thrown by ryno_core.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message, bool retryable = false)
        : std::runtime_error(message), kind_(kind), retryable_(retryable) {}

    ErrorKind kind() const noexcept { return kind_; }
    bool retryable() const noexcept { return retryable_; }

private:
    ErrorKind kind_;
    bool retryable_;
};

class ParseError : public Error {
public:
    // line is 1-based; 0 means "not tied to a line".
    ParseError(const std::string& message, std::size_t line = 0)
        : Error(ErrorKind::Parse, line ? "line " + std::to_string(line) + ": " + message : message),
          line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class ValidationError : public Error {
public:
    explicit ValidationError(const std::string& message) : Error(ErrorKind::Validation, message) {}
};

class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& message) : Error(ErrorKind::Config, message) {}
};

class PreconditionError : public Error {
public:
    explicit PreconditionError(const std::string& message) : Error(ErrorKind::Precondition, message) {}
};

class RejectedInput : public Error {
public:
    explicit RejectedInput(const std::string& message) : Error(ErrorKind::Rejected, message, true) {}
};

class ScoringError : public Error {
public:
    ScoringError(std::string item_id, const std::string& message)
        : Error(ErrorKind::Scoring, item_id.empty() ? message : item_id + " " + message),
          item_id_(std::move(item_id)) {}
    const std::string& item_id() const noexcept { return item_id_; }

private:
    std::string item_id_;
};

class UndefinedCorrelation : public Error {
public:
    explicit UndefinedCorrelation(const std::string& message)
        : Error(ErrorKind::UndefinedCorrelation, message) {}
};

class UnparseableReply : public Error {
public:
    explicit UnparseableReply(const std::string& message) : Error(ErrorKind::Unparseable, message) {}
};

class ReplayError : public Error {
public:
    ReplayError(const std::string& message, std::size_t offset)
        : Error(ErrorKind::Replay, "event " + std::to_string(offset) + ": " + message), offset_(offset) {}
    std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

class IntegrityError : public Error {
public:
    explicit IntegrityError(const std::string& message) : Error(ErrorKind::Integrity, message) {}
};

class StorageError : public Error {
public:
    explicit StorageError(const std::string& message) : Error(ErrorKind::Storage, message, true) {}
};

class NotFound : public Error {
public:
    explicit NotFound(const std::string& message) : Error(ErrorKind::NotFound, message) {}
};

// Failures talking to a chat-completion backend. Transport and timeout
// failures are retryable from the caller's point of view; the session is
// never mutated when one of these escapes the gateway.
class GatewayError : public Error {
public:
    GatewayError(ErrorKind kind, const std::string& message,
                 std::optional<std::chrono::milliseconds> retry_after = std::nullopt)
        : Error(kind, message, kind != ErrorKind::Auth && kind != ErrorKind::MalformedPayload),
          retry_after_(retry_after) {}
    std::optional<std::chrono::milliseconds> retry_after() const noexcept { return retry_after_; }

private:
    std::optional<std::chrono::milliseconds> retry_after_;
};

}  // namespace ryno
