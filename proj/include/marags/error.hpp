#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace marags {

enum class ErrorKind {
    FileUnreadable,
    EmptyDataset,
    TaskViolation,
    EmptyCorpus,
    ServiceUnavailable,
    DeadlineExceeded,
    MalformedResponse,
    DimensionMismatch,
    LengthMismatch,
    RaggedInput,
    UnknownFunction,
    ArityMismatch,
    BadLiteral,
    BadBody,
    EmptyRecords,
    UnwritableDirectory,
    InvalidConfig,
};

std::string_view to_string(ErrorKind kind);

/// Every failure the library raises carries a machine-readable kind so
/// callers can map it onto degraded outcomes (e.g. a missing answer).
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message, int attempts = 0)
        : std::runtime_error(std::string(to_string(kind)) + ": " + message),
          kind_(kind),
          attempts_(attempts) {}

    ErrorKind kind() const noexcept { return kind_; }

    // Number of transport attempts made before giving up (remote calls only).
    int attempts() const noexcept { return attempts_; }

private:
    ErrorKind kind_;
    int attempts_;
};

}  // namespace marags
