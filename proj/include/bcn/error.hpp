#pragma once

#include <stdexcept>
#include <string>

namespace bcn {

enum class ErrorKind {
    InvalidInput,
    DegenerateVector,
    UnknownQuery,
    MissingQuerySamples,
    NonFiniteGradient,
    InvalidState,
    DegenerateLabels,
    ParseError,
    ConfigError,
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const { return kind_; }

private:
    ErrorKind kind_;
};

inline const char* to_string(ErrorKind k)
{
    switch (k) {
    case ErrorKind::InvalidInput: return "InvalidInput";
    case ErrorKind::DegenerateVector: return "DegenerateVector";
    case ErrorKind::UnknownQuery: return "UnknownQuery";
    case ErrorKind::MissingQuerySamples: return "MissingQuerySamples";
    case ErrorKind::NonFiniteGradient: return "NonFiniteGradient";
    case ErrorKind::InvalidState: return "InvalidState";
    case ErrorKind::DegenerateLabels: return "DegenerateLabels";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::ConfigError: return "ConfigError";
    }
    return "Unknown";
}

} // namespace bcn
