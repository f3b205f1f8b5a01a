#pragma once

#include <stdexcept>
#include <string>

namespace hmg {

enum class ErrorKind {
    EvalAtPole,
    ImproperTF,
    Unbounded,
    FvtInvalid,
    DegenerateLimits,
    NegativeDroop,
    SingularSystem,
    NumericalDivergence,
    NotSettled,
    InvalidArgument,
    Config,
};

inline const char* to_string(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::EvalAtPole: return "EvalAtPole";
    case ErrorKind::ImproperTF: return "ImproperTF";
    case ErrorKind::Unbounded: return "Unbounded";
    case ErrorKind::FvtInvalid: return "FvtInvalid";
    case ErrorKind::DegenerateLimits: return "DegenerateLimits";
    case ErrorKind::NegativeDroop: return "NegativeDroop";
    case ErrorKind::SingularSystem: return "SingularSystem";
    case ErrorKind::NumericalDivergence: return "NumericalDivergence";
    case ErrorKind::NotSettled: return "NotSettled";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::Config: return "Config";
    }
    return "Unknown";
}

/// Every failure raised by the library carries one of the ErrorKind tags so
/// callers (the CLI in particular) can map it to an exit status.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

}  // namespace hmg
