#pragma once

#include <stdexcept>
#include <string>

namespace dmimo {

/// Broad failure classes; the CLI maps them to stable exit codes
/// (0 success, 2 parse, 3 validation, 4 numerical, 5 verifier).
enum class ErrorClass {
    Parse,
    Validation,
    Numerical,
};

/// Fine-grained error kinds used across the library.
enum class ErrorKind {
    ParseError,
    RankDeficient,
    ConvergenceFailure,
    LengthMismatch,
    DimensionMismatch,
    NotProper,
    NotDiagonal,
    TooFewBlocks,
    DiagProductNotUnit,
    PowerViolation,
};

inline ErrorClass classify(ErrorKind k) {
    switch (k) {
    case ErrorKind::ParseError:
        return ErrorClass::Parse;
    case ErrorKind::ConvergenceFailure:
    case ErrorKind::PowerViolation:
        return ErrorClass::Numerical;
    default:
        return ErrorClass::Validation;
    }
}

inline const char* kind_name(ErrorKind k) {
    switch (k) {
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::RankDeficient: return "RankDeficient";
    case ErrorKind::ConvergenceFailure: return "ConvergenceFailure";
    case ErrorKind::LengthMismatch: return "LengthMismatch";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::NotProper: return "NotProper";
    case ErrorKind::NotDiagonal: return "NotDiagonal";
    case ErrorKind::TooFewBlocks: return "TooFewBlocks";
    case ErrorKind::DiagProductNotUnit: return "DiagProductNotUnit";
    case ErrorKind::PowerViolation: return "PowerViolation";
    }
    return "UnknownError";
}

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(kind_name(kind)) + ": " + what), kind_(kind) {}

    ErrorKind kind() const { return kind_; }
    ErrorClass error_class() const { return classify(kind_); }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void raise(ErrorKind kind, const std::string& what) {
    throw Error(kind, what);
}

} // namespace dmimo
