#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace hrfna {

enum class ErrorCode {
    InvalidModulus,
    NotCoprime,
    OutOfRange,
    ChannelCountMismatch,
    WouldWrap,
    AmbiguousSign,
    EmptyInput,
    LengthMismatch,
    DimensionMismatch,
    NonDyadicStep,
    UnsupportedRhs,
    InvalidPolicy,
    InvalidArgument,
    ParseError,
    ConfigError,
    IoError,
};

inline const char* to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::InvalidModulus: return "InvalidModulus";
        case ErrorCode::NotCoprime: return "NotCoprime";
        case ErrorCode::OutOfRange: return "OutOfRange";
        case ErrorCode::ChannelCountMismatch: return "ChannelCountMismatch";
        case ErrorCode::WouldWrap: return "WouldWrap";
        case ErrorCode::AmbiguousSign: return "AmbiguousSign";
        case ErrorCode::EmptyInput: return "EmptyInput";
        case ErrorCode::LengthMismatch: return "LengthMismatch";
        case ErrorCode::DimensionMismatch: return "DimensionMismatch";
        case ErrorCode::NonDyadicStep: return "NonDyadicStep";
        case ErrorCode::UnsupportedRhs: return "UnsupportedRhs";
        case ErrorCode::InvalidPolicy: return "InvalidPolicy";
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::ParseError: return "ParseError";
        case ErrorCode::ConfigError: return "ConfigError";
        case ErrorCode::IoError: return "IoError";
    }
    return "Unknown";
}

/// Base exception for every contract violation raised by the library.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

/// Raised by make_modulus_set when two channels share a factor.
class NotCoprimeError : public Error {
public:
    NotCoprimeError(std::size_t i, std::size_t j, std::uint64_t gcd)
        : Error(ErrorCode::NotCoprime,
                "moduli " + std::to_string(i) + " and " + std::to_string(j) + " share factor " +
                    std::to_string(gcd)),
          first(i), second(j), common(gcd) {}

    std::size_t first;
    std::size_t second;
    std::uint64_t common;
};

/// Parse failure with an optional 1-based line number (0 when not line oriented).
class ParseError : public Error {
public:
    ParseError(std::size_t line_no, const std::string& message)
        : Error(ErrorCode::ParseError,
                line_no ? "line " + std::to_string(line_no) + ": " + message : message),
          line(line_no) {}

    std::size_t line;
};

}  // namespace hrfna
