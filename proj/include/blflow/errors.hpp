#pragma once
#include <stdexcept>
#include <string>

namespace blflow {

// Base class for everything this library throws on purpose.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Bad user input: config files, CLI arguments, malformed data files.
// The CLI maps these to exit code 2.
struct ConfigError : Error { using Error::Error; };

// Presentation DSL parse failure, carries position info in the message.
struct SyntaxError : ConfigError {
    SyntaxError(const std::string& msg, int line, int col)
        : ConfigError(msg + " (line " + std::to_string(line) + ", col " + std::to_string(col) + ")"),
          line(line), col(col) {}
    int line, col;
};

struct UnknownGenerator : ConfigError { using ConfigError::ConfigError; };

// Verification-level failures. The CLI maps these to exit code 1.
struct VerifyError : Error { using Error::Error; };

struct SeparatrixError : VerifyError { using VerifyError::VerifyError; };
struct MaxTimeExceeded : VerifyError { using VerifyError::VerifyError; };
struct DomainExit : VerifyError { using VerifyError::VerifyError; };
struct WrongBoundary : VerifyError { using VerifyError::VerifyError; };
struct InconsistentExponents : VerifyError { using VerifyError::VerifyError; };
struct OverflowError : VerifyError { using VerifyError::VerifyError; };
struct IllConditioned : VerifyError { using VerifyError::VerifyError; };
struct NotHyperbolic : VerifyError { using VerifyError::VerifyError; };
struct NotInvertible : VerifyError { using VerifyError::VerifyError; };

// Thrown when a list of hyperbolic matrices admits no shared stable/unstable
// splitting; swap_detected marks the special case where the offending matrix
// exchanges the two subspaces instead of preserving them.
struct NoCommonSplitting : VerifyError {
    explicit NoCommonSplitting(const std::string& msg, int offending = -1, bool swap = false)
        : VerifyError(msg), offending_index(offending), swap_detected(swap) {}
    int offending_index;
    bool swap_detected;
};
struct NotSPD : VerifyError { using VerifyError::VerifyError; };
struct DimensionMismatch : VerifyError { using VerifyError::VerifyError; };
struct SignViolation : VerifyError { using VerifyError::VerifyError; };

} // namespace blflow
