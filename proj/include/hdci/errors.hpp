#pragma once

#include <stdexcept>
#include <string>

namespace hdci {

enum class ErrorCode {
    InvalidArgument,
    DimensionMismatch,
    NonSymmetricOmega,
    MiddleRegimeLoading,
    NotSPD,
    NotPSD,
    OutOfRange,
    ZeroColumn,
    DegenerateResponse,
    MaxIterations,
    InfeasibleScoreQP,
    DegenerateSplit,
    OracleTooLarge,
    BadEigenOrder,
    ZeroKappa,
    DivergentChiSq,
    GapDiverges,
    ConfigError,
    IoError,
};

const char* to_string(ErrorCode code);

// Every failure raised by the library carries a code so callers (the CLI in
// particular) can map it onto an exit status without parsing messages.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

    // Solver-side failures, as opposed to bad input or configuration.
    bool is_solver_failure() const noexcept {
        return code_ == ErrorCode::MaxIterations || code_ == ErrorCode::InfeasibleScoreQP ||
               code_ == ErrorCode::DegenerateResponse || code_ == ErrorCode::DegenerateSplit;
    }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
    throw Error(code, what);
}

}  // namespace hdci
