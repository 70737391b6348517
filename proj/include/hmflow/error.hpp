#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace hmflow {

enum class ErrorCode {
    PointOutsideTube,
    PointNotOnManifold,
    TimeOutOfRange,
    GridTooCoarse,
    StepTooLarge,
    HorizonMismatch,
    BlowUp,
    ShapeMismatch,
    NoContraction,
    TerminalNotOnTarget,
    InsufficientHistory,
    UnsupportedReduction,
    FieldLeftTube,
    InvalidArgument,
    Config,
    Io,
};

std::string_view to_string(ErrorCode code);

/// Exception carrying a machine-readable code; the CLI maps codes to exit statuses.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message);

    [[nodiscard]] ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& message);

}  // namespace hmflow
