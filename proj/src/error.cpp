#include "hmflow/error.hpp"

namespace hmflow {

std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::PointOutsideTube: return "PointOutsideTube";
        case ErrorCode::PointNotOnManifold: return "PointNotOnManifold";
        case ErrorCode::TimeOutOfRange: return "TimeOutOfRange";
        case ErrorCode::GridTooCoarse: return "GridTooCoarse";
        case ErrorCode::StepTooLarge: return "StepTooLarge";
        case ErrorCode::HorizonMismatch: return "HorizonMismatch";
        case ErrorCode::BlowUp: return "BlowUp";
        case ErrorCode::ShapeMismatch: return "ShapeMismatch";
        case ErrorCode::NoContraction: return "NoContraction";
        case ErrorCode::TerminalNotOnTarget: return "TerminalNotOnTarget";
        case ErrorCode::InsufficientHistory: return "InsufficientHistory";
        case ErrorCode::UnsupportedReduction: return "UnsupportedReduction";
        case ErrorCode::FieldLeftTube: return "FieldLeftTube";
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::Config: return "Config";
        case ErrorCode::Io: return "Io";
    }
    return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

void fail(ErrorCode code, const std::string& message) { throw Error(code, message); }

}  // namespace hmflow
