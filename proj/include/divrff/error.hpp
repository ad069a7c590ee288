#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace divrff {

enum class ErrorKind {
    Bounds,
    NotDetected,
    SyncFailed,
    EstimationFailed,
    DegenerateModel,
    DegenerateDenominator,
    DegenerateInput,
    Length,
    EmptyCandidates,
    Train,
    Predict,
    Fuse,
    Eval,
    Io,
    Config,
};

std::string_view to_string(ErrorKind kind);

/// Single exception type for the library; `kind()` tells the failure apart.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

inline std::string_view to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::Bounds: return "BoundsError";
        case ErrorKind::NotDetected: return "NotDetected";
        case ErrorKind::SyncFailed: return "SyncFailed";
        case ErrorKind::EstimationFailed: return "EstimationFailed";
        case ErrorKind::DegenerateModel: return "DegenerateModel";
        case ErrorKind::DegenerateDenominator: return "DegenerateDenominator";
        case ErrorKind::DegenerateInput: return "DegenerateInput";
        case ErrorKind::Length: return "LengthError";
        case ErrorKind::EmptyCandidates: return "EmptyCandidates";
        case ErrorKind::Train: return "TrainError";
        case ErrorKind::Predict: return "PredictError";
        case ErrorKind::Fuse: return "FuseError";
        case ErrorKind::Eval: return "EvalError";
        case ErrorKind::Io: return "IoError";
        case ErrorKind::Config: return "ConfigError";
    }
    return "Error";
}

}  // namespace divrff
