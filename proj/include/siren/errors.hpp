#pragma once

#include <stdexcept>
#include <string>

namespace siren {

enum class ErrorCode {
    DegenerateAudio,       // all-zero or otherwise unusable signal
    InvalidRate,
    AudioTooShort,
    InvalidArgument,
    InvalidConfig,
    UntokenizableTarget,
    UnsupportedSampleRate,
    PositionOutOfRange,
    NoFeasibleInit,
    LengthMismatch,
    FrameCountMismatch,
    NonFiniteGradient,
    EmptyValidSet,
    NonConvergence,
    IoError,
};

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
    ErrorCode code() const { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

inline const char* error_code_name(ErrorCode code) {
    switch (code) {
        case ErrorCode::DegenerateAudio: return "DegenerateAudio";
        case ErrorCode::InvalidRate: return "InvalidRate";
        case ErrorCode::AudioTooShort: return "AudioTooShort";
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::InvalidConfig: return "InvalidConfig";
        case ErrorCode::UntokenizableTarget: return "UntokenizableTarget";
        case ErrorCode::UnsupportedSampleRate: return "UnsupportedSampleRate";
        case ErrorCode::PositionOutOfRange: return "PositionOutOfRange";
        case ErrorCode::NoFeasibleInit: return "NoFeasibleInit";
        case ErrorCode::LengthMismatch: return "LengthMismatch";
        case ErrorCode::FrameCountMismatch: return "FrameCountMismatch";
        case ErrorCode::NonFiniteGradient: return "NonFiniteGradient";
        case ErrorCode::EmptyValidSet: return "EmptyValidSet";
        case ErrorCode::NonConvergence: return "NonConvergence";
        case ErrorCode::IoError: return "IoError";
    }
    return "Unknown";
}

}  // namespace siren
