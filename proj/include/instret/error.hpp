#pragma once

#include <stdexcept>
#include <string>

namespace instret {

enum class Err {
    // midi / scores
    MalformedHeader,
    TruncatedChunk,
    UnsupportedFormat,
    InvalidProgram,
    NoValidWindow,
    // rendering / datasets
    FamilyMismatch,
    TooFewTracks,
    PoolTooSmall,
    OverlappingSplit,
    // dsp
    ClipTooShort,
    // encoders / training
    ShapeMismatch,
    LabelOutOfRange,
    StaleTape,
    EmptyDataset,
    FrozenEncoderMissing,
    // assignment / loss
    TooManyTargets,
    ZeroVector,
    NonFiniteCost,
    TooLarge,
    // evaluation
    MalformedTrial,
    LengthMismatch,
    UnknownId,
    NoRelevant,
    EmptyLibrary,
    // generic
    BadConfig,
    IoError,
};

const char* err_name(Err code);

class Error : public std::runtime_error {
public:
    Error(Err code, const std::string& message)
        : std::runtime_error(std::string(err_name(code)) + ": " + message), code_(code) {}

    Err code() const { return code_; }

private:
    Err code_;
};

[[noreturn]] inline void raise(Err code, const std::string& message) {
    throw Error(code, message);
}

inline void require(bool ok, Err code, const std::string& message) {
    if (!ok) raise(code, message);
}

}  // namespace instret
