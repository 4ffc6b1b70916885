#include "instret/error.hpp"

namespace instret {

const char* err_name(Err code) {
    switch (code) {
        case Err::MalformedHeader: return "MalformedHeader";
        case Err::TruncatedChunk: return "TruncatedChunk";
        case Err::UnsupportedFormat: return "UnsupportedFormat";
        case Err::InvalidProgram: return "InvalidProgram";
        case Err::NoValidWindow: return "NoValidWindow";
        case Err::FamilyMismatch: return "FamilyMismatch";
        case Err::TooFewTracks: return "TooFewTracks";
        case Err::PoolTooSmall: return "PoolTooSmall";
        case Err::OverlappingSplit: return "OverlappingSplit";
        case Err::ClipTooShort: return "ClipTooShort";
        case Err::ShapeMismatch: return "ShapeMismatch";
        case Err::LabelOutOfRange: return "LabelOutOfRange";
        case Err::StaleTape: return "StaleTape";
        case Err::EmptyDataset: return "EmptyDataset";
        case Err::FrozenEncoderMissing: return "FrozenEncoderMissing";
        case Err::TooManyTargets: return "TooManyTargets";
        case Err::ZeroVector: return "ZeroVector";
        case Err::NonFiniteCost: return "NonFiniteCost";
        case Err::TooLarge: return "TooLarge";
        case Err::MalformedTrial: return "MalformedTrial";
        case Err::LengthMismatch: return "LengthMismatch";
        case Err::UnknownId: return "UnknownId";
        case Err::NoRelevant: return "NoRelevant";
        case Err::EmptyLibrary: return "EmptyLibrary";
        case Err::BadConfig: return "BadConfig";
        case Err::IoError: return "IoError";
    }
    return "UnknownError";
}

}  // namespace instret
