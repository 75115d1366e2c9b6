#include "bwf/errors.hpp"

namespace bwf {

const char* to_string(ErrorCode code) {
    switch (code) {
    case ErrorCode::LengthExceedsTarget: return "LengthExceedsTarget";
    case ErrorCode::DegenerateWaveform: return "DegenerateWaveform";
    case ErrorCode::NegativeSigma: return "NegativeSigma";
    case ErrorCode::BadRatios: return "BadRatios";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::NegativeTime: return "NegativeTime";
    case ErrorCode::GridTooShort: return "GridTooShort";
    case ErrorCode::InvalidParams: return "InvalidParams";
    case ErrorCode::BadRange: return "BadRange";
    case ErrorCode::LutTooLarge: return "LutTooLarge";
    case ErrorCode::NoBottomEcho: return "NoBottomEcho";
    case ErrorCode::PeaksUnresolved: return "PeaksUnresolved";
    case ErrorCode::SingularFit: return "SingularFit";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::MissingCache: return "MissingCache";
    case ErrorCode::BadConfig: return "BadConfig";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::UnbalancedMarginals: return "UnbalancedMarginals";
    case ErrorCode::Degenerate: return "Degenerate";
    case ErrorCode::ZeroColumnMass: return "ZeroColumnMass";
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::VersionUnsupported: return "VersionUnsupported";
    case ErrorCode::TruncatedFile: return "TruncatedFile";
    case ErrorCode::CountMismatch: return "CountMismatch";
    case ErrorCode::ChecksumMismatch: return "ChecksumMismatch";
    case ErrorCode::NonFiniteData: return "NonFiniteData";
    case ErrorCode::EmptyPayload: return "EmptyPayload";
    case ErrorCode::UnknownCommand: return "UnknownCommand";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::IoError: return "IoError";
    }
    return "UnknownError";
}

} // namespace bwf
