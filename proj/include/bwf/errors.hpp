#pragma once

#include <stdexcept>
#include <string>

namespace bwf {

/// Failure codes carried by every bwf::Error. CLI maps these to
/// machine-readable error lines and nonzero exit status.
enum class ErrorCode {
    // waveform / metrics
    LengthExceedsTarget,
    DegenerateWaveform,
    NegativeSigma,
    BadRatios,
    LengthMismatch,
    NegativeTime,
    // simulator
    GridTooShort,
    InvalidParams,
    BadRange,
    // inversion
    LutTooLarge,
    NoBottomEcho,
    PeaksUnresolved,
    SingularFit,
    // network
    ShapeMismatch,
    MissingCache,
    BadConfig,
    EmptyDataset,
    // transport
    UnbalancedMarginals,
    Degenerate,
    ZeroColumnMass,
    // file formats
    BadMagic,
    VersionUnsupported,
    TruncatedFile,
    CountMismatch,
    ChecksumMismatch,
    NonFiniteData,
    // csv / cli
    EmptyPayload,
    UnknownCommand,
    ConfigError,
    IoError,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
    throw Error(code, message);
}

} // namespace bwf
