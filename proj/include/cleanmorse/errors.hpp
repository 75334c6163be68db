#pragma once
// Error type shared by all modules. The code names the failure kind; the
// message carries module-tagged context.
#include <stdexcept>
#include <string>

namespace cleanmorse {

enum class ErrorCode {
    UnknownSetup,
    OutOfAtlas,
    ChartRadiusTooLarge,
    NoCapture,
    EpsilonTooLarge,
    TailsTooShort,
    SpectralGapAmbiguous,
    EmptyFiber,
    WindowTooShort,
    NothingToObstruct,
    NotTransverse,
    UnstableCount,
    MissingModuli,
    InvalidCollection,
    IncomparableContractions,
    IncompleteData,
    NotAComplex,
    MissingSeries,
    InvalidConfig,
    NumericalFailure,
};

const char* error_name(ErrorCode code);

class MorseError : public std::runtime_error {
public:
    MorseError(ErrorCode code, const std::string& msg)
        : std::runtime_error(std::string(error_name(code)) + ": " + msg), code_(code) {}
    ErrorCode code() const { return code_; }

private:
    ErrorCode code_;
};

}  // namespace cleanmorse
