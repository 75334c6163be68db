#include "cleanmorse/errors.hpp"

namespace cleanmorse {

const char* error_name(ErrorCode code) {
    switch (code) {
    case ErrorCode::UnknownSetup: return "UnknownSetup";
    case ErrorCode::OutOfAtlas: return "OutOfAtlas";
    case ErrorCode::ChartRadiusTooLarge: return "ChartRadiusTooLarge";
    case ErrorCode::NoCapture: return "NoCapture";
    case ErrorCode::EpsilonTooLarge: return "EpsilonTooLarge";
    case ErrorCode::TailsTooShort: return "TailsTooShort";
    case ErrorCode::SpectralGapAmbiguous: return "SpectralGapAmbiguous";
    case ErrorCode::EmptyFiber: return "EmptyFiber";
    case ErrorCode::WindowTooShort: return "WindowTooShort";
    case ErrorCode::NothingToObstruct: return "NothingToObstruct";
    case ErrorCode::NotTransverse: return "NotTransverse";
    case ErrorCode::UnstableCount: return "UnstableCount";
    case ErrorCode::MissingModuli: return "MissingModuli";
    case ErrorCode::InvalidCollection: return "InvalidCollection";
    case ErrorCode::IncomparableContractions: return "IncomparableContractions";
    case ErrorCode::IncompleteData: return "IncompleteData";
    case ErrorCode::NotAComplex: return "NotAComplex";
    case ErrorCode::MissingSeries: return "MissingSeries";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::NumericalFailure: return "NumericalFailure";
    }
    return "Unknown";
}

}  // namespace cleanmorse
