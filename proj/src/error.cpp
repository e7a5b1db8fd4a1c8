#include "wate/error.hpp"

namespace wate {

const char* error_name(ErrorCode code) {
    switch (code) {
        case ErrorCode::ParseError: return "ParseError";
        case ErrorCode::MissingColumn: return "MissingColumn";
        case ErrorCode::NonBinaryTreatment: return "NonBinaryTreatment";
        case ErrorCode::NonNumericCell: return "NonNumericCell";
        case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
        case ErrorCode::DomainError: return "DomainError";
        case ErrorCode::SingleClass: return "SingleClass";
        case ErrorCode::RankDeficientDesign: return "RankDeficientDesign";
        case ErrorCode::Diverged: return "Diverged";
        case ErrorCode::TooFewObservations: return "TooFewObservations";
        case ErrorCode::ArmTooSmall: return "ArmTooSmall";
        case ErrorCode::DegenerateWeights: return "DegenerateWeights";
        case ErrorCode::AllZeroWeights: return "AllZeroWeights";
        case ErrorCode::SandwichUnobtainable: return "SandwichUnobtainable";
        case ErrorCode::TooFewSuccessfulReplicates: return "TooFewSuccessfulReplicates";
        case ErrorCode::ConfigError: return "ConfigError";
    }
    return "UnknownError";
}

} // namespace wate
