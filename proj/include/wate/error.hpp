#pragma once

#include <stdexcept>
#include <string>

namespace wate {

enum class ErrorCode {
    ParseError,
    MissingColumn,
    NonBinaryTreatment,
    NonNumericCell,
    IndexOutOfRange,
    DomainError,
    SingleClass,
    RankDeficientDesign,
    Diverged,
    TooFewObservations,
    ArmTooSmall,
    DegenerateWeights,
    AllZeroWeights,
    SandwichUnobtainable,
    TooFewSuccessfulReplicates,
    ConfigError,
};

const char* error_name(ErrorCode code);

// All library failures surface as this type; code() identifies the failure
// kind so replicate loops can count failures without string matching.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(error_name(code)) + ": " + message),
          code_(code) {}

    ErrorCode code() const { return code_; }

private:
    ErrorCode code_;
};

} // namespace wate

