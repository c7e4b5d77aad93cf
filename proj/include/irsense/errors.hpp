// SPDX-License-Identifier: Apache-2.0
//
// irsense: IRS-assisted NLOS sensing with OFDM pulse trains
// ------------------------------------------------------------------------

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace irsense {

enum class ErrorCode {
    InvalidArgument,
    DegenerateGeometry,
    OutOfRange,
    DuplicateParameter,
    InvalidPartition,
    DimensionMismatch,
    InsufficientSampling,
    UniquenessViolated,
    RankDeficient,
    IllConditionedShift,
    AmbiguousAlignment,
    NoFeasibleGrid,
    NonIdentifiable,
    RankOneChannel,
    UnwrapInfeasible,
    SingularFim,
    ConfigError,
    IoError,
};

std::string_view to_string(ErrorCode code);

/// Every failure raised by the library carries a machine-checkable code.
class SenseError : public std::runtime_error {
public:
    SenseError(ErrorCode code, const std::string& what);

    ErrorCode code() const noexcept { return code_; }

    /// Same error with `context` prefixed to the message.
    SenseError with_context(const std::string& context) const;

private:
    ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& what);

} // namespace irsense
