// SPDX-License-Identifier: Apache-2.0
//
// irsense: IRS-assisted NLOS sensing with OFDM pulse trains
// ------------------------------------------------------------------------

#include "irsense/errors.hpp"

namespace irsense {

std::string_view to_string(ErrorCode code)
{
    switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::DegenerateGeometry: return "DegenerateGeometry";
    case ErrorCode::OutOfRange: return "OutOfRange";
    case ErrorCode::DuplicateParameter: return "DuplicateParameter";
    case ErrorCode::InvalidPartition: return "InvalidPartition";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::InsufficientSampling: return "InsufficientSampling";
    case ErrorCode::UniquenessViolated: return "UniquenessViolated";
    case ErrorCode::RankDeficient: return "RankDeficient";
    case ErrorCode::IllConditionedShift: return "IllConditionedShift";
    case ErrorCode::AmbiguousAlignment: return "AmbiguousAlignment";
    case ErrorCode::NoFeasibleGrid: return "NoFeasibleGrid";
    case ErrorCode::NonIdentifiable: return "NonIdentifiable";
    case ErrorCode::RankOneChannel: return "RankOneChannel";
    case ErrorCode::UnwrapInfeasible: return "UnwrapInfeasible";
    case ErrorCode::SingularFim: return "SingularFim";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::IoError: return "IoError";
    }
    return "Unknown";
}

SenseError::SenseError(ErrorCode code, const std::string& what)
    : std::runtime_error(what), code_(code)
{
}

SenseError SenseError::with_context(const std::string& context) const
{
    return SenseError(code_, context + ": " + what());
}

void fail(ErrorCode code, const std::string& what)
{
    throw SenseError(code, std::string(to_string(code)) + ": " + what);
}

} // namespace irsense
