#include "core/error.hpp"

namespace htlab {

const char* errc_name(Errc c) {
  switch (c) {
    case Errc::Ok: return "Ok";
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::ParseError: return "ParseError";
    case Errc::IoError: return "IoError";
    case Errc::NonPositiveWeight: return "NonPositiveWeight";
    case Errc::WeightsNotNormalized: return "WeightsNotNormalized";
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::SingularMatrix: return "SingularMatrix";
    case Errc::DegenerateFixedPoint: return "DegenerateFixedPoint";
    case Errc::WrongDimension: return "WrongDimension";
    case Errc::ZeroVector: return "ZeroVector";
    case Errc::DegenerateParticles: return "DegenerateParticles";
    case Errc::NoRootBelowCap: return "NoRootBelowCap";
    case Errc::AlphaNotNegative: return "AlphaNotNegative";
    case Errc::NonStationaryResidual: return "NonStationaryResidual";
    case Errc::Overflow: return "Overflow";
    case Errc::ExcessiveTruncationFailures: return "ExcessiveTruncationFailures";
    case Errc::DegenerateSample: return "DegenerateSample";
    case Errc::EmptyUpperTail: return "EmptyUpperTail";
    case Errc::TooFewExceedances: return "TooFewExceedances";
    case Errc::BinningMismatch: return "BinningMismatch";
    case Errc::SAboveChi: return "SAboveChi";
    case Errc::ExplosionGuard: return "ExplosionGuard";
    case Errc::PreconditionFailed: return "PreconditionFailed";
    case Errc::CheckFailed: return "CheckFailed";
    case Errc::Internal: return "Internal";
  }
  return "Unknown";
}

}  // namespace htlab
