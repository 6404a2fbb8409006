#pragma once

#include <stdexcept>
#include <string>

namespace htlab {

enum class Errc {
  Ok = 0,
  InvalidArgument,
  ParseError,
  IoError,
  NonPositiveWeight,
  WeightsNotNormalized,
  DimensionMismatch,
  SingularMatrix,
  DegenerateFixedPoint,
  WrongDimension,
  ZeroVector,
  DegenerateParticles,
  NoRootBelowCap,
  AlphaNotNegative,
  NonStationaryResidual,
  Overflow,
  ExcessiveTruncationFailures,
  DegenerateSample,
  EmptyUpperTail,
  TooFewExceedances,
  BinningMismatch,
  SAboveChi,
  ExplosionGuard,
  PreconditionFailed,
  CheckFailed,
  Internal,
};

const char* errc_name(Errc c);

class Error : public std::runtime_error {
 public:
  Error(Errc code, std::string message)
      : std::runtime_error(std::move(message)), code_(code) {}
  Errc code() const { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace htlab
