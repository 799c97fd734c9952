#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace pvcast {

enum class Errc {
  // input / contract violations
  MissingColumn,
  NonNumericCell,
  EmptyTable,
  KNotSatisfiable,
  UnknownColumn,
  DisjointCoverage,
  InvalidLocation,
  InsufficientData,
  InvalidParam,
  DegenerateData,
  DimensionMismatch,
  EmptySpace,
  InvalidConfig,
  TooFewRows,
  UnknownVariable,
  MissingVariable,
  RowMismatch,
  TooShort,
  MissingExog,
  LengthMismatch,
  AllZeroTruth,
  InsufficientTraining,
  InvalidArgument,
  UsageError,
  // numerical / runtime failures
  FitDiverged,
  SingularSystem,
  NonFiniteLoss,
  FitnessFailure,
  IoError,
};

std::string_view errc_name(Errc code) noexcept;

/// True for errors caused by bad input (CLI exit code 1); false for
/// numerical or I/O failures during a run (exit code 2).
bool is_validation_error(Errc code) noexcept;

/// Every error raised by the library. what() is "<ErrcName>: <detail>".
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& detail);

  Errc code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  Errc code_;
  std::string detail_;
};

[[noreturn]] inline void fail(Errc code, const std::string& detail) { throw Error(code, detail); }

inline void require(bool condition, Errc code, const std::string& detail) {
  if (!condition) fail(code, detail);
}

}  // namespace pvcast
