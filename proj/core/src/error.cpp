#include "pvcast/error.hpp"

namespace pvcast {

std::string_view errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::MissingColumn: return "MissingColumn";
    case Errc::NonNumericCell: return "NonNumericCell";
    case Errc::EmptyTable: return "EmptyTable";
    case Errc::KNotSatisfiable: return "KNotSatisfiable";
    case Errc::UnknownColumn: return "UnknownColumn";
    case Errc::DisjointCoverage: return "DisjointCoverage";
    case Errc::InvalidLocation: return "InvalidLocation";
    case Errc::InsufficientData: return "InsufficientData";
    case Errc::InvalidParam: return "InvalidParam";
    case Errc::DegenerateData: return "DegenerateData";
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::EmptySpace: return "EmptySpace";
    case Errc::InvalidConfig: return "InvalidConfig";
    case Errc::TooFewRows: return "TooFewRows";
    case Errc::UnknownVariable: return "UnknownVariable";
    case Errc::MissingVariable: return "MissingVariable";
    case Errc::RowMismatch: return "RowMismatch";
    case Errc::TooShort: return "TooShort";
    case Errc::MissingExog: return "MissingExog";
    case Errc::LengthMismatch: return "LengthMismatch";
    case Errc::AllZeroTruth: return "AllZeroTruth";
    case Errc::InsufficientTraining: return "InsufficientTraining";
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::UsageError: return "UsageError";
    case Errc::FitDiverged: return "FitDiverged";
    case Errc::SingularSystem: return "SingularSystem";
    case Errc::NonFiniteLoss: return "NonFiniteLoss";
    case Errc::FitnessFailure: return "FitnessFailure";
    case Errc::IoError: return "IoError";
  }
  return "Unknown";
}

bool is_validation_error(Errc code) noexcept {
  switch (code) {
    case Errc::FitDiverged:
    case Errc::SingularSystem:
    case Errc::NonFiniteLoss:
    case Errc::FitnessFailure:
    case Errc::IoError:
      return false;
    default:
      return true;
  }
}

Error::Error(Errc code, const std::string& detail)
    : std::runtime_error(std::string(errc_name(code)) + ": " + detail), code_(code), detail_(detail) {}

}  // namespace pvcast
