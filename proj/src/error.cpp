#include "rsvol/error.hpp"

namespace rsvol {

std::string_view to_string(Errc code) {
  switch (code) {
    case Errc::kNegativeOffDiagonal: return "NegativeOffDiagonal";
    case Errc::kColumnSumNonzero: return "ColumnSumNonzero";
    case Errc::kOverflow: return "Overflow";
    case Errc::kDimensionMismatch: return "DimensionMismatch";
    case Errc::kVolOutOfBounds: return "VolOutOfBounds";
    case Errc::kWindowOutOfRange: return "WindowOutOfRange";
    case Errc::kNonfiniteSolution: return "NonfiniteSolution";
    case Errc::kGridTooCoarse: return "GridTooCoarse";
    case Errc::kShapeMismatch: return "ShapeMismatch";
    case Errc::kTooFewStrikes: return "TooFewStrikes";
    case Errc::kSingularNormalMatrix: return "SingularNormalMatrix";
    case Errc::kConfigParse: return "ConfigParse";
    case Errc::kFileNotFound: return "FileNotFound";
    case Errc::kIoError: return "IoError";
    case Errc::kUsage: return "Usage";
  }
  return "Unknown";
}

bool is_numeric_failure(Errc code) {
  return code == Errc::kNonfiniteSolution || code == Errc::kOverflow ||
         code == Errc::kSingularNormalMatrix;
}

Error::Error(Errc code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

}  // namespace rsvol
