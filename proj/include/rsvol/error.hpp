#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace rsvol {

enum class Errc {
  kNegativeOffDiagonal,
  kColumnSumNonzero,
  kOverflow,
  kDimensionMismatch,
  kVolOutOfBounds,
  kWindowOutOfRange,
  kNonfiniteSolution,
  kGridTooCoarse,
  kShapeMismatch,
  kTooFewStrikes,
  kSingularNormalMatrix,
  kConfigParse,
  kFileNotFound,
  kIoError,
  kUsage,
};

std::string_view to_string(Errc code);

// True for failures of the numerics rather than of the inputs.
bool is_numeric_failure(Errc code);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what);

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace rsvol
