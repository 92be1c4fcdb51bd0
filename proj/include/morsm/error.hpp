#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace morsm {

enum class ErrorCode {
  kInvalidArgument,
  kFilterOverflow,
  kUnstableSystem,
  kDegenerateRandomSystem,
  kDegenerateSnrInput,
  kSampleTooSmall,
  kArxSolveFailed,
  kRankDeficientSm,
  kUnstablePlant,
  kNonInvertiblePredictor,
  kIllConditionedPem,
  kDegenerateFit,
  kSingularCramerRao,
  kTooFewEstimates,
  kSelectionFailed,
  kParse,
};

/// Every failure raised by the library. `code()` identifies the condition so
/// callers (the Monte Carlo sweep, the CLI) can classify without string
/// matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Raised when a recursion produces a non-finite sample.
class FilterOverflow : public Error {
 public:
  explicit FilterOverflow(std::size_t index)
      : Error(ErrorCode::kFilterOverflow,
              "numerical overflow in filtering at sample " +
                  std::to_string(index)),
        index_(index) {}

  std::size_t index() const noexcept { return index_; }

 private:
  std::size_t index_;
};

}  // namespace morsm
