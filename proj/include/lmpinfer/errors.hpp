#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace lmpinfer {

// Machine-readable error codes. Every failure raised by the library carries
// one of these so callers can branch without string-matching messages.
namespace errc {
inline constexpr const char* kParseMissingMatrix = "parse/missing-matrix";
inline constexpr const char* kParseUnsupportedCostModel = "parse/unsupported-cost-model";
inline constexpr const char* kParseSyntax = "parse/syntax";
inline constexpr const char* kNativeSchema = "native/schema";
inline constexpr const char* kNativeReference = "native/reference";
inline constexpr const char* kDispatchInfeasibleDemand = "dispatch/infeasible-demand";
inline constexpr const char* kDispatchInfeasible = "dispatch/infeasible";
inline constexpr const char* kDispatchMaxIterations = "dispatch/max-active-set-iterations";
inline constexpr const char* kDatasetGenerationFailure = "dataset/generation-failure";
inline constexpr const char* kNoQualifyingPair = "scenario1/no-qualifying-pair";
inline constexpr const char* kDegeneratePair = "scenario1/degenerate-pair";
inline constexpr const char* kSingularDenominator = "scenario2/singular-denominator";
inline constexpr const char* kBoundUndefined = "scenario2/bound-undefined";
inline constexpr const char* kSearchExhausted = "scenario2/search-exhausted";
inline constexpr const char* kEmptyMask = "metrics/empty-mask";
inline constexpr const char* kConfigInvalid = "experiment/config-invalid";
inline constexpr const char* kIo = "io/error";
}  // namespace errc

class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& message)
      : std::runtime_error("[" + code + "] " + message), code_(std::move(code)) {}

  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

// Validation findings are data, not failures.
struct Violation {
  std::string code;
  std::string message;
};

}  // namespace lmpinfer
