#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace semrel {

enum class Errc {
  kDimensionMismatch,
  kZeroVector,
  kEmptyInput,
  kDegenerateBox,
  kUnsupportedFormat,
  kMalformedHeader,
  kNonPowerOfTwo,
  kBadLine,
  kUnknownObject,
  kDegenerateCovariate,
  kSingularSystem,
  kTooFewRows,
  kJoinFailure,
  kParseError,
  kSchemaError,
  kBadHeader,
  kBadRow,
  kDuplicateKey,
  kIoError,
  kInvalidArgument,
};

constexpr std::string_view errc_name(Errc c) {
  switch (c) {
    case Errc::kDimensionMismatch: return "DimensionMismatch";
    case Errc::kZeroVector: return "ZeroVector";
    case Errc::kEmptyInput: return "EmptyInput";
    case Errc::kDegenerateBox: return "DegenerateBox";
    case Errc::kUnsupportedFormat: return "UnsupportedFormat";
    case Errc::kMalformedHeader: return "MalformedHeader";
    case Errc::kNonPowerOfTwo: return "NonPowerOfTwo";
    case Errc::kBadLine: return "BadLine";
    case Errc::kUnknownObject: return "UnknownObject";
    case Errc::kDegenerateCovariate: return "DegenerateCovariate";
    case Errc::kSingularSystem: return "SingularSystem";
    case Errc::kTooFewRows: return "TooFewRows";
    case Errc::kJoinFailure: return "JoinFailure";
    case Errc::kParseError: return "ParseError";
    case Errc::kSchemaError: return "SchemaError";
    case Errc::kBadHeader: return "BadHeader";
    case Errc::kBadRow: return "BadRow";
    case Errc::kDuplicateKey: return "DuplicateKey";
    case Errc::kIoError: return "IoError";
    case Errc::kInvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

// Every failure raised by the library carries a machine-checkable code; the
// message is prefixed with the code name.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace semrel
