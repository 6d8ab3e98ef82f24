#pragma once

#include <stdexcept>

namespace nuisblue {

// Base class for everything this library throws.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// matkernel
struct RankDeficient : Error { using Error::Error; };
struct DegenerateShape : Error { using Error::Error; };
struct NotSPD : Error { using Error::Error; };

// linmodel / estimators
struct ShapeViolation : Error { using Error::Error; };
struct RankViolation : Error { using Error::Error; };

// differencing
struct IndexOutOfRange : Error { using Error::Error; };
struct TooFewNonZeros : Error { using Error::Error; };
struct ReferenceOnZeroRow : Error { using Error::Error; };

// localization
struct TargetOnAnchor : Error { using Error::Error; };
struct ExpansionPointOnAnchor : Error { using Error::Error; };
struct NonPositiveRange : Error { using Error::Error; };
struct NonPositiveGamma : Error { using Error::Error; };
struct SingularFIM : Error { using Error::Error; };

// harness / cli
struct EmptyInput : Error { using Error::Error; };
struct EstimatorFailure : Error { using Error::Error; };

// Text-format readers report the 1-based line the failure was detected on.
struct ParseError : Error {
  ParseError(int line_number, const std::string& what)
      : Error(what), line(line_number) {}
  int line;
};

struct ConfigError : ParseError {
  using ParseError::ParseError;
};

}  // namespace nuisblue
