#pragma once

#include <stdexcept>
#include <string>

namespace bmcc {

// Base of every error the library throws. Callers that only care about
// "something went wrong in the charting pipeline" catch this.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define BMCC_DEFINE_ERROR(Name)                         \
  class Name : public Error {                           \
   public:                                              \
    explicit Name(const std::string& what) : Error(#Name ": " + what) {} \
  }

BMCC_DEFINE_ERROR(NotPositiveDefinite);
BMCC_DEFINE_ERROR(DimensionMismatch);
BMCC_DEFINE_ERROR(InvalidConfig);
BMCC_DEFINE_ERROR(CovarianceNotReady);
BMCC_DEFINE_ERROR(TooShort);
BMCC_DEFINE_ERROR(ZeroVariance);
BMCC_DEFINE_ERROR(EmptyInput);
BMCC_DEFINE_ERROR(NonStationary);
BMCC_DEFINE_ERROR(BracketFailure);
BMCC_DEFINE_ERROR(DegenerateFit);
BMCC_DEFINE_ERROR(Overflow);
BMCC_DEFINE_ERROR(ParseError);
BMCC_DEFINE_ERROR(SchemaMismatch);

#undef BMCC_DEFINE_ERROR

}  // namespace bmcc
