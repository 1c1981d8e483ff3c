#pragma once

#include <complex>
#include <stdexcept>
#include <string>

namespace ltpmor {

/// Base class for every error raised by the library.
class LtpError : public std::runtime_error {
 public:
  explicit LtpError(const std::string& what) : std::runtime_error(what) {}
  virtual const char* kind() const noexcept { return "LtpError"; }
};

#define LTPMOR_DEFINE_ERROR(Name)                                      \
  class Name : public LtpError {                                       \
   public:                                                             \
    explicit Name(const std::string& what) : LtpError(what) {}         \
    const char* kind() const noexcept override { return #Name; }       \
  };

LTPMOR_DEFINE_ERROR(DimensionMismatch)
LTPMOR_DEFINE_ERROR(PeriodMismatch)
LTPMOR_DEFINE_ERROR(InvalidArgument)
LTPMOR_DEFINE_ERROR(ParseError)
LTPMOR_DEFINE_ERROR(ValidationError)
LTPMOR_DEFINE_ERROR(TruncationNotConverged)
LTPMOR_DEFINE_ERROR(BreakdownAtShift)
LTPMOR_DEFINE_ERROR(SingularPencil)
LTPMOR_DEFINE_ERROR(NormalizationError)
LTPMOR_DEFINE_ERROR(SingularMr)
LTPMOR_DEFINE_ERROR(DefectiveSpectrum)
LTPMOR_DEFINE_ERROR(TruncatedPorts)
LTPMOR_DEFINE_ERROR(PoleHit)
LTPMOR_DEFINE_ERROR(ImaginaryAxisPole)
LTPMOR_DEFINE_ERROR(UnstableMode)

#undef LTPMOR_DEFINE_ERROR

/// Raised when a resolvent shift sits (numerically) on the spectrum.
class NearSingularShift : public LtpError {
 public:
  NearSingularShift(std::complex<double> shift, double rcond)
      : LtpError("near-singular shift s = (" + std::to_string(shift.real()) +
                 ", " + std::to_string(shift.imag()) +
                 "), rcond estimate = " + std::to_string(rcond)),
        shift_(shift),
        rcond_(rcond) {}
  const char* kind() const noexcept override { return "NearSingularShift"; }
  std::complex<double> shift() const noexcept { return shift_; }
  double rcond() const noexcept { return rcond_; }

 private:
  std::complex<double> shift_;
  double rcond_;
};

}  // namespace ltpmor
