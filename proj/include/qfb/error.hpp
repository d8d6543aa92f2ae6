#pragma once

#include <stdexcept>
#include <string>

namespace qfb {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define QFB_DEFINE_ERROR(Name)            \
  class Name : public Error {             \
   public:                                \
    using Error::Error;                   \
  }

QFB_DEFINE_ERROR(NotHermitian);
QFB_DEFINE_ERROR(Singular);
QFB_DEFINE_ERROR(DimensionMismatch);
QFB_DEFINE_ERROR(CutoffTooSmall);
QFB_DEFINE_ERROR(InvalidSpec);
QFB_DEFINE_ERROR(DegenerateSteadyState);
QFB_DEFINE_ERROR(NoConvergence);
QFB_DEFINE_ERROR(DimensionUnsupported);
QFB_DEFINE_ERROR(NotDensityMatrix);
QFB_DEFINE_ERROR(InvalidModel);
QFB_DEFINE_ERROR(NonPureInitial);
QFB_DEFINE_ERROR(StepTooLarge);
QFB_DEFINE_ERROR(CutoffSaturated);
QFB_DEFINE_ERROR(SubspaceNotInvariant);
QFB_DEFINE_ERROR(ConfigError);

#undef QFB_DEFINE_ERROR

}  // namespace qfb
