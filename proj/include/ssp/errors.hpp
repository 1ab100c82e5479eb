#pragma once

#include <stdexcept>
#include <string>

namespace ssp {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define SSP_DEFINE_ERROR(Name)          \
  class Name : public Error {           \
   public:                              \
    using Error::Error;                 \
  }

SSP_DEFINE_ERROR(InvalidArgument);
SSP_DEFINE_ERROR(NonProperPolicy);
SSP_DEFINE_ERROR(NoProperPolicy);
SSP_DEFINE_ERROR(AssumptionViolation);
SSP_DEFINE_ERROR(EpisodeOverflow);
SSP_DEFINE_ERROR(FeedbackMismatch);
SSP_DEFINE_ERROR(InfeasibleRow);
SSP_DEFINE_ERROR(NoConvergence);
SSP_DEFINE_ERROR(DilationTooLarge);
SSP_DEFINE_ERROR(ScheduleViolation);
SSP_DEFINE_ERROR(GenerationFailure);
SSP_DEFINE_ERROR(DoubleReveal);
SSP_DEFINE_ERROR(EpisodeOrder);
SSP_DEFINE_ERROR(ConfigError);

#undef SSP_DEFINE_ERROR

}  // namespace ssp
