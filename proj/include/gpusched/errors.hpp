#pragma once

#include <stdexcept>
#include <string>

namespace gpusched {

/// Base of every error raised by the library. Each failure mode named in the
/// public contracts has its own subclass so callers can catch precisely.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

#define GPUSCHED_DEFINE_ERROR(Name)                                    \
    class Name : public Error {                                        \
    public:                                                            \
        explicit Name(const std::string& what) : Error(#Name ": " + what) {} \
    }

// task model
GPUSCHED_DEFINE_ERROR(EmptyTaskSet);
GPUSCHED_DEFINE_ERROR(DuplicateId);
GPUSCHED_DEFINE_ERROR(InvalidTaskId);
GPUSCHED_DEFINE_ERROR(InvalidStage);
GPUSCHED_DEFINE_ERROR(UnknownPreset);

// timing
GPUSCHED_DEFINE_ERROR(NonpositiveSample);
GPUSCHED_DEFINE_ERROR(ZeroTotalMret);

// gpu model
GPUSCHED_DEFINE_ERROR(InvalidOversubscription);
GPUSCHED_DEFINE_ERROR(InvalidGpuConfig);
GPUSCHED_DEFINE_ERROR(NoActiveStages);
GPUSCHED_DEFINE_ERROR(OvershootBeyondCompletion);
GPUSCHED_DEFINE_ERROR(InvalidBatch);

// engine and front end
GPUSCHED_DEFINE_ERROR(InvalidScenario);
GPUSCHED_DEFINE_ERROR(ParseError);
GPUSCHED_DEFINE_ERROR(SchemaError);
GPUSCHED_DEFINE_ERROR(IoError);

#undef GPUSCHED_DEFINE_ERROR

}  // namespace gpusched
