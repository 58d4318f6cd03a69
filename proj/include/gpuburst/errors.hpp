#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace gpuburst {

// Base for every error raised by the simulator. Each concrete type names one
// failure of an operation contract so callers can catch precisely.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

#define GPUBURST_DEFINE_ERROR(Name)          \
    class Name : public Error {              \
    public:                                  \
        using Error::Error;                  \
    }

// sim-engine
GPUBURST_DEFINE_ERROR(SchedulingInPast);
GPUBURST_DEFINE_ERROR(UnknownEventKind);

// pool
GPUBURST_DEFINE_ERROR(NoLeafInRegion);
GPUBURST_DEFINE_ERROR(KindMismatch);
GPUBURST_DEFINE_ERROR(CapExceeded);
GPUBURST_DEFINE_ERROR(SlotVanished);
GPUBURST_DEFINE_ERROR(UnknownSchedd);
GPUBURST_DEFINE_ERROR(LocalityViolation);
GPUBURST_DEFINE_ERROR(InvalidJobState);

// providers
GPUBURST_DEFINE_ERROR(MixedGpuTemplate);
GPUBURST_DEFINE_ERROR(ExceedsMaxSize);
GPUBURST_DEFINE_ERROR(NotAScaleSet);
GPUBURST_DEFINE_ERROR(NotAnInstanceGroup);
GPUBURST_DEFINE_ERROR(UnknownInstance);
GPUBURST_DEFINE_ERROR(UnknownGroup);
GPUBURST_DEFINE_ERROR(UnknownRegion);
GPUBURST_DEFINE_ERROR(NotProvisioned);
GPUBURST_DEFINE_ERROR(InvalidInstanceState);
// Internal state-machine violation; never expected on a valid run.
GPUBURST_DEFINE_ERROR(IllegalTransition);

// workload / economics
GPUBURST_DEFINE_ERROR(UnknownGpuModel);
GPUBURST_DEFINE_ERROR(NoEndpointForRegion);
GPUBURST_DEFINE_ERROR(OverlappingInterval);
GPUBURST_DEFINE_ERROR(EmptyTrace);

// scenarios
GPUBURST_DEFINE_ERROR(ParseError);
GPUBURST_DEFINE_ERROR(IoError);

#undef GPUBURST_DEFINE_ERROR

/// Semantic scenario errors. Carries every problem found, each prefixed with
/// the field path it refers to (e.g. `regions[3].quota.V100`).
class ValidationError : public Error {
public:
    explicit ValidationError(std::vector<std::string> problems);

    const std::vector<std::string>& problems() const noexcept { return problems_; }

private:
    std::vector<std::string> problems_;
};

}  // namespace gpuburst
