#pragma once

#include <stdexcept>
#include <string>

namespace cascadelab {

// Exit-code taxonomy: 2 = validation / misuse, 3 = mathematically infeasible or
// over a size cap. Every library error carries its CLI exit code.
struct error : std::runtime_error {
    error(std::string k, const std::string& msg, int code)
        : std::runtime_error(k + ": " + msg), kind_(std::move(k)), code_(code) {}
    const std::string& kind() const { return kind_; }
    int exit_code() const { return code_; }

  private:
    std::string kind_;
    int code_;
};

#define CASCADELAB_ERROR(Name, Code)                                        \
    struct Name : error {                                                   \
        explicit Name(const std::string& msg) : error(#Name, msg, Code) {}  \
    }

CASCADELAB_ERROR(MonotonicityViolation, 2);
CASCADELAB_ERROR(UnknownVertex, 2);
CASCADELAB_ERROR(ModeMismatch, 2);
CASCADELAB_ERROR(WeightOutOfRange, 2);
CASCADELAB_ERROR(SpecMismatch, 2);  // influence spec vs. graph kind
CASCADELAB_ERROR(DomainError, 2);
CASCADELAB_ERROR(AssumptionViolation, 2);
CASCADELAB_ERROR(InfeasibleTarget, 2);
CASCADELAB_ERROR(IoError, 2);
CASCADELAB_ERROR(UnknownSubcommand, 2);

CASCADELAB_ERROR(TooLarge, 3);
CASCADELAB_ERROR(NoCrossing, 3);
CASCADELAB_ERROR(NoAdmissibleParams, 3);
CASCADELAB_ERROR(Unachievable, 3);
CASCADELAB_ERROR(InfeasibleBetas, 3);
CASCADELAB_ERROR(NoLambda0, 3);

#undef CASCADELAB_ERROR

}  // namespace cascadelab
