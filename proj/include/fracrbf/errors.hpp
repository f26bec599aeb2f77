#pragma once

#include <stdexcept>
#include <string>

namespace fracrbf {

// Exit-code families used by the CLI: config 2, convergence 3, domain 4, integrator 5.
enum class ErrorClass { Config = 2, Convergence = 3, Domain = 4, Integrator = 5 };

class Error : public std::runtime_error {
public:
    Error(ErrorClass cls, const std::string& what) : std::runtime_error(what), cls_(cls) {}
    ErrorClass error_class() const noexcept { return cls_; }

private:
    ErrorClass cls_;
};

#define FRACRBF_ERROR(Name, Cls)                                               \
    class Name : public Error {                                                \
    public:                                                                    \
        explicit Name(const std::string& what) : Error(ErrorClass::Cls, what) {} \
    };

FRACRBF_ERROR(PoleError, Domain)
FRACRBF_ERROR(DomainError, Domain)
FRACRBF_ERROR(ParameterError, Domain)
FRACRBF_ERROR(DegenerateCenter, Domain)
FRACRBF_ERROR(NonIntegerExponentWithShiftedBase, Domain)
FRACRBF_ERROR(UnsupportedOrder, Domain)
FRACRBF_ERROR(ArityError, Domain)
FRACRBF_ERROR(MissingDerivative, Domain)
FRACRBF_ERROR(SingularMatrix, Domain)
FRACRBF_ERROR(ImagResidualTooLarge, Domain)
FRACRBF_ERROR(ConvergenceError, Convergence)
FRACRBF_ERROR(QuadratureError, Convergence)
FRACRBF_ERROR(NonConvergence, Convergence)
FRACRBF_ERROR(StepSizeUnderflow, Integrator)
FRACRBF_ERROR(ConfigError, Config)

#undef FRACRBF_ERROR

} // namespace fracrbf
