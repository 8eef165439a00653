#pragma once

#include <stdexcept>
#include <string>

namespace jm {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

#define JM_ERROR(Name)                                   \
  struct Name : Error {                                  \
    explicit Name(const std::string& what) : Error(what) {} \
  }

JM_ERROR(InsufficientOrder);
JM_ERROR(DomainError);
JM_ERROR(CoordinateBudgetExceeded);
JM_ERROR(Singular);
JM_ERROR(DegenerateDensity);
JM_ERROR(OutsideSupport);
JM_ERROR(SamplerFailure);
JM_ERROR(QuadratureFailure);
JM_ERROR(NonInvertibleJump);
JM_ERROR(TooManyRejections);
JM_ERROR(Inconclusive);
JM_ERROR(ValidityViolation);
JM_ERROR(ConfigError);

#undef JM_ERROR

}  // namespace jm
