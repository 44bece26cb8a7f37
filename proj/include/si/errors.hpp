#pragma once

#include <stdexcept>
#include <string>

namespace si {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

#define SI_DEFINE_ERROR(Name)              \
  struct Name : Error {                    \
    using Error::Error;                    \
  }

SI_DEFINE_ERROR(InvalidCombination);
SI_DEFINE_ERROR(EmptySource);
SI_DEFINE_ERROR(SingularCovariance);
SI_DEFINE_ERROR(IllConditioned);
SI_DEFINE_ERROR(SingularGamma);
SI_DEFINE_ERROR(StepUnderflow);
SI_DEFINE_ERROR(NonFinite);
SI_DEFINE_ERROR(MissingScore);
SI_DEFINE_ERROR(DivideByZeroBeta);
SI_DEFINE_ERROR(DegenerateWeight);
SI_DEFINE_ERROR(ConfigError);

#undef SI_DEFINE_ERROR

}  // namespace si
