#pragma once

#include <stdexcept>
#include <string>

namespace hybridfuse {

// Base of every domain error. The CLI maps these to exit code 1.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

#define HYBRIDFUSE_DEFINE_ERROR(Name)     \
  class Name : public Error {             \
  public:                                 \
    using Error::Error;                   \
  }

// layout validation
HYBRIDFUSE_DEFINE_ERROR(OverlapError);
HYBRIDFUSE_DEFINE_ERROR(BoundsError);
HYBRIDFUSE_DEFINE_ERROR(IdError);

// analytics
HYBRIDFUSE_DEFINE_ERROR(EmptyTrialError);
HYBRIDFUSE_DEFINE_ERROR(DegenerateError);
HYBRIDFUSE_DEFINE_ERROR(InsufficientDataError);
HYBRIDFUSE_DEFINE_ERROR(NoPupilDataError);

// classifier
HYBRIDFUSE_DEFINE_ERROR(ShapeError);
HYBRIDFUSE_DEFINE_ERROR(ClassMissingError);
HYBRIDFUSE_DEFINE_ERROR(DimensionError);
HYBRIDFUSE_DEFINE_ERROR(MissingAoiError);

// fusion
HYBRIDFUSE_DEFINE_ERROR(LengthMismatchError);

// simulator / configuration
HYBRIDFUSE_DEFINE_ERROR(InfeasibleError);
HYBRIDFUSE_DEFINE_ERROR(ConfigError);

// session files
HYBRIDFUSE_DEFINE_ERROR(SchemaError);
HYBRIDFUSE_DEFINE_ERROR(CrossRefError);
HYBRIDFUSE_DEFINE_ERROR(MonotonicityError);
HYBRIDFUSE_DEFINE_ERROR(IoError);

// live wire protocol
HYBRIDFUSE_DEFINE_ERROR(ProtocolError);

#undef HYBRIDFUSE_DEFINE_ERROR

}  // namespace hybridfuse
