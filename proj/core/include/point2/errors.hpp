// Copyright 2026 The point2 Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace point2 {

/// Input violates a documented precondition or invariant. The CLI maps
/// these to exit status 1.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A numerically ill-posed computation (rank loss, degenerate geometry,
/// non-finite loss). The CLI maps these to exit status 2.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define POINT2_DECLARE_ERROR(Name, Base)   \
  class Name : public Base {               \
   public:                                 \
    explicit Name(const std::string& what) \
        : Base(std::string(#Name ": ") + what) {} \
  }

POINT2_DECLARE_ERROR(InvalidGeometry, ValidationError);
POINT2_DECLARE_ERROR(BadShape, ValidationError);
POINT2_DECLARE_ERROR(OutOfBounds, ValidationError);
POINT2_DECLARE_ERROR(ChannelMismatch, ValidationError);
POINT2_DECLARE_ERROR(ShapeMismatch, ValidationError);
POINT2_DECLARE_ERROR(CorrespondenceMismatch, ValidationError);
POINT2_DECLARE_ERROR(LengthMismatch, ValidationError);
POINT2_DECLARE_ERROR(ConfigError, ValidationError);
POINT2_DECLARE_ERROR(IoError, ValidationError);

POINT2_DECLARE_ERROR(DegenerateProjection, NumericError);
POINT2_DECLARE_ERROR(DegenerateHeatmap, NumericError);
POINT2_DECLARE_ERROR(RankDeficient, NumericError);
POINT2_DECLARE_ERROR(DegenerateShape, NumericError);
POINT2_DECLARE_ERROR(EmptySupport, NumericError);
POINT2_DECLARE_ERROR(RegistrationFailed, NumericError);
POINT2_DECLARE_ERROR(NonFiniteLoss, NumericError);

#undef POINT2_DECLARE_ERROR

}  // namespace point2
