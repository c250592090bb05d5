// Copyright 2026 The evnet Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace evnet {

/// Base class for every error raised by the library. The CLI maps any
/// evnet::Error to a nonzero exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define EVNET_DEFINE_ERROR(Name)          \
  class Name : public Error {             \
   public:                                \
    using Error::Error;                   \
  }

EVNET_DEFINE_ERROR(ShapeError);
EVNET_DEFINE_ERROR(RoutingError);
EVNET_DEFINE_ERROR(GraphError);
EVNET_DEFINE_ERROR(SchemaError);
EVNET_DEFINE_ERROR(ConversionError);
EVNET_DEFINE_ERROR(StateError);
EVNET_DEFINE_ERROR(ConfigError);
EVNET_DEFINE_ERROR(ClassificationError);
EVNET_DEFINE_ERROR(ReportError);
EVNET_DEFINE_ERROR(SpecError);
EVNET_DEFINE_ERROR(IoError);

#undef EVNET_DEFINE_ERROR

/// Rethrows the exception currently being handled with `context` prefixed
/// to its message, keeping its evnet error type. Must be called from inside
/// a catch block.
[[noreturn]] void rethrow_with_context(const std::string& context);

}  // namespace evnet
