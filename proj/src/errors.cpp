// Copyright 2026 The evnet Authors
// SPDX-License-Identifier: Apache-2.0

#include "evnet/errors.hpp"

namespace evnet {
namespace {

template <typename E, typename... Rest>
[[noreturn]] void rethrow_as(const Error& e, const std::string& context) {
  if (dynamic_cast<const E*>(&e)) throw E(context + e.what());
  if constexpr (sizeof...(Rest) > 0) {
    rethrow_as<Rest...>(e, context);
  } else {
    throw Error(context + e.what());
  }
}

}  // namespace

void rethrow_with_context(const std::string& context) {
  try {
    throw;
  } catch (const Error& e) {
    rethrow_as<ShapeError, RoutingError, GraphError, SchemaError, ConversionError, StateError,
               ConfigError, ClassificationError, ReportError, SpecError, IoError>(e, context);
  }
}

}  // namespace evnet
