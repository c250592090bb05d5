// Copyright 2026 The evnet Authors
// SPDX-License-Identifier: Apache-2.0
//
// Scalar update rules of an event neuron. The vectorised engine and the
// single-neuron probes share these so both follow the same arithmetic.
//
//   a <- a + g(delta_in)
//   d <- d + f(a) - b
//   b <- f(a)
//
// and on transmission the neuron sends d and resets it to zero.

#pragma once

namespace evnet::neuron {

template <typename T>
inline void accumulate(T& a, T linear_delta) {
  a += linear_delta;
}

template <typename T>
inline void gate_update(T& b, T& d, T value) {
  d += value - b;
  b = value;
}

template <typename T>
inline T transmit(T& d) {
  const T out = d;
  d = T(0);
  return out;
}

}  // namespace evnet::neuron
