/* Copyright 2026 The Orbitc Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#ifndef ORBITC_FIXED_POINT_H_
#define ORBITC_FIXED_POINT_H_

#include <cstdint>

#include "orbitc/graph.h"

namespace orbitc {

// Round-half-away-from-zero, the single rounding rule used everywhere.
int64_t RoundHalfAwayFromZero(double x);

// Integer division rounding half away from zero. `den` > 0.
int64_t RoundingDivide(int64_t num, int64_t den);

// Encodes a positive real multiplier M as significand * 2^-shift with the
// significand in [2^30, 2^31). M = 0 encodes as {0, 0}. Throws Error for
// negative, non-finite or >= 2^31 multipliers.
FixedPointMultiplier EncodeMultiplier(double multiplier);
double DecodeMultiplier(const FixedPointMultiplier& m);

// round_half_away(x * significand / 2^shift). `x` must fit in int32.
int64_t ApplyMultiplier(int64_t x, const FixedPointMultiplier& m);

// q = clamp(round(r / scale) + zero_point, -128, 127).
int8_t QuantizeValue(double real, double scale, int32_t zero_point);
// r = scale * (q - zero_point).
inline double DequantizeValue(int32_t q, double scale, int32_t zero_point) {
  return scale * static_cast<double>(q - zero_point);
}

inline int8_t SaturateInt8(int64_t v) {
  return static_cast<int8_t>(v < -128 ? -128 : (v > 127 ? 127 : v));
}

}  // namespace orbitc

#endif  // ORBITC_FIXED_POINT_H_
