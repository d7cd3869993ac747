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

#include "orbitc/fixed_point.h"

#include <cmath>

namespace orbitc {

int64_t RoundHalfAwayFromZero(double x) { return std::llround(x); }

int64_t RoundingDivide(int64_t num, int64_t den) {
  if (num >= 0) return (2 * num + den) / (2 * den);
  return -((-2 * num + den) / (2 * den));
}

FixedPointMultiplier EncodeMultiplier(double multiplier) {
  if (!std::isfinite(multiplier) || multiplier < 0.0)
    throw Error("cannot encode multiplier " + std::to_string(multiplier));
  if (multiplier == 0.0) return {0, 0};
  int exponent = 0;
  double mantissa = std::frexp(multiplier, &exponent);  // [0.5, 1)
  int64_t significand = std::llround(mantissa * 2147483648.0);
  if (significand == (int64_t{1} << 31)) {
    significand /= 2;
    ++exponent;
  }
  int shift = 31 - exponent;
  if (shift < 0)
    throw Error("requantization multiplier too large: " +
                std::to_string(multiplier));
  return {static_cast<int32_t>(significand), shift};
}

double DecodeMultiplier(const FixedPointMultiplier& m) {
  return std::ldexp(static_cast<double>(m.significand), -m.shift);
}

int64_t ApplyMultiplier(int64_t x, const FixedPointMultiplier& m) {
  int64_t prod = x * static_cast<int64_t>(m.significand);
  if (m.shift <= 0) return prod << (-m.shift);
  if (m.shift >= 63) return 0;
  const int64_t half = int64_t{1} << (m.shift - 1);
  if (prod >= 0) return (prod + half) >> m.shift;
  return -((-prod + half) >> m.shift);
}

int8_t QuantizeValue(double real, double scale, int32_t zero_point) {
  const double scaled = real / scale;
  if (!(scaled < 1e12)) return 127;
  if (!(scaled > -1e12)) return -128;
  return SaturateInt8(RoundHalfAwayFromZero(scaled) + zero_point);
}

}  // namespace orbitc
