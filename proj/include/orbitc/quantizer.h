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

#ifndef ORBITC_QUANTIZER_H_
#define ORBITC_QUANTIZER_H_

#include <cstdint>
#include <span>
#include <vector>

#include "orbitc/executor.h"
#include "orbitc/graph.h"

namespace orbitc {

enum class QuantMode { kAsymmetric, kSymmetric };

// Asymmetric: the range is first widened to include 0, then
//   S = (max - min) / 255,  Z = clamp(round(-128 - min / S), -128, 127).
// Symmetric: S = max(|min|, |max|) / 127, Z = 0.
// A zero-width range yields S = 1, Z = 0.
QuantParams ComputeQParams(const TensorRange& range, QuantMode mode);

// Per-tensor or per-channel (along qp.axis of `shape`) quantization with
// saturation to [-128, 127].
std::vector<int8_t> QuantizeTensor(std::span<const float> values,
                                   const QuantParams& qp,
                                   const Shape& shape = {});
std::vector<float> DequantizeTensor(std::span<const int8_t> values,
                                    const QuantParams& qp,
                                    const Shape& shape = {});

// Symmetric per-channel params for a weight tensor along `axis`.
QuantParams PerChannelSymmetric(const TensorSpec& weights, int axis);

// Output-channel axis of a weighted op's weight tensor.
int WeightChannelAxis(OpKind kind);

// Post-training static quantization. Weights become per-channel symmetric
// Int8, activations per-tensor asymmetric Int8, biases Int32 with scale
// S_in * S_w. ReLU, pooling and Flatten outputs reuse their input's
// params. Softmax outputs stay Float32. Throws QuantizationError when a
// range is missing.
Graph QuantizeGraph(const Graph& graph, const RangeMap& ranges);

}  // namespace orbitc

#endif  // ORBITC_QUANTIZER_H_
