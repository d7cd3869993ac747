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

#ifndef ORBITC_EXECUTOR_H_
#define ORBITC_EXECUTOR_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "orbitc/dataset.h"
#include "orbitc/graph.h"
#include "orbitc/tensor.h"

namespace orbitc {

// Float32 reference interpreter. The graph must have inferred shapes and the
// input must match the (single) graph input shape. Returns graph outputs in
// declaration order.
std::vector<Tensor> RunF32(const Graph& graph, const Tensor& input);

// Same, but returns every non-constant tensor keyed by id.
std::map<std::string, Tensor> RunF32Trace(const Graph& graph,
                                          const Tensor& input);

// Node-id groups executed as single kernels, in execution order. A group
// may be one node or a weighted op followed by its ReLU.
struct KernelSchedule {
  std::vector<std::vector<std::string>> kernels;
};

struct Int8RunOptions {
  // Null: one kernel per node in topological order.
  const KernelSchedule* kernels = nullptr;
  // When set, receives every Int8 tensor materialised during the run.
  std::map<std::string, std::vector<int8_t>>* trace = nullptr;
};

// Integer interpreter: quantize the input, run integer kernels, dequantize
// Int8 outputs. Softmax runs in Float32 on dequantized logits. Throws
// ExecutionError on missing quant params or accumulator overflow.
std::vector<Tensor> RunInt8(const Graph& qgraph, const Tensor& input,
                            const Int8RunOptions& options = {});

// Observed [min(R), max(R)] for one tensor.
struct TensorRange {
  std::string tensor_id;
  double min_r = 0.0;
  double max_r = 0.0;

  bool degenerate() const { return min_r == max_r; }
  bool operator==(const TensorRange&) const = default;
};

using RangeMap = std::map<std::string, TensorRange>;

// Raw min/max over every calibration run for activations; weights and
// biases get the range of their constant data.
RangeMap Calibrate(const Graph& graph, std::span<const Tensor> inputs);

std::string RangesToJson(const RangeMap& ranges);
RangeMap RangesFromJson(const std::string& text,
                        const std::string& where = "ranges");

struct InferenceRecord {
  std::string sample_id;
  int predicted_class = 0;
  double confidence = 0.0;  // max softmax probability
  int true_label = 0;
  bool correct = false;

  bool operator==(const InferenceRecord&) const = default;
};

struct EvaluationResult {
  std::vector<InferenceRecord> records;
  int64_t correct_count = 0;
  double accuracy = 0.0;
};

// Runs the float or integer interpreter (chosen by graph.is_quantized())
// over the dataset. The graph output must be a probability vector.
EvaluationResult Evaluate(const Graph& graph, const Dataset& dataset);

// Record files: CSV header `sample_id,predicted_class,confidence,
// true_label,correct`; confidences print with round-trip precision.
std::string RecordsToCsv(const std::vector<InferenceRecord>& records);
std::vector<InferenceRecord> RecordsFromCsv(const std::string& text,
                                            const std::string& where = "records");
std::string RecordsToJson(const std::vector<InferenceRecord>& records,
                          double accuracy);

}  // namespace orbitc

#endif  // ORBITC_EXECUTOR_H_
