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

#ifndef ORBITC_GRAPH_H_
#define ORBITC_GRAPH_H_

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "orbitc/status.h"

namespace orbitc {

// Activations are NHWC (rank 4) or NF (rank 2). Batch is always 1.
// An empty shape means "not yet inferred".
using Shape = std::vector<int64_t>;

int64_t NumElements(const Shape& shape);
std::string ShapeToString(const Shape& shape);

enum class DType { kFloat32, kInt8, kInt32 };
enum class TensorKind { kInput, kWeight, kBias, kActivation, kOutput };

int64_t DTypeSize(DType dtype);
std::string_view DTypeName(DType dtype);
DType DTypeFromName(std::string_view name);
std::string_view TensorKindName(TensorKind kind);
TensorKind TensorKindFromName(std::string_view name);

// Affine mapping r = scale * (q - zero_point). Per-tensor params carry one
// entry; per-channel params carry one entry per slice along `axis`.
struct QuantParams {
  std::vector<double> scales;
  std::vector<int32_t> zero_points;
  int axis = -1;  // -1: per-tensor
  bool symmetric = false;

  bool per_channel() const { return axis >= 0; }
  double scale(size_t channel = 0) const {
    return scales.size() == 1 ? scales[0] : scales.at(channel);
  }
  int32_t zero_point(size_t channel = 0) const {
    return zero_points.size() == 1 ? zero_points[0] : zero_points.at(channel);
  }

  static QuantParams PerTensor(double scale, int32_t zero_point,
                               bool symmetric = false) {
    return QuantParams{{scale}, {zero_point}, -1, symmetric};
  }

  bool operator==(const QuantParams&) const = default;
};

// Constant payload of weight/bias tensors. Activations carry monostate.
using TensorData = std::variant<std::monostate, std::vector<float>,
                                std::vector<int8_t>, std::vector<int32_t>>;

struct TensorSpec {
  std::string id;
  Shape shape;
  DType dtype = DType::kFloat32;
  std::optional<QuantParams> quant;
  TensorKind kind = TensorKind::kActivation;
  TensorData data;

  bool is_constant() const {
    return kind == TensorKind::kWeight || kind == TensorKind::kBias;
  }
  bool has_data() const {
    return !std::holds_alternative<std::monostate>(data);
  }
  int64_t data_size() const;  // element count of `data`
  int64_t byte_size() const { return NumElements(shape) * DTypeSize(dtype); }

  const std::vector<float>& f32() const;
  const std::vector<int8_t>& i8() const;
  const std::vector<int32_t>& i32() const;
  std::vector<float>& mutable_f32();

  bool operator==(const TensorSpec&) const = default;
};

enum class OpKind {
  kConv2D,
  kDepthwiseConv2D,
  kFullyConnected,
  kReLU,
  kMaxPool2D,
  kAvgPool2D,
  kAdd,
  kConcat,
  kFlatten,
  kSoftmax,
};

std::string_view OpKindName(OpKind kind);
// Throws ModelFormatError("unsupported op kind ...") for unknown names.
OpKind OpKindFromName(std::string_view name);
std::optional<OpKind> TryOpKindFromName(std::string_view name);

enum class Padding { kValid, kSame };

struct OpAttrs {
  int kernel_h = 1;
  int kernel_w = 1;
  int stride_h = 1;
  int stride_w = 1;
  Padding padding = Padding::kValid;
  int axis = -1;  // Concat only; negative counts from the back

  bool operator==(const OpAttrs&) const = default;
};

// Real multiplier M ~= significand * 2^-shift, significand in [2^30, 2^31).
// See fixed_point.h.
struct FixedPointMultiplier {
  int32_t significand = 0;
  int32_t shift = 0;

  bool operator==(const FixedPointMultiplier&) const = default;
};

struct OpNode {
  std::string id;
  OpKind kind = OpKind::kReLU;
  OpAttrs attrs;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  // Quantized graphs only. Conv/DW/FC: one entry per output channel.
  // Add/Concat: one entry per input. Unary ops: empty, or one entry when
  // input and output quantization differ.
  std::vector<FixedPointMultiplier> requant;

  bool operator==(const OpNode&) const = default;
};

bool IsWeightedOp(OpKind kind);  // Conv2D, DepthwiseConv2D, FullyConnected

struct Graph {
  std::string name;
  std::vector<OpNode> nodes;
  std::map<std::string, TensorSpec> tensors;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;

  const TensorSpec& tensor(const std::string& id) const;
  TensorSpec& mutable_tensor(const std::string& id);
  bool has_tensor(const std::string& id) const {
    return tensors.count(id) != 0;
  }
  const OpNode& node(const std::string& id) const;
  int node_index(const std::string& id) const;  // -1 when absent

  // Index of the node producing `tensor_id`, or -1.
  int producer(const std::string& tensor_id) const;
  // Indices of nodes reading `tensor_id`, in node-list order.
  std::vector<int> consumers(const std::string& tensor_id) const;

  // True when every Int8/Int32 tensor is annotated and the graph input is
  // Int8. Softmax outputs stay Float32.
  bool is_quantized() const;

  bool operator==(const Graph&) const = default;
};

struct Violation {
  std::string subject;  // node or tensor id
  std::string rule;
  std::string message;
};

struct ValidationReport {
  std::vector<Violation> violations;
  bool ok() const { return violations.empty(); }
  std::string ToString() const;
};

ValidationReport Validate(const Graph& graph);

// Deterministic Kahn order; ties resolve to the earlier node in the list.
// Throws GraphError on cycles.
std::vector<int> TopologicalOrder(const Graph& graph);

struct ShapeInferenceResult {
  Graph graph;
  std::vector<int> order;
};

// Fills every activation shape. Throws ShapeError naming the node on
// mismatches.
ShapeInferenceResult InferShapes(const Graph& graph);

// Output size along one spatial axis for the given padding rule.
int64_t ConvOutputSize(int64_t in, int kernel, int stride, Padding padding);
// Leading (top/left) zero padding for SAME; the remainder goes right.
int64_t SamePadBefore(int64_t in, int kernel, int stride);

int64_t CountParameters(const Graph& graph);

}  // namespace orbitc

#endif  // ORBITC_GRAPH_H_
