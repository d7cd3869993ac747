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

#include "orbitc/quantizer.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "orbitc/fixed_point.h"

namespace orbitc {

QuantParams ComputeQParams(const TensorRange& range, QuantMode mode) {
  if (!std::isfinite(range.min_r) || !std::isfinite(range.max_r) ||
      range.min_r > range.max_r)
    throw QuantizationError("invalid range for " + range.tensor_id);
  if (mode == QuantMode::kSymmetric) {
    const double bound = std::max(std::abs(range.min_r), std::abs(range.max_r));
    if (bound == 0.0) return QuantParams::PerTensor(1.0, 0, true);
    return QuantParams::PerTensor(bound / 127.0, 0, true);
  }
  const double lo = std::min(range.min_r, 0.0);
  const double hi = std::max(range.max_r, 0.0);
  if (hi == lo) return QuantParams::PerTensor(1.0, 0, false);
  const double scale = (hi - lo) / 255.0;
  const int64_t zp = RoundHalfAwayFromZero(-128.0 - lo / scale);
  return QuantParams::PerTensor(
      scale, static_cast<int32_t>(std::clamp<int64_t>(zp, -128, 127)), false);
}

namespace {

// Channel index of every flat element for per-channel params.
struct ChannelIndexer {
  int64_t inner = 1;
  int64_t dim = 1;
  bool per_channel = false;

  ChannelIndexer(const QuantParams& qp, const Shape& shape) {
    if (!qp.per_channel()) return;
    if (qp.axis >= static_cast<int>(shape.size()))
      throw QuantizationError("per-channel axis outside tensor rank");
    per_channel = true;
    dim = shape[qp.axis];
    for (size_t d = qp.axis + 1; d < shape.size(); ++d) inner *= shape[d];
  }
  size_t operator()(size_t i) const {
    return per_channel ? static_cast<size_t>((i / inner) % dim) : 0;
  }
};

}  // namespace

std::vector<int8_t> QuantizeTensor(std::span<const float> values,
                                   const QuantParams& qp, const Shape& shape) {
  ChannelIndexer channel(qp, shape);
  std::vector<int8_t> out(values.size());
  for (size_t i = 0; i < values.size(); ++i) {
    const size_t c = channel(i);
    out[i] = QuantizeValue(values[i], qp.scale(c), qp.zero_point(c));
  }
  return out;
}

std::vector<float> DequantizeTensor(std::span<const int8_t> values,
                                    const QuantParams& qp, const Shape& shape) {
  ChannelIndexer channel(qp, shape);
  std::vector<float> out(values.size());
  for (size_t i = 0; i < values.size(); ++i) {
    const size_t c = channel(i);
    out[i] = static_cast<float>(
        DequantizeValue(values[i], qp.scale(c), qp.zero_point(c)));
  }
  return out;
}

int WeightChannelAxis(OpKind kind) {
  return kind == OpKind::kDepthwiseConv2D ? 3 : 0;
}

QuantParams PerChannelSymmetric(const TensorSpec& weights, int axis) {
  const auto& data = weights.f32();
  QuantParams probe;
  probe.axis = axis;
  probe.scales = {1.0};
  probe.zero_points = {0};
  ChannelIndexer channel(probe, weights.shape);
  std::vector<double> bound(static_cast<size_t>(weights.shape.at(axis)), 0.0);
  for (size_t i = 0; i < data.size(); ++i)
    bound[channel(i)] = std::max(bound[channel(i)],
                                 std::abs(static_cast<double>(data[i])));
  QuantParams qp;
  qp.axis = axis;
  qp.symmetric = true;
  for (double b : bound) {
    TensorRange r{weights.id, -b, b};
    qp.scales.push_back(ComputeQParams(r, QuantMode::kSymmetric).scale());
    qp.zero_points.push_back(0);
  }
  return qp;
}

namespace {

bool InheritsInputParams(OpKind kind) {
  return kind == OpKind::kReLU || kind == OpKind::kMaxPool2D ||
         kind == OpKind::kAvgPool2D || kind == OpKind::kFlatten;
}

const TensorRange& RangeFor(const RangeMap& ranges, const std::string& id) {
  auto it = ranges.find(id);
  if (it == ranges.end())
    throw QuantizationError("missing calibration range for tensor " + id);
  return it->second;
}

}  // namespace

Graph QuantizeGraph(const Graph& graph, const RangeMap& ranges) {
  auto inferred = InferShapes(graph);
  for (const auto& [id, t] : inferred.graph.tensors)
    if (t.dtype != DType::kFloat32)
      throw QuantizationError("graph " + graph.name +
                              " is not a Float32 graph (tensor " + id + ")");
  Graph q = std::move(inferred.graph);

  // Weights first: the per-tensor range is required for completeness even
  // though per-channel params come from the data itself.
  for (auto& [id, t] : q.tensors) {
    if (t.kind == TensorKind::kWeight) RangeFor(ranges, id);
  }

  // Activations in execution order so inherited params are available.
  for (const auto& id : q.inputs) {
    auto& t = q.mutable_tensor(id);
    t.quant = ComputeQParams(RangeFor(ranges, id), QuantMode::kAsymmetric);
    t.dtype = DType::kInt8;
  }
  for (int idx : inferred.order) {
    OpNode& n = q.nodes[idx];
    auto& out = q.mutable_tensor(n.outputs[0]);
    if (n.kind == OpKind::kSoftmax) continue;  // stays Float32
    if (InheritsInputParams(n.kind)) {
      out.quant = q.tensor(n.inputs[0]).quant;
    } else {
      out.quant = ComputeQParams(RangeFor(ranges, out.id), QuantMode::kAsymmetric);
    }
    out.dtype = DType::kInt8;
  }

  for (int idx : inferred.order) {
    OpNode& n = q.nodes[idx];
    n.requant.clear();
    const auto& out_qp = q.tensor(n.outputs[0]).quant;
    if (IsWeightedOp(n.kind)) {
      const double s_in = q.tensor(n.inputs[0]).quant->scale();
      auto& w = q.mutable_tensor(n.inputs[1]);
      const QuantParams wq = PerChannelSymmetric(w, WeightChannelAxis(n.kind));
      w.data = QuantizeTensor(w.f32(), wq, w.shape);
      w.quant = wq;
      w.dtype = DType::kInt8;
      const size_t channels = wq.scales.size();
      if (n.inputs.size() > 2) {
        auto& b = q.mutable_tensor(n.inputs[2]);
        const auto& bf = b.f32();
        QuantParams bq;
        bq.axis = 0;
        bq.symmetric = true;
        std::vector<int32_t> bi(bf.size());
        for (size_t c = 0; c < channels; ++c) {
          const double s = s_in * wq.scales[c];
          bq.scales.push_back(s);
          bq.zero_points.push_back(0);
          const int64_t v = RoundHalfAwayFromZero(bf[c] / s);
          if (v > std::numeric_limits<int32_t>::max() ||
              v < std::numeric_limits<int32_t>::min())
            throw QuantizationError("bias " + b.id + " overflows int32");
          bi[c] = static_cast<int32_t>(v);
        }
        b.data = std::move(bi);
        b.quant = std::move(bq);
        b.dtype = DType::kInt32;
      }
      for (size_t c = 0; c < channels; ++c)
        n.requant.push_back(
            EncodeMultiplier(s_in * wq.scales[c] / out_qp->scale()));
    } else if (n.kind == OpKind::kAdd || n.kind == OpKind::kConcat) {
      for (const auto& in : n.inputs)
        n.requant.push_back(
            EncodeMultiplier(q.tensor(in).quant->scale() / out_qp->scale()));
    }
  }
  return q;
}

}  // namespace orbitc
