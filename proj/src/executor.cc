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

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "json_util.h"
#include "kernels_internal.h"
#include "orbitc/executor.h"

namespace orbitc {

namespace {

struct Window {
  int64_t out_h, out_w, pad_top, pad_left;
};

Window WindowFor(const OpAttrs& a, int64_t in_h, int64_t in_w) {
  Window w;
  w.out_h = ConvOutputSize(in_h, a.kernel_h, a.stride_h, a.padding);
  w.out_w = ConvOutputSize(in_w, a.kernel_w, a.stride_w, a.padding);
  w.pad_top = a.padding == Padding::kSame
                  ? SamePadBefore(in_h, a.kernel_h, a.stride_h)
                  : 0;
  w.pad_left = a.padding == Padding::kSame
                   ? SamePadBefore(in_w, a.kernel_w, a.stride_w)
                   : 0;
  return w;
}

void Conv2DF32(const OpNode& n, const Tensor& in, const TensorSpec& weight,
               const std::vector<float>* bias, Tensor& out) {
  const auto& w = weight.f32();
  const int64_t H = in.shape[1], W = in.shape[2], C = in.shape[3];
  const int64_t F = weight.shape[0], KH = weight.shape[1], KW = weight.shape[2];
  const Window win = WindowFor(n.attrs, H, W);
  out.shape = {1, win.out_h, win.out_w, F};
  out.data.assign(static_cast<size_t>(win.out_h * win.out_w * F), 0.0f);
  for (int64_t oy = 0; oy < win.out_h; ++oy) {
    for (int64_t ox = 0; ox < win.out_w; ++ox) {
      for (int64_t f = 0; f < F; ++f) {
        float acc = bias ? (*bias)[f] : 0.0f;
        for (int64_t ky = 0; ky < KH; ++ky) {
          const int64_t iy = oy * n.attrs.stride_h - win.pad_top + ky;
          if (iy < 0 || iy >= H) continue;
          for (int64_t kx = 0; kx < KW; ++kx) {
            const int64_t ix = ox * n.attrs.stride_w - win.pad_left + kx;
            if (ix < 0 || ix >= W) continue;
            const float* ip = &in.data[(iy * W + ix) * C];
            const float* wp = &w[((f * KH + ky) * KW + kx) * C];
            for (int64_t c = 0; c < C; ++c) acc += ip[c] * wp[c];
          }
        }
        out.data[(oy * win.out_w + ox) * F + f] = acc;
      }
    }
  }
}

void DepthwiseF32(const OpNode& n, const Tensor& in, const TensorSpec& weight,
                  const std::vector<float>* bias, Tensor& out) {
  const auto& w = weight.f32();
  const int64_t H = in.shape[1], W = in.shape[2], C = in.shape[3];
  const int64_t KH = weight.shape[1], KW = weight.shape[2];
  const Window win = WindowFor(n.attrs, H, W);
  out.shape = {1, win.out_h, win.out_w, C};
  out.data.assign(static_cast<size_t>(win.out_h * win.out_w * C), 0.0f);
  for (int64_t oy = 0; oy < win.out_h; ++oy) {
    for (int64_t ox = 0; ox < win.out_w; ++ox) {
      for (int64_t c = 0; c < C; ++c) {
        float acc = bias ? (*bias)[c] : 0.0f;
        for (int64_t ky = 0; ky < KH; ++ky) {
          const int64_t iy = oy * n.attrs.stride_h - win.pad_top + ky;
          if (iy < 0 || iy >= H) continue;
          for (int64_t kx = 0; kx < KW; ++kx) {
            const int64_t ix = ox * n.attrs.stride_w - win.pad_left + kx;
            if (ix < 0 || ix >= W) continue;
            acc += in.data[(iy * W + ix) * C + c] * w[(ky * KW + kx) * C + c];
          }
        }
        out.data[(oy * win.out_w + ox) * C + c] = acc;
      }
    }
  }
}

void FullyConnectedF32(const Tensor& in, const TensorSpec& weight,
                       const std::vector<float>* bias, Tensor& out) {
  const auto& w = weight.f32();
  const int64_t O = weight.shape[0], I = weight.shape[1];
  out.shape = {1, O};
  out.data.assign(static_cast<size_t>(O), 0.0f);
  for (int64_t o = 0; o < O; ++o) {
    float acc = bias ? (*bias)[o] : 0.0f;
    const float* wp = &w[o * I];
    for (int64_t i = 0; i < I; ++i) acc += in.data[i] * wp[i];
    out.data[o] = acc;
  }
}

void PoolF32(const OpNode& n, const Tensor& in, bool is_max, Tensor& out) {
  const int64_t H = in.shape[1], W = in.shape[2], C = in.shape[3];
  const Window win = WindowFor(n.attrs, H, W);
  out.shape = {1, win.out_h, win.out_w, C};
  out.data.assign(static_cast<size_t>(win.out_h * win.out_w * C), 0.0f);
  for (int64_t oy = 0; oy < win.out_h; ++oy) {
    for (int64_t ox = 0; ox < win.out_w; ++ox) {
      for (int64_t c = 0; c < C; ++c) {
        float best = -std::numeric_limits<float>::infinity();
        float sum = 0.0f;
        int64_t count = 0;
        for (int64_t ky = 0; ky < n.attrs.kernel_h; ++ky) {
          const int64_t iy = oy * n.attrs.stride_h - win.pad_top + ky;
          if (iy < 0 || iy >= H) continue;
          for (int64_t kx = 0; kx < n.attrs.kernel_w; ++kx) {
            const int64_t ix = ox * n.attrs.stride_w - win.pad_left + kx;
            if (ix < 0 || ix >= W) continue;
            const float v = in.data[(iy * W + ix) * C + c];
            best = std::max(best, v);
            sum += v;
            ++count;
          }
        }
        out.data[(oy * win.out_w + ox) * C + c] =
            is_max ? best : sum / static_cast<float>(count);
      }
    }
  }
}

void ConcatGeneric(const std::vector<const Tensor*>& ins, int axis,
                   Tensor& out) {
  const Shape& s0 = ins[0]->shape;
  const int rank = static_cast<int>(s0.size());
  if (axis < 0) axis += rank;
  int64_t outer = 1;
  for (int d = 0; d < axis; ++d) outer *= s0[d];
  int64_t inner = 1;
  for (int d = axis + 1; d < rank; ++d) inner *= s0[d];
  out.shape = s0;
  out.shape[axis] = 0;
  for (const auto* t : ins) out.shape[axis] += t->shape[axis];
  out.data.clear();
  out.data.reserve(static_cast<size_t>(NumElements(out.shape)));
  for (int64_t o = 0; o < outer; ++o)
    for (const auto* t : ins) {
      const int64_t chunk = t->shape[axis] * inner;
      out.data.insert(out.data.end(), t->data.begin() + o * chunk,
                      t->data.begin() + (o + 1) * chunk);
    }
}

}  // namespace

void SoftmaxF32(const Tensor& in, Tensor& out) {
  out.shape = in.shape;
  out.data.resize(in.data.size());
  const int64_t depth = in.shape.back();
  const int64_t rows = static_cast<int64_t>(in.data.size()) / depth;
  for (int64_t r = 0; r < rows; ++r) {
    const float* x = &in.data[r * depth];
    double mx = x[0];
    for (int64_t i = 1; i < depth; ++i) mx = std::max(mx, static_cast<double>(x[i]));
    double sum = 0.0;
    std::vector<double> e(depth);
    for (int64_t i = 0; i < depth; ++i) {
      e[i] = std::exp(static_cast<double>(x[i]) - mx);
      sum += e[i];
    }
    for (int64_t i = 0; i < depth; ++i)
      out.data[r * depth + i] = static_cast<float>(e[i] / sum);
  }
}

namespace {

void CheckRunnable(const Graph& graph, const Tensor& input) {
  if (graph.inputs.size() != 1)
    throw ExecutionError("graph " + graph.name + " must have exactly one input");
  const auto& in = graph.tensor(graph.inputs[0]);
  if (in.shape != input.shape)
    throw ExecutionError("input shape " + ShapeToString(input.shape) +
                         " does not match graph input " + ShapeToString(in.shape));
  if (static_cast<int64_t>(input.data.size()) != NumElements(input.shape))
    throw ExecutionError("input tensor data does not match its shape");
  for (const auto& [id, t] : graph.tensors)
    if (t.shape.empty())
      throw ExecutionError("tensor " + id + " has no inferred shape");
}

}  // namespace

std::map<std::string, Tensor> RunF32Trace(const Graph& graph,
                                          const Tensor& input) {
  CheckRunnable(graph, input);
  for (const auto& [id, t] : graph.tensors)
    if (t.dtype != DType::kFloat32)
      throw ExecutionError("float interpreter given " +
                           std::string(DTypeName(t.dtype)) + " tensor " + id);
  std::map<std::string, Tensor> values;
  values[graph.inputs[0]] = input;
  for (int idx : TopologicalOrder(graph)) {
    const OpNode& n = graph.nodes[idx];
    const Tensor& in = values.at(n.inputs[0]);
    Tensor out;
    const std::vector<float>* bias =
        n.inputs.size() > 2 ? &graph.tensor(n.inputs[2]).f32() : nullptr;
    switch (n.kind) {
      case OpKind::kConv2D:
        Conv2DF32(n, in, graph.tensor(n.inputs[1]), bias, out);
        break;
      case OpKind::kDepthwiseConv2D:
        DepthwiseF32(n, in, graph.tensor(n.inputs[1]), bias, out);
        break;
      case OpKind::kFullyConnected:
        FullyConnectedF32(in, graph.tensor(n.inputs[1]), bias, out);
        break;
      case OpKind::kReLU:
        out = in;
        for (float& v : out.data) v = std::max(v, 0.0f);
        break;
      case OpKind::kMaxPool2D:
        PoolF32(n, in, true, out);
        break;
      case OpKind::kAvgPool2D:
        PoolF32(n, in, false, out);
        break;
      case OpKind::kAdd: {
        const Tensor& b = values.at(n.inputs[1]);
        out = in;
        for (size_t i = 0; i < out.data.size(); ++i) out.data[i] += b.data[i];
        break;
      }
      case OpKind::kConcat: {
        std::vector<const Tensor*> ins;
        for (const auto& id : n.inputs) ins.push_back(&values.at(id));
        ConcatGeneric(ins, n.attrs.axis, out);
        break;
      }
      case OpKind::kFlatten:
        out = in;
        out.shape = {1, NumElements(in.shape)};
        break;
      case OpKind::kSoftmax:
        SoftmaxF32(in, out);
        break;
    }
    values[n.outputs[0]] = std::move(out);
  }
  return values;
}

std::vector<Tensor> RunF32(const Graph& graph, const Tensor& input) {
  auto values = RunF32Trace(graph, input);
  std::vector<Tensor> outputs;
  for (const auto& id : graph.outputs) outputs.push_back(values.at(id));
  return outputs;
}

RangeMap Calibrate(const Graph& graph, std::span<const Tensor> inputs) {
  if (inputs.empty()) throw ExecutionError("calibration set is empty");
  RangeMap ranges;
  auto merge = [&](const std::string& id, const std::vector<float>& data) {
    if (data.empty()) return;
    auto [lo, hi] = std::minmax_element(data.begin(), data.end());
    auto it = ranges.find(id);
    if (it == ranges.end()) {
      ranges[id] = TensorRange{id, *lo, *hi};
    } else {
      it->second.min_r = std::min<double>(it->second.min_r, *lo);
      it->second.max_r = std::max<double>(it->second.max_r, *hi);
    }
  };
  for (const auto& input : inputs)
    for (const auto& [id, t] : RunF32Trace(graph, input)) merge(id, t.data);
  for (const auto& [id, t] : graph.tensors)
    if (t.is_constant()) merge(id, t.f32());
  for (const auto& [id, r] : ranges)
    if (!std::isfinite(r.min_r) || !std::isfinite(r.max_r))
      throw ExecutionError("non-finite calibration range for " + id);
  return ranges;
}

std::string RangesToJson(const RangeMap& ranges) {
  internal::Json j = internal::Json::object();
  for (const auto& [id, r] : ranges) j[id] = {{"min", r.min_r}, {"max", r.max_r}};
  return j.dump(2) + "\n";
}

RangeMap RangesFromJson(const std::string& text, const std::string& where) {
  internal::Json j;
  try {
    j = internal::Json::parse(text);
  } catch (const internal::Json::exception& e) {
    throw ConfigError(where + ": malformed JSON: " + e.what());
  }
  if (!j.is_object()) throw ConfigError(where + ": ranges must be an object");
  RangeMap ranges;
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string loc = where + "." + it.key();
    TensorRange r{it.key(), internal::Get<double>(it.value(), "min", loc),
                  internal::Get<double>(it.value(), "max", loc)};
    if (!(r.min_r <= r.max_r)) throw ConfigError(loc + ": min exceeds max");
    ranges[it.key()] = r;
  }
  return ranges;
}

EvaluationResult Evaluate(const Graph& graph, const Dataset& dataset) {
  const bool quantized = graph.is_quantized();
  EvaluationResult result;
  result.records.reserve(dataset.samples.size());
  for (const auto& s : dataset.samples) {
    auto outputs = quantized ? RunInt8(graph, s.input) : RunF32(graph, s.input);
    const auto& probs = outputs.at(0).data;
    const int classes = static_cast<int>(probs.size());
    if (s.label < 0 || s.label >= classes)
      throw ExecutionError("sample " + s.id + ": label " +
                           std::to_string(s.label) + " outside class range [0, " +
                           std::to_string(classes) + ")");
    InferenceRecord r;
    r.sample_id = s.id;
    r.predicted_class = static_cast<int>(
        std::max_element(probs.begin(), probs.end()) - probs.begin());
    r.confidence = probs[r.predicted_class];
    r.true_label = s.label;
    r.correct = r.predicted_class == r.true_label;
    result.correct_count += r.correct ? 1 : 0;
    result.records.push_back(std::move(r));
  }
  result.accuracy = result.records.empty()
                        ? 0.0
                        : static_cast<double>(result.correct_count) /
                              static_cast<double>(result.records.size());
  return result;
}

std::string RecordsToCsv(const std::vector<InferenceRecord>& records) {
  std::ostringstream os;
  os << "sample_id,predicted_class,confidence,true_label,correct\n";
  char buf[64];
  for (const auto& r : records) {
    std::snprintf(buf, sizeof(buf), "%.17g", r.confidence);
    os << r.sample_id << "," << r.predicted_class << "," << buf << ","
       << r.true_label << "," << (r.correct ? 1 : 0) << "\n";
  }
  return os.str();
}

std::vector<InferenceRecord> RecordsFromCsv(const std::string& text,
                                            const std::string& where) {
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "sample_id,predicted_class,confidence,true_label,correct")
    throw ConfigError(where + ": unexpected records header");
  std::vector<InferenceRecord> records;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) f.push_back(cell);
    const std::string loc = where + ":" + std::to_string(line_no);
    if (f.size() != 5) throw ConfigError(loc + ": expected 5 columns");
    InferenceRecord r;
    try {
      r.sample_id = f[0];
      r.predicted_class = std::stoi(f[1]);
      r.confidence = std::stod(f[2]);
      r.true_label = std::stoi(f[3]);
      r.correct = std::stoi(f[4]) != 0;
    } catch (const std::exception&) {
      throw ConfigError(loc + ": malformed record");
    }
    if (!(r.confidence >= 0.0 && r.confidence <= 1.0))
      throw ConfigError(loc + ": confidence outside [0, 1]");
    if (r.correct != (r.predicted_class == r.true_label))
      throw ConfigError(loc + ": 'correct' disagrees with labels");
    records.push_back(std::move(r));
  }
  return records;
}

std::string RecordsToJson(const std::vector<InferenceRecord>& records,
                          double accuracy) {
  internal::Json j;
  j["accuracy"] = accuracy;
  j["records"] = internal::Json::array();
  for (const auto& r : records)
    j["records"].push_back({{"sample_id", r.sample_id},
                            {"predicted_class", r.predicted_class},
                            {"confidence", r.confidence},
                            {"true_label", r.true_label},
                            {"correct", r.correct}});
  return j.dump(2) + "\n";
}

}  // namespace orbitc
