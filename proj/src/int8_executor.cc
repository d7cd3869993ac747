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

// Integer interpreter. Every kernel is pure int8/int32 arithmetic between
// the input quantize and the output dequantize; Softmax is the only
// Float32 kernel.

#include <algorithm>
#include <functional>
#include <limits>
#include <set>

#include "kernels_internal.h"
#include "orbitc/executor.h"
#include "orbitc/fixed_point.h"

namespace orbitc {

namespace {

using Int8Buffer = std::vector<int8_t>;

const QuantParams& Params(const Graph& g, const std::string& id) {
  const auto& t = g.tensor(id);
  if (!t.quant) throw ExecutionError("missing QuantParams on tensor " + id);
  return *t.quant;
}

// Maps an int8 value from one per-tensor quantization to another. An
// empty multiplier list means the two quantizations are identical.
struct Rescale {
  int32_t zin = 0;
  int32_t zout = 0;
  const FixedPointMultiplier* m = nullptr;

  int8_t operator()(int64_t centered) const {
    if (!m) return SaturateInt8(centered + zin);
    return SaturateInt8(zout + ApplyMultiplier(centered, *m));
  }
};

Rescale UnaryRescale(const Graph& g, const OpNode& n) {
  const auto& in = Params(g, n.inputs[0]);
  const auto& out = Params(g, n.outputs[0]);
  Rescale r{in.zero_point(), out.zero_point(), nullptr};
  if (!n.requant.empty()) {
    r.m = &n.requant[0];
  } else if (in.scale() != out.scale() || in.zero_point() != out.zero_point()) {
    throw ExecutionError("node " + n.id +
                         " changes quantization but has no requant multiplier");
  }
  return r;
}

struct Window {
  int64_t out_h, out_w, pad_top, pad_left;
};

Window WindowFor(const OpAttrs& a, int64_t in_h, int64_t in_w) {
  return {ConvOutputSize(in_h, a.kernel_h, a.stride_h, a.padding),
          ConvOutputSize(in_w, a.kernel_w, a.stride_w, a.padding),
          a.padding == Padding::kSame ? SamePadBefore(in_h, a.kernel_h, a.stride_h) : 0,
          a.padding == Padding::kSame ? SamePadBefore(in_w, a.kernel_w, a.stride_w) : 0};
}

// Applied to each requantized output of a weighted op; identity when the op
// runs unfused.
using Epilogue = std::function<int8_t(int8_t)>;

int64_t CheckedAccumulator(int64_t acc, const OpNode& n) {
  if (acc > std::numeric_limits<int32_t>::max() ||
      acc < std::numeric_limits<int32_t>::min())
    throw ExecutionError("accumulator overflow in node " + n.id + " (value " +
                         std::to_string(acc) + ")");
  return acc;
}

void CheckRequant(const OpNode& n, int64_t channels) {
  if (static_cast<int64_t>(n.requant.size()) != channels)
    throw ExecutionError("node " + n.id + " needs " + std::to_string(channels) +
                         " requant multipliers, has " +
                         std::to_string(n.requant.size()));
}

const std::vector<int32_t>* BiasOf(const Graph& g, const OpNode& n) {
  if (n.inputs.size() < 3) return nullptr;
  const auto& b = g.tensor(n.inputs[2]);
  if (b.dtype != DType::kInt32)
    throw ExecutionError("bias " + b.id + " must be int32 in a quantized graph");
  return &b.i32();
}

const std::vector<int8_t>& WeightsOf(const Graph& g, const OpNode& n) {
  const auto& w = g.tensor(n.inputs[1]);
  if (w.dtype != DType::kInt8 || !w.quant)
    throw ExecutionError("weights " + w.id + " must be quantized int8");
  return w.i8();
}

void ConvInt8(const Graph& g, const OpNode& n, const Int8Buffer& in,
              const Epilogue& epilogue, Int8Buffer& out) {
  const auto& in_shape = g.tensor(n.inputs[0]).shape;
  const auto& wt = g.tensor(n.inputs[1]);
  const auto& w = WeightsOf(g, n);
  const auto* bias = BiasOf(g, n);
  const auto& wq = *wt.quant;
  const int32_t zin = Params(g, n.inputs[0]).zero_point();
  const int32_t zout = Params(g, n.outputs[0]).zero_point();
  const int64_t H = in_shape[1], W = in_shape[2], C = in_shape[3];
  const int64_t F = wt.shape[0], KH = wt.shape[1], KW = wt.shape[2];
  CheckRequant(n, F);
  const Window win = WindowFor(n.attrs, H, W);
  out.assign(static_cast<size_t>(win.out_h * win.out_w * F), 0);
  for (int64_t oy = 0; oy < win.out_h; ++oy) {
    for (int64_t ox = 0; ox < win.out_w; ++ox) {
      for (int64_t f = 0; f < F; ++f) {
        const int32_t zw = wq.zero_point(static_cast<size_t>(f));
        int64_t acc = bias ? (*bias)[f] : 0;
        for (int64_t ky = 0; ky < KH; ++ky) {
          const int64_t iy = oy * n.attrs.stride_h - win.pad_top + ky;
          if (iy < 0 || iy >= H) continue;
          for (int64_t kx = 0; kx < KW; ++kx) {
            const int64_t ix = ox * n.attrs.stride_w - win.pad_left + kx;
            if (ix < 0 || ix >= W) continue;
            const int8_t* ip = &in[(iy * W + ix) * C];
            const int8_t* wp = &w[((f * KH + ky) * KW + kx) * C];
            for (int64_t c = 0; c < C; ++c)
              acc += static_cast<int64_t>(ip[c] - zin) * (wp[c] - zw);
          }
        }
        CheckedAccumulator(acc, n);
        int8_t q = SaturateInt8(zout + ApplyMultiplier(acc, n.requant[f]));
        out[(oy * win.out_w + ox) * F + f] = epilogue ? epilogue(q) : q;
      }
    }
  }
}

void DepthwiseInt8(const Graph& g, const OpNode& n, const Int8Buffer& in,
                   const Epilogue& epilogue, Int8Buffer& out) {
  const auto& in_shape = g.tensor(n.inputs[0]).shape;
  const auto& wt = g.tensor(n.inputs[1]);
  const auto& w = WeightsOf(g, n);
  const auto* bias = BiasOf(g, n);
  const auto& wq = *wt.quant;
  const int32_t zin = Params(g, n.inputs[0]).zero_point();
  const int32_t zout = Params(g, n.outputs[0]).zero_point();
  const int64_t H = in_shape[1], W = in_shape[2], C = in_shape[3];
  const int64_t KH = wt.shape[1], KW = wt.shape[2];
  CheckRequant(n, C);
  const Window win = WindowFor(n.attrs, H, W);
  out.assign(static_cast<size_t>(win.out_h * win.out_w * C), 0);
  for (int64_t oy = 0; oy < win.out_h; ++oy) {
    for (int64_t ox = 0; ox < win.out_w; ++ox) {
      for (int64_t c = 0; c < C; ++c) {
        const int32_t zw = wq.zero_point(static_cast<size_t>(c));
        int64_t acc = bias ? (*bias)[c] : 0;
        for (int64_t ky = 0; ky < KH; ++ky) {
          const int64_t iy = oy * n.attrs.stride_h - win.pad_top + ky;
          if (iy < 0 || iy >= H) continue;
          for (int64_t kx = 0; kx < KW; ++kx) {
            const int64_t ix = ox * n.attrs.stride_w - win.pad_left + kx;
            if (ix < 0 || ix >= W) continue;
            acc += static_cast<int64_t>(in[(iy * W + ix) * C + c] - zin) *
                   (w[(ky * KW + kx) * C + c] - zw);
          }
        }
        CheckedAccumulator(acc, n);
        int8_t q = SaturateInt8(zout + ApplyMultiplier(acc, n.requant[c]));
        out[(oy * win.out_w + ox) * C + c] = epilogue ? epilogue(q) : q;
      }
    }
  }
}

void FullyConnectedInt8(const Graph& g, const OpNode& n, const Int8Buffer& in,
                        const Epilogue& epilogue, Int8Buffer& out) {
  const auto& wt = g.tensor(n.inputs[1]);
  const auto& w = WeightsOf(g, n);
  const auto* bias = BiasOf(g, n);
  const auto& wq = *wt.quant;
  const int32_t zin = Params(g, n.inputs[0]).zero_point();
  const int32_t zout = Params(g, n.outputs[0]).zero_point();
  const int64_t O = wt.shape[0], I = wt.shape[1];
  CheckRequant(n, O);
  out.assign(static_cast<size_t>(O), 0);
  for (int64_t o = 0; o < O; ++o) {
    const int32_t zw = wq.zero_point(static_cast<size_t>(o));
    int64_t acc = bias ? (*bias)[o] : 0;
    for (int64_t i = 0; i < I; ++i)
      acc += static_cast<int64_t>(in[i] - zin) * (w[o * I + i] - zw);
    CheckedAccumulator(acc, n);
    int8_t q = SaturateInt8(zout + ApplyMultiplier(acc, n.requant[o]));
    out[o] = epilogue ? epilogue(q) : q;
  }
}

void PoolInt8(const Graph& g, const OpNode& n, const Int8Buffer& in,
              bool is_max, Int8Buffer& out) {
  const auto& in_shape = g.tensor(n.inputs[0]).shape;
  const Rescale rescale = UnaryRescale(g, n);
  const int64_t H = in_shape[1], W = in_shape[2], C = in_shape[3];
  const Window win = WindowFor(n.attrs, H, W);
  out.assign(static_cast<size_t>(win.out_h * win.out_w * C), 0);
  for (int64_t oy = 0; oy < win.out_h; ++oy) {
    for (int64_t ox = 0; ox < win.out_w; ++ox) {
      for (int64_t c = 0; c < C; ++c) {
        int32_t best = -129;
        int64_t sum = 0;
        int64_t count = 0;
        for (int64_t ky = 0; ky < n.attrs.kernel_h; ++ky) {
          const int64_t iy = oy * n.attrs.stride_h - win.pad_top + ky;
          if (iy < 0 || iy >= H) continue;
          for (int64_t kx = 0; kx < n.attrs.kernel_w; ++kx) {
            const int64_t ix = ox * n.attrs.stride_w - win.pad_left + kx;
            if (ix < 0 || ix >= W) continue;
            const int32_t v = in[(iy * W + ix) * C + c];
            best = std::max(best, v);
            sum += v - rescale.zin;
            ++count;
          }
        }
        const int64_t centered =
            is_max ? best - rescale.zin : RoundingDivide(sum, count);
        out[(oy * win.out_w + ox) * C + c] = rescale(centered);
      }
    }
  }
}

int8_t ReluValue(const Rescale& r, int8_t q) {
  return r(std::max<int32_t>(q, r.zin) - r.zin);
}

class Int8Interpreter {
 public:
  Int8Interpreter(const Graph& g, const Int8RunOptions& options)
      : g_(g), options_(options) {}

  std::vector<Tensor> Run(const Tensor& input) {
    if (g_.inputs.size() != 1)
      throw ExecutionError("graph " + g_.name + " must have exactly one input");
    const auto& in_spec = g_.tensor(g_.inputs[0]);
    if (in_spec.shape != input.shape ||
        static_cast<int64_t>(input.data.size()) != NumElements(input.shape))
      throw ExecutionError("input shape " + ShapeToString(input.shape) +
                           " does not match graph input " +
                           ShapeToString(in_spec.shape));
    if (in_spec.dtype != DType::kInt8)
      throw ExecutionError("integer interpreter needs an int8 graph input");
    for (const auto& [id, t] : g_.tensors) {
      if (t.shape.empty())
        throw ExecutionError("tensor " + id + " has no inferred shape");
      if (t.dtype == DType::kInt8 && !t.quant)
        throw ExecutionError("missing QuantParams on tensor " + id);
    }

    const auto& qp = *in_spec.quant;
    Int8Buffer q(input.data.size());
    for (size_t i = 0; i < q.size(); ++i)
      q[i] = QuantizeValue(input.data[i], qp.scale(), qp.zero_point());
    Store(g_.inputs[0], std::move(q));

    if (options_.kernels) {
      for (const auto& group : options_.kernels->kernels) RunKernel(group);
    } else {
      for (int idx : TopologicalOrder(g_)) RunNode(g_.nodes[idx], nullptr);
    }

    std::vector<Tensor> outputs;
    for (const auto& id : g_.outputs) {
      const auto& spec = g_.tensor(id);
      Tensor t;
      t.shape = spec.shape;
      if (spec.dtype == DType::kFloat32) {
        t.data = Float(id).data;
      } else {
        const auto& oq = *spec.quant;
        const auto& buf = Int8(id);
        t.data.resize(buf.size());
        for (size_t i = 0; i < buf.size(); ++i)
          t.data[i] = static_cast<float>(
              DequantizeValue(buf[i], oq.scale(), oq.zero_point()));
      }
      outputs.push_back(std::move(t));
    }
    return outputs;
  }

 private:
  void Store(const std::string& id, Int8Buffer buf) {
    if (options_.trace) (*options_.trace)[id] = buf;
    q_[id] = std::move(buf);
  }

  const Int8Buffer& Int8(const std::string& id) const {
    auto it = q_.find(id);
    if (it == q_.end())
      throw ExecutionError("int8 tensor " + id + " is not available yet");
    return it->second;
  }

  const Tensor& Float(const std::string& id) const {
    auto it = f_.find(id);
    if (it == f_.end())
      throw ExecutionError("float tensor " + id + " is not available yet");
    return it->second;
  }

  void RunKernel(const std::vector<std::string>& group) {
    if (group.size() == 1) {
      RunNode(g_.node(group[0]), nullptr);
      return;
    }
    const OpNode& head = g_.node(group.at(0));
    const OpNode& tail = g_.node(group.at(1));
    if (group.size() != 2 || !IsWeightedOp(head.kind) ||
        tail.kind != OpKind::kReLU || tail.inputs[0] != head.outputs[0])
      throw ExecutionError("unsupported fused kernel starting at " + head.id);
    const Rescale relu = UnaryRescale(g_, tail);
    Epilogue epilogue = [&relu](int8_t q) { return ReluValue(relu, q); };
    RunNode(head, &epilogue, tail.outputs[0]);
  }

  // With an epilogue the weighted op writes the fused output directly and
  // its own output tensor is never materialised.
  void RunNode(const OpNode& n, const Epilogue* epilogue,
               const std::string& fused_output = "") {
    const std::string& out_id = epilogue ? fused_output : n.outputs[0];
    const Epilogue none;
    const Epilogue& ep = epilogue ? *epilogue : none;
    Int8Buffer out;
    switch (n.kind) {
      case OpKind::kConv2D:
        ConvInt8(g_, n, Int8(n.inputs[0]), ep, out);
        break;
      case OpKind::kDepthwiseConv2D:
        DepthwiseInt8(g_, n, Int8(n.inputs[0]), ep, out);
        break;
      case OpKind::kFullyConnected:
        FullyConnectedInt8(g_, n, Int8(n.inputs[0]), ep, out);
        break;
      case OpKind::kReLU: {
        const Rescale r = UnaryRescale(g_, n);
        const auto& in = Int8(n.inputs[0]);
        out.resize(in.size());
        for (size_t i = 0; i < in.size(); ++i) out[i] = ReluValue(r, in[i]);
        break;
      }
      case OpKind::kMaxPool2D:
        PoolInt8(g_, n, Int8(n.inputs[0]), true, out);
        break;
      case OpKind::kAvgPool2D:
        PoolInt8(g_, n, Int8(n.inputs[0]), false, out);
        break;
      case OpKind::kAdd: {
        if (n.requant.size() != 2)
          throw ExecutionError("node " + n.id + " needs two requant multipliers");
        const auto& a = Int8(n.inputs[0]);
        const auto& b = Int8(n.inputs[1]);
        const int32_t za = Params(g_, n.inputs[0]).zero_point();
        const int32_t zb = Params(g_, n.inputs[1]).zero_point();
        const int32_t zo = Params(g_, n.outputs[0]).zero_point();
        out.resize(a.size());
        for (size_t i = 0; i < a.size(); ++i)
          out[i] = SaturateInt8(zo + ApplyMultiplier(a[i] - za, n.requant[0]) +
                                ApplyMultiplier(b[i] - zb, n.requant[1]));
        break;
      }
      case OpKind::kConcat: {
        if (n.requant.size() != n.inputs.size())
          throw ExecutionError("node " + n.id +
                               " needs one requant multiplier per input");
        const auto& shape0 = g_.tensor(n.inputs[0]).shape;
        const int rank = static_cast<int>(shape0.size());
        const int axis = n.attrs.axis < 0 ? n.attrs.axis + rank : n.attrs.axis;
        int64_t outer = 1, inner = 1;
        for (int d = 0; d < axis; ++d) outer *= shape0[d];
        for (int d = axis + 1; d < rank; ++d) inner *= shape0[d];
        const int32_t zo = Params(g_, n.outputs[0]).zero_point();
        for (int64_t o = 0; o < outer; ++o) {
          for (size_t k = 0; k < n.inputs.size(); ++k) {
            const auto& src = Int8(n.inputs[k]);
            const int32_t zi = Params(g_, n.inputs[k]).zero_point();
            const int64_t chunk = g_.tensor(n.inputs[k]).shape[axis] * inner;
            for (int64_t i = 0; i < chunk; ++i)
              out.push_back(SaturateInt8(
                  zo + ApplyMultiplier(src[o * chunk + i] - zi, n.requant[k])));
          }
        }
        break;
      }
      case OpKind::kFlatten: {
        const Rescale r = UnaryRescale(g_, n);
        const auto& in = Int8(n.inputs[0]);
        out.resize(in.size());
        for (size_t i = 0; i < in.size(); ++i) out[i] = r(in[i] - r.zin);
        break;
      }
      case OpKind::kSoftmax: {
        const auto& in_spec = g_.tensor(n.inputs[0]);
        const auto& qp = Params(g_, n.inputs[0]);
        const auto& in = Int8(n.inputs[0]);
        Tensor logits;
        logits.shape = in_spec.shape;
        logits.data.resize(in.size());
        for (size_t i = 0; i < in.size(); ++i)
          logits.data[i] = static_cast<float>(
              DequantizeValue(in[i], qp.scale(), qp.zero_point()));
        Tensor probs;
        SoftmaxF32(logits, probs);
        const auto& out_spec = g_.tensor(out_id);
        if (out_spec.dtype == DType::kFloat32) {
          f_[out_id] = std::move(probs);
          return;
        }
        const auto& oq = Params(g_, out_id);
        out.resize(probs.data.size());
        for (size_t i = 0; i < out.size(); ++i)
          out[i] = QuantizeValue(probs.data[i], oq.scale(), oq.zero_point());
        break;
      }
    }
    Store(out_id, std::move(out));
  }

  const Graph& g_;
  const Int8RunOptions& options_;
  std::map<std::string, Int8Buffer> q_;
  std::map<std::string, Tensor> f_;
};

}  // namespace

std::vector<Tensor> RunInt8(const Graph& qgraph, const Tensor& input,
                            const Int8RunOptions& options) {
  return Int8Interpreter(qgraph, options).Run(input);
}

}  // namespace orbitc
