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

#include "orbitc/graph.h"

#include <algorithm>
#include <array>
#include <queue>
#include <set>
#include <sstream>

namespace orbitc {

int64_t NumElements(const Shape& shape) {
  if (shape.empty()) return 0;
  int64_t n = 1;
  for (int64_t d : shape) n *= d;
  return n;
}

std::string ShapeToString(const Shape& shape) {
  std::ostringstream os;
  os << "(";
  for (size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ", ";
    os << shape[i];
  }
  os << ")";
  return os.str();
}

int64_t DTypeSize(DType dtype) {
  switch (dtype) {
    case DType::kFloat32:
    case DType::kInt32:
      return 4;
    case DType::kInt8:
      return 1;
  }
  return 0;
}

std::string_view DTypeName(DType dtype) {
  switch (dtype) {
    case DType::kFloat32:
      return "float32";
    case DType::kInt8:
      return "int8";
    case DType::kInt32:
      return "int32";
  }
  return "?";
}

DType DTypeFromName(std::string_view name) {
  if (name == "float32") return DType::kFloat32;
  if (name == "int8") return DType::kInt8;
  if (name == "int32") return DType::kInt32;
  throw ModelFormatError("unsupported dtype '" + std::string(name) + "'");
}

namespace {
constexpr std::array<std::pair<TensorKind, std::string_view>, 5> kKindNames{{
    {TensorKind::kInput, "input"},
    {TensorKind::kWeight, "weight"},
    {TensorKind::kBias, "bias"},
    {TensorKind::kActivation, "activation"},
    {TensorKind::kOutput, "output"},
}};

constexpr std::array<std::pair<OpKind, std::string_view>, 10> kOpNames{{
    {OpKind::kConv2D, "Conv2D"},
    {OpKind::kDepthwiseConv2D, "DepthwiseConv2D"},
    {OpKind::kFullyConnected, "FullyConnected"},
    {OpKind::kReLU, "ReLU"},
    {OpKind::kMaxPool2D, "MaxPool2D"},
    {OpKind::kAvgPool2D, "AvgPool2D"},
    {OpKind::kAdd, "Add"},
    {OpKind::kConcat, "Concat"},
    {OpKind::kFlatten, "Flatten"},
    {OpKind::kSoftmax, "Softmax"},
}};
}  // namespace

std::string_view TensorKindName(TensorKind kind) {
  for (const auto& [k, n] : kKindNames)
    if (k == kind) return n;
  return "?";
}

TensorKind TensorKindFromName(std::string_view name) {
  for (const auto& [k, n] : kKindNames)
    if (n == name) return k;
  throw ModelFormatError("unsupported tensor kind '" + std::string(name) +
                         "'");
}

std::string_view OpKindName(OpKind kind) {
  for (const auto& [k, n] : kOpNames)
    if (k == kind) return n;
  return "?";
}

std::optional<OpKind> TryOpKindFromName(std::string_view name) {
  for (const auto& [k, n] : kOpNames)
    if (n == name) return k;
  return std::nullopt;
}

OpKind OpKindFromName(std::string_view name) {
  if (auto kind = TryOpKindFromName(name)) return *kind;
  throw ModelFormatError("unsupported op kind '" + std::string(name) + "'");
}

bool IsWeightedOp(OpKind kind) {
  return kind == OpKind::kConv2D || kind == OpKind::kDepthwiseConv2D ||
         kind == OpKind::kFullyConnected;
}

int64_t TensorSpec::data_size() const {
  return std::visit(
      [](const auto& v) -> int64_t {
        if constexpr (std::is_same_v<std::decay_t<decltype(v)>,
                                     std::monostate>) {
          return 0;
        } else {
          return static_cast<int64_t>(v.size());
        }
      },
      data);
}

const std::vector<float>& TensorSpec::f32() const {
  if (auto* v = std::get_if<std::vector<float>>(&data)) return *v;
  throw ExecutionError("tensor " + id + " has no float32 data");
}
const std::vector<int8_t>& TensorSpec::i8() const {
  if (auto* v = std::get_if<std::vector<int8_t>>(&data)) return *v;
  throw ExecutionError("tensor " + id + " has no int8 data");
}
const std::vector<int32_t>& TensorSpec::i32() const {
  if (auto* v = std::get_if<std::vector<int32_t>>(&data)) return *v;
  throw ExecutionError("tensor " + id + " has no int32 data");
}
std::vector<float>& TensorSpec::mutable_f32() {
  if (auto* v = std::get_if<std::vector<float>>(&data)) return *v;
  throw ExecutionError("tensor " + id + " has no float32 data");
}

const TensorSpec& Graph::tensor(const std::string& id) const {
  auto it = tensors.find(id);
  if (it == tensors.end()) throw GraphError("unknown tensor " + id);
  return it->second;
}

TensorSpec& Graph::mutable_tensor(const std::string& id) {
  auto it = tensors.find(id);
  if (it == tensors.end()) throw GraphError("unknown tensor " + id);
  return it->second;
}

int Graph::node_index(const std::string& id) const {
  for (size_t i = 0; i < nodes.size(); ++i)
    if (nodes[i].id == id) return static_cast<int>(i);
  return -1;
}

const OpNode& Graph::node(const std::string& id) const {
  int i = node_index(id);
  if (i < 0) throw GraphError("unknown node " + id);
  return nodes[i];
}

int Graph::producer(const std::string& tensor_id) const {
  for (size_t i = 0; i < nodes.size(); ++i)
    for (const auto& out : nodes[i].outputs)
      if (out == tensor_id) return static_cast<int>(i);
  return -1;
}

std::vector<int> Graph::consumers(const std::string& tensor_id) const {
  std::vector<int> result;
  for (size_t i = 0; i < nodes.size(); ++i) {
    const auto& ins = nodes[i].inputs;
    if (std::find(ins.begin(), ins.end(), tensor_id) != ins.end())
      result.push_back(static_cast<int>(i));
  }
  return result;
}

bool Graph::is_quantized() const {
  if (inputs.empty()) return false;
  for (const auto& id : inputs) {
    const auto& t = tensor(id);
    if (t.dtype != DType::kInt8 || !t.quant) return false;
  }
  for (const auto& [id, t] : tensors) {
    if (t.kind == TensorKind::kWeight && t.dtype != DType::kInt8) return false;
    if (t.dtype != DType::kFloat32 && !t.quant) return false;
  }
  return true;
}

std::string ValidationReport::ToString() const {
  if (ok()) return "ok";
  std::ostringstream os;
  for (const auto& v : violations) os << v.message << "\n";
  return os.str();
}

namespace {

struct Arity {
  int min_inputs;
  int max_inputs;
};

Arity ArityOf(OpKind kind) {
  switch (kind) {
    case OpKind::kConv2D:
    case OpKind::kDepthwiseConv2D:
    case OpKind::kFullyConnected:
      return {2, 3};
    case OpKind::kAdd:
      return {2, 2};
    case OpKind::kConcat:
      return {2, 64};
    default:
      return {1, 1};
  }
}

class Validator {
 public:
  explicit Validator(const Graph& g) : g_(g) {}

  ValidationReport Run() {
    CheckTensors();
    CheckNodes();
    CheckProducers();
    CheckAcyclic();
    return std::move(report_);
  }

 private:
  void Add(const std::string& subject, const std::string& rule,
           const std::string& message) {
    report_.violations.push_back({subject, rule, message});
  }

  void CheckQuant(const TensorSpec& t) {
    const auto& q = *t.quant;
    if (q.scales.empty() || q.scales.size() != q.zero_points.size()) {
      Add(t.id, "quant params",
          "quant params of " + t.id + " have mismatched table sizes");
      return;
    }
    for (double s : q.scales)
      if (!(s > 0.0))
        Add(t.id, "quant scale", "non-positive scale on " + t.id);
    for (int32_t z : q.zero_points) {
      if (q.symmetric && z != 0)
        Add(t.id, "symmetric zero point",
            "symmetric quantization of " + t.id + " has nonzero zero point");
      if (t.dtype == DType::kInt8 && (z < -128 || z > 127))
        Add(t.id, "zero point range", "zero point out of int8 range on " + t.id);
    }
    if (q.per_channel()) {
      if (!t.is_constant()) {
        Add(t.id, "per-channel on activation",
            "per-channel quantization on non-constant tensor " + t.id);
      } else if (q.axis >= static_cast<int>(t.shape.size()) ||
                 static_cast<int64_t>(q.scales.size()) != t.shape[q.axis]) {
        Add(t.id, "per-channel table",
            "per-channel table of " + t.id + " does not match its shape");
      }
    } else if (q.scales.size() != 1) {
      Add(t.id, "per-tensor table",
          "per-tensor quant params of " + t.id + " have several entries");
    }
  }

  void CheckTensors() {
    for (const auto& [id, t] : g_.tensors) {
      if (id != t.id)
        Add(id, "tensor key", "tensor key " + id + " differs from id " + t.id);
      if (!t.shape.empty()) {
        bool rank_ok = t.shape.size() == 2 || t.shape.size() == 4 ||
                       (t.kind == TensorKind::kBias && t.shape.size() == 1);
        if (!rank_ok)
          Add(id, "rank", "tensor " + id + " has unsupported rank");
        for (int64_t d : t.shape)
          if (d < 1)
            Add(id, "dimension >= 1", "tensor " + id + " has dimension < 1");
      }
      if (t.dtype == DType::kInt8 && !t.quant)
        Add(id, "int8 requires quant",
            "int8 tensor " + id + " lacks quant params");
      if (t.quant) CheckQuant(t);
      if (t.is_constant()) {
        if (t.shape.empty()) {
          Add(id, "constant shape", "constant tensor " + id + " has no shape");
        } else if (t.data_size() != NumElements(t.shape)) {
          Add(id, "constant data size",
              "constant tensor " + id + " carries " +
                  std::to_string(t.data_size()) + " elements, shape needs " +
                  std::to_string(NumElements(t.shape)));
        }
        bool dtype_ok = (t.dtype == DType::kFloat32 &&
                         std::holds_alternative<std::vector<float>>(t.data)) ||
                        (t.dtype == DType::kInt8 &&
                         std::holds_alternative<std::vector<int8_t>>(t.data)) ||
                        (t.dtype == DType::kInt32 &&
                         std::holds_alternative<std::vector<int32_t>>(t.data));
        if (!dtype_ok && t.has_data())
          Add(id, "constant dtype", "data of " + id + " does not match dtype");
      } else if (t.has_data()) {
        Add(id, "activation data", "non-constant tensor " + id + " has data");
      }
    }
    for (const auto& id : g_.inputs) {
      if (!g_.has_tensor(id)) {
        Add(id, "graph input exists", "graph input " + id + " is not declared");
        continue;
      }
      const auto& t = g_.tensor(id);
      if (t.kind != TensorKind::kInput)
        Add(id, "graph input kind", "graph input " + id + " is not kind input");
      if (t.shape.empty())
        Add(id, "graph input shape", "graph input " + id + " has no shape");
      else if (t.shape[0] != 1)
        Add(id, "batch 1", "graph input " + id + " batch must be 1");
    }
    for (const auto& id : g_.outputs)
      if (!g_.has_tensor(id))
        Add(id, "graph output exists",
            "graph output " + id + " is not declared");
  }

  void CheckNodes() {
    std::set<std::string> ids;
    for (const auto& n : g_.nodes) {
      if (!ids.insert(n.id).second)
        Add(n.id, "unique node id", "duplicate node id " + n.id);
      Arity a = ArityOf(n.kind);
      int ni = static_cast<int>(n.inputs.size());
      if (ni < a.min_inputs || ni > a.max_inputs)
        Add(n.id, "input arity",
            "node " + n.id + " (" + std::string(OpKindName(n.kind)) +
                ") has " + std::to_string(ni) + " inputs");
      if (n.outputs.size() != 1)
        Add(n.id, "output arity",
            "node " + n.id + " must have exactly one output");
      const auto& at = n.attrs;
      if (at.kernel_h < 1 || at.kernel_w < 1)
        Add(n.id, "kernel >= 1", "node " + n.id + " has kernel < 1");
      if (at.stride_h < 1 || at.stride_w < 1)
        Add(n.id, "stride >= 1", "node " + n.id + " has stride < 1");

      for (size_t i = 0; i < n.inputs.size(); ++i) {
        const auto& in = n.inputs[i];
        if (!g_.has_tensor(in)) {
          Add(in, "dangling input", "dangling input " + in + " (node " +
                                        n.id + ")");
          continue;
        }
        const auto& t = g_.tensor(in);
        if (IsWeightedOp(n.kind) && i == 1 && t.kind != TensorKind::kWeight)
          Add(n.id, "weight operand",
              "node " + n.id + " input 1 must be a weight tensor");
        if (IsWeightedOp(n.kind) && i == 2 && t.kind != TensorKind::kBias)
          Add(n.id, "bias operand",
              "node " + n.id + " input 2 must be a bias tensor");
        if ((!IsWeightedOp(n.kind) || i == 0) && t.is_constant())
          Add(n.id, "data operand",
              "node " + n.id + " reads constant " + in + " as data");
      }
      for (const auto& out : n.outputs) {
        if (!g_.has_tensor(out)) {
          Add(out, "output declared",
              "node " + n.id + " output " + out + " is not declared");
          continue;
        }
        const auto& t = g_.tensor(out);
        if (t.kind != TensorKind::kActivation && t.kind != TensorKind::kOutput)
          Add(out, "output kind",
              "node " + n.id + " writes non-activation tensor " + out);
      }
    }
  }

  void CheckProducers() {
    std::map<std::string, int> producers;
    for (const auto& n : g_.nodes)
      for (const auto& out : n.outputs) ++producers[out];
    for (const auto& [id, count] : producers)
      if (count > 1) Add(id, "multiple producers", "multiple producers " + id);
    std::set<std::string> graph_inputs(g_.inputs.begin(), g_.inputs.end());
    for (const auto& n : g_.nodes) {
      for (const auto& in : n.inputs) {
        if (!g_.has_tensor(in)) continue;  // reported already
        const auto& t = g_.tensor(in);
        if (t.is_constant() || graph_inputs.count(in)) continue;
        if (!producers.count(in))
          Add(in, "dangling input",
              "dangling input " + in + " (node " + n.id + ")");
      }
    }
    for (const auto& [id, t] : g_.tensors) {
      if ((t.kind == TensorKind::kActivation ||
           t.kind == TensorKind::kOutput) &&
          !producers.count(id))
        Add(id, "unproduced activation",
            "activation " + id + " has no producer");
    }
  }

  void CheckAcyclic() {
    try {
      TopologicalOrder(g_);
    } catch (const GraphError& e) {
      Add(g_.name, "acyclic", e.what());
    }
  }

  const Graph& g_;
  ValidationReport report_;
};

}  // namespace

ValidationReport Validate(const Graph& graph) {
  return Validator(graph).Run();
}

std::vector<int> TopologicalOrder(const Graph& graph) {
  const int n = static_cast<int>(graph.nodes.size());
  std::map<std::string, int> producer;
  for (int i = 0; i < n; ++i)
    for (const auto& out : graph.nodes[i].outputs) producer.emplace(out, i);

  std::vector<std::vector<int>> succ(n);
  std::vector<int> indegree(n, 0);
  for (int i = 0; i < n; ++i) {
    std::set<int> preds;
    for (const auto& in : graph.nodes[i].inputs) {
      auto it = producer.find(in);
      if (it != producer.end()) preds.insert(it->second);
    }
    for (int p : preds) {
      succ[p].push_back(i);
      ++indegree[i];
    }
  }
  std::priority_queue<int, std::vector<int>, std::greater<int>> ready;
  for (int i = 0; i < n; ++i)
    if (indegree[i] == 0) ready.push(i);
  std::vector<int> order;
  order.reserve(n);
  while (!ready.empty()) {
    int i = ready.top();
    ready.pop();
    order.push_back(i);
    for (int s : succ[i])
      if (--indegree[s] == 0) ready.push(s);
  }
  if (static_cast<int>(order.size()) != n)
    throw GraphError("graph " + graph.name + " contains a cycle");
  return order;
}

int64_t ConvOutputSize(int64_t in, int kernel, int stride, Padding padding) {
  if (padding == Padding::kSame) return (in + stride - 1) / stride;
  if (in < kernel) return 0;
  return (in - kernel) / stride + 1;
}

int64_t SamePadBefore(int64_t in, int kernel, int stride) {
  int64_t out = (in + stride - 1) / stride;
  int64_t total = std::max<int64_t>((out - 1) * stride + kernel - in, 0);
  return total / 2;
}

namespace {

[[noreturn]] void ShapeFail(const OpNode& n, const std::string& what) {
  throw ShapeError("node " + n.id + " (" + std::string(OpKindName(n.kind)) +
                   "): " + what);
}

Shape SpatialOutput(const OpNode& n, const Shape& in, int64_t channels) {
  if (in.size() != 4) ShapeFail(n, "expects rank-4 input, got " + ShapeToString(in));
  const auto& a = n.attrs;
  int64_t h = ConvOutputSize(in[1], a.kernel_h, a.stride_h, a.padding);
  int64_t w = ConvOutputSize(in[2], a.kernel_w, a.stride_w, a.padding);
  if (h < 1 || w < 1) ShapeFail(n, "kernel larger than input " + ShapeToString(in));
  return {in[0], h, w, channels};
}

Shape InferNode(const Graph& g, const OpNode& n,
                const std::map<std::string, Shape>& shapes) {
  auto shape_of = [&](const std::string& id) -> const Shape& {
    const auto& s = shapes.at(id);
    if (s.empty()) ShapeFail(n, "input " + id + " has unknown shape");
    return s;
  };
  const Shape& in = shape_of(n.inputs[0]);
  switch (n.kind) {
    case OpKind::kConv2D: {
      const Shape& w = g.tensor(n.inputs[1]).shape;
      if (w.size() != 4) ShapeFail(n, "weights must be (out, kh, kw, in)");
      if (in.size() != 4 || w[3] != in[3])
        ShapeFail(n, "weight in-channels " + ShapeToString(w) +
                         " do not match input " + ShapeToString(in));
      if (w[1] != n.attrs.kernel_h || w[2] != n.attrs.kernel_w)
        ShapeFail(n, "weight kernel dims disagree with attrs");
      if (n.inputs.size() == 3 && g.tensor(n.inputs[2]).shape != Shape{w[0]})
        ShapeFail(n, "bias must have one entry per filter");
      return SpatialOutput(n, in, w[0]);
    }
    case OpKind::kDepthwiseConv2D: {
      const Shape& w = g.tensor(n.inputs[1]).shape;
      if (w.size() != 4 || w[0] != 1)
        ShapeFail(n, "weights must be (1, kh, kw, channels)");
      if (in.size() != 4 || w[3] != in[3])
        ShapeFail(n, "weight channels " + ShapeToString(w) +
                         " do not match input " + ShapeToString(in));
      if (w[1] != n.attrs.kernel_h || w[2] != n.attrs.kernel_w)
        ShapeFail(n, "weight kernel dims disagree with attrs");
      if (n.inputs.size() == 3 && g.tensor(n.inputs[2]).shape != Shape{w[3]})
        ShapeFail(n, "bias must have one entry per channel");
      return SpatialOutput(n, in, in[3]);
    }
    case OpKind::kFullyConnected: {
      const Shape& w = g.tensor(n.inputs[1]).shape;
      if (in.size() != 2) ShapeFail(n, "expects rank-2 input, got " + ShapeToString(in));
      if (w.size() != 2 || w[1] != in[1])
        ShapeFail(n, "weights " + ShapeToString(w) + " do not match input " +
                         ShapeToString(in));
      if (n.inputs.size() == 3 && g.tensor(n.inputs[2]).shape != Shape{w[0]})
        ShapeFail(n, "bias must have one entry per neuron");
      return {in[0], w[0]};
    }
    case OpKind::kReLU:
    case OpKind::kSoftmax:
      return in;
    case OpKind::kMaxPool2D:
    case OpKind::kAvgPool2D:
      return SpatialOutput(n, in, in.size() == 4 ? in[3] : 0);
    case OpKind::kAdd: {
      const Shape& other = shape_of(n.inputs[1]);
      if (other != in)
        ShapeFail(n, "shape mismatch " + ShapeToString(in) + " vs " +
                         ShapeToString(other));
      return in;
    }
    case OpKind::kConcat: {
      int rank = static_cast<int>(in.size());
      int axis = n.attrs.axis < 0 ? n.attrs.axis + rank : n.attrs.axis;
      if (axis < 0 || axis >= rank) ShapeFail(n, "concat axis out of range");
      Shape out = in;
      for (size_t i = 1; i < n.inputs.size(); ++i) {
        const Shape& s = shape_of(n.inputs[i]);
        if (static_cast<int>(s.size()) != rank)
          ShapeFail(n, "concat rank mismatch");
        for (int d = 0; d < rank; ++d)
          if (d != axis && s[d] != in[d])
            ShapeFail(n, "shape mismatch " + ShapeToString(in) + " vs " +
                             ShapeToString(s));
        out[axis] += s[axis];
      }
      return out;
    }
    case OpKind::kFlatten:
      if (in.size() == 2) return in;
      return {in[0], in[1] * in[2] * in[3]};
  }
  ShapeFail(n, "unknown op");
}

}  // namespace

ShapeInferenceResult InferShapes(const Graph& graph) {
  auto report = Validate(graph);
  if (!report.ok())
    throw GraphError("cannot infer shapes of invalid graph: " +
                     report.violations.front().message);
  ShapeInferenceResult result{graph, TopologicalOrder(graph)};
  Graph& g = result.graph;
  std::map<std::string, Shape> shapes;
  for (const auto& [id, t] : g.tensors)
    if (t.kind == TensorKind::kInput || t.is_constant()) shapes[id] = t.shape;
    else shapes[id] = {};
  for (int idx : result.order) {
    const OpNode& n = g.nodes[idx];
    Shape out = InferNode(g, n, shapes);
    shapes[n.outputs[0]] = out;
    g.mutable_tensor(n.outputs[0]).shape = out;
  }
  return result;
}

int64_t CountParameters(const Graph& graph) {
  int64_t total = 0;
  for (const auto& [id, t] : graph.tensors)
    if (t.is_constant()) total += NumElements(t.shape);
  return total;
}

}  // namespace orbitc
