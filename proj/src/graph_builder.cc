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

#include "orbitc/graph_builder.h"

#include <algorithm>

namespace orbitc {

GraphBuilder::GraphBuilder(std::string name) { graph_.name = std::move(name); }

std::string GraphBuilder::NextId(const std::string& id) {
  if (!id.empty()) return id;
  return "n" + std::to_string(counter_++);
}

std::string GraphBuilder::Input(const std::string& id, Shape shape) {
  TensorSpec t;
  t.id = id;
  t.shape = std::move(shape);
  t.kind = TensorKind::kInput;
  graph_.tensors[id] = std::move(t);
  graph_.inputs.push_back(id);
  return id;
}

std::string GraphBuilder::AddConstant(const std::string& id, TensorKind kind,
                                      Shape shape, std::vector<float> data) {
  TensorSpec t;
  t.id = id;
  t.shape = std::move(shape);
  t.kind = kind;
  t.data = std::move(data);
  graph_.tensors[id] = std::move(t);
  return id;
}

std::string GraphBuilder::AddNode(OpKind kind, std::vector<std::string> inputs,
                                  OpAttrs attrs, const std::string& id) {
  OpNode n;
  n.id = NextId(id);
  n.kind = kind;
  n.attrs = attrs;
  n.inputs = std::move(inputs);
  n.outputs = {n.id};
  TensorSpec out;
  out.id = n.id;
  out.kind = TensorKind::kActivation;
  graph_.tensors[out.id] = std::move(out);
  graph_.nodes.push_back(std::move(n));
  return graph_.nodes.back().outputs[0];
}

std::string GraphBuilder::Weighted(OpKind kind, const std::string& input,
                                   const Shape& weight_shape,
                                   std::vector<float> weights,
                                   std::vector<float> bias, OpAttrs attrs,
                                   const std::string& id) {
  std::string node_id = NextId(id);
  int64_t channels = kind == OpKind::kDepthwiseConv2D ? weight_shape.back()
                                                      : weight_shape.front();
  if (bias.empty()) bias.assign(static_cast<size_t>(channels), 0.0f);
  AddConstant(node_id + "_w", TensorKind::kWeight, weight_shape,
              std::move(weights));
  AddConstant(node_id + "_b", TensorKind::kBias, {channels}, std::move(bias));
  return AddNode(kind, {input, node_id + "_w", node_id + "_b"}, attrs, node_id);
}

std::string GraphBuilder::Conv2D(const std::string& input,
                                 const Shape& weight_shape,
                                 std::vector<float> weights,
                                 std::vector<float> bias, int stride,
                                 Padding padding, const std::string& id) {
  OpAttrs a;
  a.kernel_h = static_cast<int>(weight_shape.at(1));
  a.kernel_w = static_cast<int>(weight_shape.at(2));
  a.stride_h = a.stride_w = stride;
  a.padding = padding;
  return Weighted(OpKind::kConv2D, input, weight_shape, std::move(weights),
                  std::move(bias), a, id);
}

std::string GraphBuilder::DepthwiseConv2D(const std::string& input,
                                          const Shape& weight_shape,
                                          std::vector<float> weights,
                                          std::vector<float> bias, int stride,
                                          Padding padding,
                                          const std::string& id) {
  OpAttrs a;
  a.kernel_h = static_cast<int>(weight_shape.at(1));
  a.kernel_w = static_cast<int>(weight_shape.at(2));
  a.stride_h = a.stride_w = stride;
  a.padding = padding;
  return Weighted(OpKind::kDepthwiseConv2D, input, weight_shape,
                  std::move(weights), std::move(bias), a, id);
}

std::string GraphBuilder::FullyConnected(const std::string& input,
                                         const Shape& weight_shape,
                                         std::vector<float> weights,
                                         std::vector<float> bias,
                                         const std::string& id) {
  return Weighted(OpKind::kFullyConnected, input, weight_shape,
                  std::move(weights), std::move(bias), OpAttrs{}, id);
}

std::string GraphBuilder::ReLU(const std::string& input,
                               const std::string& id) {
  return AddNode(OpKind::kReLU, {input}, {}, id);
}

std::string GraphBuilder::MaxPool(const std::string& input, int kernel,
                                  int stride, Padding padding,
                                  const std::string& id) {
  OpAttrs a{kernel, kernel, stride, stride, padding, -1};
  return AddNode(OpKind::kMaxPool2D, {input}, a, id);
}

std::string GraphBuilder::AvgPool(const std::string& input, int kernel,
                                  int stride, Padding padding,
                                  const std::string& id) {
  OpAttrs a{kernel, kernel, stride, stride, padding, -1};
  return AddNode(OpKind::kAvgPool2D, {input}, a, id);
}

std::string GraphBuilder::Add(const std::string& a, const std::string& b,
                              const std::string& id) {
  return AddNode(OpKind::kAdd, {a, b}, {}, id);
}

std::string GraphBuilder::Concat(const std::vector<std::string>& inputs,
                                 int axis, const std::string& id) {
  OpAttrs a;
  a.axis = axis;
  return AddNode(OpKind::kConcat, inputs, a, id);
}

std::string GraphBuilder::Flatten(const std::string& input,
                                  const std::string& id) {
  return AddNode(OpKind::kFlatten, {input}, {}, id);
}

std::string GraphBuilder::Softmax(const std::string& input,
                                  const std::string& id) {
  return AddNode(OpKind::kSoftmax, {input}, {}, id);
}

void GraphBuilder::MarkOutput(const std::string& tensor_id) {
  graph_.tensors.at(tensor_id).kind = TensorKind::kOutput;
  if (std::find(graph_.outputs.begin(), graph_.outputs.end(), tensor_id) ==
      graph_.outputs.end())
    graph_.outputs.push_back(tensor_id);
}

Graph GraphBuilder::Build() const { return InferShapes(graph_).graph; }

}  // namespace orbitc
