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

#ifndef ORBITC_GRAPH_BUILDER_H_
#define ORBITC_GRAPH_BUILDER_H_

#include <string>
#include <vector>

#include "orbitc/graph.h"

namespace orbitc {

// Incremental construction of float graphs. Node ids default to "n<k>",
// tensor ids derive from node ids ("<node>", "<node>_w", "<node>_b").
class GraphBuilder {
 public:
  explicit GraphBuilder(std::string name);

  std::string Input(const std::string& id, Shape shape);

  // weight_shape is (out, kh, kw, in). Empty bias means zeros.
  std::string Conv2D(const std::string& input, const Shape& weight_shape,
                     std::vector<float> weights, std::vector<float> bias,
                     int stride = 1, Padding padding = Padding::kValid,
                     const std::string& id = "");
  // weight_shape is (1, kh, kw, channels).
  std::string DepthwiseConv2D(const std::string& input,
                              const Shape& weight_shape,
                              std::vector<float> weights,
                              std::vector<float> bias, int stride = 1,
                              Padding padding = Padding::kValid,
                              const std::string& id = "");
  // weight_shape is (out, in).
  std::string FullyConnected(const std::string& input,
                             const Shape& weight_shape,
                             std::vector<float> weights,
                             std::vector<float> bias,
                             const std::string& id = "");
  std::string ReLU(const std::string& input, const std::string& id = "");
  std::string MaxPool(const std::string& input, int kernel, int stride,
                      Padding padding = Padding::kValid,
                      const std::string& id = "");
  std::string AvgPool(const std::string& input, int kernel, int stride,
                      Padding padding = Padding::kValid,
                      const std::string& id = "");
  std::string Add(const std::string& a, const std::string& b,
                  const std::string& id = "");
  std::string Concat(const std::vector<std::string>& inputs, int axis = -1,
                     const std::string& id = "");
  std::string Flatten(const std::string& input, const std::string& id = "");
  std::string Softmax(const std::string& input, const std::string& id = "");

  // Generic escape hatch; returns the output tensor id.
  std::string AddNode(OpKind kind, std::vector<std::string> inputs,
                      OpAttrs attrs = {}, const std::string& id = "");
  std::string AddConstant(const std::string& id, TensorKind kind, Shape shape,
                          std::vector<float> data);

  void MarkOutput(const std::string& tensor_id);

  // Returns the raw graph (shapes not inferred).
  Graph BuildUnchecked() const { return graph_; }
  // Validates and infers shapes; throws on failure.
  Graph Build() const;

 private:
  std::string NextId(const std::string& id);
  std::string Weighted(OpKind kind, const std::string& input,
                       const Shape& weight_shape, std::vector<float> weights,
                       std::vector<float> bias, OpAttrs attrs,
                       const std::string& id);

  Graph graph_;
  int counter_ = 0;
};

}  // namespace orbitc

#endif  // ORBITC_GRAPH_BUILDER_H_
