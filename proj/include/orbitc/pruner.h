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

#ifndef ORBITC_PRUNER_H_
#define ORBITC_PRUNER_H_

#include <map>
#include <string>
#include <vector>

#include "orbitc/graph.h"

namespace orbitc {

struct FilterScore {
  std::string layer_id;
  int filter_index = 0;
  double l2_norm = 0.0;
};

// Staged structured-pruning plan. Stage fractions count against the
// ORIGINAL filter count of each layer and round down.
struct PrunePlan {
  std::vector<double> schedule{0.10, 0.05, 0.05};
  std::string basis = "original_count";
  std::map<std::string, int> original_counts;
  // One entry per completed stage: layer id -> removed filter indices
  // (ascending).
  std::vector<std::map<std::string, std::vector<int>>> stages;
  // layer id -> keep flag per output filter.
  std::map<std::string, std::vector<bool>> masks;

  bool complete() const { return stages.size() == schedule.size(); }
  int removed_count(const std::string& layer) const;
};

// How removing output channels of one layer ripples through the graph.
struct ChannelPropagation {
  std::string layer_id;
  bool prunable = false;
  std::string exclusion;  // why, when not prunable
  // Channel-preserving DepthwiseConv2D nodes whose channels follow the
  // layer's filters.
  std::vector<std::string> depthwise;
  // Conv2D / FullyConnected readers whose input channels get sliced. For
  // FullyConnected behind a Flatten, `spatial` is H*W of the flattened map;
  // otherwise 1.
  struct Consumer {
    std::string node_id;
    int64_t spatial = 1;
  };
  std::vector<Consumer> consumers;
};

// Conv2D and FullyConnected layers, in node order, with their propagation.
// Layers whose channels reach Add, Concat, Softmax or a graph output are
// excluded (this covers the final classifier).
std::vector<ChannelPropagation> AnalyzePrunableLayers(const Graph& graph);

// sqrt of the sum of squares of each output filter (axis 0 slice).
std::vector<double> FilterL2Norms(const TensorSpec& weights);

// Scores of every filter of every prunable layer.
std::vector<FilterScore> RankFilters(const Graph& graph);

// Empty plan with all filters kept. Throws ConfigError for fractions outside
// (0, 1), a sum >= 1, or a schedule that would empty some layer.
PrunePlan NewPrunePlan(const Graph& graph, std::vector<double> schedule);

// Appends the next stage: ranks the still-unmasked filters of each layer by
// L2 on `graph`'s current weights (possibly fine-tuned) and removes the
// floor(fraction * original) lowest, ties to the lower index.
PrunePlan NextPruneStage(const Graph& graph, PrunePlan plan);

// All stages back to back, re-applying masks between stages (no
// fine-tuning).
PrunePlan BuildPrunePlan(const Graph& graph, std::vector<double> schedule);

// Zeroes the weights and biases of masked filters (and of the depthwise
// channels they feed). Shapes are untouched.
Graph ApplyMasks(const Graph& graph, const PrunePlan& plan);

// Physically removes masked filters and slices every consumer; re-infers
// shapes.
Graph Materialize(const Graph& graph, const PrunePlan& plan);

std::string PrunePlanToJson(const PrunePlan& plan);
PrunePlan PrunePlanFromJson(const std::string& text,
                            const std::string& where = "prune plan");

}  // namespace orbitc

#endif  // ORBITC_PRUNER_H_
