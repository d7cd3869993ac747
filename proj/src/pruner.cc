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

#include "orbitc/pruner.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "json_util.h"

namespace orbitc {

int PrunePlan::removed_count(const std::string& layer) const {
  auto it = masks.find(layer);
  if (it == masks.end()) return 0;
  return static_cast<int>(std::count(it->second.begin(), it->second.end(), false));
}

namespace {

int64_t FilterCount(const Graph& g, const OpNode& n) {
  return g.tensor(n.inputs[1]).shape.at(0);
}

class PropagationWalker {
 public:
  PropagationWalker(const Graph& g, ChannelPropagation& result)
      : g_(g), r_(result) {
    outputs_.insert(g.outputs.begin(), g.outputs.end());
  }

  // `spatial` is 0 while the channels still live on the last axis of an
  // NHWC map, and H*W once a Flatten has folded them into features.
  bool Walk(const std::string& tensor, int64_t spatial) {
    if (outputs_.count(tensor)) return Exclude("reaches graph output " + tensor);
    for (int ci : g_.consumers(tensor)) {
      const OpNode& c = g_.nodes[ci];
      switch (c.kind) {
        case OpKind::kReLU:
          if (!Walk(c.outputs[0], spatial)) return false;
          break;
        case OpKind::kMaxPool2D:
        case OpKind::kAvgPool2D:
          if (!Walk(c.outputs[0], spatial)) return false;
          break;
        case OpKind::kDepthwiseConv2D:
          if (c.inputs[0] != tensor) return Exclude("feeds weights of " + c.id);
          r_.depthwise.push_back(c.id);
          if (!Walk(c.outputs[0], spatial)) return false;
          break;
        case OpKind::kFlatten: {
          const Shape& s = g_.tensor(c.inputs[0]).shape;
          int64_t next = s.size() == 4 ? s[1] * s[2] : std::max<int64_t>(spatial, 1);
          if (!Walk(c.outputs[0], next)) return false;
          break;
        }
        case OpKind::kConv2D:
          if (c.inputs[0] != tensor) return Exclude("feeds weights of " + c.id);
          r_.consumers.push_back({c.id, 1});
          break;
        case OpKind::kFullyConnected:
          if (c.inputs[0] != tensor) return Exclude("feeds weights of " + c.id);
          r_.consumers.push_back({c.id, std::max<int64_t>(spatial, 1)});
          break;
        case OpKind::kAdd:
        case OpKind::kConcat:
        case OpKind::kSoftmax:
          return Exclude("feeds " + std::string(OpKindName(c.kind)) + " node " + c.id);
      }
    }
    return true;
  }

 private:
  bool Exclude(const std::string& why) {
    r_.exclusion = why;
    return false;
  }

  const Graph& g_;
  ChannelPropagation& r_;
  std::set<std::string> outputs_;
};

}  // namespace

std::vector<ChannelPropagation> AnalyzePrunableLayers(const Graph& graph) {
  auto inferred = InferShapes(graph);
  const Graph& g = inferred.graph;
  std::vector<ChannelPropagation> result;
  for (const auto& n : g.nodes) {
    if (n.kind != OpKind::kConv2D && n.kind != OpKind::kFullyConnected) continue;
    ChannelPropagation p;
    p.layer_id = n.id;
    PropagationWalker walker(g, p);
    p.prunable = walker.Walk(n.outputs[0], 0);
    if (p.prunable && p.consumers.empty()) {
      p.prunable = false;
      p.exclusion = "no consumer to absorb removed channels";
    }
    if (!p.prunable) {
      p.depthwise.clear();
      p.consumers.clear();
    }
    result.push_back(std::move(p));
  }
  return result;
}

std::vector<double> FilterL2Norms(const TensorSpec& weights) {
  const auto& w = weights.f32();
  const int64_t filters = weights.shape.at(0);
  const int64_t per_filter = filters ? NumElements(weights.shape) / filters : 0;
  std::vector<double> norms(static_cast<size_t>(filters), 0.0);
  for (int64_t f = 0; f < filters; ++f) {
    double ss = 0.0;
    for (int64_t i = 0; i < per_filter; ++i) {
      const double v = w[f * per_filter + i];
      ss += v * v;
    }
    norms[f] = std::sqrt(ss);
  }
  return norms;
}

std::vector<FilterScore> RankFilters(const Graph& graph) {
  std::vector<FilterScore> scores;
  for (const auto& p : AnalyzePrunableLayers(graph)) {
    if (!p.prunable) continue;
    const auto& n = graph.node(p.layer_id);
    auto norms = FilterL2Norms(graph.tensor(n.inputs[1]));
    for (size_t f = 0; f < norms.size(); ++f)
      scores.push_back({p.layer_id, static_cast<int>(f), norms[f]});
  }
  return scores;
}

namespace {

int StageRemovals(double fraction, int original) {
  // The epsilon absorbs representation error such as 0.1 * 40.
  return static_cast<int>(std::floor(fraction * original + 1e-9));
}

}  // namespace

PrunePlan NewPrunePlan(const Graph& graph, std::vector<double> schedule) {
  double sum = 0.0;
  for (double f : schedule) {
    if (!(f > 0.0 && f < 1.0))
      throw ConfigError("prune fraction " + std::to_string(f) +
                        " outside (0, 1)");
    sum += f;
  }
  if (schedule.empty()) throw ConfigError("prune schedule is empty");
  if (!(sum < 1.0)) throw ConfigError("prune schedule fractions must sum below 1");
  PrunePlan plan;
  plan.schedule = std::move(schedule);
  for (const auto& p : AnalyzePrunableLayers(graph)) {
    if (!p.prunable) continue;
    const int count = static_cast<int>(FilterCount(graph, graph.node(p.layer_id)));
    int removed = 0;
    for (double f : plan.schedule) removed += StageRemovals(f, count);
    if (removed >= count)
      throw ConfigError("schedule would remove all filters of layer " + p.layer_id);
    plan.original_counts[p.layer_id] = count;
    plan.masks[p.layer_id] = std::vector<bool>(static_cast<size_t>(count), true);
  }
  return plan;
}

PrunePlan NextPruneStage(const Graph& graph, PrunePlan plan) {
  if (plan.complete())
    throw ConfigError("prune plan already has all " +
                      std::to_string(plan.schedule.size()) + " stages");
  const double fraction = plan.schedule[plan.stages.size()];
  std::map<std::string, std::vector<int>> stage;
  for (auto& [layer, mask] : plan.masks) {
    const int node = graph.node_index(layer);
    if (node < 0) throw GraphError("prune plan layer " + layer + " not in graph");
    const auto& weights = graph.tensor(graph.nodes[node].inputs[1]);
    if (weights.shape.at(0) != static_cast<int64_t>(mask.size()))
      throw GraphError("mask length of " + layer + " does not match its " +
                       std::to_string(weights.shape[0]) + " filters");
    const auto norms = FilterL2Norms(weights);
    std::vector<int> candidates;
    for (size_t f = 0; f < mask.size(); ++f)
      if (mask[f]) candidates.push_back(static_cast<int>(f));
    std::stable_sort(candidates.begin(), candidates.end(),
                     [&](int a, int b) { return norms[a] < norms[b]; });
    const int remove = StageRemovals(fraction, plan.original_counts.at(layer));
    if (remove >= static_cast<int>(candidates.size()))
      throw ConfigError("stage would remove all filters of layer " + layer);
    std::vector<int> removed(candidates.begin(), candidates.begin() + remove);
    std::sort(removed.begin(), removed.end());
    for (int f : removed) mask[f] = false;
    stage[layer] = std::move(removed);
  }
  plan.stages.push_back(std::move(stage));
  return plan;
}

PrunePlan BuildPrunePlan(const Graph& graph, std::vector<double> schedule) {
  PrunePlan plan = NewPrunePlan(graph, std::move(schedule));
  Graph current = graph;
  while (!plan.complete()) {
    plan = NextPruneStage(current, std::move(plan));
    current = ApplyMasks(graph, plan);
  }
  return plan;
}

namespace {

// Checks the plan against the graph and returns the propagation of every
// layer it names.
std::map<std::string, ChannelPropagation> PlannedLayers(const Graph& graph,
                                                        const PrunePlan& plan) {
  std::map<std::string, ChannelPropagation> by_layer;
  for (auto& p : AnalyzePrunableLayers(graph)) by_layer[p.layer_id] = std::move(p);
  std::map<std::string, ChannelPropagation> result;
  for (const auto& [layer, mask] : plan.masks) {
    auto it = by_layer.find(layer);
    if (it == by_layer.end())
      throw GraphError("prune plan layer " + layer + " is not a layer of " +
                       graph.name);
    if (!it->second.prunable)
      throw GraphError("layer " + layer + " cannot be pruned: " +
                       it->second.exclusion);
    const int64_t filters = FilterCount(graph, graph.node(layer));
    if (static_cast<int64_t>(mask.size()) != filters)
      throw GraphError("mask length " + std::to_string(mask.size()) + " of " +
                       layer + " does not match its " + std::to_string(filters) +
                       " filters");
    if (std::find(mask.begin(), mask.end(), true) == mask.end())
      throw GraphError("mask removes every filter of " + layer);
    result[layer] = it->second;
  }
  return result;
}

// Element indices of `shape` whose coordinate along `axis` is in `channels`.
template <typename Fn>
void ForEachOnAxis(const Shape& shape, int axis, Fn&& fn) {
  int64_t inner = 1;
  for (size_t d = axis + 1; d < shape.size(); ++d) inner *= shape[d];
  const int64_t dim = shape[axis];
  const int64_t total = NumElements(shape);
  for (int64_t i = 0; i < total; ++i) fn(i, (i / inner) % dim);
}

void ZeroChannels(TensorSpec& t, int axis, const std::vector<bool>& keep) {
  auto& data = t.mutable_f32();
  ForEachOnAxis(t.shape, axis, [&](int64_t i, int64_t c) {
    if (!keep[c]) data[i] = 0.0f;
  });
}

void SliceChannels(TensorSpec& t, int axis, const std::vector<bool>& keep) {
  const auto& data = t.f32();
  std::vector<float> out;
  out.reserve(data.size());
  ForEachOnAxis(t.shape, axis, [&](int64_t i, int64_t c) {
    if (keep[c]) out.push_back(data[i]);
  });
  t.shape[axis] = std::count(keep.begin(), keep.end(), true);
  t.data = std::move(out);
}

// Feature keep-mask of a Flatten over an (H*W, C) map: feature p*C + c.
std::vector<bool> ExpandToFeatures(const std::vector<bool>& keep,
                                   int64_t spatial) {
  std::vector<bool> out;
  out.reserve(keep.size() * spatial);
  for (int64_t p = 0; p < spatial; ++p) out.insert(out.end(), keep.begin(), keep.end());
  return out;
}

}  // namespace

Graph ApplyMasks(const Graph& graph, const PrunePlan& plan) {
  const auto layers = PlannedLayers(graph, plan);
  Graph out = graph;
  for (const auto& [layer, mask] : plan.masks) {
    const auto& prop = layers.at(layer);
    const OpNode& n = out.node(layer);
    ZeroChannels(out.mutable_tensor(n.inputs[1]), 0, mask);
    if (n.inputs.size() > 2) ZeroChannels(out.mutable_tensor(n.inputs[2]), 0, mask);
    for (const auto& dw_id : prop.depthwise) {
      const OpNode& dw = out.node(dw_id);
      ZeroChannels(out.mutable_tensor(dw.inputs[1]), 3, mask);
      if (dw.inputs.size() > 2)
        ZeroChannels(out.mutable_tensor(dw.inputs[2]), 0, mask);
    }
  }
  return out;
}

Graph Materialize(const Graph& graph, const PrunePlan& plan) {
  const auto layers = PlannedLayers(graph, plan);
  Graph out = graph;
  for (const auto& [layer, mask] : plan.masks) {
    const auto& prop = layers.at(layer);
    const OpNode& n = out.node(layer);
    SliceChannels(out.mutable_tensor(n.inputs[1]), 0, mask);
    if (n.inputs.size() > 2) SliceChannels(out.mutable_tensor(n.inputs[2]), 0, mask);
    for (const auto& dw_id : prop.depthwise) {
      const OpNode& dw = out.node(dw_id);
      SliceChannels(out.mutable_tensor(dw.inputs[1]), 3, mask);
      if (dw.inputs.size() > 2)
        SliceChannels(out.mutable_tensor(dw.inputs[2]), 0, mask);
    }
    for (const auto& c : prop.consumers) {
      const OpNode& consumer = out.node(c.node_id);
      auto& w = out.mutable_tensor(consumer.inputs[1]);
      if (consumer.kind == OpKind::kConv2D) {
        SliceChannels(w, 3, mask);
      } else {
        SliceChannels(w, 1, ExpandToFeatures(mask, c.spatial));
      }
    }
  }
  for (auto& [id, t] : out.tensors)
    if (t.kind == TensorKind::kActivation || t.kind == TensorKind::kOutput)
      t.shape.clear();
  out = InferShapes(out).graph;
  auto report = Validate(out);
  if (!report.ok())
    throw GraphError("materialized graph is invalid: " + report.ToString());
  return out;
}

std::string PrunePlanToJson(const PrunePlan& plan) {
  internal::Json j;
  j["schedule"] = plan.schedule;
  j["basis"] = plan.basis;
  j["original_counts"] = plan.original_counts;
  j["stages"] = internal::Json::array();
  for (const auto& stage : plan.stages) j["stages"].push_back(stage);
  internal::Json masks = internal::Json::object();
  for (const auto& [layer, mask] : plan.masks) {
    std::vector<int> bits(mask.begin(), mask.end());
    masks[layer] = bits;
  }
  j["masks"] = masks;
  return j.dump(2) + "\n";
}

PrunePlan PrunePlanFromJson(const std::string& text, const std::string& where) {
  using internal::Get;
  internal::Json j;
  try {
    j = internal::Json::parse(text);
  } catch (const internal::Json::exception& e) {
    throw ConfigError(where + ": malformed JSON: " + e.what());
  }
  PrunePlan plan;
  plan.schedule = Get<std::vector<double>>(j, "schedule", where);
  plan.basis = internal::GetOr<std::string>(j, "basis", "original_count", where);
  if (plan.basis != "original_count")
    throw ConfigError(where + ": unsupported basis '" + plan.basis + "'");
  plan.original_counts =
      Get<std::map<std::string, int>>(j, "original_counts", where);
  plan.stages =
      Get<std::vector<std::map<std::string, std::vector<int>>>>(j, "stages", where);
  auto masks = Get<std::map<std::string, std::vector<int>>>(j, "masks", where);
  for (const auto& [layer, bits] : masks) {
    std::vector<bool> mask;
    for (int b : bits) mask.push_back(b != 0);
    if (!plan.original_counts.count(layer) ||
        plan.original_counts.at(layer) != static_cast<int>(mask.size()))
      throw ConfigError(where + ".masks." + layer +
                        ": length disagrees with original_counts");
    plan.masks[layer] = std::move(mask);
  }
  if (plan.stages.size() > plan.schedule.size())
    throw ConfigError(where + ": more stages than schedule entries");
  return plan;
}

}  // namespace orbitc
