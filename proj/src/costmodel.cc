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

#include "orbitc/costmodel.h"

#include <cstdio>

#include "json_util.h"

namespace orbitc {

OpCost EstimateOp(const Graph& graph, const OpNode& node) {
  const Shape& out = graph.tensor(node.outputs.at(0)).shape;
  if (out.empty()) throw ShapeError("node " + node.id + ": shapes not inferred");
  const double elements = static_cast<double>(NumElements(out));
  OpCost c;
  switch (node.kind) {
    case OpKind::kConv2D: {
      const Shape& w = graph.tensor(node.inputs[1]).shape;
      c.macs = out[1] * out[2] * out[3] * w[1] * w[2] * w[3];
      break;
    }
    case OpKind::kDepthwiseConv2D: {
      const Shape& w = graph.tensor(node.inputs[1]).shape;
      c.macs = out[1] * out[2] * out[3] * w[1] * w[2];
      break;
    }
    case OpKind::kFullyConnected: {
      const Shape& w = graph.tensor(node.inputs[1]).shape;
      c.macs = w[0] * w[1];
      break;
    }
    case OpKind::kMaxPool2D:
    case OpKind::kAvgPool2D:
      c.ops = elements * node.attrs.kernel_h * node.attrs.kernel_w;
      return c;
    case OpKind::kSoftmax:
      c.ops = 4.0 * elements;
      return c;
    case OpKind::kFlatten:
      return c;
    case OpKind::kReLU:
    case OpKind::kAdd:
    case OpKind::kConcat:
      c.ops = elements;
      return c;
  }
  c.ops = 2.0 * static_cast<double>(c.macs);
  return c;
}

GroupCost EstimateGroup(const Graph& graph, const FusedGroup& group,
                        const HardwareProfile& profile) {
  GroupCost g;
  g.nodes = group.nodes;
  g.target = group.target;
  for (size_t k = 0; k < group.nodes.size(); ++k) {
    const OpNode& n = graph.node(group.nodes[k]);
    if (k > 0 && n.kind == OpKind::kReLU) continue;
    OpCost c = EstimateOp(graph, n);
    g.macs += c.macs;
    g.ops += c.ops;
  }
  g.latency_us = g.ops / profile.ops_per_second(group.target) * 1e6 +
                 profile.per_op_overhead_us;
  g.energy_uj = g.latency_us * profile.power_w(group.target);
  return g;
}

FlashBreakdown EstimateFlash(const Graph& graph, const HardwareProfile& profile) {
  FlashBreakdown f;
  for (const auto& [id, t] : graph.tensors) {
    if (t.kind == TensorKind::kWeight) f.weight_bytes += t.byte_size();
    if (t.kind == TensorKind::kBias) f.bias_bytes += t.byte_size();
    if (t.quant) {
      f.scale_table_bytes += 4 * static_cast<int64_t>(t.quant->scales.size());
      if (!t.quant->symmetric)
        f.scale_table_bytes += 4 * static_cast<int64_t>(t.quant->zero_points.size());
    }
  }
  for (const auto& n : graph.nodes)
    f.scale_table_bytes += 8 * static_cast<int64_t>(n.requant.size());
  f.metadata_bytes =
      profile.metadata_bytes_per_op * static_cast<int64_t>(graph.nodes.size());
  return f;
}

CostEstimate CombineEstimate(const std::vector<GroupCost>& groups,
                             double makespan_us, int64_t arena_bytes,
                             int64_t flash_bytes,
                             const HardwareProfile& profile) {
  CostEstimate e;
  e.per_group_breakdown = groups;
  double energy_uj = 0.0;
  double serial_us = 0.0;
  for (const auto& g : groups) {
    energy_uj += g.energy_uj;
    serial_us += g.latency_us;
  }
  e.latency_ms = makespan_us / 1000.0;
  e.serial_latency_ms = serial_us / 1000.0;
  e.idle_energy_mj = profile.idle_power_w * makespan_us / 1000.0;
  e.energy_mj = energy_uj / 1000.0 + e.idle_energy_mj;
  e.ram_peak_bytes = arena_bytes + profile.runtime_overhead_bytes;
  e.flash_bytes = flash_bytes;
  e.budget_flags.ram_ok = e.ram_peak_bytes <= profile.ram_budget_bytes;
  e.budget_flags.flash_ok = e.flash_bytes <= profile.flash_budget_bytes;
  e.budget_flags.deadline_ok = e.latency_ms <= profile.deadline_ms();
  return e;
}

std::string CostEstimateToJson(const CostEstimate& e) {
  internal::Json j;
  j["latency_ms"] = e.latency_ms;
  j["serial_latency_ms"] = e.serial_latency_ms;
  j["energy_mj"] = e.energy_mj;
  j["idle_energy_mj"] = e.idle_energy_mj;
  j["ram_peak_bytes"] = e.ram_peak_bytes;
  j["flash_bytes"] = e.flash_bytes;
  j["budget_flags"] = {{"ram_ok", e.budget_flags.ram_ok},
                       {"flash_ok", e.budget_flags.flash_ok},
                       {"deadline_ok", e.budget_flags.deadline_ok}};
  j["per_group_breakdown"] = internal::Json::array();
  for (const auto& g : e.per_group_breakdown)
    j["per_group_breakdown"].push_back({{"group", g.group},
                                        {"nodes", g.nodes},
                                        {"target", TargetName(g.target)},
                                        {"macs", g.macs},
                                        {"ops", g.ops},
                                        {"latency_us", g.latency_us},
                                        {"energy_uj", g.energy_uj}});
  return j.dump(2) + "\n";
}

std::string CostCsvHeader() {
  return "model,dataset,stage,latency_ms,energy_mj,ram_peak_bytes,flash_bytes,"
         "ram_ok,flash_ok,deadline_ok\n";
}

std::string CostCsvRow(const std::string& model, const std::string& dataset,
                       const std::string& stage, const CostEstimate& e) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), ",%.6f,%.6f,%lld,%lld,%d,%d,%d\n",
                e.latency_ms, e.energy_mj,
                static_cast<long long>(e.ram_peak_bytes),
                static_cast<long long>(e.flash_bytes), e.budget_flags.ram_ok,
                e.budget_flags.flash_ok, e.budget_flags.deadline_ok);
  return model + "," + dataset + "," + stage + buf;
}

}  // namespace orbitc
