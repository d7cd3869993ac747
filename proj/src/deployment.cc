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

#include "orbitc/deployment.h"

#include <cstdio>

#include "json_util.h"

namespace orbitc {

DeploymentPlan PlanDeployment(const Graph& qgraph,
                              const HardwareProfile& profile) {
  ValidateProfile(profile);
  if (!qgraph.is_quantized())
    throw GraphError("mapping requires a quantized graph");
  const Graph graph = InferShapes(qgraph).graph;
  DeploymentPlan plan;
  plan.model = graph.name;
  plan.partition = PartitionAndFuse(graph, profile);

  const auto deps = GroupDependencies(graph, plan.partition);
  std::vector<ScheduleTask> tasks;
  for (size_t g = 0; g < plan.partition.groups.size(); ++g) {
    GroupCost cost = EstimateGroup(graph, plan.partition.groups[g], profile);
    cost.group = static_cast<int>(g);
    tasks.push_back({cost.target, cost.latency_us, deps[g]});
    plan.group_costs.push_back(std::move(cost));
  }
  plan.timeline = ListSchedule(tasks, profile.transfer_latency_us);
  plan.memory = PlanMemory(graph, plan.partition, plan.timeline);
  plan.flash = EstimateFlash(graph, profile);
  plan.estimates = EstimateDeployment(plan, profile);
  return plan;
}

CostEstimate EstimateDeployment(const DeploymentPlan& plan,
                                const HardwareProfile& profile) {
  return CombineEstimate(plan.group_costs, Makespan(plan.timeline),
                         plan.memory.arena_bytes, plan.flash.total(), profile);
}

std::string DeploymentPlanToJson(const DeploymentPlan& plan) {
  using internal::Json;
  Json j;
  j["model"] = plan.model;
  Json assignment = Json::object();
  for (const auto& [node, target] : plan.partition.assignment)
    assignment[node] = TargetName(target);
  j["assignment"] = assignment;
  j["fused_pairs"] = plan.partition.fused_pairs;
  j["fused_groups"] = Json::array();
  for (const auto& g : plan.partition.groups)
    j["fused_groups"].push_back(
        {{"nodes", g.nodes}, {"target", TargetName(g.target)}});
  j["timeline"] = Json::array();
  for (const auto& e : plan.timeline)
    j["timeline"].push_back({{"group", e.group},
                             {"target", TargetName(e.target)},
                             {"start_us", e.start_us},
                             {"end_us", e.end_us}});
  Json blocks = Json::object();
  for (const auto& [id, b] : plan.memory.blocks)
    blocks[id] = {{"offset", b.offset},
                  {"size", b.size},
                  {"first_step", b.first_step},
                  {"last_step", b.last_step}};
  j["memory_plan"] = {{"tensors", blocks},
                      {"arena_bytes", plan.memory.arena_bytes},
                      {"live_peak_bytes", plan.memory.live_peak_bytes},
                      {"total_activation_bytes", plan.memory.total_bytes}};
  j["flash"] = {{"weight_bytes", plan.flash.weight_bytes},
                {"bias_bytes", plan.flash.bias_bytes},
                {"scale_table_bytes", plan.flash.scale_table_bytes},
                {"metadata_bytes", plan.flash.metadata_bytes},
                {"total_bytes", plan.flash.total()}};
  j["flash_bytes"] = plan.flash.total();
  j["estimates"] = Json::parse(CostEstimateToJson(plan.estimates));
  return j.dump(2) + "\n";
}

std::string DeploymentReport(const DeploymentPlan& plan) {
  std::string out = "deployment plan for " + plan.model + "\n\n";
  char line[512];
  std::snprintf(line, sizeof(line), "%-5s %-6s %-28s %12s %12s %12s\n", "group",
                "target", "nodes", "macs", "start_us", "end_us");
  out += line;
  for (const auto& e : plan.timeline) {
    const auto& g = plan.partition.groups[e.group];
    std::string nodes;
    for (const auto& n : g.nodes) nodes += (nodes.empty() ? "" : "+") + n;
    std::snprintf(line, sizeof(line), "%-5d %-6s %-28s %12lld %12.3f %12.3f\n",
                  e.group, std::string(TargetName(e.target)).c_str(),
                  nodes.c_str(),
                  static_cast<long long>(plan.group_costs[e.group].macs),
                  e.start_us, e.end_us);
    out += line;
  }
  out += "\n";
  std::snprintf(line, sizeof(line), "%-20s %10s %10s %8s %8s\n", "tensor",
                "offset", "size", "first", "last");
  out += line;
  for (const auto& [id, b] : plan.memory.blocks) {
    std::snprintf(line, sizeof(line), "%-20s %10lld %10lld %8d %8d\n", id.c_str(),
                  static_cast<long long>(b.offset),
                  static_cast<long long>(b.size), b.first_step, b.last_step);
    out += line;
  }
  const auto& e = plan.estimates;
  std::snprintf(line, sizeof(line),
                "\narena %lld B (no reuse %lld B)\nlatency %.3f ms (serial %.3f ms)\n"
                "energy %.4f mJ\nram %lld B  ok=%s\nflash %lld B  ok=%s\n"
                "deadline ok=%s\n",
                static_cast<long long>(plan.memory.arena_bytes),
                static_cast<long long>(plan.memory.total_bytes), e.latency_ms,
                e.serial_latency_ms, e.energy_mj,
                static_cast<long long>(e.ram_peak_bytes),
                e.budget_flags.ram_ok ? "yes" : "no",
                static_cast<long long>(e.flash_bytes),
                e.budget_flags.flash_ok ? "yes" : "no",
                e.budget_flags.deadline_ok ? "yes" : "no");
  out += line;
  return out;
}

}  // namespace orbitc
