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

#ifndef ORBITC_DEPLOYMENT_H_
#define ORBITC_DEPLOYMENT_H_

#include <string>
#include <vector>

#include "orbitc/costmodel.h"
#include "orbitc/graph.h"
#include "orbitc/hardware_profile.h"
#include "orbitc/mapper.h"

namespace orbitc {

struct DeploymentPlan {
  std::string model;
  Partition partition;
  std::vector<GroupCost> group_costs;  // indexed like partition.groups
  Timeline timeline;
  MemoryPlan memory;
  FlashBreakdown flash;
  CostEstimate estimates;
};

// Partition, fuse, cost every group, schedule, plan the arena and estimate.
// Throws GraphError("mapping requires a quantized graph") for float graphs.
DeploymentPlan PlanDeployment(const Graph& qgraph,
                              const HardwareProfile& profile);

// latency = makespan; energy = group energies + idle power * makespan;
// RAM = arena + runtime overhead; flash from the plan's breakdown.
CostEstimate EstimateDeployment(const DeploymentPlan& plan,
                                const HardwareProfile& profile);

std::string DeploymentPlanToJson(const DeploymentPlan& plan);
// Human-readable group/timeline/memory table.
std::string DeploymentReport(const DeploymentPlan& plan);

}  // namespace orbitc

#endif  // ORBITC_DEPLOYMENT_H_
