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

#ifndef ORBITC_MAPPER_H_
#define ORBITC_MAPPER_H_

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "orbitc/executor.h"
#include "orbitc/graph.h"
#include "orbitc/hardware_profile.h"

namespace orbitc {

// Nodes executed as one kernel on one target: a single node, or a weighted
// op followed by the ReLU that alone consumes its output.
struct FusedGroup {
  std::vector<std::string> nodes;
  Target target = Target::kCpu;

  bool operator==(const FusedGroup&) const = default;
};

struct Partition {
  std::map<std::string, Target> assignment;
  std::vector<FusedGroup> groups;  // topological order
  int fused_pairs = 0;

  KernelSchedule kernels() const;
};

// A node goes to the NPU iff its kind is in the profile's supported set.
// Requires a valid quantized graph.
Partition PartitionAndFuse(const Graph& qgraph, const HardwareProfile& profile);

// Predecessor group indices of every group.
std::vector<std::vector<int>> GroupDependencies(const Graph& graph,
                                                const Partition& partition);

struct ScheduleTask {
  Target target = Target::kCpu;
  double latency_us = 0.0;
  std::vector<int> deps;  // indices of predecessor tasks
};

struct TimelineEntry {
  int group = 0;
  Target target = Target::kCpu;
  double start_us = 0.0;
  double end_us = 0.0;

  bool operator==(const TimelineEntry&) const = default;
};

// Entries sorted by start time, then group index.
using Timeline = std::vector<TimelineEntry>;

// List scheduling on one NPU and one CPU lane: each task is appended to its
// target's lane as early as its predecessors allow. The list order is found
// by branch-and-bound over topological orders, starting from decreasing
// upward rank (ties to the lower index); the search stops after
// `search_budget` expansions and keeps the best order seen. Crossing
// targets costs `transfer_latency_us`. Throws GraphError on cycles.
inline constexpr size_t kDefaultScheduleSearchBudget = 200'000;
Timeline ListSchedule(const std::vector<ScheduleTask>& tasks,
                      double transfer_latency_us = 0.0,
                      size_t search_budget = kDefaultScheduleSearchBudget);

// Appends tasks to their lanes in the given (topological) order, each as
// early as its lane and predecessors allow.
Timeline ScheduleInOrder(const std::vector<ScheduleTask>& tasks,
                         const std::vector<int>& order,
                         double transfer_latency_us = 0.0);

double Makespan(const Timeline& timeline);

// Activation tensor lifetime in timeline steps, inclusive on both ends.
struct LiveTensor {
  std::string id;
  int64_t size = 0;
  int first = 0;
  int last = 0;
};

struct MemoryBlock {
  int64_t offset = 0;
  int64_t size = 0;
  int first_step = 0;
  int last_step = 0;

  bool operator==(const MemoryBlock&) const = default;
};

struct MemoryPlan {
  std::map<std::string, MemoryBlock> blocks;
  int64_t arena_bytes = 0;      // max(offset + size)
  int64_t live_peak_bytes = 0;  // max bytes simultaneously live
  int64_t total_bytes = 0;      // sum of all block sizes, no reuse

  bool operator==(const MemoryPlan&) const = default;
};

// Materialized activations (fused intermediates excluded). Steps follow the
// timeline; a tensor also stays live through every group that starts
// before its last reader finishes, so concurrent lanes never share bytes.
std::vector<LiveTensor> TensorLifetimes(const Graph& graph,
                                        const Partition& partition,
                                        const Timeline& timeline);

// Greedy best-fit: largest tensor first, each into the smallest free gap
// among the tensors it overlaps in time.
MemoryPlan AssignOffsets(const std::vector<LiveTensor>& tensors);

MemoryPlan PlanMemory(const Graph& graph, const Partition& partition,
                      const Timeline& timeline);

// Pairs of tensors live at the same step whose byte ranges intersect.
std::vector<std::pair<std::string, std::string>> MemoryConflicts(
    const MemoryPlan& plan);

}  // namespace orbitc

#endif  // ORBITC_MAPPER_H_
