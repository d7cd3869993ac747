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

#ifndef ORBITC_COSTMODEL_H_
#define ORBITC_COSTMODEL_H_

#include <cstdint>
#include <string>
#include <vector>

#include "orbitc/graph.h"
#include "orbitc/hardware_profile.h"
#include "orbitc/mapper.h"

namespace orbitc {

// MACs: Conv2D oH*oW*oC*kh*kw*inC, DepthwiseConv2D oH*oW*C*kh*kw, FC in*out.
// Weighted ops cost 2 ops per MAC. Other kinds use an element-count proxy:
// ReLU, Add and Concat one op per output element, pools kh*kw per output
// element, Softmax four per element, Flatten nothing.
struct OpCost {
  int64_t macs = 0;
  double ops = 0.0;
};

// Requires inferred shapes.
OpCost EstimateOp(const Graph& graph, const OpNode& node);

struct GroupCost {
  int group = 0;
  std::vector<std::string> nodes;
  Target target = Target::kCpu;
  int64_t macs = 0;
  double ops = 0.0;
  double latency_us = 0.0;
  double energy_uj = 0.0;
};

// latency = ops / (throughput * utilization) + per_op_overhead;
// energy = latency * target power. A ReLU fused behind a weighted op is
// free.
GroupCost EstimateGroup(const Graph& graph, const FusedGroup& group,
                        const HardwareProfile& profile);

// Model bytes in flash. Float graphs have no scale tables.
struct FlashBreakdown {
  int64_t weight_bytes = 0;
  int64_t bias_bytes = 0;
  int64_t scale_table_bytes = 0;  // 4 B per scale, zero point, multiplier word
  int64_t metadata_bytes = 0;     // metadata_bytes_per_op per node

  int64_t parameter_bytes() const { return weight_bytes + bias_bytes; }
  // Bytes that do not scale with the parameter count.
  int64_t metadata_constant() const { return scale_table_bytes + metadata_bytes; }
  int64_t total() const { return parameter_bytes() + metadata_constant(); }
};

FlashBreakdown EstimateFlash(const Graph& graph, const HardwareProfile& profile);

struct BudgetFlags {
  bool ram_ok = false;
  bool flash_ok = false;
  bool deadline_ok = false;
};

struct CostEstimate {
  double latency_ms = 0.0;         // schedule makespan
  double serial_latency_ms = 0.0;  // sum of group latencies
  double energy_mj = 0.0;          // group energies + idle term
  double idle_energy_mj = 0.0;
  int64_t ram_peak_bytes = 0;  // arena + runtime overhead
  int64_t flash_bytes = 0;
  std::vector<GroupCost> per_group_breakdown;
  BudgetFlags budget_flags;
};

CostEstimate CombineEstimate(const std::vector<GroupCost>& groups,
                             double makespan_us, int64_t arena_bytes,
                             int64_t flash_bytes,
                             const HardwareProfile& profile);

std::string CostEstimateToJson(const CostEstimate& estimate);
std::string CostCsvHeader();
// One row: model,dataset,stage,latency_ms,energy_mj,ram_peak_bytes,
// flash_bytes,ram_ok,flash_ok,deadline_ok
std::string CostCsvRow(const std::string& model, const std::string& dataset,
                       const std::string& stage, const CostEstimate& estimate);

}  // namespace orbitc

#endif  // ORBITC_COSTMODEL_H_
