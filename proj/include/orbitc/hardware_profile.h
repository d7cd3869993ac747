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

#ifndef ORBITC_HARDWARE_PROFILE_H_
#define ORBITC_HARDWARE_PROFILE_H_

#include <cstdint>
#include <filesystem>
#include <set>
#include <string>
#include <string_view>

#include "orbitc/graph.h"

namespace orbitc {

enum class Target { kNpu, kCpu };

std::string_view TargetName(Target target);
Target TargetFromName(std::string_view name);

// Throughput, power and budget constants of one deployment target. Power
// figures are illustrative configuration, not measurements.
struct HardwareProfile {
  std::string name = "stm32n6";
  std::set<OpKind> npu_supported_ops{OpKind::kConv2D, OpKind::kDepthwiseConv2D,
                                     OpKind::kReLU, OpKind::kAdd};
  double npu_throughput_gops = 600.0;
  double npu_utilization = 0.5;
  double cpu_freq_mhz = 800.0;
  double cpu_macs_per_cycle = 2.0;
  double cpu_utilization = 1.0;
  double npu_power_w = 0.3;
  double cpu_power_w = 0.15;
  double idle_power_w = 0.05;
  double per_op_overhead_us = 10.0;  // per kernel launch
  double transfer_latency_us = 0.0;  // per NPU<->CPU boundary
  int64_t ram_budget_bytes = 4'200'000;
  int64_t flash_budget_bytes = 4'200'000;
  int64_t runtime_overhead_bytes = 16'384;
  int64_t metadata_bytes_per_op = 64;
  double deadline_fps = 5.0;

  // Sustained operations per second (a MAC counts as two).
  double ops_per_second(Target target) const;
  double power_w(Target target) const;
  double deadline_ms() const { return 1000.0 / deadline_fps; }
};

// Throws ConfigError naming the offending field.
void ValidateProfile(const HardwareProfile& profile,
                     const std::string& where = "profile");
// Missing fields keep their defaults.
HardwareProfile ProfileFromJson(const std::string& text,
                                const std::string& where = "profile");
HardwareProfile LoadProfile(const std::filesystem::path& path);
std::string ProfileToJson(const HardwareProfile& profile);

}  // namespace orbitc

#endif  // ORBITC_HARDWARE_PROFILE_H_
