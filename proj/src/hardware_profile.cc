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

#include "orbitc/hardware_profile.h"

#include <cmath>
#include <vector>

#include "json_util.h"

namespace orbitc {

std::string_view TargetName(Target target) {
  return target == Target::kNpu ? "NPU" : "CPU";
}

Target TargetFromName(std::string_view name) {
  if (name == "NPU") return Target::kNpu;
  if (name == "CPU") return Target::kCpu;
  throw ConfigError("unknown target '" + std::string(name) + "'");
}

double HardwareProfile::ops_per_second(Target target) const {
  if (target == Target::kNpu)
    return npu_throughput_gops * 1e9 * npu_utilization;
  return cpu_freq_mhz * 1e6 * cpu_macs_per_cycle * 2.0 * cpu_utilization;
}

double HardwareProfile::power_w(Target target) const {
  return target == Target::kNpu ? npu_power_w : cpu_power_w;
}

namespace {

void RequirePositive(double v, const std::string& where,
                     const std::string& field) {
  if (!(v > 0.0) || !std::isfinite(v))
    throw ConfigError(where + "." + field + ": must be > 0");
}

void RequireNonNegative(double v, const std::string& where,
                        const std::string& field) {
  if (!(v >= 0.0) || !std::isfinite(v))
    throw ConfigError(where + "." + field + ": must be >= 0");
}

}  // namespace

void ValidateProfile(const HardwareProfile& p, const std::string& where) {
  RequirePositive(p.npu_throughput_gops, where, "npu_throughput_gops");
  RequirePositive(p.cpu_freq_mhz, where, "cpu_freq_mhz");
  RequirePositive(p.cpu_macs_per_cycle, where, "cpu_macs_per_cycle");
  RequirePositive(p.npu_power_w, where, "npu_power_w");
  RequirePositive(p.cpu_power_w, where, "cpu_power_w");
  RequirePositive(p.idle_power_w, where, "idle_power_w");
  RequirePositive(p.deadline_fps, where, "deadline_fps");
  RequirePositive(static_cast<double>(p.ram_budget_bytes), where,
                  "ram_budget_bytes");
  RequirePositive(static_cast<double>(p.flash_budget_bytes), where,
                  "flash_budget_bytes");
  RequireNonNegative(p.per_op_overhead_us, where, "per_op_overhead_us");
  RequireNonNegative(p.transfer_latency_us, where, "transfer_latency_us");
  RequireNonNegative(static_cast<double>(p.runtime_overhead_bytes), where,
                     "runtime_overhead_bytes");
  RequireNonNegative(static_cast<double>(p.metadata_bytes_per_op), where,
                     "metadata_bytes_per_op");
  if (!(p.npu_utilization > 0.0 && p.npu_utilization <= 1.0))
    throw ConfigError(where + ".npu_utilization: must be in (0, 1]");
  if (!(p.cpu_utilization > 0.0 && p.cpu_utilization <= 1.0))
    throw ConfigError(where + ".cpu_utilization: must be in (0, 1]");
}

HardwareProfile ProfileFromJson(const std::string& text,
                                const std::string& where) {
  using internal::GetOr;
  internal::Json j;
  try {
    j = internal::Json::parse(text);
  } catch (const internal::Json::exception& e) {
    throw ConfigError(where + ": malformed JSON: " + e.what());
  }
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  HardwareProfile p;
  p.name = GetOr<std::string>(j, "name", p.name, where);
  if (j.contains("npu_supported_ops")) {
    p.npu_supported_ops.clear();
    auto names = internal::Get<std::vector<std::string>>(j, "npu_supported_ops", where);
    for (const auto& n : names) {
      auto kind = TryOpKindFromName(n);
      if (!kind)
        throw ConfigError(where + ".npu_supported_ops: unknown op kind '" + n + "'");
      p.npu_supported_ops.insert(*kind);
    }
  }
  p.npu_throughput_gops = GetOr(j, "npu_throughput_gops", p.npu_throughput_gops, where);
  p.npu_utilization = GetOr(j, "npu_utilization", p.npu_utilization, where);
  p.cpu_freq_mhz = GetOr(j, "cpu_freq_mhz", p.cpu_freq_mhz, where);
  p.cpu_macs_per_cycle = GetOr(j, "cpu_macs_per_cycle", p.cpu_macs_per_cycle, where);
  p.cpu_utilization = GetOr(j, "cpu_utilization", p.cpu_utilization, where);
  p.npu_power_w = GetOr(j, "npu_power_w", p.npu_power_w, where);
  p.cpu_power_w = GetOr(j, "cpu_power_w", p.cpu_power_w, where);
  p.idle_power_w = GetOr(j, "idle_power_w", p.idle_power_w, where);
  p.per_op_overhead_us = GetOr(j, "per_op_overhead_us", p.per_op_overhead_us, where);
  p.transfer_latency_us = GetOr(j, "transfer_latency_us", p.transfer_latency_us, where);
  p.ram_budget_bytes = GetOr(j, "ram_budget_bytes", p.ram_budget_bytes, where);
  p.flash_budget_bytes = GetOr(j, "flash_budget_bytes", p.flash_budget_bytes, where);
  p.runtime_overhead_bytes =
      GetOr(j, "runtime_overhead_bytes", p.runtime_overhead_bytes, where);
  p.metadata_bytes_per_op =
      GetOr(j, "metadata_bytes_per_op", p.metadata_bytes_per_op, where);
  p.deadline_fps = GetOr(j, "deadline_fps", p.deadline_fps, where);
  ValidateProfile(p, where);
  return p;
}

HardwareProfile LoadProfile(const std::filesystem::path& path) {
  return ProfileFromJson(internal::ReadTextFile(path), path.string());
}

std::string ProfileToJson(const HardwareProfile& p) {
  internal::Json j;
  j["name"] = p.name;
  std::vector<std::string> ops;
  for (OpKind k : p.npu_supported_ops) ops.emplace_back(OpKindName(k));
  j["npu_supported_ops"] = ops;
  j["npu_throughput_gops"] = p.npu_throughput_gops;
  j["npu_utilization"] = p.npu_utilization;
  j["cpu_freq_mhz"] = p.cpu_freq_mhz;
  j["cpu_macs_per_cycle"] = p.cpu_macs_per_cycle;
  j["cpu_utilization"] = p.cpu_utilization;
  j["npu_power_w"] = p.npu_power_w;
  j["cpu_power_w"] = p.cpu_power_w;
  j["idle_power_w"] = p.idle_power_w;
  j["per_op_overhead_us"] = p.per_op_overhead_us;
  j["transfer_latency_us"] = p.transfer_latency_us;
  j["ram_budget_bytes"] = p.ram_budget_bytes;
  j["flash_budget_bytes"] = p.flash_budget_bytes;
  j["runtime_overhead_bytes"] = p.runtime_overhead_bytes;
  j["metadata_bytes_per_op"] = p.metadata_bytes_per_op;
  j["deadline_fps"] = p.deadline_fps;
  return j.dump(2) + "\n";
}

}  // namespace orbitc
