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

#ifndef ORBITC_PIPELINE_H_
#define ORBITC_PIPELINE_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "orbitc/costmodel.h"
#include "orbitc/dataset.h"
#include "orbitc/downlink.h"
#include "orbitc/graph.h"

namespace orbitc {

struct PruneConfig {
  std::vector<double> schedule{0.10, 0.05, 0.05};
  bool skip = false;
};

// Relative paths resolve against the directory of the config file.
struct PipelineConfig {
  std::filesystem::path model;
  // Exactly one of `dataset` and `synthetic_dataset` is set.
  std::filesystem::path dataset;
  std::optional<SyntheticDatasetSpec> synthetic_dataset;
  int calibration_size = 64;
  PruneConfig prune;
  double threshold = 0.95;
  std::filesystem::path hardware_profile;  // empty: built-in default
  std::filesystem::path link_budget;       // empty: built-in S-band default
  std::filesystem::path output_dir;
  uint64_t seed = 1;
  // Raw size of one image for downlink accounting; defaults to one byte per
  // input element.
  std::optional<double> bytes_per_sample;
};

// Throws ConfigError with the file path and field name.
PipelineConfig PipelineConfigFromJson(const std::string& text,
                                      const std::filesystem::path& base_dir,
                                      const std::string& where = "config");
PipelineConfig LoadPipelineConfig(const std::filesystem::path& path);

// Loads, validates and infers shapes. Failures are ModelFormatError or
// GraphError naming the file.
Graph LoadCheckedModel(const std::filesystem::path& path);

// Loads `config.dataset` or generates the synthetic one.
Dataset LoadConfiguredDataset(const PipelineConfig& config, const Shape& shape);

// Calibration inputs: `count` samples picked by SampleIndices(seed).
std::vector<Tensor> CalibrationInputs(const Dataset& dataset, int count,
                                      uint64_t seed);

struct StageSummary {
  std::string stage;  // float, pruned, quantized
  double accuracy = 0.0;
  int64_t parameters = 0;
  int64_t flash_bytes = 0;
  int64_t ram_peak_bytes = 0;
  std::optional<double> latency_ms;  // deployed stage only
  std::optional<double> energy_mj;
};

struct PipelineReport {
  std::string model;
  std::string dataset;
  uint64_t seed = 0;
  std::vector<StageSummary> stages;
  double flash_reduction_pct = 0.0;  // quantized vs float
  double ram_reduction_pct = 0.0;
  double int8_float_agreement = 0.0;  // top-1, quantized vs float
  CostEstimate deployment;
  DownlinkReport downlink;
};

// Activation arena of a float graph run node by node on one core.
int64_t SerialArenaBytes(const Graph& graph);

// float baseline -> staged pruning with checkpoint round-trips ->
// calibration -> quantization -> mapping -> estimation -> downlink. Outputs
// are staged next to the output directory and moved into place only on
// success. Stage failures surface as Error("stage '<name>': ...").
PipelineReport RunPipeline(const PipelineConfig& config);

std::string PipelineReportToJson(const PipelineReport& report);
// stage,accuracy,parameters,flash_bytes,ram_peak_bytes,latency_ms,energy_mj
std::string PipelineReportToCsv(const PipelineReport& report);
std::string PipelineReportText(const PipelineReport& report);

}  // namespace orbitc

#endif  // ORBITC_PIPELINE_H_
