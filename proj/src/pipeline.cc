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

#include "orbitc/pipeline.h"

#include <cstdio>
#include <unistd.h>

#include "json_util.h"
#include "orbitc/deployment.h"
#include "orbitc/executor.h"
#include "orbitc/hardware_profile.h"
#include "orbitc/mapper.h"
#include "orbitc/model_io.h"
#include "orbitc/pruner.h"
#include "orbitc/quantizer.h"

namespace orbitc {

namespace fs = std::filesystem;
using internal::Json;

namespace {

fs::path Resolve(const fs::path& base, const std::string& p) {
  fs::path path(p);
  return path.is_absolute() ? path : base / path;
}

SyntheticDatasetSpec SyntheticFromJson(const Json& j, const std::string& where) {
  using internal::GetOr;
  SyntheticDatasetSpec s;
  s.num_samples = GetOr(j, "num_samples", s.num_samples, where);
  s.num_classes = GetOr(j, "num_classes", s.num_classes, where);
  s.height = GetOr(j, "height", s.height, where);
  s.width = GetOr(j, "width", s.width, where);
  s.channels = GetOr(j, "channels", s.channels, where);
  s.seed = GetOr(j, "seed", s.seed, where);
  s.noise_stddev = GetOr(j, "noise_stddev", s.noise_stddev, where);
  s.blob_sigma = GetOr(j, "blob_sigma", s.blob_sigma, where);
  s.jitter = GetOr(j, "jitter", s.jitter, where);
  if (s.num_samples <= 0 || s.num_classes <= 0 || s.height <= 0 ||
      s.width <= 0 || s.channels <= 0)
    throw ConfigError(where + ": sizes must be > 0");
  return s;
}

}  // namespace

PipelineConfig PipelineConfigFromJson(const std::string& text,
                                      const fs::path& base_dir,
                                      const std::string& where) {
  using internal::Get;
  using internal::GetOr;
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::exception& e) {
    throw ConfigError(where + ": malformed JSON: " + e.what());
  }
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  PipelineConfig c;
  c.model = Resolve(base_dir, Get<std::string>(j, "model", where));
  const bool has_dataset = j.contains("dataset");
  const bool has_synthetic = j.contains("synthetic_dataset");
  if (has_dataset == has_synthetic)
    throw ConfigError(where +
                      ": set exactly one of 'dataset' and 'synthetic_dataset'");
  if (has_dataset) c.dataset = Resolve(base_dir, Get<std::string>(j, "dataset", where));
  if (has_synthetic)
    c.synthetic_dataset =
        SyntheticFromJson(j["synthetic_dataset"], where + ".synthetic_dataset");
  c.calibration_size = GetOr(j, "calibration_size", c.calibration_size, where);
  if (c.calibration_size <= 0)
    throw ConfigError(where + ".calibration_size: must be > 0");
  if (j.contains("prune")) {
    const Json& p = j["prune"];
    const std::string pw = where + ".prune";
    c.prune.schedule = GetOr(p, "schedule", c.prune.schedule, pw);
    c.prune.skip = GetOr(p, "skip", c.prune.skip, pw);
  }
  c.threshold = GetOr(j, "threshold", c.threshold, where);
  if (!(c.threshold > 0.0 && c.threshold <= 1.0))
    throw ConfigError(where + ".threshold: must be in (0, 1]");
  if (j.contains("hardware_profile"))
    c.hardware_profile =
        Resolve(base_dir, Get<std::string>(j, "hardware_profile", where));
  if (j.contains("link_budget"))
    c.link_budget = Resolve(base_dir, Get<std::string>(j, "link_budget", where));
  c.output_dir = Resolve(base_dir, Get<std::string>(j, "output_dir", where));
  c.seed = GetOr(j, "seed", c.seed, where);
  if (j.contains("bytes_per_sample")) {
    c.bytes_per_sample = Get<double>(j, "bytes_per_sample", where);
    if (!(*c.bytes_per_sample > 0.0))
      throw ConfigError(where + ".bytes_per_sample: must be > 0");
  }
  return c;
}

PipelineConfig LoadPipelineConfig(const fs::path& path) {
  return PipelineConfigFromJson(internal::ReadTextFile(path),
                                path.parent_path(), path.string());
}

Graph LoadCheckedModel(const fs::path& path) {
  Graph g = LoadModel(path);
  auto report = Validate(g);
  if (!report.ok())
    throw GraphError(path.string() + ": invalid model: " + report.ToString());
  if (g.inputs.size() != 1 || g.outputs.size() != 1)
    throw GraphError(path.string() + ": expected one input and one output");
  return InferShapes(g).graph;
}

Dataset LoadConfiguredDataset(const PipelineConfig& config, const Shape& shape) {
  if (config.synthetic_dataset) {
    const auto& s = *config.synthetic_dataset;
    const Shape expected{1, s.height, s.width, s.channels};
    if (expected != shape)
      throw ConfigError("synthetic dataset shape " + ShapeToString(expected) +
                        " does not match model input " + ShapeToString(shape));
    return MakeSyntheticDataset(s);
  }
  return LoadDataset(config.dataset, shape);
}

std::vector<Tensor> CalibrationInputs(const Dataset& dataset, int count,
                                      uint64_t seed) {
  if (count <= 0 || static_cast<size_t>(count) > dataset.samples.size())
    throw ConfigError("calibration_size " + std::to_string(count) +
                      " must be in [1, " +
                      std::to_string(dataset.samples.size()) + "]");
  std::vector<Tensor> inputs;
  for (size_t i : SampleIndices(dataset.samples.size(), count, seed))
    inputs.push_back(dataset.samples[i].input);
  return inputs;
}

int64_t SerialArenaBytes(const Graph& graph) {
  auto inferred = InferShapes(graph);
  Partition partition;
  std::vector<ScheduleTask> tasks;
  std::map<std::string, int> group_of_tensor;
  for (int i : inferred.order) {
    const OpNode& n = inferred.graph.nodes[i];
    const int g = static_cast<int>(partition.groups.size());
    partition.assignment[n.id] = Target::kCpu;
    partition.groups.push_back({{n.id}, Target::kCpu});
    ScheduleTask task{Target::kCpu, 1.0, {}};
    for (const auto& in : n.inputs)
      if (auto it = group_of_tensor.find(in); it != group_of_tensor.end())
        task.deps.push_back(it->second);
    tasks.push_back(std::move(task));
    for (const auto& out : n.outputs) group_of_tensor[out] = g;
  }
  std::vector<int> order(tasks.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  auto timeline = ScheduleInOrder(tasks, order);
  return PlanMemory(inferred.graph, partition, timeline).arena_bytes;
}

namespace {

template <typename Fn>
auto Stage(const std::string& name, Fn&& fn) {
  try {
    return fn();
  } catch (const std::exception& e) {
    throw Error("stage '" + name + "': " + e.what());
  }
}

void WriteRecords(const fs::path& path, const EvaluationResult& result) {
  internal::WriteTextFile(path, RecordsToCsv(result.records));
}

double Agreement(const EvaluationResult& a, const EvaluationResult& b) {
  int64_t same = 0;
  for (size_t i = 0; i < a.records.size(); ++i)
    if (a.records[i].predicted_class == b.records[i].predicted_class) ++same;
  return a.records.empty() ? 0.0
                           : static_cast<double>(same) / a.records.size();
}

fs::path StagingDirFor(const fs::path& out) {
  fs::path dir = out;
  if (!dir.has_filename()) dir = dir.parent_path();
  return dir.parent_path() / (dir.filename().string() + ".staging-" +
                              std::to_string(::getpid()));
}

}  // namespace

PipelineReport RunPipeline(const PipelineConfig& config) {
  const HardwareProfile profile = Stage("config", [&] {
    return config.hardware_profile.empty() ? HardwareProfile{}
                                           : LoadProfile(config.hardware_profile);
  });
  const LinkBudget link = Stage("config", [&] {
    return config.link_budget.empty() ? LinkBudget{}
                                      : LoadLinkBudget(config.link_budget);
  });
  if (config.output_dir.empty()) throw Error("stage 'config': output_dir is empty");

  const fs::path staging = StagingDirFor(config.output_dir);
  fs::remove_all(staging);
  fs::create_directories(staging);
  try {
    PipelineReport report;
    report.seed = config.seed;
    const Graph float_graph =
        Stage("load", [&] { return LoadCheckedModel(config.model); });
    report.model = float_graph.name;
    const Shape input_shape = float_graph.tensor(float_graph.inputs[0]).shape;
    const Dataset dataset = Stage("load", [&] {
      return LoadConfiguredDataset(config, input_shape);
    });
    report.dataset = config.synthetic_dataset
                         ? std::string("synthetic")
                         : config.dataset.filename().string();

    const EvaluationResult float_eval = Stage("evaluate", [&] {
      SaveModel(float_graph, staging / "models" / "float.json");
      auto r = Evaluate(float_graph, dataset);
      WriteRecords(staging / "records" / "float.csv", r);
      return r;
    });
    const FlashBreakdown float_flash = EstimateFlash(float_graph, profile);
    const int64_t float_ram = SerialArenaBytes(float_graph) +
                              profile.runtime_overhead_bytes;
    report.stages.push_back({"float", float_eval.accuracy,
                             CountParameters(float_graph), float_flash.total(),
                             float_ram, std::nullopt, std::nullopt});

    Graph pruned = float_graph;
    EvaluationResult pruned_eval = float_eval;
    if (!config.prune.skip) {
      pruned = Stage("prune", [&] {
        PrunePlan plan = NewPrunePlan(float_graph, config.prune.schedule);
        Graph current = float_graph;
        for (size_t k = 0; !plan.complete(); ++k) {
          plan = NextPruneStage(current, std::move(plan));
          Graph masked = ApplyMasks(current, plan);
          const fs::path ckpt =
              staging / "checkpoints" / ("prune_stage_" + std::to_string(k + 1));
          WriteCheckpoint(ExportCheckpoint(masked), ckpt);
          current = ImportCheckpoint(masked, ReadCheckpoint(ckpt));
        }
        internal::WriteTextFile(staging / "prune_plan.json", PrunePlanToJson(plan));
        Graph out = Materialize(current, plan);
        SaveModel(out, staging / "models" / "pruned.json");
        return out;
      });
      pruned_eval = Stage("evaluate", [&] {
        auto r = Evaluate(pruned, dataset);
        WriteRecords(staging / "records" / "pruned.csv", r);
        return r;
      });
      report.stages.push_back(
          {"pruned", pruned_eval.accuracy, CountParameters(pruned),
           EstimateFlash(pruned, profile).total(),
           SerialArenaBytes(pruned) + profile.runtime_overhead_bytes,
           std::nullopt, std::nullopt});
    }

    const RangeMap ranges = Stage("calibrate", [&] {
      auto inputs = CalibrationInputs(dataset, config.calibration_size, config.seed);
      auto r = Calibrate(pruned, inputs);
      internal::WriteTextFile(staging / "calibration_ranges.json", RangesToJson(r));
      return r;
    });
    const Graph quantized = Stage("quantize", [&] {
      Graph q = QuantizeGraph(pruned, ranges);
      SaveModel(q, staging / "models" / "quantized.json");
      return q;
    });
    const EvaluationResult q_eval = Stage("evaluate", [&] {
      auto r = Evaluate(quantized, dataset);
      WriteRecords(staging / "records" / "quantized.csv", r);
      return r;
    });
    report.int8_float_agreement = Agreement(q_eval, pruned_eval);

    const DeploymentPlan plan = Stage("map", [&] {
      auto p = PlanDeployment(quantized, profile);
      internal::WriteTextFile(staging / "deployment_plan.json",
                              DeploymentPlanToJson(p));
      internal::WriteTextFile(staging / "deployment_report.txt",
                              DeploymentReport(p));
      return p;
    });
    report.deployment = Stage("estimate", [&] {
      CostEstimate e = EstimateDeployment(plan, profile);
      internal::WriteTextFile(staging / "cost_estimate.json", CostEstimateToJson(e));
      internal::WriteTextFile(
          staging / "cost.csv",
          CostCsvHeader() + CostCsvRow(report.model, report.dataset, "quantized", e));
      return e;
    });
    report.stages.push_back({"quantized", q_eval.accuracy,
                             CountParameters(quantized),
                             report.deployment.flash_bytes,
                             report.deployment.ram_peak_bytes,
                             report.deployment.latency_ms,
                             report.deployment.energy_mj});
    report.flash_reduction_pct =
        100.0 * (1.0 - static_cast<double>(report.deployment.flash_bytes) /
                           static_cast<double>(float_flash.total()));
    report.ram_reduction_pct =
        100.0 * (1.0 - static_cast<double>(report.deployment.ram_peak_bytes) /
                           static_cast<double>(float_ram));

    report.downlink = Stage("downlink", [&] {
      DownlinkScenario s;
      s.num_samples = static_cast<int64_t>(dataset.samples.size());
      s.bytes_per_sample = config.bytes_per_sample.value_or(
          static_cast<double>(NumElements(input_shape)));
      s.threshold = config.threshold;
      s.onboard_records = q_eval.records;
      s.ground_records = float_eval.records;
      auto r = Simulate(s, link);
      internal::WriteTextFile(staging / "downlink_report.json",
                              DownlinkReportToJson(r));
      internal::WriteTextFile(staging / "downlink_summary.txt", DownlinkSummary(r));
      return r;
    });

    Stage("report", [&] {
      internal::WriteTextFile(staging / "report.json", PipelineReportToJson(report));
      internal::WriteTextFile(staging / "report.csv", PipelineReportToCsv(report));
      internal::WriteTextFile(staging / "report.txt", PipelineReportText(report));
      fs::remove_all(config.output_dir);
      if (config.output_dir.has_parent_path())
        fs::create_directories(config.output_dir.parent_path());
      fs::rename(staging, config.output_dir);
      return 0;
    });
    return report;
  } catch (...) {
    std::error_code ec;
    fs::remove_all(staging, ec);
    throw;
  }
}

namespace {

Json OptionalNumber(const std::optional<double>& v) {
  return v ? Json(*v) : Json();
}

}  // namespace

std::string PipelineReportToJson(const PipelineReport& r) {
  Json j;
  j["model"] = r.model;
  j["dataset"] = r.dataset;
  j["seed"] = r.seed;
  j["stages"] = Json::array();
  for (const auto& s : r.stages)
    j["stages"].push_back({{"stage", s.stage},
                           {"accuracy", s.accuracy},
                           {"parameters", s.parameters},
                           {"flash_bytes", s.flash_bytes},
                           {"ram_peak_bytes", s.ram_peak_bytes},
                           {"latency_ms", OptionalNumber(s.latency_ms)},
                           {"energy_mj", OptionalNumber(s.energy_mj)}});
  j["flash_reduction_pct"] = r.flash_reduction_pct;
  j["ram_reduction_pct"] = r.ram_reduction_pct;
  j["int8_float_agreement"] = r.int8_float_agreement;
  j["deployment"] = Json::parse(CostEstimateToJson(r.deployment));
  j["downlink"] = Json::parse(DownlinkReportToJson(r.downlink));
  return j.dump(2) + "\n";
}

std::string PipelineReportToCsv(const PipelineReport& r) {
  std::string out =
      "model,dataset,stage,accuracy,parameters,flash_bytes,ram_peak_bytes,"
      "latency_ms,energy_mj\n";
  char buf[256];
  for (const auto& s : r.stages) {
    std::snprintf(buf, sizeof(buf), ",%s,%.6f,%lld,%lld,%lld,", s.stage.c_str(),
                  s.accuracy, static_cast<long long>(s.parameters),
                  static_cast<long long>(s.flash_bytes),
                  static_cast<long long>(s.ram_peak_bytes));
    out += r.model + "," + r.dataset + buf;
    if (s.latency_ms) {
      std::snprintf(buf, sizeof(buf), "%.6f,%.6f", *s.latency_ms, *s.energy_mj);
      out += buf;
    } else {
      out += ",";
    }
    out += "\n";
  }
  return out;
}

std::string PipelineReportText(const PipelineReport& r) {
  std::string out = "model " + r.model + " on " + r.dataset + "\n\n";
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%-10s %9s %11s %12s %12s %11s %11s\n", "stage",
                "accuracy", "parameters", "flash_B", "ram_B", "latency_ms",
                "energy_mJ");
  out += buf;
  for (const auto& s : r.stages) {
    std::string lat = s.latency_ms ? std::to_string(*s.latency_ms) : "-";
    std::string en = s.energy_mj ? std::to_string(*s.energy_mj) : "-";
    std::snprintf(buf, sizeof(buf), "%-10s %9.4f %11lld %12lld %12lld %11s %11s\n",
                  s.stage.c_str(), s.accuracy,
                  static_cast<long long>(s.parameters),
                  static_cast<long long>(s.flash_bytes),
                  static_cast<long long>(s.ram_peak_bytes), lat.c_str(),
                  en.c_str());
    out += buf;
  }
  std::snprintf(buf, sizeof(buf),
                "\nflash reduction %.2f%%\nram reduction %.2f%%\n"
                "int8/float top-1 agreement %.4f\n\n",
                r.flash_reduction_pct, r.ram_reduction_pct,
                r.int8_float_agreement);
  out += buf;
  out += DownlinkSummary(r.downlink);
  return out;
}

}  // namespace orbitc
