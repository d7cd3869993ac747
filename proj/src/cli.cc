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

#include "orbitc/cli.h"

#include <CLI11.hpp>
#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <optional>

#include "json_util.h"
#include "orbitc/deployment.h"
#include "orbitc/downlink.h"
#include "orbitc/executor.h"
#include "orbitc/hardware_profile.h"
#include "orbitc/model_io.h"
#include "orbitc/pipeline.h"
#include "orbitc/pruner.h"
#include "orbitc/quantizer.h"

namespace orbitc::cli {

namespace fs = std::filesystem;
using internal::Json;

namespace {

struct Options {
  std::string model;
  std::string dataset;
  std::string config;
  std::string out;
  std::string plan;
  std::string ranges;
  std::string profile;
  std::string link;
  std::string records;
  std::string ground;
  std::string checkpoint;
  std::string run_dir;
  std::string stage;
  std::vector<double> schedule{0.10, 0.05, 0.05};
  uint64_t seed = 1;
  bool seed_set = false;
  int size = 64;
  int samples = 200;
  double threshold = 0.95;
  double bytes_per_sample = 0.0;
};

HardwareProfile ProfileOrDefault(const std::string& path) {
  return path.empty() ? HardwareProfile{} : LoadProfile(path);
}

Dataset DatasetFor(const Options& o, const Graph& graph) {
  const Shape& shape = graph.tensor(graph.inputs[0]).shape;
  if (!o.config.empty()) return LoadConfiguredDataset(LoadPipelineConfig(o.config), shape);
  if (o.dataset.empty() || o.dataset == "synthetic") {
    SyntheticDatasetSpec spec;
    spec.height = static_cast<int>(shape[1]);
    spec.width = static_cast<int>(shape[2]);
    spec.channels = static_cast<int>(shape[3]);
    return MakeSyntheticDataset(spec);
  }
  return LoadDataset(o.dataset, shape);
}

void RequireFile(const std::string& path, const std::string& what) {
  if (path.empty()) throw ConfigError("missing --" + what);
  if (!fs::exists(path)) throw ConfigError(what + " file " + path + " does not exist");
}

int ValidateModelCmd(const Options& o, std::ostream& out) {
  RequireFile(o.model, "model");
  Graph g = LoadModel(o.model);
  auto report = Validate(g);
  if (!report.ok()) {
    out << report.ToString();
    return 1;
  }
  g = InferShapes(g).graph;
  out << g.name << ": valid, " << g.nodes.size() << " nodes, "
      << CountParameters(g) << " parameters, "
      << (g.is_quantized() ? "int8" : "float32") << "\n";
  return 0;
}

int EvaluateCmd(const Options& o, std::ostream& out) {
  RequireFile(o.model, "model");
  Graph g = LoadCheckedModel(o.model);
  auto result = Evaluate(g, DatasetFor(o, g));
  if (!o.out.empty()) internal::WriteTextFile(o.out, RecordsToCsv(result.records));
  char buf[128];
  std::snprintf(buf, sizeof(buf), "accuracy %.4f (%lld/%zu)\n", result.accuracy,
                static_cast<long long>(result.correct_count),
                result.records.size());
  out << buf;
  return 0;
}

int PruneStageCmd(const Options& o, std::ostream& out) {
  RequireFile(o.model, "model");
  if (o.plan.empty()) throw ConfigError("missing --plan");
  if (o.out.empty()) throw ConfigError("missing --out");
  Graph g = LoadCheckedModel(o.model);
  PrunePlan plan = fs::exists(o.plan)
                       ? PrunePlanFromJson(internal::ReadTextFile(o.plan), o.plan)
                       : NewPrunePlan(g, o.schedule);
  if (!o.stage.empty() &&
      std::to_string(plan.stages.size() + 1) != o.stage)
    throw ConfigError("plan is at stage " + std::to_string(plan.stages.size() + 1) +
                      ", --stage asked for " + o.stage);
  plan = NextPruneStage(g, std::move(plan));
  Graph masked = ApplyMasks(g, plan);
  const fs::path dir(o.out);
  internal::WriteTextFile(dir / "plan.json", PrunePlanToJson(plan));
  SaveModel(masked, dir / "model.json");
  out << "stage " << plan.stages.size() << "/" << plan.schedule.size() << " done\n";
  if (plan.complete()) {
    SaveModel(Materialize(masked, plan), dir / "pruned.json");
    out << "materialized " << (dir / "pruned.json").string() << "\n";
  }
  return 0;
}

int CalibrateCmd(const Options& o, std::ostream& out) {
  RequireFile(o.model, "model");
  if (o.out.empty()) throw ConfigError("missing --out");
  Graph g = LoadCheckedModel(o.model);
  uint64_t seed = o.seed;
  int size = o.size;
  if (!o.config.empty()) {
    auto config = LoadPipelineConfig(o.config);
    if (!o.seed_set) seed = config.seed;
    size = config.calibration_size;
  }
  auto ranges = Calibrate(g, CalibrationInputs(DatasetFor(o, g), size, seed));
  internal::WriteTextFile(o.out, RangesToJson(ranges));
  out << ranges.size() << " ranges from " << size << " samples\n";
  return 0;
}

int QuantizeCmd(const Options& o, std::ostream& out) {
  RequireFile(o.model, "model");
  RequireFile(o.ranges, "ranges");
  if (o.out.empty()) throw ConfigError("missing --out");
  Graph g = LoadCheckedModel(o.model);
  auto ranges = RangesFromJson(internal::ReadTextFile(o.ranges), o.ranges);
  SaveModel(QuantizeGraph(g, ranges), o.out);
  out << "wrote " << o.out << "\n";
  return 0;
}

DeploymentPlan PlanFor(const Options& o) {
  RequireFile(o.model, "model");
  Graph g = LoadCheckedModel(o.model);
  if (!g.is_quantized()) throw GraphError("mapping requires a quantized graph");
  return PlanDeployment(g, ProfileOrDefault(o.profile));
}

int MapCmd(const Options& o, std::ostream& out) {
  auto plan = PlanFor(o);
  if (!o.out.empty()) internal::WriteTextFile(o.out, DeploymentPlanToJson(plan));
  out << DeploymentReport(plan);
  return 0;
}

int EstimateCmd(const Options& o, std::ostream& out) {
  auto plan = PlanFor(o);
  if (!o.out.empty())
    internal::WriteTextFile(o.out, CostEstimateToJson(plan.estimates));
  out << CostCsvHeader()
      << CostCsvRow(plan.model, o.dataset.empty() ? "-" : o.dataset,
                    o.stage.empty() ? "quantized" : o.stage, plan.estimates);
  return 0;
}

int SimulateDownlinkCmd(const Options& o, std::ostream& out) {
  RequireFile(o.records, "records");
  DownlinkScenario s;
  s.onboard_records = RecordsFromCsv(internal::ReadTextFile(o.records), o.records);
  s.num_samples = static_cast<int64_t>(s.onboard_records.size());
  s.threshold = o.threshold;
  s.bytes_per_sample = o.bytes_per_sample;
  if (!o.ground.empty()) {
    RequireFile(o.ground, "ground");
    s.ground_records = RecordsFromCsv(internal::ReadTextFile(o.ground), o.ground);
  }
  LinkBudget link = o.link.empty() ? LinkBudget{} : LoadLinkBudget(o.link);
  auto report = Simulate(s, link);
  if (!o.out.empty()) internal::WriteTextFile(o.out, DownlinkReportToJson(report));
  out << DownlinkSummary(report);
  return 0;
}

int ReportCmd(const Options& o, std::ostream& out) {
  if (o.run_dir.empty()) throw ConfigError("missing --run-dir");
  const fs::path path = fs::path(o.run_dir) / "report.json";
  Json j = internal::ReadJsonFile(path);
  const std::string where = path.string();
  out << "model " << internal::Get<std::string>(j, "model", where) << " on "
      << internal::Get<std::string>(j, "dataset", where) << "\n";
  char buf[256];
  for (const auto& s : internal::Require(j, "stages", where)) {
    std::snprintf(buf, sizeof(buf), "%-10s accuracy %.4f  flash %lld B  ram %lld B\n",
                  s.at("stage").get<std::string>().c_str(),
                  s.at("accuracy").get<double>(),
                  s.at("flash_bytes").get<long long>(),
                  s.at("ram_peak_bytes").get<long long>());
    out << buf;
  }
  const Json& d = internal::Require(j, "deployment", where);
  const Json& dl = internal::Require(j, "downlink", where);
  std::snprintf(buf, sizeof(buf),
                "flash reduction %.2f%%\nlatency %.3f ms  energy %.4f mJ\n"
                "downlink reduction %.2f%% (%lld of %lld transmitted)\n",
                internal::Get<double>(j, "flash_reduction_pct", where),
                d.at("latency_ms").get<double>(), d.at("energy_mj").get<double>(),
                dl.at("reduction_pct").get<double>(),
                dl.at("transmitted_count").get<long long>(),
                dl.at("num_samples").get<long long>());
  out << buf;
  return 0;
}

int GenDatasetCmd(const Options& o, std::ostream& out) {
  if (o.out.empty()) throw ConfigError("missing --out");
  SyntheticDatasetSpec spec;
  spec.seed = o.seed;
  spec.num_samples = o.samples;
  SaveDataset(MakeSyntheticDataset(spec), o.out);
  out << "wrote " << spec.num_samples << " samples to " << o.out << "\n";
  return 0;
}

int RunCmd(const Options& o, std::ostream& out) {
  RequireFile(o.config, "config");
  PipelineConfig config = LoadPipelineConfig(o.config);
  if (!o.out.empty()) config.output_dir = o.out;
  if (o.seed_set) config.seed = o.seed;
  if (!o.profile.empty()) config.hardware_profile = o.profile;
  auto report = RunPipeline(config);
  out << PipelineReportText(report);
  return 0;
}

int ExportCheckpointCmd(const Options& o, std::ostream& out) {
  RequireFile(o.model, "model");
  if (o.out.empty()) throw ConfigError("missing --out");
  WriteCheckpoint(ExportCheckpoint(LoadCheckedModel(o.model)), o.out);
  out << "wrote checkpoint " << o.out << "\n";
  return 0;
}

int ImportCheckpointCmd(const Options& o, std::ostream& out) {
  RequireFile(o.model, "model");
  if (o.checkpoint.empty()) throw ConfigError("missing --checkpoint");
  if (o.out.empty()) throw ConfigError("missing --out");
  Graph g = ImportCheckpoint(LoadCheckedModel(o.model), ReadCheckpoint(o.checkpoint));
  SaveModel(g, o.out);
  out << "wrote " << o.out << "\n";
  return 0;
}

}  // namespace

int Main(const std::vector<std::string>& args, std::ostream& out,
         std::ostream& err) {
  CLI::App app{"compress, map and cost models for onboard inference", "orbitc"};
  app.require_subcommand(1);
  Options o;

  using Handler = std::function<int(const Options&, std::ostream&)>;
  std::vector<std::pair<CLI::App*, Handler>> commands;
  auto add = [&](const std::string& name, const std::string& help, Handler h) {
    CLI::App* sub = app.add_subcommand(name, help);
    commands.emplace_back(sub, std::move(h));
    return sub;
  };
  auto seed_option = [&](CLI::App* sub) {
    sub->add_option("--seed", o.seed, "random seed")
        ->each([&](const std::string&) { o.seed_set = true; });
  };

  auto* validate = add("validate-model", "check a model file", ValidateModelCmd);
  validate->add_option("--model", o.model)->required();

  auto* evaluate = add("evaluate", "run a model over a dataset", EvaluateCmd);
  evaluate->add_option("--model", o.model)->required();
  evaluate->add_option("--dataset", o.dataset, "dataset dir or 'synthetic'");
  evaluate->add_option("--config", o.config, "take the dataset from a config");
  evaluate->add_option("--out", o.out, "records CSV");

  auto* prune = add("prune-stage", "run the next pruning stage", PruneStageCmd);
  prune->add_option("--model", o.model)->required();
  prune->add_option("--plan", o.plan, "plan JSON, created when absent")->required();
  prune->add_option("--schedule", o.schedule, "fractions for a new plan")
      ->delimiter(',');
  prune->add_option("--stage", o.stage, "expected 1-based stage number");
  prune->add_option("--out", o.out, "output directory")->required();

  auto* calibrate = add("calibrate", "record activation ranges", CalibrateCmd);
  calibrate->add_option("--model", o.model)->required();
  calibrate->add_option("--dataset", o.dataset);
  calibrate->add_option("--config", o.config);
  calibrate->add_option("--size", o.size, "calibration subset size");
  seed_option(calibrate);
  calibrate->add_option("--out", o.out)->required();

  auto* quantize = add("quantize", "post-training int8 quantization", QuantizeCmd);
  quantize->add_option("--model", o.model)->required();
  quantize->add_option("--ranges", o.ranges)->required();
  quantize->add_option("--out", o.out)->required();

  auto* map = add("map", "partition, fuse, schedule and plan memory", MapCmd);
  map->add_option("--model", o.model)->required();
  map->add_option("--profile", o.profile);
  map->add_option("--out", o.out, "deployment plan JSON");

  auto* estimate = add("estimate", "latency, energy, RAM and flash", EstimateCmd);
  estimate->add_option("--model", o.model)->required();
  estimate->add_option("--profile", o.profile);
  estimate->add_option("--dataset", o.dataset, "dataset label for the CSV row");
  estimate->add_option("--stage", o.stage, "stage label for the CSV row");
  estimate->add_option("--out", o.out, "cost estimate JSON");

  auto* downlink = add("simulate-downlink", "thresholded transmission",
                       SimulateDownlinkCmd);
  downlink->add_option("--records", o.records, "onboard records CSV")->required();
  downlink->add_option("--ground", o.ground, "ground records CSV");
  downlink->add_option("--link", o.link, "link budget JSON");
  downlink->add_option("--threshold", o.threshold);
  downlink->add_option("--bytes-per-sample", o.bytes_per_sample)->required();
  downlink->add_option("--out", o.out, "report JSON");

  auto* report = add("report", "summarize a pipeline output directory", ReportCmd);
  report->add_option("--run-dir", o.run_dir)->required();

  auto* gen = add("gen-dataset", "write the synthetic dataset", GenDatasetCmd);
  gen->add_option("--samples", o.samples);
  seed_option(gen);
  gen->add_option("--out", o.out)->required();

  auto* run = add("run", "run the whole pipeline from a config", RunCmd);
  run->add_option("--config", o.config)->required();
  run->add_option("--out", o.out, "override output_dir");
  run->add_option("--profile", o.profile, "override hardware_profile");
  seed_option(run);

  auto* exp = add("export-checkpoint", "dump constant tensors", ExportCheckpointCmd);
  exp->add_option("--model", o.model)->required();
  exp->add_option("--out", o.out)->required();

  auto* imp = add("import-checkpoint", "load constant tensors into a model",
                  ImportCheckpointCmd);
  imp->add_option("--model", o.model)->required();
  imp->add_option("--checkpoint", o.checkpoint)->required();
  imp->add_option("--out", o.out)->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "orbitc: " << e.what() << "\n";
    return 2;
  }
  for (auto& [sub, handler] : commands) {
    if (!sub->parsed()) continue;
    try {
      return handler(o, out);
    } catch (const std::exception& e) {
      err << "orbitc " << sub->get_name() << ": error: " << e.what() << "\n";
      return 1;
    }
  }
  return 2;
}

}  // namespace orbitc::cli
