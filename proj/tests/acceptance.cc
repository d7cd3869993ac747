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

// Acceptance runner: one PASS/FAIL line per criterion. Exit status is the
// number of failed criteria.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "orbitc/costmodel.h"
#include "orbitc/deployment.h"
#include "orbitc/downlink.h"
#include "orbitc/fixed_point.h"
#include "orbitc/hardware_profile.h"
#include "orbitc/mapper.h"
#include "orbitc/model_io.h"
#include "orbitc/pipeline.h"
#include "orbitc/pruner.h"
#include "oracles.h"
#include "test_util.h"

namespace orbitc {
namespace {

namespace fs = std::filesystem;
using testing::RandomTensor;
using testing::RandomValues;

struct Failure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void Expect(bool ok, const std::string& what) {
  if (!ok) throw Failure(what);
}

std::string Num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

struct Shared {
  Dataset dataset = testing::BundledDataset();
  std::map<std::string, Graph> float_models;
  std::map<std::string, Graph> quantized;

  Shared() {
    for (const char* name : {"desk_convnet", "desk_dsnet"}) {
      float_models[name] = testing::LoadBundled(name);
      quantized[name] = testing::QuantizeBundled(float_models[name], dataset);
    }
  }
};

std::map<std::string, std::string> Tree(const fs::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (!e.is_regular_file()) continue;
    std::ifstream in(e.path(), std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    files[fs::relative(e.path(), root).string()] = ss.str();
  }
  return files;
}

PipelineReport RunBundled(const std::string& name, const fs::path& out) {
  auto cfg = LoadPipelineConfig(testing::SourcePath("configs/" + name + ".json"));
  cfg.output_dir = out;
  return RunPipeline(cfg);
}

// 1
std::string DownlinkArithmetic(Shared&) {
  DownlinkScenario s;
  s.num_samples = 5400;
  s.bytes_per_sample = 12.3 * kBytesPerKB;
  s.threshold = 0.95;
  for (int i = 0; i < 5400; ++i)
    s.onboard_records.push_back({"s" + std::to_string(i), 0, i < 768 ? 0.6 : 0.99, 0, true});
  auto r = Simulate(s, LinkBudget{});
  const double full = r.full_volume_bytes / kBytesPerMB;
  const double sent = r.transmitted_volume_bytes / kBytesPerMB;
  Expect(r.transmitted_count == 768, "transmitted " + std::to_string(r.transmitted_count));
  Expect(std::abs(full - 66.4) <= 0.1, "full volume " + Num(full) + " MB");
  Expect(std::abs(sent - 9.45) <= 0.01, "transmitted volume " + Num(sent) + " MB");
  Expect(std::abs(r.reduction_pct - 85.77) <= 0.05, "reduction " + Num(r.reduction_pct));
  return "full " + Num(full) + " MB, sent " + Num(sent) + " MB, reduction " +
         Num(r.reduction_pct) + "%";
}

// 2
std::string QuantRoundtrip(Shared& sh) {
  Rng rng(2);
  int pairs = 0;
  for (int trial = 0; pairs < 12000; ++trial) {
    const double mag = std::pow(10.0, -3.0 + 6.0 * rng.Uniform());
    const double lo = mag * (2.0 * rng.Uniform() - 1.0);
    const double hi = lo + mag * rng.Uniform();
    auto qp = ComputeQParams({"t", lo, hi}, QuantMode::kAsymmetric);
    const double wlo = std::min(lo, 0.0), whi = std::max(hi, 0.0);
    for (int k = 0; k < 6; ++k, ++pairs) {
      const double r = k == 0 ? wlo : k == 1 ? whi : wlo + (whi - wlo) * rng.Uniform();
      const double back = DequantizeValue(QuantizeValue(r, qp.scale(), qp.zero_point()),
                                          qp.scale(), qp.zero_point());
      const double slack = 1e-12 * std::max(std::abs(r), qp.scale());
      Expect(std::abs(back - r) <= qp.scale() / 2 + slack,
             "error " + Num(std::abs(back - r)) + " above S/2 = " + Num(qp.scale() / 2));
    }
    Expect(DequantizeValue(qp.zero_point(), qp.scale(), qp.zero_point()) == 0.0,
           "zero not exact");
  }
  int activations = 0;
  for (const auto& [name, q] : sh.quantized)
    for (const auto& [id, t] : q.tensors) {
      if (t.is_constant() || t.dtype != DType::kInt8) continue;
      const auto& qp = *t.quant;
      Expect(DequantizeValue(qp.zero_point(), qp.scale(), qp.zero_point()) == 0.0 &&
                 QuantizeValue(0.0, qp.scale(), qp.zero_point()) == qp.zero_point(),
             name + ": zero not exact in " + id);
      ++activations;
    }
  return std::to_string(pairs) + " pairs, " + std::to_string(activations) +
         " activation params with exact zero";
}

// 3
std::string FlashReduction(Shared& sh) {
  const HardwareProfile p;
  std::string detail;
  for (const auto& [name, g] : sh.float_models) {
    const auto ff = EstimateFlash(g, p);
    const auto qf = EstimateFlash(sh.quantized.at(name), p);
    Expect(qf.total() <= 0.26 * ff.total() + qf.metadata_constant(),
           name + ": quantized flash " + std::to_string(qf.total()) + " over bound");
  }
  testing::TempDir dir("accept_flash");
  for (const char* name : {"desk_convnet", "desk_dsnet"}) {
    auto report = RunBundled(name, dir / name);
    Expect(report.flash_reduction_pct >= 70.0,
           std::string(name) + ": pipeline flash reduction " + Num(report.flash_reduction_pct));
    detail += std::string(detail.empty() ? "" : ", ") + name + " " +
              Num(report.flash_reduction_pct) + "%";
  }
  return "pipeline flash reduction " + detail;
}

// 4
std::string RamPlanning(Shared& sh) {
  const HardwareProfile p;
  std::vector<std::pair<std::string, Graph>> graphs(sh.quantized.begin(), sh.quantized.end());
  for (const auto& [name, g] : sh.float_models) {
    auto plan = BuildPrunePlan(g, {0.10, 0.05, 0.05});
    Graph pruned = Materialize(ApplyMasks(g, plan), plan);
    graphs.emplace_back(name + "/pruned", testing::QuantizeBundled(pruned, sh.dataset));
  }
  for (const auto& [name, q] : graphs) {
    auto plan = PlanDeployment(q, p);
    int64_t sum = 0;
    for (const auto& [id, t] : q.tensors)
      if (!t.is_constant()) sum += t.byte_size();
    Expect(plan.memory.arena_bytes < sum, name + ": no reuse");
    Expect(MemoryConflicts(plan.memory).empty(), name + ": overlapping buffers");
  }
  Rng rng(4);
  double worst = 1.0;
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<LiveTensor> ts;
    const int n = 1 + int(rng.Below(6));
    for (int i = 0; i < n; ++i) {
      const int a = int(rng.Below(6)), b = int(rng.Below(6));
      ts.push_back({"t" + std::to_string(i), 1 + int64_t(rng.Below(6)), std::min(a, b),
                    std::max(a, b)});
    }
    worst = std::max(worst, double(AssignOffsets(ts).arena_bytes) / testing::OracleArena(ts));
  }
  Expect(worst <= 1.5, "greedy/optimal ratio " + Num(worst));
  auto chain = AssignOffsets({{"a", 100'000, 0, 0}, {"b", 100'000, 0, 1}, {"c", 100'000, 1, 1}});
  Expect(chain.arena_bytes == 200'000, "chain peak " + std::to_string(chain.arena_bytes));
  return std::to_string(graphs.size()) + " bundled graphs reuse memory, worst ratio " +
         Num(worst) + ", chain 200000 B";
}

// 5
std::string PruningCorrectness(Shared& sh) {
  for (const auto& [name, g] : sh.float_models) {
    auto plan = BuildPrunePlan(g, {0.10, 0.05, 0.05});
    for (const auto& layer : AnalyzePrunableLayers(g)) {
      if (!layer.prunable) continue;
      const auto norms = FilterL2Norms(g.tensor(layer.layer_id + "_w"));
      std::vector<bool> gone(norms.size(), false);
      for (const auto& stage : plan.stages) {
        auto it = stage.find(layer.layer_id);
        if (it == stage.end()) continue;
        double max_removed = 0;
        for (int i : it->second) max_removed = std::max(max_removed, norms[i]);
        for (int i : it->second) gone[i] = true;
        for (size_t i = 0; i < norms.size(); ++i)
          Expect(gone[i] || max_removed <= norms[i],
                 name + "/" + layer.layer_id + ": kept filter weaker than a removed one");
      }
    }
    Graph masked = ApplyMasks(g, plan);
    Graph small = Materialize(masked, plan);
    Expect(Validate(small).ok(), name + ": materialized graph invalid");
    Rng rng(5);
    const std::string logits = g.node(g.nodes.back().id).inputs[0];
    for (int i = 0; i < 20; ++i) {
      auto in = RandomTensor(g.tensor(g.inputs[0]).shape, rng, -1, 1);
      const auto a = RunF32Trace(masked, in).at(logits).data;
      const auto b = RunF32Trace(small, in).at(logits).data;
      for (size_t k = 0; k < a.size(); ++k)
        Expect(std::abs(a[k] - b[k]) <= 1e-5, name + ": masked/materialized differ");
    }
  }
  Rng rng(6);
  GraphBuilder b("forty");
  auto x = b.Input("x", {1, 4, 4, 2});
  x = b.Conv2D(x, {40, 1, 1, 2}, RandomValues(rng, 80, -1, 1), {}, 1, Padding::kValid, "c");
  x = b.Conv2D(x, {2, 1, 1, 40}, RandomValues(rng, 80, -1, 1), {}, 1, Padding::kValid, "h");
  b.MarkOutput(x);
  Graph forty = b.Build();
  auto plan = BuildPrunePlan(forty, {0.10, 0.05, 0.05});
  const auto kept = Materialize(ApplyMasks(forty, plan), plan).tensor("c_w").shape[0];
  Expect(kept == 32, "40-filter layer keeps " + std::to_string(kept));
  return "L2 order holds, masked == materialized on 20 inputs, 40 -> 32 filters";
}

// 6
std::string Int8Fidelity(Shared& sh) {
  Rng rng(7);
  GraphBuilder b("unit");
  auto x = b.Input("x", {1, 5, 5, 3});
  std::vector<float> eye(9, 0.0f);
  for (int i = 0; i < 3; ++i) eye[i * 3 + i] = 1.0f;
  b.MarkOutput(b.Conv2D(x, {3, 1, 1, 3}, eye, {}, 1, Padding::kValid, "id"));
  Graph fg = b.Build();
  Graph qg = testing::UnitScale(fg);
  for (int i = 0; i < 50; ++i) {
    Tensor in{{1, 5, 5, 3}, {}};
    for (int k = 0; k < 75; ++k) in.data.push_back(float(int(rng.Below(256)) - 128));
    Expect(RunInt8(qg, in)[0].data == RunF32(fg, in)[0].data, "unit-scale identity differs");
  }
  const Graph& g = sh.float_models.at("desk_convnet");
  const Graph& q = sh.quantized.at("desk_convnet");
  auto fe = Evaluate(g, sh.dataset);
  auto qe = Evaluate(q, sh.dataset);
  int same = 0;
  for (size_t i = 0; i < fe.records.size(); ++i)
    same += fe.records[i].predicted_class == qe.records[i].predicted_class;
  const double agreement = double(same) / fe.records.size();
  Expect(fe.records.size() == 200, "dataset size");
  Expect(agreement >= 0.90, "agreement " + Num(agreement));
  return "identity bit-exact, convnet top-1 agreement " + Num(agreement) + " on 200 samples";
}

// 7
std::string MappingSoundness(Shared& sh) {
  const HardwareProfile p;
  for (const auto& [name, q] : sh.quantized) {
    auto part = PartitionAndFuse(q, p);
    const KernelSchedule ks = part.kernels();
    Int8RunOptions fused;
    fused.kernels = &ks;
    for (const auto& s : sh.dataset.samples)
      Expect(RunInt8(q, s.input, fused) == RunInt8(q, s.input), name + ": fused output differs");
    for (const auto& grp : part.groups)
      if (grp.target == Target::kNpu)
        for (const auto& id : grp.nodes)
          Expect(p.npu_supported_ops.count(q.node(id).kind) == 1,
                 name + ": unsupported " + id + " on NPU");
  }
  Rng rng(8);
  GraphBuilder b("crs");
  auto x = b.Input("x", {1, 4, 4, 3});
  x = b.Conv2D(x, {3, 1, 1, 3}, RandomValues(rng, 9, -1, 1), {}, 1, Padding::kValid, "conv");
  x = b.ReLU(x, "relu");
  b.MarkOutput(b.Softmax(x, "soft"));
  auto part = PartitionAndFuse(testing::QuantizeWithRandomCalibration(b.Build(), 4, 1), p);
  Expect(part.groups.size() == 2 &&
             part.groups[0] == FusedGroup{{"conv", "relu"}, Target::kNpu} &&
             part.groups[1] == FusedGroup{{"soft"}, Target::kCpu},
         "Conv/ReLU/Softmax partition");
  return "fused == unfused on 200 samples x 2 models, NPU{conv+relu} CPU{soft}";
}

// 8
std::string Scheduling(Shared&) {
  std::vector<ScheduleTask> two{{Target::kNpu, 4000, {}}, {Target::kCpu, 3000, {}}};
  Expect(Makespan(ListSchedule(two)) == 4000, "4/3 ms makespan");
  Rng rng(9);
  double worst = 1.0;
  for (int trial = 0; trial < 2000; ++trial) {
    const int n = 1 + int(rng.Below(5));
    std::vector<ScheduleTask> tasks(n);
    for (int i = 0; i < n; ++i) {
      tasks[i].target = rng.Below(2) ? Target::kNpu : Target::kCpu;
      tasks[i].latency_us = double(1 + rng.Below(9)) * 100;
      for (int j = 0; j < i; ++j)
        if (rng.Uniform() < 0.3) tasks[i].deps.push_back(j);
    }
    worst = std::max(worst, Makespan(ListSchedule(tasks)) / testing::OracleMakespan(tasks, 0.0));
  }
  Expect(worst <= 1.2, "worst ratio " + Num(worst));
  return "4 ms makespan, worst list/optimal ratio " + Num(worst) + " over 2000 DAGs";
}

// 9
std::string CostFixture(Shared& sh) {
  auto p = LoadProfile(testing::SourcePath("profiles/calibration_fixture.json"));
  auto plan = PlanDeployment(sh.quantized.at("desk_convnet"), p);
  const auto& e = plan.estimates;
  Expect(e.latency_ms >= 3.22 && e.latency_ms <= 30.38, "latency " + Num(e.latency_ms));
  Expect(e.energy_mj >= 0.68 && e.energy_mj <= 6.45, "energy " + Num(e.energy_mj));
  Expect(p.deadline_fps == 5 && e.budget_flags.deadline_ok, "deadline");
  return "convnet " + Num(e.latency_ms) + " ms, " + Num(e.energy_mj) + " mJ, 5 FPS met";
}

// 10
std::string Determinism(Shared&) {
  testing::TempDir dir("accept_det");
  RunBundled("desk_convnet", dir / "a");
  RunBundled("desk_convnet", dir / "b");
  const auto a = Tree(dir / "a");
  Expect(a == Tree(dir / "b"), "output trees differ");
  return std::to_string(a.size()) + " files byte-identical";
}

// 11
std::string HybridAccuracy(Shared&) {
  Rng rng(11);
  for (int trial = 0; trial < 300; ++trial) {
    DownlinkScenario s;
    s.num_samples = 100;
    s.bytes_per_sample = 1000;
    s.threshold = 0.05 + 0.95 * rng.Uniform();
    std::vector<InferenceRecord> ground;
    for (int i = 0; i < 100; ++i) {
      const std::string id = "s" + std::to_string(i);
      const int label = int(rng.Below(10));
      const int on = int(rng.Below(10)), gr = int(rng.Below(10));
      s.onboard_records.push_back({id, on, rng.Uniform(), label, on == label});
      ground.push_back({id, gr, rng.Uniform(), label, gr == label});
    }
    s.ground_records = ground;
    int64_t hits = 0;
    for (int i = 0; i < 100; ++i)
      hits += s.onboard_records[i].confidence < s.threshold ? ground[i].correct
                                                            : s.onboard_records[i].correct;
    const auto r = Simulate(s, LinkBudget{});
    Expect(*r.hybrid_accuracy == double(hits) / 100.0, "hybrid accuracy mismatch");
    int64_t last = -1;
    for (int k = 1; k <= 20; ++k) {
      s.threshold = k / 20.0;
      const auto sweep = Simulate(s, LinkBudget{});
      Expect(sweep.transmitted_count >= last, "threshold monotonicity");
      last = sweep.transmitted_count;
    }
  }
  return "300 random 100-sample sets match enumeration, 20-point sweeps monotone";
}

struct Criterion {
  int number;
  std::string name;
  double budget_s;
  std::function<std::string(Shared&)> run;
};

}  // namespace
}  // namespace orbitc

int main() {
  using namespace orbitc;
  const std::vector<Criterion> criteria{
      {1, "downlink arithmetic", 1, DownlinkArithmetic},
      {2, "quantization roundtrip", 5, QuantRoundtrip},
      {3, "flash reduction", 10, FlashReduction},
      {4, "RAM planning", 30, RamPlanning},
      {5, "pruning correctness", 30, PruningCorrectness},
      {6, "INT8 executor fidelity", 60, Int8Fidelity},
      {7, "mapping soundness", 10, MappingSoundness},
      {8, "scheduling", 10, Scheduling},
      {9, "cost-model budget checks", 5, CostFixture},
      {10, "end-to-end determinism", 120, Determinism},
      {11, "hybrid accuracy", 5, HybridAccuracy},
  };
  Shared shared;
  int failed = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    std::string detail;
    bool ok = true;
    try {
      detail = c.run(shared);
    } catch (const std::exception& e) {
      ok = false;
      detail = e.what();
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (ok && secs > c.budget_s) {
      ok = false;
      detail += " (over the " + Num(c.budget_s) + " s budget)";
    }
    failed += !ok;
    std::printf("%s %2d %-26s %7.2fs  %s\n", ok ? "PASS" : "FAIL", c.number,
                c.name.c_str(), secs, detail.c_str());
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed,
              criteria.size());
  return failed;
}
