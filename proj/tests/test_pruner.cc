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

#include <doctest.h>

#include <cmath>
#include <cstring>
#include <sstream>

#include "orbitc/cli.h"
#include "orbitc/executor.h"
#include "orbitc/graph_builder.h"
#include "json_util.h"
#include "orbitc/model_io.h"
#include "orbitc/pruner.h"
#include "test_util.h"

namespace orbitc {
namespace {

using testing::RandomTensor;
using testing::RandomValues;

// x -> conv(c1) -> relu -> maxpool -> dw -> relu -> conv(c2) -> relu ->
// flatten -> fc(f1) -> relu -> fc(out) -> softmax
Graph ChainNet(uint64_t seed, int c1 = 8, int c2 = 16) {
  Rng rng(seed);
  GraphBuilder b("chain");
  auto x = b.Input("x", {1, 8, 8, 3});
  x = b.Conv2D(x, {c1, 3, 3, 3}, RandomValues(rng, c1 * 27, -1, 1),
               RandomValues(rng, c1, -0.2, 0.2), 1, Padding::kSame, "c1");
  x = b.ReLU(x, "r1");
  x = b.MaxPool(x, 2, 2, Padding::kValid, "p1");
  x = b.DepthwiseConv2D(x, {1, 3, 3, c1}, RandomValues(rng, 9 * c1, -1, 1),
                        RandomValues(rng, c1, -0.2, 0.2), 1, Padding::kSame, "dw");
  x = b.ReLU(x, "r2");
  x = b.Conv2D(x, {c2, 1, 1, c1}, RandomValues(rng, c2 * c1, -1, 1),
               RandomValues(rng, c2, -0.2, 0.2), 1, Padding::kValid, "c2");
  x = b.ReLU(x, "r3");
  x = b.Flatten(x, "flat");
  x = b.FullyConnected(x, {12, 16 * c2}, RandomValues(rng, 12 * 16 * c2, -0.3, 0.3),
                       RandomValues(rng, 12, -0.2, 0.2), "f1");
  x = b.ReLU(x, "r4");
  x = b.FullyConnected(x, {5, 12}, RandomValues(rng, 60, -1, 1), {}, "out");
  b.MarkOutput(b.Softmax(x, "probs"));
  return b.Build();
}

TensorSpec Filters(const Shape& shape, std::vector<float> data) {
  TensorSpec t;
  t.id = "w";
  t.kind = TensorKind::kWeight;
  t.shape = shape;
  t.data = std::move(data);
  return t;
}

// Single conv layer with `filters` outputs, feeding a second conv so it is
// prunable.
Graph WideLayer(int filters, uint64_t seed) {
  Rng rng(seed);
  GraphBuilder b("wide");
  auto x = b.Input("x", {1, 4, 4, 2});
  x = b.Conv2D(x, {filters, 1, 1, 2}, RandomValues(rng, filters * 2, -1, 1), {},
               1, Padding::kValid, "wide");
  x = b.ReLU(x, "r");
  x = b.Conv2D(x, {3, 1, 1, filters}, RandomValues(rng, 3 * filters, -1, 1), {},
               1, Padding::kValid, "head");
  b.MarkOutput(x);
  return b.Build();
}

TEST_SUITE("pruner") {

TEST_CASE("filter norms") {
  CHECK(FilterL2Norms(Filters({1, 2}, {3, 4}))[0] == 5.0);
  CHECK(FilterL2Norms(Filters({2, 2}, {0, 0, 1, 1}))[0] == 0.0);
  auto norms = FilterL2Norms(Filters({3, 1}, {5, 0, -1}));
  CHECK(norms == std::vector<double>{5.0, 0.0, 1.0});
}

TEST_CASE("lowest norm is removed first") {
  GraphBuilder b("argmin");
  auto x = b.Input("x", {1, 1, 1, 1});
  // Ten filters so that floor(0.10 * 10) removes exactly one.
  std::vector<float> w{5, 0, 1, 2, 3, 4, 6, 7, 8, 9};
  x = b.Conv2D(x, {10, 1, 1, 1}, w, {}, 1, Padding::kValid, "c");
  x = b.Conv2D(x, {2, 1, 1, 10}, std::vector<float>(20, 1.0f), {}, 1,
               Padding::kValid, "h");
  b.MarkOutput(x);
  auto plan = BuildPrunePlan(b.Build(), {0.10});
  CHECK(plan.stages[0].at("c") == std::vector<int>{1});
}

TEST_CASE("ties go to the lower index") {
  GraphBuilder b("ties");
  auto x = b.Input("x", {1, 1, 1, 1});
  x = b.Conv2D(x, {10, 1, 1, 1}, std::vector<float>(10, 1.0f), {}, 1,
               Padding::kValid, "c");
  x = b.Conv2D(x, {2, 1, 1, 10}, std::vector<float>(20, 1.0f), {}, 1,
               Padding::kValid, "h");
  b.MarkOutput(x);
  auto plan = BuildPrunePlan(b.Build(), {0.2, 0.1});
  CHECK(plan.stages[0].at("c") == std::vector<int>{0, 1});
  CHECK(plan.stages[1].at("c") == std::vector<int>{2});
}

TEST_CASE("stage counts use the original filter count") {
  auto plan = BuildPrunePlan(WideLayer(40, 1), {0.10, 0.05, 0.05});
  REQUIRE(plan.stages.size() == 3);
  CHECK(plan.stages[0].at("wide").size() == 4);
  CHECK(plan.stages[1].at("wide").size() == 2);
  CHECK(plan.stages[2].at("wide").size() == 2);
  CHECK(plan.removed_count("wide") == 8);
  CHECK(Materialize(ApplyMasks(WideLayer(40, 1), plan), plan)
            .tensor("wide_w").shape[0] == 32);

  auto small = BuildPrunePlan(WideLayer(10, 2), {0.10, 0.05, 0.05});
  CHECK(small.removed_count("wide") == 1);
  const auto s1 = small.stages[1].find("wide");
  CHECK((s1 == small.stages[1].end() || s1->second.empty()));
}

TEST_CASE("schedules that are invalid are rejected") {
  Graph g = WideLayer(10, 3);
  CHECK_THROWS_AS(NewPrunePlan(g, {0.0}), ConfigError);
  CHECK_THROWS_AS(NewPrunePlan(g, {1.2}), ConfigError);
  CHECK_THROWS_AS(NewPrunePlan(g, {0.5, 0.5}), ConfigError);
}

TEST_CASE("exclusions cover residual adds and the classifier") {
  Rng rng(4);
  GraphBuilder b("res");
  auto x = b.Input("x", {1, 4, 4, 4});
  auto a = b.Conv2D(x, {4, 1, 1, 4}, RandomValues(rng, 16, -1, 1), {}, 1,
                    Padding::kValid, "a");
  auto s = b.Add(a, x, "sum");
  auto f = b.Flatten(s, "flat");
  auto fc = b.FullyConnected(f, {3, 64}, RandomValues(rng, 192, -1, 1), {}, "fc");
  b.MarkOutput(b.Softmax(fc, "p"));
  auto layers = AnalyzePrunableLayers(b.Build());
  REQUIRE(layers.size() == 2);
  CHECK_FALSE(layers[0].prunable);
  CHECK(layers[0].exclusion.find("Add") != std::string::npos);
  CHECK_FALSE(layers[1].prunable);
  CHECK(RankFilters(b.Build()).empty());
}

TEST_CASE("propagation follows depthwise and flatten") {
  auto layers = AnalyzePrunableLayers(ChainNet(1));
  REQUIRE(layers.size() == 4);
  CHECK(layers[0].layer_id == "c1");
  CHECK(layers[0].depthwise == std::vector<std::string>{"dw"});
  REQUIRE(layers[0].consumers.size() == 1);
  CHECK(layers[0].consumers[0].node_id == "c2");
  CHECK(layers[1].consumers[0].node_id == "f1");
  CHECK(layers[1].consumers[0].spatial == 16);
  CHECK(layers[2].prunable);
  CHECK_FALSE(layers[3].prunable);
}

TEST_CASE("stages are disjoint and remove the weakest survivors") {
  for (uint64_t seed = 1; seed <= 20; ++seed) {
    Graph g = ChainNet(seed, 20, 20);
    auto plan = BuildPrunePlan(g, {0.10, 0.05, 0.05});
    for (const auto& layer : AnalyzePrunableLayers(g)) {
      if (!layer.prunable) continue;
      const auto norms = FilterL2Norms(g.tensor(layer.layer_id + "_w"));
      std::vector<bool> gone(norms.size(), false);
      for (const auto& stage : plan.stages) {
        auto it = stage.find(layer.layer_id);
        if (it == stage.end()) continue;
        double max_removed = 0;
        for (int i : it->second) {
          REQUIRE_FALSE(gone[i]);
          max_removed = std::max(max_removed, norms[i]);
        }
        for (int i : it->second) gone[i] = true;
        for (size_t i = 0; i < norms.size(); ++i)
          if (!gone[i]) CHECK(max_removed <= norms[i]);
      }
      CHECK(std::count(gone.begin(), gone.end(), false) > 0);
      const auto& mask = plan.masks.at(layer.layer_id);
      for (size_t i = 0; i < gone.size(); ++i) CHECK(mask[i] == !gone[i]);
    }
  }
}

TEST_CASE("masked and materialized graphs agree") {
  for (uint64_t seed = 1; seed <= 5; ++seed) {
    Graph g = ChainNet(seed, 8, 16);
    auto plan = NewPrunePlan(g, {0.25, 0.25});
    plan = NextPruneStage(g, plan);
    plan = NextPruneStage(ApplyMasks(g, plan), plan);
    Graph masked = ApplyMasks(g, plan);
    Graph small = Materialize(masked, plan);
    REQUIRE(Validate(small).ok());
    Rng rng(seed);
    for (int i = 0; i < 20; ++i) {
      auto in = RandomTensor({1, 8, 8, 3}, rng, -1, 1);
      auto tm = RunF32Trace(masked, in).at("out").data;
      auto ts = RunF32Trace(small, in).at("out").data;
      REQUIRE(tm.size() == ts.size());
      for (size_t k = 0; k < tm.size(); ++k) CHECK(std::abs(tm[k] - ts[k]) <= 1e-5);
    }
  }
}

TEST_CASE("consumer weights are sliced along the input axis") {
  Graph g = ChainNet(7, 8, 16);
  auto plan = NewPrunePlan(g, {0.25});
  plan.stages.push_back({{"c1", {2, 5}}});
  plan.masks["c1"][2] = false;
  plan.masks["c1"][5] = false;
  Graph small = Materialize(ApplyMasks(g, plan), plan);
  CHECK(small.tensor("c1_w").shape == Shape{6, 3, 3, 3});
  CHECK(small.tensor("dw_w").shape == Shape{1, 3, 3, 6});
  CHECK(small.tensor("c2_w").shape == Shape{16, 1, 1, 6});
  // Kept column j of c2 is original column keep[j].
  const std::vector<int> keep{0, 1, 3, 4, 6, 7};
  const auto& before = g.tensor("c2_w").f32();
  const auto& after = small.tensor("c2_w").f32();
  for (int o = 0; o < 16; ++o)
    for (int j = 0; j < 6; ++j) CHECK(after[o * 6 + j] == before[o * 8 + keep[j]]);
}

TEST_CASE("masking zeroes exactly the removed filter") {
  Graph g = WideLayer(3, 5);
  auto plan = NewPrunePlan(g, {0.4});
  plan.stages.push_back({{"wide", {1}}});
  plan.masks["wide"][1] = false;
  Graph m = ApplyMasks(g, plan);
  const auto& w0 = g.tensor("wide_w").f32();
  const auto& w1 = m.tensor("wide_w").f32();
  for (int f = 0; f < 3; ++f)
    for (int k = 0; k < 2; ++k)
      CHECK(w1[f * 2 + k] == (f == 1 ? 0.0f : w0[f * 2 + k]));
}

TEST_CASE("empty plans are identities") {
  Graph g = ChainNet(8);
  auto plan = NewPrunePlan(g, {0.1});
  CHECK(ApplyMasks(g, plan) == g);
  CHECK(Materialize(g, plan) == g);
}

TEST_CASE("pruning keeps topology and shrinks parameters") {
  for (uint64_t seed = 1; seed <= 5; ++seed) {
    Graph g = ChainNet(seed, 20, 20);
    auto plan = BuildPrunePlan(g, {0.10, 0.05, 0.05});
    Graph small = Materialize(ApplyMasks(g, plan), plan);
    REQUIRE(Validate(small).ok());
    CHECK_NOTHROW(InferShapes(small));
    REQUIRE(small.nodes.size() == g.nodes.size());
    for (size_t i = 0; i < g.nodes.size(); ++i) {
      CHECK(small.nodes[i].kind == g.nodes[i].kind);
      CHECK(small.nodes[i].inputs == g.nodes[i].inputs);
      CHECK(small.nodes[i].outputs == g.nodes[i].outputs);
    }
    CHECK(CountParameters(small) < CountParameters(g));
  }
}

TEST_CASE("bundled models prune and stay valid") {
  for (const char* name : {"desk_convnet", "desk_dsnet"}) {
    Graph g = testing::LoadBundled(name);
    auto plan = BuildPrunePlan(g, {0.10, 0.05, 0.05});
    Graph small = Materialize(ApplyMasks(g, plan), plan);
    CHECK(Validate(small).ok());
    CHECK(CountParameters(small) < CountParameters(g));
  }
}

TEST_CASE("plans serialize losslessly") {
  auto plan = BuildPrunePlan(ChainNet(9, 20, 20), {0.10, 0.05, 0.05});
  const auto text = PrunePlanToJson(plan);
  auto back = PrunePlanFromJson(text);
  CHECK(PrunePlanToJson(back) == text);
  CHECK(back.masks == plan.masks);
  CHECK(back.stages == plan.stages);
  CHECK_THROWS_AS(PrunePlanFromJson("{"), ConfigError);
}

TEST_CASE("staged command line stages reproduce the full plan") {
  testing::TempDir dir("prune_stage");
  Graph g = ChainNet(10, 20, 20);
  SaveModel(g, dir / "model.json");
  std::ostringstream out, err;
  const std::string plan = (dir / "plan.json").string();
  for (int stage = 1; stage <= 3; ++stage) {
    const auto stage_dir = dir / ("s" + std::to_string(stage));
    std::filesystem::create_directories(stage_dir);
    const std::string model = stage == 1 ? (dir / "model.json").string()
                                         : (dir / ("s" + std::to_string(stage - 1)) /
                                            "model.json").string();
    std::vector<std::string> args{"prune-stage", "--model", model, "--plan",
                                  plan, "--out", stage_dir.string(),
                                  "--stage", std::to_string(stage)};
    if (stage == 1) {
      args.push_back("--schedule");
      args.push_back("0.10,0.05,0.05");
    }
    REQUIRE(cli::Main(args, out, err) == 0);
    std::filesystem::copy_file(stage_dir / "plan.json", plan,
                               std::filesystem::copy_options::overwrite_existing);
  }
  CHECK(internal::ReadTextFile(plan) ==
        PrunePlanToJson(BuildPrunePlan(g, {0.10, 0.05, 0.05})));
  CHECK(std::filesystem::exists(dir / "s3" / "pruned.json"));
  // Asking for the wrong stage is refused.
  CHECK(cli::Main({"prune-stage", "--model", (dir / "model.json").string(),
                   "--plan", plan, "--out", (dir / "s3").string(), "--stage", "2"},
                  out, err) == 1);
}

}  // TEST_SUITE

TEST_SUITE("checkpoint") {

TEST_CASE("export then import is the identity") {
  Graph g = ChainNet(11);
  CHECK(ImportCheckpoint(g, ExportCheckpoint(g)) == g);
  testing::TempDir dir("ckpt");
  WriteCheckpoint(ExportCheckpoint(g), dir / "ck");
  CHECK(ImportCheckpoint(g, ReadCheckpoint(dir / "ck")) == g);
}

TEST_CASE("a wrong-length tensor is named") {
  Graph g = ChainNet(12);
  auto blob = ExportCheckpoint(g);
  for (auto& e : blob.entries)
    if (e.id == "dw_w") e.shape = {1, 3, 3, 7};
  try {
    ImportCheckpoint(g, blob);
    FAIL("expected ModelFormatError");
  } catch (const ModelFormatError& e) {
    CHECK(std::string(e.what()).find("dw_w") != std::string::npos);
  }
}

TEST_CASE("scaled weights show up in the float run") {
  Rng rng(13);
  GraphBuilder b("lin");
  auto x = b.Input("x", {1, 6});
  b.MarkOutput(b.FullyConnected(x, {4, 6}, RandomValues(rng, 24, -1, 1), {}, "fc"));
  Graph g = b.Build();
  auto blob = ExportCheckpoint(g);
  for (const auto& e : blob.entries) {
    if (e.id != "fc_w") continue;
    for (int64_t off = e.offset; off < e.offset + e.length; off += 4) {
      float v;
      std::memcpy(&v, &blob.bytes[off], 4);
      v *= 2.0f;
      std::memcpy(&blob.bytes[off], &v, 4);
    }
  }
  Graph scaled = ImportCheckpoint(g, blob);
  auto in = RandomTensor({1, 6}, rng, -1, 1);
  auto a = RunF32(g, in)[0].data;
  auto c = RunF32(scaled, in)[0].data;
  for (size_t i = 0; i < a.size(); ++i) CHECK(c[i] == doctest::Approx(2 * a[i]));
}

}  // TEST_SUITE

}  // namespace
}  // namespace orbitc
