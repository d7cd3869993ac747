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

#ifndef ORBITC_TESTS_TEST_UTIL_H_
#define ORBITC_TESTS_TEST_UTIL_H_

#include <unistd.h>

#include <filesystem>
#include <string>
#include <vector>

#include "orbitc/dataset.h"
#include "orbitc/executor.h"
#include "orbitc/graph.h"
#include "orbitc/graph_builder.h"
#include "orbitc/pipeline.h"
#include "orbitc/quantizer.h"
#include "orbitc/tensor.h"

namespace orbitc::testing {

inline std::filesystem::path SourcePath(const std::string& relative) {
  return std::filesystem::path(ORBITC_SOURCE_DIR) / relative;
}

inline std::vector<float> RandomValues(Rng& rng, size_t n, double lo,
                                       double hi) {
  std::vector<float> v(n);
  for (auto& x : v) x = static_cast<float>(lo + (hi - lo) * rng.Uniform());
  return v;
}

inline Tensor RandomTensor(const Shape& shape, Rng& rng, double lo = -1.0,
                           double hi = 1.0) {
  Tensor t;
  t.shape = shape;
  t.data = RandomValues(rng, static_cast<size_t>(NumElements(shape)), lo, hi);
  return t;
}

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    path_ = std::filesystem::temp_directory_path() /
            ("orbitc_test_" + tag + "_" + std::to_string(::getpid()));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const {
    return path_ / name;
  }

 private:
  std::filesystem::path path_;
};

// input (1,8,8,3) -> Conv 3x3 SAME 4 filters -> ReLU -> Flatten -> FC 10 ->
// Softmax, random weights.
inline Graph SmallClassifier(uint64_t seed) {
  Rng rng(seed);
  GraphBuilder b("small");
  auto x = b.Input("input", {1, 8, 8, 3});
  x = b.Conv2D(x, {4, 3, 3, 3}, RandomValues(rng, 108, -0.5, 0.5),
               RandomValues(rng, 4, -0.1, 0.1), 1, Padding::kSame, "conv");
  x = b.ReLU(x, "relu");
  x = b.Flatten(x, "flatten");
  x = b.FullyConnected(x, {10, 256}, RandomValues(rng, 2560, -0.2, 0.2),
                       RandomValues(rng, 10, -0.1, 0.1), "fc");
  x = b.Softmax(x, "probs");
  b.MarkOutput(x);
  return b.Build();
}

inline std::vector<Tensor> RandomInputs(const Graph& g, int count,
                                        uint64_t seed, double lo = -1.0,
                                        double hi = 1.0) {
  Rng rng(seed);
  std::vector<Tensor> inputs;
  for (int i = 0; i < count; ++i)
    inputs.push_back(RandomTensor(g.tensor(g.inputs[0]).shape, rng, lo, hi));
  return inputs;
}

inline Graph QuantizeWithRandomCalibration(const Graph& g, int count,
                                           uint64_t seed) {
  auto inputs = RandomInputs(g, count, seed);
  return QuantizeGraph(g, Calibrate(g, inputs));
}

inline Graph LoadBundled(const std::string& name) {
  return LoadCheckedModel(SourcePath("models/" + name + ".json"));
}

inline Dataset BundledDataset() { return MakeSyntheticDataset({}); }

inline Graph QuantizeBundled(const Graph& g, const Dataset& ds) {
  return QuantizeGraph(g, Calibrate(g, CalibrationInputs(ds, 64, 1)));
}

}  // namespace orbitc::testing

#endif  // ORBITC_TESTS_TEST_UTIL_H_
