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

#ifndef ORBITC_DATASET_H_
#define ORBITC_DATASET_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "orbitc/tensor.h"

namespace orbitc {

struct Sample {
  std::string id;
  Tensor input;
  int label = 0;
};

struct Dataset {
  std::vector<Sample> samples;
};

// On disk: `<dir>/index.csv` with header `sample_id,file,label` and one raw
// little-endian Float32 file per sample. The expected shape comes from the
// model input; element counts are checked.
Dataset LoadDataset(const std::filesystem::path& dir, const Shape& shape);
void SaveDataset(const Dataset& dataset, const std::filesystem::path& dir);

struct SyntheticDatasetSpec {
  int num_samples = 200;
  int num_classes = 10;
  int height = 32;
  int width = 32;
  int channels = 3;
  uint64_t seed = 1;
  double noise_stddev = 0.35;
  double blob_sigma = 4.0;
  double jitter = 3.0;  // max blob-centre offset in pixels
};

// Class-structured Gaussian-blob images: class k places a coloured blob
// around a class-specific centre, plus i.i.d. Gaussian pixel noise. Labels
// cycle through the classes. Bit-identical across platforms for a seed.
Dataset MakeSyntheticDataset(const SyntheticDatasetSpec& spec);

// Portable seeded helpers (std distributions are implementation-defined).
class Rng {
 public:
  explicit Rng(uint64_t seed);
  uint64_t NextU64();
  double Uniform();  // [0, 1)
  double Normal();   // Box-Muller, standard normal
  uint64_t Below(uint64_t bound);

 private:
  uint64_t state_;
};

// `count` distinct indices from [0, population) chosen by a seeded partial
// Fisher-Yates shuffle, returned in ascending order.
std::vector<size_t> SampleIndices(size_t population, size_t count,
                                  uint64_t seed);

}  // namespace orbitc

#endif  // ORBITC_DATASET_H_
