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

#include "orbitc/dataset.h"

#include <bit>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <algorithm>
#include <sstream>

#include "orbitc/status.h"

namespace orbitc {

Rng::Rng(uint64_t seed) : state_(seed) {}

// SplitMix64: tiny, portable and well distributed for this purpose.
uint64_t Rng::NextU64() {
  uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

double Rng::Uniform() {
  return static_cast<double>(NextU64() >> 11) * 0x1.0p-53;
}

double Rng::Normal() {
  double u1 = Uniform();
  double u2 = Uniform();
  if (u1 < 1e-300) u1 = 1e-300;
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * std::numbers::pi * u2);
}

uint64_t Rng::Below(uint64_t bound) {
  // Rejection sampling keeps the result unbiased.
  uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
  uint64_t v;
  do {
    v = NextU64();
  } while (v >= limit);
  return v % bound;
}

std::vector<size_t> SampleIndices(size_t population, size_t count,
                                  uint64_t seed) {
  if (count > population) count = population;
  std::vector<size_t> idx(population);
  for (size_t i = 0; i < population; ++i) idx[i] = i;
  Rng rng(seed);
  for (size_t i = 0; i < count; ++i) {
    size_t j = i + static_cast<size_t>(rng.Below(population - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(count);
  std::sort(idx.begin(), idx.end());
  return idx;
}

Dataset MakeSyntheticDataset(const SyntheticDatasetSpec& spec) {
  if (spec.num_samples <= 0 || spec.num_classes <= 0)
    throw ConfigError("synthetic dataset needs positive sample/class counts");
  Rng rng(spec.seed);
  const double two_pi = 2.0 * std::numbers::pi;
  const double radius = 0.3 * std::min(spec.height, spec.width);
  Dataset ds;
  ds.samples.reserve(spec.num_samples);
  for (int i = 0; i < spec.num_samples; ++i) {
    const int label = i % spec.num_classes;
    const double angle = two_pi * label / spec.num_classes;
    const double cx = spec.width / 2.0 + radius * std::cos(angle) +
                      spec.jitter * (2.0 * rng.Uniform() - 1.0);
    const double cy = spec.height / 2.0 + radius * std::sin(angle) +
                      spec.jitter * (2.0 * rng.Uniform() - 1.0);
    Sample s;
    char name[32];
    std::snprintf(name, sizeof(name), "s%05d", i);
    s.id = name;
    s.label = label;
    s.input.shape = {1, spec.height, spec.width, spec.channels};
    s.input.data.resize(static_cast<size_t>(spec.height) * spec.width *
                        spec.channels);
    size_t p = 0;
    for (int y = 0; y < spec.height; ++y) {
      for (int x = 0; x < spec.width; ++x) {
        const double d2 = (x - cx) * (x - cx) + (y - cy) * (y - cy);
        const double blob = std::exp(-d2 / (2.0 * spec.blob_sigma * spec.blob_sigma));
        for (int c = 0; c < spec.channels; ++c) {
          const double color =
              0.6 + 0.4 * std::cos(two_pi * (static_cast<double>(label) /
                                                 spec.num_classes +
                                             static_cast<double>(c) / 3.0));
          s.input.data[p++] = static_cast<float>(
              blob * color + spec.noise_stddev * rng.Normal());
        }
      }
    }
    ds.samples.push_back(std::move(s));
  }
  return ds;
}

namespace {

std::vector<std::string> SplitCsvLine(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  fields.push_back(cur);
  return fields;
}

}  // namespace

Dataset LoadDataset(const std::filesystem::path& dir, const Shape& shape) {
  const auto index_path = dir / "index.csv";
  std::ifstream in(index_path);
  if (!in) throw ConfigError(index_path.string() + ": cannot open dataset index");
  std::string line;
  std::getline(in, line);
  if (SplitCsvLine(line) != std::vector<std::string>{"sample_id", "file", "label"})
    throw ConfigError(index_path.string() +
                      ": header must be 'sample_id,file,label'");
  const int64_t elements = NumElements(shape);
  Dataset ds;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    auto fields = SplitCsvLine(line);
    const std::string where = index_path.string() + ":" + std::to_string(line_no);
    if (fields.size() != 3) throw ConfigError(where + ": expected 3 columns");
    Sample s;
    s.id = fields[0];
    try {
      s.label = std::stoi(fields[2]);
    } catch (const std::exception&) {
      throw ConfigError(where + ": bad label '" + fields[2] + "'");
    }
    std::ifstream f(dir / fields[1], std::ios::binary);
    if (!f) throw ConfigError(where + ": cannot open " + fields[1]);
    std::vector<char> bytes{std::istreambuf_iterator<char>(f),
                            std::istreambuf_iterator<char>()};
    if (static_cast<int64_t>(bytes.size()) != elements * 4)
      throw ConfigError(where + ": " + fields[1] + " holds " +
                        std::to_string(bytes.size()) + " bytes, expected " +
                        std::to_string(elements * 4));
    s.input.shape = shape;
    s.input.data.resize(elements);
    for (int64_t i = 0; i < elements; ++i) {
      uint32_t v = 0;
      for (int b = 0; b < 4; ++b)
        v |= static_cast<uint32_t>(static_cast<uint8_t>(bytes[4 * i + b])) << (8 * b);
      s.input.data[i] = std::bit_cast<float>(v);
    }
    ds.samples.push_back(std::move(s));
  }
  return ds;
}

void SaveDataset(const Dataset& dataset, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::ofstream index(dir / "index.csv", std::ios::binary);
  if (!index) throw Error((dir / "index.csv").string() + ": cannot write");
  index << "sample_id,file,label\n";
  for (const auto& s : dataset.samples) {
    const std::string file = s.id + ".f32";
    index << s.id << "," << file << "," << s.label << "\n";
    std::ofstream out(dir / file, std::ios::binary);
    if (!out) throw Error((dir / file).string() + ": cannot write");
    for (float v : s.input.data) {
      uint32_t u = std::bit_cast<uint32_t>(v);
      char b[4] = {static_cast<char>(u), static_cast<char>(u >> 8),
                   static_cast<char>(u >> 16), static_cast<char>(u >> 24)};
      out.write(b, 4);
    }
  }
}

}  // namespace orbitc
