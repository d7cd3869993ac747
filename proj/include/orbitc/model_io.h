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

#ifndef ORBITC_MODEL_IO_H_
#define ORBITC_MODEL_IO_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "orbitc/graph.h"

namespace orbitc {

// One constant tensor inside a weight blob.
struct BlobEntry {
  std::string id;
  DType dtype = DType::kFloat32;
  Shape shape;
  int64_t offset = 0;  // bytes
  int64_t length = 0;  // bytes
};

// Little-endian concatenation of every constant tensor, ordered by tensor
// id. Shared by model files and fine-tuning checkpoints.
struct WeightBlob {
  std::vector<BlobEntry> entries;
  std::vector<uint8_t> bytes;
};

WeightBlob ExportCheckpoint(const Graph& graph);

// Replaces constant data with the blob's contents. The blob must list the
// graph's constant tensors exactly (same ids, dtypes, shapes); otherwise a
// ModelFormatError names the first mismatching tensor.
Graph ImportCheckpoint(const Graph& graph, const WeightBlob& blob);

// `<stem>.json` index + `<stem>.bin` payload.
void WriteCheckpoint(const WeightBlob& blob, const std::filesystem::path& path);
WeightBlob ReadCheckpoint(const std::filesystem::path& path);

// `path` names the manifest (`<name>.json`); the blob is written next to it
// as `<name>.bin`. Refuses graphs that fail Validate.
void SaveModel(const Graph& graph, const std::filesystem::path& path);
Graph LoadModel(const std::filesystem::path& path);

// Manifest text without touching the filesystem; blob offsets refer to
// ExportCheckpoint(graph).
std::string ManifestToString(const Graph& graph);
Graph ParseModel(const std::string& manifest, const std::vector<uint8_t>& blob,
                 const std::string& location = "manifest");

}  // namespace orbitc

#endif  // ORBITC_MODEL_IO_H_
