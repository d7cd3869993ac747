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

#include "orbitc/model_io.h"

#include <bit>
#include <cstring>
#include <fstream>
#include <set>

#include "json_util.h"

namespace orbitc {

using internal::Json;

namespace {

constexpr int kFormatVersion = 1;

void AppendLE32(std::vector<uint8_t>& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<uint8_t>(v >> (8 * i)));
}

uint32_t ReadLE32(const uint8_t* p) {
  return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
         (static_cast<uint32_t>(p[2]) << 16) |
         (static_cast<uint32_t>(p[3]) << 24);
}

void AppendData(std::vector<uint8_t>& out, const TensorData& data) {
  if (auto* f = std::get_if<std::vector<float>>(&data)) {
    for (float v : *f) AppendLE32(out, std::bit_cast<uint32_t>(v));
  } else if (auto* q = std::get_if<std::vector<int8_t>>(&data)) {
    for (int8_t v : *q) out.push_back(static_cast<uint8_t>(v));
  } else if (auto* w = std::get_if<std::vector<int32_t>>(&data)) {
    for (int32_t v : *w) AppendLE32(out, static_cast<uint32_t>(v));
  }
}

TensorData DecodeData(DType dtype, const uint8_t* p, int64_t count) {
  switch (dtype) {
    case DType::kFloat32: {
      std::vector<float> v(count);
      for (int64_t i = 0; i < count; ++i)
        v[i] = std::bit_cast<float>(ReadLE32(p + 4 * i));
      return v;
    }
    case DType::kInt8: {
      std::vector<int8_t> v(count);
      for (int64_t i = 0; i < count; ++i) v[i] = static_cast<int8_t>(p[i]);
      return v;
    }
    case DType::kInt32: {
      std::vector<int32_t> v(count);
      for (int64_t i = 0; i < count; ++i)
        v[i] = static_cast<int32_t>(ReadLE32(p + 4 * i));
      return v;
    }
  }
  return {};
}

std::filesystem::path BlobPathFor(const std::filesystem::path& manifest) {
  auto p = manifest;
  p.replace_extension(".bin");
  return p;
}

std::filesystem::path ManifestPathFor(const std::filesystem::path& path) {
  if (path.extension() == ".json") return path;
  auto p = path;
  p += ".json";
  return p;
}

std::vector<uint8_t> ReadBinary(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ModelFormatError(path.string() + ": cannot open blob");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void WriteBinary(const std::filesystem::path& path,
                 const std::vector<uint8_t>& bytes) {
  if (path.has_parent_path())
    std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(path.string() + ": cannot write file");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
}

Json QuantToJson(const QuantParams& q) {
  return Json{{"scales", q.scales},
              {"zero_points", q.zero_points},
              {"axis", q.axis},
              {"symmetric", q.symmetric}};
}

QuantParams QuantFromJson(const Json& j, const std::string& where) {
  using internal::Get;
  QuantParams q;
  q.scales = Get<std::vector<double>, ModelFormatError>(j, "scales", where);
  q.zero_points =
      Get<std::vector<int32_t>, ModelFormatError>(j, "zero_points", where);
  q.axis = internal::GetOr<int, ModelFormatError>(j, "axis", -1, where);
  q.symmetric =
      internal::GetOr<bool, ModelFormatError>(j, "symmetric", false, where);
  return q;
}

std::string_view PaddingName(Padding p) {
  return p == Padding::kSame ? "SAME" : "VALID";
}

Padding PaddingFromName(const std::string& s, const std::string& where) {
  if (s == "SAME") return Padding::kSame;
  if (s == "VALID") return Padding::kValid;
  throw ModelFormatError(where + ": unsupported padding '" + s + "'");
}

Json BlobEntryToJson(const BlobEntry& e) {
  return Json{{"id", e.id},
              {"dtype", std::string(DTypeName(e.dtype))},
              {"shape", e.shape},
              {"offset", e.offset},
              {"length", e.length}};
}

}  // namespace

WeightBlob ExportCheckpoint(const Graph& graph) {
  WeightBlob blob;
  for (const auto& [id, t] : graph.tensors) {
    if (!t.is_constant()) continue;
    BlobEntry e{id, t.dtype, t.shape, static_cast<int64_t>(blob.bytes.size()), 0};
    AppendData(blob.bytes, t.data);
    e.length = static_cast<int64_t>(blob.bytes.size()) - e.offset;
    blob.entries.push_back(std::move(e));
  }
  return blob;
}

Graph ImportCheckpoint(const Graph& graph, const WeightBlob& blob) {
  std::map<std::string, const BlobEntry*> by_id;
  for (const auto& e : blob.entries) {
    if (!graph.has_tensor(e.id) || !graph.tensor(e.id).is_constant())
      throw ModelFormatError("checkpoint tensor " + e.id +
                             " is not a constant of graph " + graph.name);
    by_id[e.id] = &e;
  }
  Graph out = graph;
  for (auto& [id, t] : out.tensors) {
    if (!t.is_constant()) continue;
    auto it = by_id.find(id);
    if (it == by_id.end())
      throw ModelFormatError("checkpoint is missing tensor " + id);
    const BlobEntry& e = *it->second;
    int64_t expected = NumElements(t.shape) * DTypeSize(t.dtype);
    if (e.dtype != t.dtype || e.shape != t.shape)
      throw ModelFormatError("checkpoint tensor " + id + " has dtype/shape " +
                             std::string(DTypeName(e.dtype)) +
                             ShapeToString(e.shape) + ", graph expects " +
                             std::string(DTypeName(t.dtype)) +
                             ShapeToString(t.shape));
    if (e.length != expected)
      throw ModelFormatError("checkpoint tensor " + id + " has " +
                             std::to_string(e.length) + " bytes, expected " +
                             std::to_string(expected));
    if (e.offset < 0 ||
        e.offset + e.length > static_cast<int64_t>(blob.bytes.size()))
      throw ModelFormatError("checkpoint tensor " + id +
                             " runs past the end of the blob");
  }
  for (auto& [id, t] : out.tensors) {
    if (!t.is_constant()) continue;
    const BlobEntry& e = *by_id.at(id);
    t.data = DecodeData(t.dtype, blob.bytes.data() + e.offset,
                        NumElements(t.shape));
  }
  return out;
}

void WriteCheckpoint(const WeightBlob& blob, const std::filesystem::path& path) {
  auto manifest = ManifestPathFor(path);
  Json index{{"format", "orbitc-checkpoint"},
             {"version", kFormatVersion},
             {"blob", BlobPathFor(manifest).filename().string()},
             {"tensors", Json::array()}};
  for (const auto& e : blob.entries) index["tensors"].push_back(BlobEntryToJson(e));
  internal::WriteJsonFile(manifest, index);
  WriteBinary(BlobPathFor(manifest), blob.bytes);
}

WeightBlob ReadCheckpoint(const std::filesystem::path& path) {
  auto manifest = ManifestPathFor(path);
  Json index = internal::ReadJsonFile<ModelFormatError>(manifest);
  const std::string where = manifest.string();
  WeightBlob blob;
  const Json& tensors =
      internal::Require<ModelFormatError>(index, "tensors", where);
  for (size_t i = 0; i < tensors.size(); ++i) {
    std::string loc = where + ": tensors[" + std::to_string(i) + "]";
    const Json& e = tensors[i];
    BlobEntry entry;
    entry.id = internal::Get<std::string, ModelFormatError>(e, "id", loc);
    entry.dtype = DTypeFromName(
        internal::Get<std::string, ModelFormatError>(e, "dtype", loc));
    entry.shape = internal::Get<Shape, ModelFormatError>(e, "shape", loc);
    entry.offset = internal::Get<int64_t, ModelFormatError>(e, "offset", loc);
    entry.length = internal::Get<int64_t, ModelFormatError>(e, "length", loc);
    blob.entries.push_back(std::move(entry));
  }
  auto blob_name =
      internal::Get<std::string, ModelFormatError>(index, "blob", where);
  blob.bytes = ReadBinary(manifest.parent_path() / blob_name);
  return blob;
}

std::string ManifestToString(const Graph& graph) {
  WeightBlob blob = ExportCheckpoint(graph);
  std::map<std::string, const BlobEntry*> entries;
  for (const auto& e : blob.entries) entries[e.id] = &e;

  Json j;
  j["format"] = "orbitc-model";
  j["version"] = kFormatVersion;
  j["name"] = graph.name;
  j["blob"] = graph.name + ".bin";
  j["inputs"] = graph.inputs;
  j["outputs"] = graph.outputs;
  j["tensors"] = Json::array();
  for (const auto& [id, t] : graph.tensors) {
    Json tj{{"id", id},
            {"shape", t.shape},
            {"dtype", std::string(DTypeName(t.dtype))},
            {"kind", std::string(TensorKindName(t.kind))}};
    if (t.quant) tj["quant"] = QuantToJson(*t.quant);
    if (auto it = entries.find(id); it != entries.end())
      tj["data"] = Json{{"offset", it->second->offset},
                        {"length", it->second->length}};
    j["tensors"].push_back(std::move(tj));
  }
  j["nodes"] = Json::array();
  for (const auto& n : graph.nodes) {
    Json nj{{"id", n.id},
            {"op", std::string(OpKindName(n.kind))},
            {"inputs", n.inputs},
            {"outputs", n.outputs},
            {"attrs",
             {{"kernel", {n.attrs.kernel_h, n.attrs.kernel_w}},
              {"stride", {n.attrs.stride_h, n.attrs.stride_w}},
              {"padding", std::string(PaddingName(n.attrs.padding))},
              {"axis", n.attrs.axis}}}};
    if (!n.requant.empty()) {
      Json rq = Json::array();
      for (const auto& m : n.requant) rq.push_back({m.significand, m.shift});
      nj["requant"] = std::move(rq);
    }
    j["nodes"].push_back(std::move(nj));
  }
  return j.dump(2) + "\n";
}

Graph ParseModel(const std::string& manifest, const std::vector<uint8_t>& blob,
                 const std::string& location) {
  using internal::Get;
  using internal::GetOr;
  using internal::Require;
  Json j;
  try {
    j = Json::parse(manifest);
  } catch (const Json::exception& e) {
    throw ModelFormatError(location + ": malformed manifest: " + e.what());
  }
  if (!j.is_object())
    throw ModelFormatError(location + ": manifest must be a JSON object");
  auto format = GetOr<std::string, ModelFormatError>(j, "format", "", location);
  if (format != "orbitc-model")
    throw ModelFormatError(location + ": not an orbitc model manifest");

  Graph g;
  g.name = Get<std::string, ModelFormatError>(j, "name", location);
  g.inputs = Get<std::vector<std::string>, ModelFormatError>(j, "inputs", location);
  g.outputs =
      Get<std::vector<std::string>, ModelFormatError>(j, "outputs", location);

  int64_t expected_blob = 0;
  const Json& tensors = Require<ModelFormatError>(j, "tensors", location);
  if (!tensors.is_array())
    throw ModelFormatError(location + ": tensors must be an array");
  for (size_t i = 0; i < tensors.size(); ++i) {
    const Json& tj = tensors[i];
    std::string loc = location + ": tensors[" + std::to_string(i) + "]";
    TensorSpec t;
    t.id = Get<std::string, ModelFormatError>(tj, "id", loc);
    loc += " (" + t.id + ")";
    t.shape = Get<Shape, ModelFormatError>(tj, "shape", loc);
    t.dtype = DTypeFromName(Get<std::string, ModelFormatError>(tj, "dtype", loc));
    t.kind =
        TensorKindFromName(Get<std::string, ModelFormatError>(tj, "kind", loc));
    if (tj.contains("quant")) t.quant = QuantFromJson(tj["quant"], loc + ".quant");
    if (t.is_constant()) {
      const Json& d = Require<ModelFormatError>(tj, "data", loc);
      auto offset = Get<int64_t, ModelFormatError>(d, "offset", loc + ".data");
      auto length = Get<int64_t, ModelFormatError>(d, "length", loc + ".data");
      int64_t want = NumElements(t.shape) * DTypeSize(t.dtype);
      if (length != want)
        throw ModelFormatError(loc + ": blob length mismatch (entry says " +
                               std::to_string(length) + " bytes, shape needs " +
                               std::to_string(want) + ")");
      if (offset < 0 || offset + length > static_cast<int64_t>(blob.size()))
        throw ModelFormatError(loc + ": blob length mismatch (blob has " +
                               std::to_string(blob.size()) +
                               " bytes, tensor needs [" +
                               std::to_string(offset) + ", " +
                               std::to_string(offset + length) + "))");
      t.data = DecodeData(t.dtype, blob.data() + offset, NumElements(t.shape));
      expected_blob += length;
    }
    if (g.tensors.count(t.id))
      throw ModelFormatError(loc + ": duplicate tensor id");
    g.tensors[t.id] = std::move(t);
  }
  if (expected_blob != static_cast<int64_t>(blob.size()))
    throw ModelFormatError(location + ": blob length mismatch (manifest covers " +
                           std::to_string(expected_blob) + " bytes, blob has " +
                           std::to_string(blob.size()) + ")");

  const Json& nodes = Require<ModelFormatError>(j, "nodes", location);
  if (!nodes.is_array())
    throw ModelFormatError(location + ": nodes must be an array");
  for (size_t i = 0; i < nodes.size(); ++i) {
    const Json& nj = nodes[i];
    std::string loc = location + ": nodes[" + std::to_string(i) + "]";
    OpNode n;
    n.id = Get<std::string, ModelFormatError>(nj, "id", loc);
    loc += " (" + n.id + ")";
    auto op = Get<std::string, ModelFormatError>(nj, "op", loc);
    auto kind = TryOpKindFromName(op);
    if (!kind)
      throw ModelFormatError(loc + ": unsupported op kind '" + op + "'");
    n.kind = *kind;
    n.inputs = Get<std::vector<std::string>, ModelFormatError>(nj, "inputs", loc);
    n.outputs =
        Get<std::vector<std::string>, ModelFormatError>(nj, "outputs", loc);
    if (nj.contains("attrs")) {
      const Json& a = nj["attrs"];
      std::string aloc = loc + ".attrs";
      auto kernel = GetOr<std::vector<int>, ModelFormatError>(a, "kernel", {1, 1}, aloc);
      auto stride = GetOr<std::vector<int>, ModelFormatError>(a, "stride", {1, 1}, aloc);
      if (kernel.size() != 2 || stride.size() != 2)
        throw ModelFormatError(aloc + ": kernel and stride need two entries");
      n.attrs.kernel_h = kernel[0];
      n.attrs.kernel_w = kernel[1];
      n.attrs.stride_h = stride[0];
      n.attrs.stride_w = stride[1];
      n.attrs.padding = PaddingFromName(
          GetOr<std::string, ModelFormatError>(a, "padding", "VALID", aloc), aloc);
      n.attrs.axis = GetOr<int, ModelFormatError>(a, "axis", -1, aloc);
    }
    if (nj.contains("requant")) {
      for (const auto& m : nj["requant"]) {
        if (!m.is_array() || m.size() != 2)
          throw ModelFormatError(loc + ".requant: entries are [significand, shift]");
        n.requant.push_back({m[0].get<int32_t>(), m[1].get<int32_t>()});
      }
    }
    g.nodes.push_back(std::move(n));
  }
  return g;
}

void SaveModel(const Graph& graph, const std::filesystem::path& path) {
  auto report = Validate(graph);
  if (!report.ok())
    throw GraphError("refusing to save invalid graph " + graph.name + ": " +
                     report.violations.front().message);
  auto manifest_path = ManifestPathFor(path);
  std::string manifest = ManifestToString(graph);
  // The manifest names its blob after the graph; keep the file name in sync
  // with the manifest path instead.
  Json j = Json::parse(manifest);
  j["blob"] = BlobPathFor(manifest_path).filename().string();
  internal::WriteJsonFile(manifest_path, j);
  WriteBinary(BlobPathFor(manifest_path), ExportCheckpoint(graph).bytes);
}

Graph LoadModel(const std::filesystem::path& path) {
  auto manifest_path = ManifestPathFor(path);
  std::string text;
  try {
    text = internal::ReadTextFile(manifest_path);
  } catch (const ConfigError& e) {
    throw ModelFormatError(e.what());
  }
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::exception& e) {
    throw ModelFormatError(manifest_path.string() + ": malformed manifest: " +
                           e.what());
  }
  auto blob_name = internal::GetOr<std::string, ModelFormatError>(
      j, "blob", BlobPathFor(manifest_path).filename().string(),
      manifest_path.string());
  auto blob = ReadBinary(manifest_path.parent_path() / blob_name);
  return ParseModel(text, blob, manifest_path.string());
}

}  // namespace orbitc
