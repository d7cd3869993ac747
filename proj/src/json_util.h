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

// Small helpers shared by the JSON readers. Internal to the library.

#ifndef ORBITC_SRC_JSON_UTIL_H_
#define ORBITC_SRC_JSON_UTIL_H_

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "orbitc/status.h"

namespace orbitc::internal {

using Json = nlohmann::json;

template <typename E = ConfigError>
const Json& Require(const Json& j, const std::string& key,
                    const std::string& where) {
  if (!j.is_object() || !j.contains(key))
    throw E(where + ": missing field '" + key + "'");
  return j.at(key);
}

template <typename T, typename E = ConfigError>
T Get(const Json& j, const std::string& key, const std::string& where) {
  const Json& v = Require<E>(j, key, where);
  try {
    return v.get<T>();
  } catch (const Json::exception& e) {
    throw E(where + "." + key + ": " + e.what());
  }
}

template <typename T, typename E = ConfigError>
T GetOr(const Json& j, const std::string& key, T fallback,
        const std::string& where) {
  if (!j.is_object() || !j.contains(key)) return fallback;
  return Get<T, E>(j, key, where);
}

template <typename E = ConfigError>
Json ReadJsonFile(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw E(path.string() + ": cannot open file");
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    throw E(path.string() + ": malformed JSON: " + e.what());
  }
}

// Pretty-printed with a trailing newline; stable key order.
void WriteTextFile(const std::filesystem::path& path, const std::string& text);
void WriteJsonFile(const std::filesystem::path& path, const Json& j);
std::string ReadTextFile(const std::filesystem::path& path);

}  // namespace orbitc::internal

#endif  // ORBITC_SRC_JSON_UTIL_H_
