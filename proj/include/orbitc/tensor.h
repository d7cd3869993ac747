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

#ifndef ORBITC_TENSOR_H_
#define ORBITC_TENSOR_H_

#include <vector>

#include "orbitc/graph.h"

namespace orbitc {

// Host-side Float32 tensor exchanged with the interpreters.
struct Tensor {
  Shape shape;
  std::vector<float> data;

  bool operator==(const Tensor&) const = default;
};

}  // namespace orbitc

#endif  // ORBITC_TENSOR_H_
