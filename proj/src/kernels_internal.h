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

// Kernels shared between the float and integer interpreters.

#ifndef ORBITC_SRC_KERNELS_INTERNAL_H_
#define ORBITC_SRC_KERNELS_INTERNAL_H_

#include "orbitc/tensor.h"

namespace orbitc {

// Numerically stable softmax over the last axis, accumulated in double.
void SoftmaxF32(const Tensor& in, Tensor& out);

}  // namespace orbitc

#endif  // ORBITC_SRC_KERNELS_INTERNAL_H_
