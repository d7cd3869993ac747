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

#ifndef ORBITC_CLI_H_
#define ORBITC_CLI_H_

#include <ostream>
#include <string>
#include <vector>

namespace orbitc::cli {

// Entry point of the `orbitc` tool. `args` excludes the program name.
// Returns the process exit code; diagnostics go to `err` tagged with the
// subcommand.
int Main(const std::vector<std::string>& args, std::ostream& out,
         std::ostream& err);

}  // namespace orbitc::cli

#endif  // ORBITC_CLI_H_
