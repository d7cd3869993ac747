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

#ifndef ORBITC_DOWNLINK_H_
#define ORBITC_DOWNLINK_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "orbitc/executor.h"

namespace orbitc {

inline constexpr double kBytesPerKB = 1e3;
inline constexpr double kBytesPerMB = 1e6;

struct LinkBudget {
  std::string name = "s-band";
  double data_rate_bps = 256'000.0;
  int passes_per_day = 4;
  double pass_duration_s = 600.0;
};

// Throws ConfigError unless every field is > 0.
void ValidateLink(const LinkBudget& link, const std::string& where = "link");
// rate * duration * passes / 8.
double DailyBudgetBytes(const LinkBudget& link);
LinkBudget LinkFromJson(const std::string& text,
                        const std::string& where = "link");
LinkBudget LoadLinkBudget(const std::filesystem::path& path);
std::string LinkToJson(const LinkBudget& link);

struct DownlinkScenario {
  int64_t num_samples = 0;
  double bytes_per_sample = 0.0;
  double threshold = 0.95;
  std::vector<InferenceRecord> onboard_records;
  // Reference model on the same samples; absent disables hybrid accuracy.
  std::optional<std::vector<InferenceRecord>> ground_records;
};

struct DownlinkReport {
  int64_t num_samples = 0;
  double bytes_per_sample = 0.0;
  double threshold = 0.0;
  double full_volume_bytes = 0.0;
  int64_t transmitted_count = 0;
  double transmitted_volume_bytes = 0.0;
  double transmitted_fraction_pct = 0.0;
  double reduction_pct = 0.0;
  double daily_budget_bytes = 0.0;
  bool fits_daily_budget = false;
  double onboard_accuracy = 0.0;
  std::optional<double> hybrid_accuracy;
};

// A sample is transmitted when its onboard confidence is strictly below the
// threshold. Hybrid accuracy counts onboard hits among kept samples plus
// ground hits among transmitted ones, over all samples. Throws ConfigError
// for a threshold outside (0, 1], a record count other than num_samples,
// duplicate ids, or ground records covering different samples.
DownlinkReport Simulate(const DownlinkScenario& scenario,
                        const LinkBudget& link);

std::string DownlinkReportToJson(const DownlinkReport& report);
std::string DownlinkSummary(const DownlinkReport& report);

}  // namespace orbitc

#endif  // ORBITC_DOWNLINK_H_
