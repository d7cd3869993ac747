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

#include "orbitc/downlink.h"

#include <cmath>
#include <cstdio>
#include <map>

#include "json_util.h"

namespace orbitc {

void ValidateLink(const LinkBudget& link, const std::string& where) {
  if (!(link.data_rate_bps > 0.0) || !std::isfinite(link.data_rate_bps))
    throw ConfigError(where + ".data_rate_bps: must be > 0");
  if (link.passes_per_day <= 0)
    throw ConfigError(where + ".passes_per_day: must be > 0");
  if (!(link.pass_duration_s > 0.0) || !std::isfinite(link.pass_duration_s))
    throw ConfigError(where + ".pass_duration_s: must be > 0");
}

double DailyBudgetBytes(const LinkBudget& link) {
  ValidateLink(link);
  return link.data_rate_bps * link.pass_duration_s * link.passes_per_day / 8.0;
}

LinkBudget LinkFromJson(const std::string& text, const std::string& where) {
  internal::Json j;
  try {
    j = internal::Json::parse(text);
  } catch (const internal::Json::exception& e) {
    throw ConfigError(where + ": malformed JSON: " + e.what());
  }
  LinkBudget link;
  link.name = internal::GetOr<std::string>(j, "name", link.name, where);
  link.data_rate_bps = internal::Get<double>(j, "data_rate_bps", where);
  link.passes_per_day = internal::Get<int>(j, "passes_per_day", where);
  link.pass_duration_s = internal::Get<double>(j, "pass_duration_s", where);
  ValidateLink(link, where);
  return link;
}

LinkBudget LoadLinkBudget(const std::filesystem::path& path) {
  return LinkFromJson(internal::ReadTextFile(path), path.string());
}

std::string LinkToJson(const LinkBudget& link) {
  internal::Json j;
  j["name"] = link.name;
  j["data_rate_bps"] = link.data_rate_bps;
  j["passes_per_day"] = link.passes_per_day;
  j["pass_duration_s"] = link.pass_duration_s;
  return j.dump(2) + "\n";
}

namespace {

std::map<std::string, const InferenceRecord*> IndexRecords(
    const std::vector<InferenceRecord>& records, const std::string& what) {
  std::map<std::string, const InferenceRecord*> index;
  for (const auto& r : records)
    if (!index.emplace(r.sample_id, &r).second)
      throw ConfigError(what + ": duplicate sample id " + r.sample_id);
  return index;
}

}  // namespace

DownlinkReport Simulate(const DownlinkScenario& s, const LinkBudget& link) {
  if (!(s.threshold > 0.0 && s.threshold <= 1.0))
    throw ConfigError("threshold " + std::to_string(s.threshold) +
                      " outside (0, 1]");
  if (!(s.bytes_per_sample > 0.0))
    throw ConfigError("bytes_per_sample must be > 0");
  if (s.num_samples <= 0) throw ConfigError("num_samples must be > 0");
  if (static_cast<int64_t>(s.onboard_records.size()) != s.num_samples)
    throw ConfigError("onboard records cover " +
                      std::to_string(s.onboard_records.size()) +
                      " samples, expected " + std::to_string(s.num_samples));
  const auto onboard = IndexRecords(s.onboard_records, "onboard records");
  std::map<std::string, const InferenceRecord*> ground;
  if (s.ground_records) {
    ground = IndexRecords(*s.ground_records, "ground records");
    if (ground.size() != onboard.size())
      throw ConfigError("ground records cover a different sample set");
    for (const auto& [id, r] : onboard)
      if (!ground.count(id))
        throw ConfigError("ground records lack sample " + id);
  }

  DownlinkReport r;
  r.num_samples = s.num_samples;
  r.bytes_per_sample = s.bytes_per_sample;
  r.threshold = s.threshold;
  int64_t onboard_correct = 0;
  int64_t hybrid_correct = 0;
  for (const auto& [id, rec] : onboard) {
    const bool transmit = rec->confidence < s.threshold;
    if (rec->correct) ++onboard_correct;
    if (transmit) {
      ++r.transmitted_count;
      if (s.ground_records && ground.at(id)->correct) ++hybrid_correct;
    } else if (rec->correct) {
      ++hybrid_correct;
    }
  }
  const double n = static_cast<double>(s.num_samples);
  r.full_volume_bytes = n * s.bytes_per_sample;
  r.transmitted_volume_bytes =
      static_cast<double>(r.transmitted_count) * s.bytes_per_sample;
  r.transmitted_fraction_pct = 100.0 * static_cast<double>(r.transmitted_count) / n;
  r.reduction_pct = 100.0 * (1.0 - static_cast<double>(r.transmitted_count) / n);
  r.daily_budget_bytes = DailyBudgetBytes(link);
  r.fits_daily_budget = r.transmitted_volume_bytes <= r.daily_budget_bytes;
  r.onboard_accuracy = static_cast<double>(onboard_correct) / n;
  if (s.ground_records)
    r.hybrid_accuracy = static_cast<double>(hybrid_correct) / n;
  return r;
}

std::string DownlinkReportToJson(const DownlinkReport& r) {
  internal::Json j;
  j["num_samples"] = r.num_samples;
  j["bytes_per_sample"] = r.bytes_per_sample;
  j["threshold"] = r.threshold;
  j["full_volume_bytes"] = r.full_volume_bytes;
  j["full_volume_mb"] = r.full_volume_bytes / kBytesPerMB;
  j["transmitted_count"] = r.transmitted_count;
  j["transmitted_volume_bytes"] = r.transmitted_volume_bytes;
  j["transmitted_volume_mb"] = r.transmitted_volume_bytes / kBytesPerMB;
  j["transmitted_fraction_pct"] = r.transmitted_fraction_pct;
  j["reduction_pct"] = r.reduction_pct;
  j["daily_budget_bytes"] = r.daily_budget_bytes;
  j["fits_daily_budget"] = r.fits_daily_budget;
  j["onboard_accuracy"] = r.onboard_accuracy;
  j["hybrid_accuracy"] =
      r.hybrid_accuracy ? internal::Json(*r.hybrid_accuracy) : internal::Json();
  return j.dump(2) + "\n";
}

std::string DownlinkSummary(const DownlinkReport& r) {
  char buf[1024];
  std::snprintf(
      buf, sizeof(buf),
      "samples            %lld\n"
      "full volume        %.4f MB\n"
      "transmitted        %lld (%.4f%%) at confidence < %.4g\n"
      "transmitted volume %.4f MB\n"
      "reduction          %.4f%%\n"
      "daily budget       %.4f MB (fits: %s)\n"
      "onboard accuracy   %.4f\n",
      static_cast<long long>(r.num_samples), r.full_volume_bytes / kBytesPerMB,
      static_cast<long long>(r.transmitted_count), r.transmitted_fraction_pct,
      r.threshold, r.transmitted_volume_bytes / kBytesPerMB, r.reduction_pct,
      r.daily_budget_bytes / kBytesPerMB, r.fits_daily_budget ? "yes" : "no",
      r.onboard_accuracy);
  std::string out = buf;
  if (r.hybrid_accuracy) {
    std::snprintf(buf, sizeof(buf), "hybrid accuracy    %.4f\n", *r.hybrid_accuracy);
    out += buf;
  } else {
    out += "hybrid accuracy    n/a (no ground records)\n";
  }
  return out;
}

}  // namespace orbitc
