#pragma once

// JSON config files for the generator and the detector.
//
// Workload spec:
//   {"seed": 7, "n_users": 10000, "pirate_fraction": 0.1, "b": 4,
//    "ip_switch_prob": 0.1, "days": 1, "activity_prob": 1.0,
//    "start_epoch": 1704067200,
//    "contents": [{"content": "live", "chunk_seconds": 10,
//                  "session_seconds": 1800, "jitter": [0.8, 1.2]}]}
//
// Detection config:
//   {"ip_threshold": 3, "volumetry_mode": "quantile" | "absolute",
//    "absolute_request_threshold": {"live": 400}, "quantile_level": 0.99,
//    "sample_rate": 100, "window": "1d", "baseline_excludes_ip_flagged": true,
//    "recurrence_levels": [0.5], "period": {"first": "2024-01-01", "last": "2024-01-07"}}
//
// Every key is optional except where noted in the docs; unknown keys are rejected.

#include <optional>
#include <string>

#include "cdnguard/access_model.hpp"
#include "cdnguard/detect.hpp"
#include "json.hpp"

namespace cdnguard::config {

// Seconds from "86400", "90s", "30m", "24h" or "1d".
double parse_duration(const std::string& text);

// The seed is optional here so that a command-line flag can supply it.
struct WorkloadFile {
  access::WorkloadSpec spec;
  bool has_seed = false;
};

WorkloadFile workload_from_json(const nlohmann::json& j);
nlohmann::json to_json(const access::WorkloadSpec& spec);

struct DetectionFile {
  detect::DetectionConfig config;
  std::optional<detect::Period> period;
};

DetectionFile detection_from_json(const nlohmann::json& j);

}  // namespace cdnguard::config
