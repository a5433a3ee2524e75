#include "cdnguard/config.hpp"

#include <charconv>
#include <cmath>
#include <set>

#include <fmt/format.h>

#include "cdnguard/errors.hpp"

namespace cdnguard::config {
namespace {

void reject_unknown(const nlohmann::json& j, const std::set<std::string>& known, const char* where) {
  if (!j.is_object()) throw ParseError(fmt::format("{} must be a JSON object", where));
  for (const auto& [key, value] : j.items()) {
    if (!known.contains(key)) throw ParseError(fmt::format("{}: unknown key '{}'", where, key));
  }
}

template <typename T>
void read(const nlohmann::json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ParseError(fmt::format("key '{}' has the wrong type", key));
  }
}

}  // namespace

double parse_duration(const std::string& text) {
  if (text.empty()) throw ParseError("empty duration");
  double scale = 1.0;
  std::string number = text;
  switch (text.back()) {
    case 's': scale = 1.0; number.pop_back(); break;
    case 'm': scale = 60.0; number.pop_back(); break;
    case 'h': scale = 3600.0; number.pop_back(); break;
    case 'd': scale = 86400.0; number.pop_back(); break;
    default: break;
  }
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(number.data(), number.data() + number.size(), value);
  if (ec != std::errc{} || ptr != number.data() + number.size() || !(value > 0.0) || !std::isfinite(value)) {
    throw ParseError(fmt::format("bad duration '{}'", text));
  }
  return value * scale;
}

WorkloadFile workload_from_json(const nlohmann::json& j) {
  reject_unknown(j,
                 {"seed", "n_users", "pirate_fraction", "b", "ip_switch_prob", "days", "activity_prob",
                  "start_epoch", "contents"},
                 "workload spec");
  WorkloadFile f;
  auto& s = f.spec;
  f.has_seed = j.contains("seed");
  read(j, "seed", s.seed);
  read(j, "n_users", s.n_users);
  read(j, "pirate_fraction", s.pirate_fraction);
  read(j, "b", s.b);
  read(j, "ip_switch_prob", s.ip_switch_prob);
  read(j, "days", s.days);
  read(j, "activity_prob", s.activity_prob);
  read(j, "start_epoch", s.start_epoch);
  if (!j.contains("contents") || !j.at("contents").is_array()) {
    throw ParseError("workload spec: 'contents' must be an array of content profiles");
  }
  for (const auto& c : j.at("contents")) {
    reject_unknown(c, {"content", "chunk_seconds", "session_seconds", "jitter"}, "content profile");
    access::ContentProfile p;
    read(c, "content", p.content);
    read(c, "chunk_seconds", p.chunk_seconds);
    read(c, "session_seconds", p.session_seconds);
    if (c.contains("jitter")) {
      std::vector<double> jitter;
      read(c, "jitter", jitter);
      if (jitter.size() != 2) throw ParseError("content profile: 'jitter' must be [lo, hi]");
      p.jitter_lo = jitter[0];
      p.jitter_hi = jitter[1];
    }
    s.contents.push_back(std::move(p));
  }
  return f;
}

nlohmann::json to_json(const access::WorkloadSpec& s) {
  nlohmann::json j;
  j["seed"] = s.seed;
  j["n_users"] = s.n_users;
  j["pirate_fraction"] = s.pirate_fraction;
  j["b"] = s.b;
  j["ip_switch_prob"] = s.ip_switch_prob;
  j["days"] = s.days;
  j["activity_prob"] = s.activity_prob;
  j["start_epoch"] = s.start_epoch;
  j["contents"] = nlohmann::json::array();
  for (const auto& c : s.contents) {
    j["contents"].push_back({{"content", c.content},
                             {"chunk_seconds", c.chunk_seconds},
                             {"session_seconds", c.session_seconds},
                             {"jitter", {c.jitter_lo, c.jitter_hi}}});
  }
  return j;
}

DetectionFile detection_from_json(const nlohmann::json& j) {
  reject_unknown(j,
                 {"ip_threshold", "volumetry_mode", "absolute_request_threshold", "quantile_level", "sample_rate",
                  "window", "baseline_excludes_ip_flagged", "recurrence_levels", "period"},
                 "detection config");
  DetectionFile f;
  auto& c = f.config;
  read(j, "ip_threshold", c.ip_threshold);
  if (j.contains("volumetry_mode")) {
    std::string mode;
    read(j, "volumetry_mode", mode);
    if (mode == "absolute") {
      c.volumetry_mode = detect::VolumetryMode::Absolute;
    } else if (mode == "quantile") {
      c.volumetry_mode = detect::VolumetryMode::Quantile;
    } else {
      throw ParseError(fmt::format("volumetry_mode must be 'absolute' or 'quantile', got '{}'", mode));
    }
  }
  read(j, "absolute_request_threshold", c.absolute_request_threshold);
  read(j, "quantile_level", c.quantile_level);
  read(j, "sample_rate", c.sample_rate);
  if (j.contains("window")) {
    const auto& w = j.at("window");
    if (w.is_number()) {
      c.window_seconds = w.get<double>();
    } else if (w.is_string()) {
      c.window_seconds = parse_duration(w.get<std::string>());
    } else {
      throw ParseError("window must be seconds or a duration string");
    }
  }
  read(j, "baseline_excludes_ip_flagged", c.baseline_excludes_ip_flagged);
  read(j, "recurrence_levels", c.recurrence_levels);
  if (j.contains("period")) {
    const auto& p = j.at("period");
    reject_unknown(p, {"first", "last"}, "period");
    std::string first, last;
    read(p, "first", first);
    read(p, "last", last);
    f.period = detect::Period{detect::parse_day(first), detect::parse_day(last)};
  }
  return f;
}

}  // namespace cdnguard::config
