#pragma once

// Threshold rules over per-window token statistics, baseline estimation from
// a user-keyed sample, recurrence analysis and ground-truth evaluation.

#include <chrono>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cdnguard/access_model.hpp"

namespace cdnguard::detect {

using Day = std::chrono::sys_days;

std::string format_day(Day day);
Day parse_day(const std::string& iso);  // YYYY-MM-DD
Day day_of(double epoch_seconds);

enum class VolumetryMode { Absolute, Quantile };
enum class Rule { IpVolumetry, RequestVolumetry };

const char* to_string(Rule rule) noexcept;
Rule rule_from_string(const std::string& s);

struct DetectionConfig {
  std::uint64_t ip_threshold = 3;  // flag when distinct_ips > ip_threshold
  VolumetryMode volumetry_mode = VolumetryMode::Quantile;
  std::map<std::string, std::uint64_t> absolute_request_threshold;  // content -> requests
  double quantile_level = 0.99;
  std::uint64_t sample_rate = 100;  // 1-in-N users feed the baseline
  // Drop sampled tokens already above ip_threshold before taking the
  // quantile, so the baseline describes the unshared population.
  bool baseline_excludes_ip_flagged = true;
  double window_seconds = 86400.0;
  std::vector<double> recurrence_levels;  // added to the default levels
};

void validate(const DetectionConfig& cfg);

struct FlagRecord {
  Day day;  // day containing the window start
  std::string token;
  std::string user;
  Rule rule = Rule::IpVolumetry;
  std::uint64_t observed = 0;
  std::uint64_t threshold = 0;

  bool operator==(const FlagRecord&) const = default;
};

// Ordered by (day, token, rule).
std::vector<FlagRecord> flag_by_ip(std::span<const access::TokenStats> stats, const DetectionConfig& cfg);

using ThresholdMap = std::map<std::string, std::uint64_t>;

struct Baseline {
  ThresholdMap thresholds;
  std::vector<std::string> warnings;  // contents with no sampled tokens
  std::uint64_t sampled_tokens = 0;
};

// Nearest-rank quantile of an ascending sample: the element at 1-based rank
// ceil(level * n). `sorted` must be non-empty, level in (0, 1].
std::uint64_t nearest_rank(std::span<const std::uint64_t> sorted, double level);

// Thresholds from already-sampled statistics. `contents` lists every content
// that should receive a threshold; the ones missing from the sample produce a
// warning instead.
Baseline baseline_from_sample(std::span<const access::TokenStats> sampled, std::span<const std::string> contents,
                              const DetectionConfig& cfg);

// Samples 1-in-cfg.sample_rate users, aggregates them and derives per-content
// thresholds. Throws EmptySample when no event survives sampling.
Baseline estimate_baseline(std::span<const access::AccessEvent> events, const DetectionConfig& cfg);

std::vector<FlagRecord> flag_by_volumetry(std::span<const access::TokenStats> stats, const ThresholdMap& thresholds,
                                          const DetectionConfig& cfg);

inline const std::vector<double> kDefaultRecurrenceLevels{0.25, 0.64, 0.66, 0.80, 0.95, 0.99, 1.0};

struct RecurrenceReport {
  std::map<std::string, std::uint64_t> per_user_flag_counts;
  std::map<double, std::uint64_t> quantiles;
  double non_recurring_fraction = 0.0;
};

struct Period {
  Day first;
  Day last;  // inclusive
};

// A user's count is the number of distinct (token, day) pairs flagged for
// them inside the period, whatever rule fired.
RecurrenceReport recurrence(std::span<const FlagRecord> flags, std::optional<Period> period = std::nullopt,
                            std::span<const double> extra_levels = {});

struct DailySeries {
  std::map<Day, std::uint64_t> all;
  std::map<Day, std::uint64_t> non_recurring;
};

// Distinct flagged tokens per day; the second series keeps only tokens of
// users whose period total is exactly one.
DailySeries daily_series(std::span<const FlagRecord> flags);

struct Metrics {
  std::uint64_t true_positives = 0;
  std::uint64_t false_positives = 0;
  std::uint64_t false_negatives = 0;
  double precision = 0.0;  // 0 when nothing was flagged
  double recall = 0.0;
  double f1 = 0.0;
};

// Token-granularity confusion metrics per rule plus "Any" for the union.
std::map<std::string, Metrics> evaluate(std::span<const FlagRecord> flags, const access::LabelTable& labels);

inline constexpr const char* kFlagHeader = "day,token,user,rule,observed,threshold";

void write_flags(std::ostream& out, std::span<const FlagRecord> flags);
std::vector<FlagRecord> read_flags(std::istream& in);

}  // namespace cdnguard::detect
