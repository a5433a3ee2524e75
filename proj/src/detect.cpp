#include "cdnguard/detect.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <set>
#include <tuple>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "cdnguard/access_io.hpp"
#include "cdnguard/errors.hpp"

namespace cdnguard::detect {
namespace {

bool flag_less(const FlagRecord& a, const FlagRecord& b) {
  return std::tie(a.day, a.token, a.rule) < std::tie(b.day, b.token, b.rule);
}

double safe_ratio(std::uint64_t num, std::uint64_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

void check_level(double level) {
  if (!(level > 0.0 && level <= 1.0)) throw InvalidParam(fmt::format("quantile level must be in (0,1], got {}", level));
}

}  // namespace

std::string format_day(Day day) {
  const std::chrono::year_month_day ymd{day};
  return fmt::format("{:04d}-{:02d}-{:02d}", static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                     static_cast<unsigned>(ymd.day()));
}

Day parse_day(const std::string& iso) {
  int y = 0;
  unsigned m = 0, d = 0;
  char dash1 = 0, dash2 = 0;
  if (iso.size() != 10 || std::sscanf(iso.c_str(), "%4d%c%2u%c%2u", &y, &dash1, &m, &dash2, &d) != 5 || dash1 != '-' ||
      dash2 != '-') {
    throw ParseError(fmt::format("bad date '{}', expected YYYY-MM-DD", iso));
  }
  const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
  if (!ymd.ok()) throw ParseError(fmt::format("invalid date '{}'", iso));
  return Day{ymd};
}

Day day_of(double epoch_seconds) {
  return Day{std::chrono::days{static_cast<std::int64_t>(std::floor(epoch_seconds / 86400.0))}};
}

const char* to_string(Rule rule) noexcept {
  return rule == Rule::IpVolumetry ? "IpVolumetry" : "RequestVolumetry";
}

Rule rule_from_string(const std::string& s) {
  if (s == "IpVolumetry") return Rule::IpVolumetry;
  if (s == "RequestVolumetry") return Rule::RequestVolumetry;
  throw ParseError(fmt::format("unknown rule '{}'", s));
}

void validate(const DetectionConfig& cfg) {
  if (cfg.ip_threshold < 1) throw InvalidParam("ip_threshold must be >= 1");
  check_level(cfg.quantile_level);
  if (cfg.sample_rate < 1) throw InvalidParam("sample_rate must be >= 1");
  if (!(std::isfinite(cfg.window_seconds) && cfg.window_seconds > 0.0)) throw InvalidParam("window must be > 0");
  for (double level : cfg.recurrence_levels) check_level(level);
}

std::vector<FlagRecord> flag_by_ip(std::span<const access::TokenStats> stats, const DetectionConfig& cfg) {
  validate(cfg);
  std::vector<FlagRecord> flags;
  for (const auto& s : stats) {
    if (s.distinct_ips > cfg.ip_threshold) {
      flags.push_back({day_of(s.window_start), s.token, s.user, Rule::IpVolumetry, s.distinct_ips, cfg.ip_threshold});
    }
  }
  std::stable_sort(flags.begin(), flags.end(), flag_less);
  return flags;
}

std::uint64_t nearest_rank(std::span<const std::uint64_t> sorted, double level) {
  check_level(level);
  if (sorted.empty()) throw InvalidParam("nearest_rank of an empty sample");
  const double n = static_cast<double>(sorted.size());
  // The epsilon keeps levels such as 0.99 * 100 from rounding up a rank.
  auto rank = static_cast<std::size_t>(std::ceil(level * n - 1e-9));
  rank = std::clamp<std::size_t>(rank, 1, sorted.size());
  return sorted[rank - 1];
}

Baseline baseline_from_sample(std::span<const access::TokenStats> sampled, std::span<const std::string> contents,
                              const DetectionConfig& cfg) {
  validate(cfg);
  std::map<std::string, std::vector<std::uint64_t>> per_content;
  Baseline out;
  for (const auto& s : sampled) {
    if (cfg.baseline_excludes_ip_flagged && s.distinct_ips > cfg.ip_threshold) continue;
    per_content[s.content].push_back(s.requests);
    ++out.sampled_tokens;
  }
  for (const auto& c : contents) {
    auto it = per_content.find(c);
    if (it == per_content.end()) {
      out.warnings.push_back(fmt::format("content '{}' has no sampled tokens; RequestVolumetry skipped", c));
      continue;
    }
    std::sort(it->second.begin(), it->second.end());
    out.thresholds[c] = nearest_rank(it->second, cfg.quantile_level);
  }
  return out;
}

Baseline estimate_baseline(std::span<const access::AccessEvent> events, const DetectionConfig& cfg) {
  validate(cfg);
  if (cfg.volumetry_mode != VolumetryMode::Quantile) {
    throw InvalidParam("estimate_baseline needs volumetry_mode = quantile");
  }
  std::set<std::string> contents;
  access::Aggregator sample(cfg.window_seconds);
  for (const auto& e : events) {
    contents.insert(e.content);
    if (access::is_sampled(e.user, cfg.sample_rate)) sample.add(e);
  }
  const auto stats = sample.finish();
  if (stats.empty()) throw EmptySample(fmt::format("no events survive 1-in-{} user sampling", cfg.sample_rate));
  const std::vector<std::string> names(contents.begin(), contents.end());
  return baseline_from_sample(stats, names, cfg);
}

std::vector<FlagRecord> flag_by_volumetry(std::span<const access::TokenStats> stats, const ThresholdMap& thresholds,
                                          const DetectionConfig& cfg) {
  validate(cfg);
  std::vector<FlagRecord> flags;
  for (const auto& s : stats) {
    auto it = thresholds.find(s.content);
    if (it == thresholds.end()) continue;
    if (s.requests > it->second) {
      flags.push_back({day_of(s.window_start), s.token, s.user, Rule::RequestVolumetry, s.requests, it->second});
    }
  }
  std::stable_sort(flags.begin(), flags.end(), flag_less);
  return flags;
}

RecurrenceReport recurrence(std::span<const FlagRecord> flags, std::optional<Period> period,
                            std::span<const double> extra_levels) {
  std::map<std::string, std::set<std::pair<Day, std::string>>> occasions;
  for (const auto& f : flags) {
    if (period && (f.day < period->first || f.day > period->last)) continue;
    occasions[f.user].emplace(f.day, f.token);
  }
  if (occasions.empty()) throw EmptyFlags("no flags inside the period");

  RecurrenceReport report;
  std::vector<std::uint64_t> counts;
  std::uint64_t once = 0;
  for (const auto& [user, seen] : occasions) {
    report.per_user_flag_counts[user] = seen.size();
    counts.push_back(seen.size());
    if (seen.size() == 1) ++once;
  }
  std::sort(counts.begin(), counts.end());
  for (double level : kDefaultRecurrenceLevels) report.quantiles[level] = nearest_rank(counts, level);
  for (double level : extra_levels) report.quantiles[level] = nearest_rank(counts, level);
  report.non_recurring_fraction = safe_ratio(once, counts.size());
  return report;
}

DailySeries daily_series(std::span<const FlagRecord> flags) {
  DailySeries out;
  if (flags.empty()) return out;
  std::map<std::string, std::set<std::pair<Day, std::string>>> occasions;
  std::map<Day, std::set<std::string>> tokens_per_day;
  std::map<std::string, std::string> owner;
  for (const auto& f : flags) {
    occasions[f.user].emplace(f.day, f.token);
    tokens_per_day[f.day].insert(f.token);
    owner.emplace(f.token, f.user);
  }
  for (const auto& [day, tokens] : tokens_per_day) {
    out.all[day] = tokens.size();
    std::uint64_t single = 0;
    for (const auto& t : tokens) {
      if (occasions[owner[t]].size() == 1) ++single;
    }
    if (single > 0) out.non_recurring[day] = single;
  }
  return out;
}

std::map<std::string, Metrics> evaluate(std::span<const FlagRecord> flags, const access::LabelTable& labels) {
  std::map<std::string, std::set<std::string>> predicted;
  predicted["IpVolumetry"];
  predicted["RequestVolumetry"];
  predicted["Any"];
  for (const auto& f : flags) {
    if (!labels.contains(f.token)) throw UnknownToken(f.token);
    predicted[to_string(f.rule)].insert(f.token);
    predicted["Any"].insert(f.token);
  }
  std::uint64_t positives = 0;
  for (const auto& [token, label] : labels) {
    if (label == access::TokenLabel::Shared) ++positives;
  }
  std::map<std::string, Metrics> out;
  for (const auto& [rule, tokens] : predicted) {
    Metrics m;
    for (const auto& t : tokens) {
      if (labels.at(t) == access::TokenLabel::Shared) {
        ++m.true_positives;
      } else {
        ++m.false_positives;
      }
    }
    m.false_negatives = positives - m.true_positives;
    m.precision = safe_ratio(m.true_positives, m.true_positives + m.false_positives);
    m.recall = safe_ratio(m.true_positives, positives);
    m.f1 = (m.precision + m.recall) > 0.0 ? 2.0 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
    out[rule] = m;
  }
  return out;
}

void write_flags(std::ostream& out, std::span<const FlagRecord> flags) {
  out << kFlagHeader << '\n';
  for (const auto& f : flags) {
    fmt::print(out, "{},{},{},{},{},{}\n", format_day(f.day), f.token, f.user, to_string(f.rule), f.observed,
               f.threshold);
  }
}

std::vector<FlagRecord> read_flags(std::istream& in) {
  std::vector<FlagRecord> flags;
  std::string line;
  std::size_t line_no = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (!header) {
      if (line != kFlagHeader) throw ParseError(fmt::format("line {}: expected header '{}'", line_no, kFlagHeader));
      header = true;
      continue;
    }
    const auto f = access::split_csv_line(line);
    if (f.size() != 6) throw ParseError(fmt::format("line {}: expected 6 fields, got {}", line_no, f.size()));
    FlagRecord r;
    r.day = parse_day(f[0]);
    r.token = f[1];
    r.user = f[2];
    r.rule = rule_from_string(f[3]);
    try {
      r.observed = std::stoull(f[4]);
      r.threshold = std::stoull(f[5]);
    } catch (const std::exception&) {
      throw ParseError(fmt::format("line {}: bad count", line_no));
    }
    flags.push_back(std::move(r));
  }
  if (!header) throw ParseError("flags file is empty");
  return flags;
}

}  // namespace cdnguard::detect
