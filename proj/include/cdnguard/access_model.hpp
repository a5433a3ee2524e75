#pragma once

// Access-log records, per-content consumption profiles, the labelled
// token-sharing workload generator, per-window token aggregation and
// user-keyed population sampling.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace cdnguard::access {

// One chunk request.
struct AccessEvent {
  double ts = 0.0;  // seconds since the Unix epoch
  std::string token;
  std::string user;  // token owner
  std::string ip;
  std::string content;
  std::uint64_t chunk_seq = 0;

  bool operator==(const AccessEvent&) const = default;
};

struct ContentProfile {
  std::string content;
  double chunk_seconds = 10.0;
  double session_seconds = 1800.0;
  // Per-session request count is round(session/chunk * U(jitter_lo, jitter_hi)).
  double jitter_lo = 0.8;
  double jitter_hi = 1.2;

  double expected_requests() const { return session_seconds / chunk_seconds; }
};

enum class TokenLabel { Honest, Shared };

const char* to_string(TokenLabel label) noexcept;
TokenLabel label_from_string(std::string_view s);

using LabelTable = std::map<std::string, TokenLabel>;

struct WorkloadSpec {
  std::uint64_t seed = 0;
  std::size_t n_users = 1000;
  double pirate_fraction = 0.0;  // probability a user's token is shared
  int b = 4;                     // pirate sessions (and IPs) per shared token
  double ip_switch_prob = 0.1;   // honest session moves to the user's second IP
  std::vector<ContentProfile> contents;
  int days = 1;
  double activity_prob = 1.0;  // probability a token is used on a given day
  std::int64_t start_epoch = 1704067200;  // 2024-01-01T00:00:00Z; must be day-aligned
};

void validate(const WorkloadSpec& spec);

using EventSink = std::function<void(const AccessEvent&)>;

// Streams the corpus to `sink` in non-decreasing timestamp order and returns
// the ground-truth labels. Deterministic in `spec`.
//
// Each user owns one token. An honest token plays one session per active day
// from the user's home IP, moving at most once to a fixed second IP with
// probability ip_switch_prob. A shared token plays b sessions per active day
// from b fixed pirate IPs, each with independent jitter. All sessions of a
// token on a day use the same content and lie inside that day.
LabelTable generate(const WorkloadSpec& spec, const EventSink& sink);

struct Workload {
  std::vector<AccessEvent> events;
  LabelTable labels;
};

Workload generate(const WorkloadSpec& spec);

struct TokenStats {
  std::string token;
  std::string user;
  std::string content;
  double window_start = 0.0;
  double window_end = 0.0;
  std::uint64_t distinct_ips = 0;
  std::uint64_t requests = 0;

  bool operator==(const TokenStats&) const = default;
};

struct MalformedRecord {
  std::uint64_t index = 0;  // record index (or file line) of the rejected event
  std::string reason;
};

// Streaming per-(token, content, window) aggregation. Windows are aligned to
// the epoch: window k covers [k*window, (k+1)*window).
class Aggregator {
 public:
  explicit Aggregator(double window_seconds);

  // Returns false and records the problem when the event is malformed.
  bool add(const AccessEvent& event);
  void add_malformed(MalformedRecord record);

  // Sorted by (window_start, token, content).
  std::vector<TokenStats> finish() const;

  std::uint64_t skipped() const noexcept { return skipped_; }
  const std::vector<MalformedRecord>& problems() const noexcept { return problems_; }
  double window_seconds() const noexcept { return window_; }

 private:
  struct Key {
    std::int64_t window;
    std::string token;
    std::string content;
    bool operator==(const Key&) const = default;
  };
  struct KeyHash {
    std::size_t operator()(const Key& k) const noexcept;
  };
  struct Entry {
    std::string user;
    std::vector<std::string> ips;  // sorted, unique
    std::uint64_t requests = 0;
  };

  double window_;
  std::uint64_t index_ = 0;
  std::uint64_t skipped_ = 0;
  std::vector<MalformedRecord> problems_;
  std::unordered_map<std::string, std::string> owners_;
  std::unordered_map<Key, Entry, KeyHash> entries_;
};

inline constexpr std::size_t kMaxReportedProblems = 100;

struct AggregateResult {
  std::vector<TokenStats> stats;
  std::uint64_t skipped = 0;
  std::vector<MalformedRecord> problems;  // first kMaxReportedProblems only
};

AggregateResult aggregate(std::span<const AccessEvent> events, double window_seconds = 86400.0);

// Returns the reason an event is malformed, or an empty string.
std::string check_event(const AccessEvent& event);

bool is_ip_literal(const std::string& ip);

// FNV-1a 64 of the user id. A user is sampled at rate 1-in-n when
// user_hash(user) % n == 0, so either all or none of a user's events are kept.
std::uint64_t user_hash(std::string_view user) noexcept;
bool is_sampled(std::string_view user, std::uint64_t n) noexcept;

std::vector<AccessEvent> sample_population(std::span<const AccessEvent> events, std::uint64_t n);

}  // namespace cdnguard::access
