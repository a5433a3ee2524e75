#include "cdnguard/access_model.hpp"

#include <arpa/inet.h>

#include <algorithm>
#include <cmath>
#include <queue>
#include <set>
#include <tuple>

#include <fmt/format.h>

#include "cdnguard/errors.hpp"
#include "cdnguard/rng.hpp"

namespace cdnguard::access {
namespace {

constexpr std::int64_t kDayMs = 86'400'000;
constexpr std::uint64_t kUserStreamBase = 0x1000;
constexpr std::uint64_t kTokenSalt = 0x746f6b656e;  // "token"

struct UserPlan {
  std::string user;
  std::string token;
  bool shared = false;
};

struct Session {
  std::int64_t next_ms;
  std::int64_t step_ms;
  std::uint32_t user;
  std::uint32_t pirate_slot;  // index of the pirate IP; unused for honest sessions
  std::uint32_t content;
  std::uint32_t emitted;
  std::uint32_t total;
  std::uint32_t switch_at;  // honest: first chunk served from the second IP
};

std::string home_ip(std::uint32_t i) {
  return fmt::format("10.{}.{}.{}", (i >> 16) & 0xff, (i >> 8) & 0xff, i & 0xff);
}

std::string alternate_ip(std::uint32_t i) {
  return fmt::format("2001:db8:1::{:x}:{:x}", i >> 16, i & 0xffff);
}

std::string pirate_ip(std::uint32_t i, std::uint32_t slot) {
  return fmt::format("2001:db8:2::{:x}:{:x}:{:x}", i >> 16, i & 0xffff, slot);
}

std::uint32_t session_requests(const ContentProfile& c, rng::Stream& r) {
  const long long n = std::llround(c.expected_requests() * r.uniform(c.jitter_lo, c.jitter_hi));
  return static_cast<std::uint32_t>(std::max(1LL, n));
}

}  // namespace

const char* to_string(TokenLabel label) noexcept {
  return label == TokenLabel::Shared ? "shared" : "honest";
}

TokenLabel label_from_string(std::string_view s) {
  if (s == "honest") return TokenLabel::Honest;
  if (s == "shared") return TokenLabel::Shared;
  throw ParseError(fmt::format("label must be 'honest' or 'shared', got '{}'", s));
}

void validate(const WorkloadSpec& spec) {
  if (spec.n_users == 0) throw InvalidSpec("n_users must be >= 1");
  if (spec.n_users > (1u << 24)) throw InvalidSpec("n_users must be <= 2^24");
  if (!(spec.pirate_fraction >= 0.0 && spec.pirate_fraction <= 1.0)) {
    throw InvalidSpec(fmt::format("pirate_fraction must be in [0,1], got {}", spec.pirate_fraction));
  }
  if (spec.b < 1 || (spec.pirate_fraction > 0.0 && spec.b < 2)) {
    throw InvalidSpec(fmt::format("b must be >= 2 when pirates are present, got {}", spec.b));
  }
  if (!(spec.ip_switch_prob >= 0.0 && spec.ip_switch_prob <= 1.0)) {
    throw InvalidSpec(fmt::format("ip_switch_prob must be in [0,1], got {}", spec.ip_switch_prob));
  }
  if (!(spec.activity_prob >= 0.0 && spec.activity_prob <= 1.0)) {
    throw InvalidSpec(fmt::format("activity_prob must be in [0,1], got {}", spec.activity_prob));
  }
  if (spec.days < 1) throw InvalidSpec("days must be >= 1");
  if (spec.start_epoch < 0 || spec.start_epoch % 86400 != 0) {
    throw InvalidSpec("start_epoch must be a non-negative multiple of 86400");
  }
  if (spec.contents.empty()) throw InvalidSpec("at least one content profile is required");
  std::set<std::string> names;
  for (const auto& c : spec.contents) {
    if (c.content.empty()) throw InvalidSpec("content id must not be empty");
    if (!names.insert(c.content).second) throw InvalidSpec(fmt::format("duplicate content '{}'", c.content));
    if (!(c.chunk_seconds >= 0.001)) throw InvalidSpec(fmt::format("{}: chunk_seconds must be >= 0.001", c.content));
    if (!(c.session_seconds > 0.0)) throw InvalidSpec(fmt::format("{}: session_seconds must be > 0", c.content));
    if (!(c.jitter_lo > 0.0 && c.jitter_lo <= c.jitter_hi)) {
      throw InvalidSpec(fmt::format("{}: need 0 < jitter_lo <= jitter_hi", c.content));
    }
    if (!(c.session_seconds * c.jitter_hi + c.chunk_seconds < 86400.0)) {
      throw InvalidSpec(fmt::format("{}: a session must fit inside one day", c.content));
    }
  }
}

LabelTable generate(const WorkloadSpec& spec, const EventSink& sink) {
  validate(spec);
  const auto n_users = static_cast<std::uint32_t>(spec.n_users);

  std::vector<UserPlan> users(n_users);
  LabelTable labels;
  const std::uint64_t token_base = rng::mix64(spec.seed ^ kTokenSalt);
  for (std::uint32_t i = 0; i < n_users; ++i) {
    rng::Stream r(spec.seed, kUserStreamBase + i);
    users[i].user = fmt::format("u{:07d}", i);
    users[i].token = fmt::format("tk{:016x}", rng::mix64(token_base + i));
    users[i].shared = r.bernoulli(spec.pirate_fraction);
    labels.emplace(users[i].token, users[i].shared ? TokenLabel::Shared : TokenLabel::Honest);
  }

  std::vector<std::int64_t> step_ms;
  for (const auto& c : spec.contents) step_ms.push_back(std::llround(c.chunk_seconds * 1000.0));

  for (int day = 0; day < spec.days; ++day) {
    const std::int64_t day_start = spec.start_epoch * 1000 + day * kDayMs;
    std::vector<Session> sessions;
    for (std::uint32_t i = 0; i < n_users; ++i) {
      rng::Stream r(spec.seed, rng::derive_seed(kUserStreamBase + i, static_cast<std::uint64_t>(day) + 1));
      if (!r.bernoulli(spec.activity_prob)) continue;
      const auto content = static_cast<std::uint32_t>(r.below(spec.contents.size()));
      const auto& profile = spec.contents[content];
      const std::uint32_t n_sessions = users[i].shared ? static_cast<std::uint32_t>(spec.b) : 1;
      for (std::uint32_t k = 0; k < n_sessions; ++k) {
        Session s{};
        s.step_ms = step_ms[content];
        s.user = i;
        s.pirate_slot = k;
        s.content = content;
        s.total = session_requests(profile, r);
        s.switch_at = s.total;
        if (!users[i].shared && r.bernoulli(spec.ip_switch_prob) && s.total >= 2) {
          s.switch_at = 1 + static_cast<std::uint32_t>(r.below(s.total - 1));
        }
        const std::int64_t span = kDayMs - static_cast<std::int64_t>(s.total) * s.step_ms;
        s.next_ms = day_start + static_cast<std::int64_t>(r.below(static_cast<std::uint64_t>(span)));
        sessions.push_back(s);
      }
    }

    // k-way merge of the day's sessions on (timestamp, session index).
    using Item = std::pair<std::int64_t, std::size_t>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
    for (std::size_t s = 0; s < sessions.size(); ++s) heap.emplace(sessions[s].next_ms, s);

    AccessEvent ev;
    while (!heap.empty()) {
      const auto [ts, idx] = heap.top();
      heap.pop();
      Session& s = sessions[idx];
      const UserPlan& u = users[s.user];
      ev.ts = static_cast<double>(ts) / 1000.0;
      ev.token = u.token;
      ev.user = u.user;
      ev.content = spec.contents[s.content].content;
      ev.chunk_seq = s.emitted;
      if (u.shared) {
        ev.ip = pirate_ip(s.user, s.pirate_slot);
      } else {
        ev.ip = s.emitted < s.switch_at ? home_ip(s.user) : alternate_ip(s.user);
      }
      sink(ev);
      if (++s.emitted < s.total) {
        s.next_ms += s.step_ms;
        heap.emplace(s.next_ms, idx);
      }
    }
  }
  return labels;
}

Workload generate(const WorkloadSpec& spec) {
  Workload w;
  w.labels = generate(spec, [&](const AccessEvent& e) { w.events.push_back(e); });
  return w;
}

bool is_ip_literal(const std::string& ip) {
  unsigned char buf[16];
  return inet_pton(AF_INET, ip.c_str(), buf) == 1 || inet_pton(AF_INET6, ip.c_str(), buf) == 1;
}

std::string check_event(const AccessEvent& e) {
  if (!(std::isfinite(e.ts) && e.ts >= 0.0)) return "timestamp must be finite and >= 0";
  if (e.token.empty()) return "empty token";
  if (e.user.empty()) return "empty user";
  if (e.content.empty()) return "empty content";
  if (!is_ip_literal(e.ip)) return fmt::format("'{}' is not an IP literal", e.ip);
  return {};
}

std::size_t Aggregator::KeyHash::operator()(const Key& k) const noexcept {
  const std::size_t h1 = std::hash<std::string>{}(k.token);
  const std::size_t h2 = std::hash<std::string>{}(k.content);
  return h1 ^ (h2 * 0x9e3779b97f4a7c15ULL) ^ static_cast<std::size_t>(rng::mix64(static_cast<std::uint64_t>(k.window)));
}

Aggregator::Aggregator(double window_seconds) : window_(window_seconds) {
  if (!(std::isfinite(window_seconds) && window_seconds > 0.0)) {
    throw InvalidParam(fmt::format("window must be > 0 seconds, got {}", window_seconds));
  }
}

void Aggregator::add_malformed(MalformedRecord record) {
  ++skipped_;
  if (problems_.size() < kMaxReportedProblems) problems_.push_back(std::move(record));
}

bool Aggregator::add(const AccessEvent& e) {
  const std::uint64_t index = index_++;
  if (std::string reason = check_event(e); !reason.empty()) {
    add_malformed({index, std::move(reason)});
    return false;
  }
  auto [owner, inserted] = owners_.try_emplace(e.token, e.user);
  if (!inserted && owner->second != e.user) {
    add_malformed({index, fmt::format("token '{}' already belongs to user '{}'", e.token, owner->second)});
    return false;
  }
  const auto window = static_cast<std::int64_t>(std::floor(e.ts / window_));
  Entry& entry = entries_[Key{window, e.token, e.content}];
  if (entry.requests == 0) entry.user = e.user;
  ++entry.requests;
  auto pos = std::lower_bound(entry.ips.begin(), entry.ips.end(), e.ip);
  if (pos == entry.ips.end() || *pos != e.ip) entry.ips.insert(pos, e.ip);
  return true;
}

std::vector<TokenStats> Aggregator::finish() const {
  std::vector<std::pair<const Key*, const Entry*>> items;
  items.reserve(entries_.size());
  for (const auto& [k, v] : entries_) items.emplace_back(&k, &v);
  std::sort(items.begin(), items.end(), [](const auto& a, const auto& b) {
    return std::tie(a.first->window, a.first->token, a.first->content) <
           std::tie(b.first->window, b.first->token, b.first->content);
  });
  std::vector<TokenStats> out;
  out.reserve(items.size());
  for (const auto& [k, v] : items) {
    TokenStats s;
    s.token = k->token;
    s.user = v->user;
    s.content = k->content;
    s.window_start = static_cast<double>(k->window) * window_;
    s.window_end = static_cast<double>(k->window + 1) * window_;
    s.distinct_ips = v->ips.size();
    s.requests = v->requests;
    out.push_back(std::move(s));
  }
  return out;
}

AggregateResult aggregate(std::span<const AccessEvent> events, double window_seconds) {
  Aggregator agg(window_seconds);
  for (const auto& e : events) agg.add(e);
  return {agg.finish(), agg.skipped(), agg.problems()};
}

std::uint64_t user_hash(std::string_view user) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : user) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

bool is_sampled(std::string_view user, std::uint64_t n) noexcept {
  return n <= 1 || user_hash(user) % n == 0;
}

std::vector<AccessEvent> sample_population(std::span<const AccessEvent> events, std::uint64_t n) {
  std::vector<AccessEvent> out;
  for (const auto& e : events) {
    if (is_sampled(e.user, n)) out.push_back(e);
  }
  return out;
}

}  // namespace cdnguard::access
