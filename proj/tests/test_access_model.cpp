#include "doctest.h"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

#include "cdnguard/access_io.hpp"
#include "cdnguard/access_model.hpp"
#include "cdnguard/errors.hpp"
#include "cdnguard/rng.hpp"

using namespace cdnguard;
using namespace cdnguard::access;

namespace {

WorkloadSpec small_spec(std::uint64_t seed, std::size_t users, double pirates, int b) {
  WorkloadSpec s;
  s.seed = seed;
  s.n_users = users;
  s.pirate_fraction = pirates;
  s.b = b;
  s.contents = {{"live", 10.0, 600.0, 0.8, 1.2}};
  return s;
}

std::map<std::string, std::set<std::string>> ips_per_token(const std::vector<AccessEvent>& events) {
  std::map<std::string, std::set<std::string>> out;
  for (const auto& e : events) out[e.token].insert(e.ip);
  return out;
}

std::string csv_bytes(const std::vector<AccessEvent>& events) {
  std::ostringstream os;
  write_events_csv(os, events);
  return os.str();
}

std::uint64_t mode_of(const std::vector<std::uint64_t>& xs) {
  std::map<std::uint64_t, int> freq;
  for (auto x : xs) ++freq[x];
  return std::max_element(freq.begin(), freq.end(), [](auto& a, auto& b) { return a.second < b.second; })->first;
}

}  // namespace

TEST_CASE("generate without pirates labels every token honest") {
  auto spec = small_spec(1, 300, 0.0, 4);
  spec.days = 3;
  const auto w = generate(spec);
  CHECK(w.labels.size() == 300);
  for (const auto& [token, label] : w.labels) CHECK(label == TokenLabel::Honest);
  for (const auto& [token, ips] : ips_per_token(w.events)) CHECK(ips.size() <= 2);
}

TEST_CASE("shared tokens carry exactly b IPs") {
  const auto w = generate(small_spec(7, 1000, 0.1, 4));
  std::size_t shared = 0;
  for (const auto& [token, label] : w.labels) shared += label == TokenLabel::Shared;
  // Bernoulli(0.1) over 1000 users: the count stays well inside +-4 sd.
  CHECK(shared > 60);
  CHECK(shared < 140);

  const auto ips = ips_per_token(w.events);
  for (const auto& [token, label] : w.labels) {
    if (label == TokenLabel::Shared) {
      CHECK(ips.at(token).size() == 4);
    } else {
      CHECK(ips.at(token).size() <= 2);
    }
  }
  const auto stats = aggregate(w.events).stats;
  for (const auto& s : stats) {
    if (w.labels.at(s.token) == TokenLabel::Shared) CHECK(s.distinct_ips == 4);
  }
}

TEST_CASE("events are time-ordered and tokens have one owner") {
  auto spec = small_spec(3, 200, 0.2, 3);
  spec.days = 2;
  const auto w = generate(spec);
  std::map<std::string, std::string> owner;
  for (std::size_t i = 0; i < w.events.size(); ++i) {
    if (i) CHECK(w.events[i - 1].ts <= w.events[i].ts);
    auto [it, fresh] = owner.emplace(w.events[i].token, w.events[i].user);
    CHECK(it->second == w.events[i].user);
  }
}

TEST_CASE("generator is deterministic to the byte") {
  const auto spec = small_spec(11, 150, 0.1, 4);
  CHECK(csv_bytes(generate(spec).events) == csv_bytes(generate(spec).events));
  CHECK(csv_bytes(generate(spec).events) != csv_bytes(generate(small_spec(12, 150, 0.1, 4)).events));
}

TEST_CASE("per-content request modes follow chunk size") {
  auto spec = small_spec(5, 4000, 0.0, 4);
  spec.ip_switch_prob = 0.0;
  spec.contents = {{"short-chunks", 4.0, 600.0, 0.8, 1.2}, {"long-chunks", 10.0, 600.0, 0.8, 1.2}};
  const auto stats = aggregate(generate(spec).events).stats;
  std::map<std::string, std::vector<std::uint64_t>> per_content;
  for (const auto& s : stats) per_content[s.content].push_back(s.requests);
  const auto mean = [](const std::vector<std::uint64_t>& v) {
    double sum = 0;
    for (auto x : v) sum += static_cast<double>(x);
    return sum / static_cast<double>(v.size());
  };
  // Expected requests are 150 vs 60 per session before jitter.
  CHECK(mean(per_content["short-chunks"]) / mean(per_content["long-chunks"]) == doctest::Approx(2.5).epsilon(0.02));
  const double mode_ratio = static_cast<double>(mode_of(per_content["short-chunks"])) /
                            static_cast<double>(mode_of(per_content["long-chunks"]));
  CHECK(mode_ratio > 2.0);
  CHECK(mode_ratio < 3.0);
}

TEST_CASE("shared token volume is about b times honest volume") {
  const auto w = generate(small_spec(9, 3000, 0.2, 4));
  double honest = 0, shared = 0;
  std::size_t nh = 0, ns = 0;
  for (const auto& s : aggregate(w.events).stats) {
    if (w.labels.at(s.token) == TokenLabel::Shared) {
      shared += static_cast<double>(s.requests);
      ++ns;
    } else {
      honest += static_cast<double>(s.requests);
      ++nh;
    }
  }
  CHECK((shared / ns) / (honest / nh) == doctest::Approx(4.0).epsilon(0.03));
}

TEST_CASE("label soundness over the whole corpus") {
  auto spec = small_spec(21, 500, 0.15, 5);
  spec.days = 4;
  spec.ip_switch_prob = 0.5;
  spec.activity_prob = 0.7;
  const auto w = generate(spec);
  for (const auto& [token, ips] : ips_per_token(w.events)) {
    if (ips.size() > 2) CHECK(w.labels.at(token) == TokenLabel::Shared);
  }
}

TEST_CASE("invalid workload specs") {
  auto s = small_spec(1, 10, 0.1, 4);
  s.contents.clear();
  CHECK_THROWS_AS(generate(s), InvalidSpec);
  s = small_spec(1, 10, 0.1, 1);
  CHECK_THROWS_AS(generate(s), InvalidSpec);
  s = small_spec(1, 10, 1.5, 4);
  CHECK_THROWS_AS(generate(s), InvalidSpec);
  s = small_spec(1, 0, 0.1, 4);
  CHECK_THROWS_AS(generate(s), InvalidSpec);
  s = small_spec(1, 10, 0.1, 4);
  s.contents[0].session_seconds = 90000;
  CHECK_THROWS_AS(generate(s), InvalidSpec);
  s = small_spec(1, 10, 0.1, 4);
  s.contents.push_back(s.contents[0]);
  CHECK_THROWS_AS(generate(s), InvalidSpec);
  s = small_spec(1, 10, 0.1, 4);
  s.start_epoch = 100;
  CHECK_THROWS_AS(generate(s), InvalidSpec);
}

TEST_CASE("aggregate examples") {
  CHECK(aggregate({}).stats.empty());

  std::vector<AccessEvent> events{
      {100.0, "t1", "u1", "10.0.0.1", "c", 0},
      {110.0, "t1", "u1", "10.0.0.1", "c", 1},
      {120.0, "t1", "u1", "10.0.0.1", "c", 2},
  };
  auto r = aggregate(events);
  REQUIRE(r.stats.size() == 1);
  CHECK(r.stats[0].distinct_ips == 1);
  CHECK(r.stats[0].requests == 3);
  CHECK(r.stats[0].window_start == 0.0);
  CHECK(r.stats[0].window_end == 86400.0);
  CHECK(r.skipped == 0);

  // A second window and a second content split the rows.
  events.push_back({86400.0 + 5, "t1", "u1", "2001:db8::1", "c", 3});
  events.push_back({130.0, "t1", "u1", "10.0.0.2", "d", 0});
  r = aggregate(events);
  REQUIRE(r.stats.size() == 3);
  CHECK(r.stats[0].content == "c");
  CHECK(r.stats[1].content == "d");
  CHECK(r.stats[2].window_start == 86400.0);
}

TEST_CASE("aggregate skips malformed events and keeps going") {
  const std::vector<AccessEvent> events{
      {1.0, "t1", "u1", "10.0.0.1", "c", 0},
      {2.0, "t1", "u1", "not-an-ip", "c", 1},
      {3.0, "", "u1", "10.0.0.1", "c", 2},
      {4.0, "t1", "u2", "10.0.0.1", "c", 3},  // token already owned by u1
      {5.0, "t1", "u1", "10.0.0.9", "c", 4},
  };
  const auto r = aggregate(events);
  CHECK(r.skipped == 3);
  REQUIRE(r.problems.size() == 3);
  CHECK(r.problems[0].index == 1);
  CHECK(r.problems[1].index == 2);
  CHECK(r.problems[2].index == 3);
  REQUIRE(r.stats.size() == 1);
  CHECK(r.stats[0].requests == 2);
  CHECK(r.stats[0].distinct_ips == 2);
}

TEST_CASE("aggregate is insensitive to event order within windows") {
  auto w = generate(small_spec(13, 200, 0.1, 4));
  const auto expected = aggregate(w.events).stats;
  rng::Stream r(99);
  for (int round = 0; round < 5; ++round) {
    for (std::size_t i = w.events.size() - 1; i > 0; --i) std::swap(w.events[i], w.events[r.below(i + 1)]);
    CHECK(aggregate(w.events).stats == expected);
  }
}

TEST_CASE("sample_population keys on users") {
  const auto w = generate(small_spec(2, 10'000, 0.0, 4));
  CHECK(sample_population(w.events, 1) == w.events);

  const auto sampled = sample_population(w.events, 100);
  std::set<std::string> users;
  for (const auto& e : sampled) users.insert(e.user);
  CHECK(users.size() > 70);
  CHECK(users.size() < 130);
  // Every event of a sampled user is kept.
  std::size_t expected = 0;
  for (const auto& e : w.events) expected += users.contains(e.user);
  CHECK(sampled.size() == expected);
  CHECK(sample_population(w.events, 100) == sampled);
}

TEST_CASE("sampled honest request distribution matches the population") {
  auto spec = small_spec(17, 20'000, 0.0, 4);
  const auto w = generate(spec);
  const auto full = aggregate(w.events).stats;
  const auto part = aggregate(sample_population(w.events, 20)).stats;
  auto quartiles = [](std::vector<TokenStats> s) {
    std::vector<std::uint64_t> v;
    for (auto& x : s) v.push_back(x.requests);
    std::sort(v.begin(), v.end());
    return std::vector<std::uint64_t>{v[v.size() / 4], v[v.size() / 2], v[3 * v.size() / 4]};
  };
  const auto a = quartiles(full), b = quartiles(part);
  for (std::size_t i = 0; i < 3; ++i) CHECK(std::abs(static_cast<double>(a[i]) - static_cast<double>(b[i])) <= 2.0);
}

TEST_CASE("event files round-trip through CSV and JSON lines") {
  auto spec = small_spec(4, 50, 0.2, 3);
  const auto w = generate(spec);
  std::stringstream csv;
  write_events_csv(csv, w.events);
  ReadReport report;
  CHECK(read_events(csv, &report) == w.events);
  CHECK(report.skipped == 0);

  std::stringstream jsonl;
  write_events_jsonl(jsonl, w.events);
  CHECK(read_events(jsonl) == w.events);

  std::stringstream labels;
  write_labels(labels, w.labels);
  CHECK(read_labels(labels) == w.labels);

  const auto stats = aggregate(w.events).stats;
  std::stringstream st;
  write_token_stats(st, stats);
  CHECK(read_token_stats(st) == stats);
}

TEST_CASE("event reader reports malformed lines by line number") {
  std::stringstream in;
  in << kEventHeader << "\n"
     << "1.000,t1,u1,10.0.0.1,c,0\n"
     << "oops\n"
     << "2.000,t1,u1,10.0.0.300,c,1\n"
     << "\n"
     << "3.000,t1,u1,10.0.0.1,c,2\n";
  ReadReport report;
  const auto events = read_events(in, &report);
  CHECK(events.size() == 2);
  CHECK(report.skipped == 2);
  REQUIRE(report.problems.size() == 2);
  CHECK(report.problems[0].index == 3);
  CHECK(report.problems[1].index == 4);

  std::stringstream bad_header("time,token\n1,2\n");
  CHECK_THROWS_AS(read_events(bad_header), ParseError);
}
