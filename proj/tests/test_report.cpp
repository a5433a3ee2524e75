#include "doctest.h"

#include <algorithm>
#include <numeric>

#include "cdnguard/access_model.hpp"
#include "cdnguard/errors.hpp"
#include "cdnguard/queueing.hpp"
#include "cdnguard/report.hpp"
#include "cdnguard/rng.hpp"

using namespace cdnguard;
using namespace cdnguard::report;

namespace {

SweepSpec mu_sweep(int b) {
  SweepSpec s;
  s.variable = SweepVariable::Mu;
  s.lo = 0.6;
  s.hi = 4.0;
  s.steps = 69;
  s.queue = {0.5, 0.6, b};
  return s;
}

SweepSpec price_sweep(SweepVariable v, double lo, double hi) {
  SweepSpec s;
  s.variable = v;
  s.lo = lo;
  s.hi = hi;
  s.steps = 31;
  s.econ = {0.5, 1.0, 0.1, 2.0, 0.2, 0.0};
  return s;
}

std::vector<double> column(const Table& t, std::size_t c) {
  std::vector<double> out;
  for (const auto& r : t.rows) {
    REQUIRE(r[c].has_value());
    out.push_back(*r[c]);
  }
  return out;
}

bool strictly_decreasing(const std::vector<double>& v) {
  for (std::size_t i = 1; i < v.size(); ++i)
    if (!(v[i] < v[i - 1])) return false;
  return true;
}

bool strictly_increasing(const std::vector<double>& v) {
  for (std::size_t i = 1; i < v.size(); ++i)
    if (!(v[i] > v[i - 1])) return false;
  return true;
}

access::TokenStats stat(std::string token, std::uint64_t requests, std::string content = "live",
                        double start = 1704067200.0) {
  return {token, "u-" + token, content, start, start + 86400.0, 1, requests};
}

}  // namespace

TEST_CASE("grid construction") {
  SweepSpec s;
  s.lo = 1;
  s.hi = 2;
  s.steps = 3;
  CHECK(grid(s) == std::vector<double>{1.0, 1.5, 2.0});
  s.values = {4, 2};
  CHECK(grid(s) == std::vector<double>{4, 2});
  s.values.clear();
  s.steps = 1;
  CHECK_THROWS_AS(grid(s), InvalidSweep);
  s.steps = 3;
  s.hi = 1;
  CHECK_THROWS_AS(grid(s), InvalidSweep);
}

TEST_CASE("mu sweep: all curves decrease and the gap shrinks") {
  const auto t = sweep_scenarios(mu_sweep(2));
  CHECK(t.header == std::vector<std::string>{"x", "t_orig", "t_cdn", "t_infra"});
  const auto orig = column(t, 1), cdn = column(t, 2), infra = column(t, 3);
  CHECK(strictly_decreasing(orig));
  CHECK(strictly_decreasing(cdn));
  CHECK(strictly_decreasing(infra));
  std::vector<double> gap(orig.size());
  for (std::size_t i = 0; i < gap.size(); ++i) gap[i] = cdn[i] - orig[i];
  CHECK(strictly_decreasing(gap));
}

TEST_CASE("b sweep widens the gap between cdn and orig") {
  SweepSpec s;
  s.variable = SweepVariable::B;
  s.values = {2, 4, 10};
  s.queue = {0.5, 1.0, 1};
  const auto t = sweep_scenarios(s);
  REQUIRE(t.rows.size() == 3);
  std::vector<double> gap;
  for (const auto& r : t.rows) gap.push_back(*r[2] - *r[1]);
  CHECK(strictly_increasing(gap));

  s.values = {2.5};
  CHECK_THROWS_AS(sweep_scenarios(s), InvalidSweep);
  s.variable = SweepVariable::Q;
  s.values = {0.1};
  CHECK_THROWS_AS(sweep_scenarios(s), InvalidSweep);
}

TEST_CASE("sweeps crossing the stability boundary emit unstable cells") {
  SweepSpec s;
  s.variable = SweepVariable::Mu;
  s.values = {0.1, 0.4, 0.5, 1.0};
  s.queue = {0.5, 1.0, 4};
  const auto t = sweep_scenarios(s);
  // mu=0.1: every scenario unstable. mu=0.4, 0.5: infra stable only (lambda/(b mu) < 1).
  CHECK_FALSE(t.rows[0][1].has_value());
  CHECK_FALSE(t.rows[0][3].has_value());
  CHECK_FALSE(t.rows[1][1].has_value());
  CHECK_FALSE(t.rows[1][2].has_value());
  CHECK(t.rows[1][3].has_value());
  CHECK_FALSE(t.rows[2][1].has_value());
  CHECK(t.rows[3][1].has_value());
  const auto csv = to_csv(t);
  CHECK(csv.rfind("x,t_orig,t_cdn,t_infra\n0.1,unstable,unstable,unstable\n", 0) == 0);
}

TEST_CASE("sweep cells agree with direct closed-form calls") {
  for (int b : {1, 2, 4, 10}) {
    const auto spec = mu_sweep(b);
    const auto t = sweep_scenarios(spec);
    for (const auto& r : t.rows) {
      const queueing::QueueParams p{0.5, *r[0], b};
      CHECK(*r[1] == queueing::mm1_time(p));
      CHECK(*r[2] == queueing::batch_cdn_time(p));
      CHECK(*r[3] == queueing::infra_time(p));
    }
  }
  const auto pt = sweep_price_threshold(price_sweep(SweepVariable::Q, 0.0, 0.3));
  for (const auto& r : pt.rows) {
    for (std::size_t c = 0; c < 3; ++c) {
      queueing::PriorityEconParams p{0.5, 1.0, *r[0], 2.0, std::vector{0.2, 0.3, 0.4}[c], 0.0};
      CHECK(*r[c + 1] == queueing::legal_price_threshold(p));
    }
  }
}

TEST_CASE("price threshold sweeps") {
  const auto q = sweep_price_threshold(price_sweep(SweepVariable::Q, 0.0, 0.3));
  CHECK(q.header == std::vector<std::string>{"x", "P_l_beta0.2", "P_l_beta0.3", "P_l_beta0.4"});
  for (std::size_t c = 1; c <= 3; ++c) CHECK(strictly_increasing(column(q, c)));
  for (const auto& r : q.rows) {
    CHECK(*r[1] < *r[2]);
    CHECK(*r[2] < *r[3]);
  }
  CHECK(*q.rows[0][1] == doctest::Approx(1.25).epsilon(1e-12));

  const auto mu = sweep_price_threshold(price_sweep(SweepVariable::Mu, 0.5 + 1e-9, 2.0));
  for (std::size_t c = 1; c <= 3; ++c) CHECK(strictly_decreasing(column(mu, c)));

  auto bs = price_sweep(SweepVariable::Beta, 0.0, 1.0);
  bs.steps = 11;
  const auto beta = sweep_price_threshold(bs);
  CHECK(beta.header == std::vector<std::string>{"x", "P_l"});
  CHECK_FALSE(beta.rows.back()[1].has_value());
  std::vector<double> finite;
  for (std::size_t i = 0; i + 1 < beta.rows.size(); ++i) finite.push_back(*beta.rows[i][1]);
  CHECK(strictly_increasing(finite));
  CHECK(to_csv(beta).ends_with("1,unstable\n"));

  CHECK_THROWS_AS(sweep_price_threshold(price_sweep(SweepVariable::B, 1, 2)), InvalidSweep);
}

TEST_CASE("sweep CSV is byte-identical across runs") {
  CHECK(to_csv(sweep_scenarios(mu_sweep(4))) == to_csv(sweep_scenarios(mu_sweep(4))));
  CHECK(format_number(2.0) == "2");
  CHECK(format_number(1.0 / 3.0) == "0.333333");
  CHECK(format_number(0.6451612903225806) == "0.645161");
}

TEST_CASE("histogram examples") {
  const auto empty = request_histogram(std::vector<access::TokenStats>{});
  CHECK(empty.counts.size() == kDefaultBins);
  CHECK(empty.total == 0);
  CHECK(std::all_of(empty.counts.begin(), empty.counts.end(), [](auto c) { return c == 0; }));
  CHECK(empty.edges.front() == 0.0);
  CHECK(empty.edges.back() == 1.0);

  const std::vector stats{stat("a", 0), stat("b", 5), stat("c", 10), stat("d", 10)};
  const auto h = request_histogram(stats, 2);
  CHECK(h.edges == std::vector<double>{0, 5, 10});
  CHECK(h.counts == std::vector<std::uint64_t>{1, 3});
  CHECK(h.total == 4);

  const auto e = request_histogram(stats, std::vector<double>{1, 6, 9});
  CHECK(e.counts == std::vector<std::uint64_t>{1, 0});
  CHECK(e.total == 1);

  CHECK_THROWS_AS(request_histogram(stats, 0), InvalidParam);
  CHECK_THROWS_AS(request_histogram(stats, std::vector<double>{1, 1}), InvalidParam);
}

TEST_CASE("histogram counts are permutation-invariant") {
  rng::Stream r(5);
  std::vector<access::TokenStats> stats;
  for (int i = 0; i < 500; ++i) stats.push_back(stat("t" + std::to_string(i), r.below(1000)));
  const auto ref = request_histogram(stats, 17);
  for (int round = 0; round < 5; ++round) {
    for (std::size_t i = stats.size() - 1; i > 0; --i) std::swap(stats[i], stats[r.below(i + 1)]);
    const auto h = request_histogram(stats, 17);
    CHECK(h.counts == ref.counts);
    CHECK(h.edges == ref.edges);
  }
}

TEST_CASE("flagged histogram mass sits near b times the honest mode") {
  access::WorkloadSpec spec;
  spec.seed = 7;
  spec.n_users = 5000;
  spec.pirate_fraction = 0.1;
  spec.b = 4;
  spec.contents = {{"live", 10.0, 600.0, 0.8, 1.2}};
  const auto w = access::generate(spec);
  const auto stats = access::aggregate(w.events).stats;
  detect::DetectionConfig cfg;
  cfg.ip_threshold = 2;
  const auto flagged = flagged_set(detect::flag_by_ip(stats, cfg));
  const auto hs = request_histograms(stats, flagged, 60, 10);
  REQUIRE(hs.size() == 2);
  CHECK(hs[0].population == "flagged");
  CHECK(hs[1].population == "sample");
  CHECK(hs[0].histogram.edges == hs[1].histogram.edges);

  auto peak = [](const Histogram& h) {
    const auto i = static_cast<std::size_t>(std::max_element(h.counts.begin(), h.counts.end()) - h.counts.begin());
    return (h.edges[i] + h.edges[i + 1]) / 2;
  };
  const double ratio = peak(hs[0].histogram) / peak(hs[1].histogram);
  CHECK(ratio > 3.0);
  CHECK(ratio < 5.0);

  const auto j = to_json(hs[0]);
  std::vector<std::string> keys;
  for (const auto& [k, v] : j.items()) keys.push_back(k);
  CHECK(keys == std::vector<std::string>{"content", "edges", "counts", "population"});
}

TEST_CASE("per-content histograms land in different ranges") {
  access::WorkloadSpec spec;
  spec.seed = 3;
  spec.n_users = 4000;
  spec.contents = {{"fine", 4.0, 600.0, 0.8, 1.2}, {"coarse", 10.0, 600.0, 0.8, 1.2}};
  const auto stats = access::aggregate(access::generate(spec).events).stats;
  const auto hs = request_histograms(stats, {}, 40, 1);
  REQUIRE(hs.size() == 4);
  CHECK(hs[0].content == "coarse");
  CHECK(hs[2].content == "fine");
  CHECK(hs[0].histogram.edges.back() < hs[2].histogram.edges.back());
  CHECK(hs[1].histogram.total + hs[3].histogram.total == stats.size());
}
