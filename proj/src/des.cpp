#include "cdnguard/des.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <deque>
#include <exception>
#include <limits>
#include <queue>
#include <thread>

#include <boost/math/distributions/students_t.hpp>
#include <fmt/format.h>

#include "cdnguard/errors.hpp"
#include "cdnguard/rng.hpp"

namespace cdnguard::des {
namespace {

// Sub-stream ids; each random quantity gets its own stream.
constexpr std::uint64_t kArrivalStream = 1;
constexpr std::uint64_t kServiceStream = 2;
constexpr std::uint64_t kClassStream = 3;

enum class EventKind { Arrival, Departure };

struct Event {
  double time;
  std::uint64_t seq;
  EventKind kind;

  // Min-heap on (time, seq).
  bool operator<(const Event& other) const {
    if (time != other.time) return time > other.time;
    return seq > other.seq;
  }
};

struct Customer {
  double arrival_time;
  int cls;
};

struct Accumulator {
  double sum = 0.0;
  std::uint64_t n = 0;
  void add(double x) {
    sum += x;
    ++n;
  }
  double mean() const { return n ? sum / static_cast<double>(n) : std::numeric_limits<double>::quiet_NaN(); }
};

// Half-width of the batch-means interval over the non-empty batches.
double batch_ci(const std::vector<Accumulator>& batches) {
  std::vector<double> means;
  means.reserve(batches.size());
  for (const auto& b : batches) {
    if (b.n > 0) means.push_back(b.mean());
  }
  if (means.size() < 2) return 0.0;
  double grand = 0.0;
  for (double m : means) grand += m;
  grand /= static_cast<double>(means.size());
  double ss = 0.0;
  for (double m : means) ss += (m - grand) * (m - grand);
  const double k = static_cast<double>(means.size());
  const double sd = std::sqrt(ss / (k - 1.0));
  return t95(means.size() - 1) * sd / std::sqrt(k);
}

}  // namespace

const char* to_string(Scenario s) noexcept {
  switch (s) {
    case Scenario::MM1: return "mm1";
    case Scenario::BatchCDN: return "batch-cdn";
    case Scenario::BatchInfra: return "batch-infra";
    case Scenario::Priority: return "priority";
  }
  return "unknown";
}

Scenario scenario_from_string(const std::string& name) {
  for (Scenario s : {Scenario::MM1, Scenario::BatchCDN, Scenario::BatchInfra, Scenario::Priority}) {
    if (name == to_string(s)) return s;
  }
  throw InvalidConfig(fmt::format("unknown scenario '{}' (expected mm1, batch-cdn, batch-infra, priority)", name));
}

double t95(std::size_t dof) {
  if (dof == 0) return std::numeric_limits<double>::infinity();
  boost::math::students_t dist(static_cast<double>(dof));
  return boost::math::quantile(boost::math::complement(dist, 0.025));
}

ArrivalProcess arrival_process(const SimConfig& cfg) {
  ArrivalProcess ap;
  if (cfg.scenario == Scenario::Priority) {
    const auto* p = std::get_if<queueing::PriorityEconParams>(&cfg.params);
    if (!p) throw InvalidConfig("priority scenario needs PriorityEconParams");
    if (!(p->lambda > 0.0) || !(p->mu > 0.0)) throw InvalidParam("lambda and mu must be > 0");
    if (!(p->q >= 0.0 && p->q <= 1.0)) throw InvalidParam(fmt::format("q must be in [0,1], got {}", p->q));
    ap.burst_rate = p->lambda;
    ap.service_rate = p->mu;
    ap.legal_fraction = p->q;
    return ap;
  }
  const auto* p = std::get_if<queueing::QueueParams>(&cfg.params);
  if (!p) throw InvalidConfig(fmt::format("scenario '{}' needs QueueParams", to_string(cfg.scenario)));
  if (!(p->lambda > 0.0) || !(p->mu > 0.0)) throw InvalidParam("lambda and mu must be > 0");
  if (p->b < 1) throw InvalidParam(fmt::format("b must be >= 1, got {}", p->b));
  const double b = p->b;
  ap.service_rate = p->mu;
  switch (cfg.scenario) {
    case Scenario::MM1:
      ap.burst_rate = p->lambda;
      break;
    case Scenario::BatchCDN:
      ap.burst_rate = p->lambda / b;
      ap.burst_size = p->b;
      break;
    case Scenario::BatchInfra:
      ap.burst_rate = p->lambda / (b * b);
      ap.burst_size = p->b;
      break;
    case Scenario::Priority:
      break;
  }
  return ap;
}

SimResult simulate(const SimConfig& cfg) {
  const ArrivalProcess ap = arrival_process(cfg);
  const double load = ap.burst_rate * ap.burst_size / ap.service_rate;
  if (!(load < 1.0)) throw UnstableQueue(to_string(cfg.scenario), load);
  if (cfg.arrivals == 0) throw InvalidConfig("arrivals must be >= 1");
  if (cfg.batches < 2) throw InvalidConfig(fmt::format("batches must be >= 2, got {}", cfg.batches));

  const std::uint64_t total = cfg.arrivals * static_cast<std::uint64_t>(ap.burst_size);
  const std::uint64_t warmup = cfg.warmup.value_or(total / 100);
  if (warmup >= total) {
    throw InvalidConfig(fmt::format("warmup {} must be below the customer count {}", warmup, total));
  }
  const std::uint64_t counted = total - warmup;
  const auto n_batches = static_cast<std::uint64_t>(cfg.batches);
  const bool priority = cfg.scenario == Scenario::Priority;

  rng::Stream arrival_rng(cfg.seed, kArrivalStream);
  rng::Stream service_rng(cfg.seed, kServiceStream);
  rng::Stream class_rng(cfg.seed, kClassStream);

  std::priority_queue<Event> calendar;
  std::uint64_t seq = 0;
  std::array<std::deque<Customer>, 2> waiting;  // [legal, illegal]; non-priority uses [0]
  bool busy = false;
  Customer in_service{};
  double service_start = 0.0;

  std::vector<Accumulator> system_batches(n_batches), wait_batches(n_batches);
  std::array<std::vector<Accumulator>, 2> class_batches{std::vector<Accumulator>(n_batches),
                                                        std::vector<Accumulator>(n_batches)};
  Accumulator system_all, wait_all;
  std::array<Accumulator, 2> class_all;

  std::uint64_t bursts_generated = 0;
  std::uint64_t departures = 0;
  std::uint64_t in_system = 0;
  bool measuring = warmup == 0;
  double window_start = 0.0;
  double last_time = 0.0;
  double area = 0.0;
  double busy_area = 0.0;
  std::uint64_t window_arrivals = 0;

  auto start_service = [&](double now) {
    auto& queue = !waiting[0].empty() ? waiting[0] : waiting[1];
    in_service = queue.front();
    queue.pop_front();
    busy = true;
    service_start = now;
    calendar.push({now + service_rng.exponential(ap.service_rate), seq++, EventKind::Departure});
  };

  calendar.push({arrival_rng.exponential(ap.burst_rate), seq++, EventKind::Arrival});
  bursts_generated = 1;

  while (!calendar.empty()) {
    const Event ev = calendar.top();
    calendar.pop();
    if (measuring) {
      const double dt = ev.time - last_time;
      area += static_cast<double>(in_system) * dt;
      if (busy) busy_area += dt;
    }
    last_time = ev.time;

    if (ev.kind == EventKind::Arrival) {
      for (int k = 0; k < ap.burst_size; ++k) {
        int cls = 0;
        if (priority) cls = class_rng.bernoulli(ap.legal_fraction) ? 0 : 1;
        waiting[static_cast<std::size_t>(cls)].push_back({ev.time, cls});
      }
      in_system += static_cast<std::uint64_t>(ap.burst_size);
      if (measuring) window_arrivals += static_cast<std::uint64_t>(ap.burst_size);
      if (bursts_generated < cfg.arrivals) {
        calendar.push({ev.time + arrival_rng.exponential(ap.burst_rate), seq++, EventKind::Arrival});
        ++bursts_generated;
      }
      if (!busy) start_service(ev.time);
      continue;
    }

    // Departure.
    busy = false;
    --in_system;
    if (departures >= warmup) {
      const std::uint64_t idx = departures - warmup;
      const std::size_t batch = static_cast<std::size_t>(idx * n_batches / counted);
      const double wait = service_start - in_service.arrival_time;
      const double sojourn = ev.time - in_service.arrival_time;
      system_batches[batch].add(sojourn);
      wait_batches[batch].add(wait);
      system_all.add(sojourn);
      wait_all.add(wait);
      const auto cls = static_cast<std::size_t>(in_service.cls);
      class_batches[cls][batch].add(wait);
      class_all[cls].add(wait);
    }
    ++departures;
    if (departures == warmup) {
      measuring = true;
      window_start = ev.time;
    }
    if (!waiting[0].empty() || !waiting[1].empty()) start_service(ev.time);
  }

  SimResult r;
  r.completed = system_all.n;
  r.mean_system_time = system_all.mean();
  r.mean_wait = wait_all.mean();
  r.ci95_half_width = batch_ci(system_batches);
  r.wait_ci95_half_width = batch_ci(wait_batches);
  const double window = last_time - window_start;
  if (window > 0.0) {
    r.mean_in_system = area / window;
    r.arrival_rate = static_cast<double>(window_arrivals) / window;
    r.utilisation = busy_area / window;
  }
  if (priority) {
    std::array<ClassResult, 2> per_class;
    for (std::size_t c = 0; c < 2; ++c) {
      per_class[c].completed = class_all[c].n;
      per_class[c].mean_wait = class_all[c].mean();
      per_class[c].ci95_half_width = batch_ci(class_batches[c]);
    }
    r.per_class = per_class;
  }
  return r;
}

std::vector<SimResult> replicate(const SimConfig& cfg, std::size_t replications, unsigned threads) {
  if (replications == 0) throw InvalidConfig("replications must be >= 1");
  std::vector<SimResult> results(replications);
  std::vector<std::exception_ptr> errors(replications);
  std::atomic<std::size_t> next{0};

  auto worker = [&] {
    for (std::size_t i = next++; i < replications; i = next++) {
      SimConfig rep = cfg;
      rep.seed = cfg.seed + i;
      try {
        results[i] = simulate(rep);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };

  const unsigned n_threads = std::clamp<unsigned>(threads, 1, static_cast<unsigned>(replications));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(n_threads);
    for (unsigned t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return results;
}

}  // namespace cdnguard::des
