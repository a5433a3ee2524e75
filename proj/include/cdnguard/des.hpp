#pragma once

// Event-driven single-server simulator used as an independent check of the
// closed forms in queueing.hpp.
//
// Arrival processes, per scenario:
//   MM1         Poisson arrivals at rate lambda, one customer each.
//   BatchCDN    customers arrive at rate lambda in bursts of b
//               (bursts are Poisson with rate lambda/b).
//   BatchInfra  customers arrive at rate lambda/b in bursts of b
//               (bursts are Poisson with rate lambda/b^2).
//   Priority    Poisson arrivals at rate lambda; each is legal with
//               probability q, else illegal. Legal customers are served first,
//               without preemption, FCFS within a class.
// Service is exponential with rate mu. Burst members queue FCFS in a fixed order.
//
// With this parameterization the server utilisation equals the load term in
// the matching closed form, so each closed form is the mean time a customer
// spends in the system (MM1, BatchCDN, BatchInfra) or in the queue (Priority).

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "cdnguard/queueing.hpp"

namespace cdnguard::des {

enum class Scenario { MM1, BatchCDN, BatchInfra, Priority };

const char* to_string(Scenario s) noexcept;
Scenario scenario_from_string(const std::string& name);

struct SimConfig {
  Scenario scenario = Scenario::MM1;
  std::variant<queueing::QueueParams, queueing::PriorityEconParams> params;
  std::uint64_t seed = 0;
  std::uint64_t arrivals = 0;  // arrival events (bursts for batch scenarios)
  // Completed customers discarded before statistics start. Defaults to 1% of
  // the total number of customers.
  std::optional<std::uint64_t> warmup;
  int batches = 20;  // batch-means batches for the confidence intervals
};

struct ClassResult {
  double mean_wait = 0.0;  // NaN when completed == 0
  double ci95_half_width = 0.0;
  std::uint64_t completed = 0;
};

struct SimResult {
  double mean_wait = 0.0;         // time in queue, excluding service
  double mean_system_time = 0.0;  // time in queue plus service
  double ci95_half_width = 0.0;   // for mean_system_time
  double wait_ci95_half_width = 0.0;
  std::uint64_t completed = 0;
  // Time-averaged number in system and customer arrival rate over the
  // measurement window; used for the Little's-law self-check.
  double mean_in_system = 0.0;
  double arrival_rate = 0.0;
  double utilisation = 0.0;
  std::optional<std::array<ClassResult, 2>> per_class;  // [legal, illegal]
};

// Customers per arrival event and burst arrival rate for a configuration.
struct ArrivalProcess {
  double burst_rate = 0.0;
  int burst_size = 1;
  double service_rate = 0.0;
  double legal_fraction = 1.0;  // Priority only
};

ArrivalProcess arrival_process(const SimConfig& cfg);

SimResult simulate(const SimConfig& cfg);

// Runs `replications` copies with seeds cfg.seed, cfg.seed + 1, ... . Results
// are ordered by replication index regardless of how many threads run them.
std::vector<SimResult> replicate(const SimConfig& cfg, std::size_t replications,
                                 unsigned threads = 1);

// Two-sided 95% Student-t quantile for `dof` degrees of freedom.
double t95(std::size_t dof);

}  // namespace cdnguard::des
