#pragma once

// Closed-form response times for the three content-delivery scenarios and the
// two-class non-preemptive priority countermeasure.
//
// All rates and times share one abstract time unit. Every function is pure.

namespace cdnguard::queueing {

struct QueueParams {
  double lambda = 0.0;  // arrival rate
  double mu = 0.0;      // service rate
  int b = 1;            // burst size: pirate consumers per legitimate request
};

struct ScenarioEval {
  double t_orig = 0.0;   // plain M/M/1, no pirates
  double t_cdn = 0.0;    // pirates replay the token against the CDN
  double t_infra = 0.0;  // pirates fetch once and re-serve from their own servers
};

struct PriorityEconParams {
  double lambda = 0.0;
  double mu = 0.0;
  double q = 0.0;        // legal load is q*lambda/mu, illegal load (1-q)*lambda/mu
  double alpha = 0.0;    // price per unit of response time
  double beta = 0.0;     // illegal price as a fraction of the legal price
  double p_legal = 0.0;  // legal price
};

struct PriorityTimes {
  double t_legal = 0.0;
  double t_illegal = 0.0;
};

// Scenario names used when tagging UnstableQueue errors.
inline constexpr const char* kOrig = "orig";
inline constexpr const char* kCdn = "cdn";
inline constexpr const char* kInfra = "infra";
inline constexpr const char* kPriority = "priority";

// 1 / (mu (1 - rho)), rho = lambda/mu. Ignores b.
double mm1_time(const QueueParams& p);

// (1 + b) / (2 mu (1 - rho)), rho = lambda/mu.
double batch_cdn_time(const QueueParams& p);

// (1 + b) / (2 mu (1 - lambda/(b mu))).
double infra_time(const QueueParams& p);

ScenarioEval evaluate_scenarios(const QueueParams& p);

// Mean queueing delay per class with the legal class served first, no
// preemption and a shared exponential server:
//   W0 = rho/mu, t_legal = W0/(1-rho_l), t_illegal = W0/((1-rho_l)(1-rho_l-rho_i)).
PriorityTimes priority_times(const PriorityEconParams& p);

// alpha (t_illegal - t_legal) / (1 - beta): the legal price below which the
// legal service has the lower total cost alpha*T + price.
double legal_price_threshold(const PriorityEconParams& p);

// p_legal <= legal_price_threshold(p). Ties count as worthwhile.
bool is_legal_worthwhile(const PriorityEconParams& p);

}  // namespace cdnguard::queueing
