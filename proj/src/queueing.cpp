#include "cdnguard/queueing.hpp"

#include <cmath>

#include <fmt/format.h>

#include "cdnguard/errors.hpp"

namespace cdnguard {

UnstableQueue::UnstableQueue(std::string scenario, double load)
    : Error(fmt::format("UnstableQueue: scenario '{}' has load {} >= 1", scenario, load)),
      scenario_(std::move(scenario)),
      load_(load) {}

namespace queueing {
namespace {

void check_rates(double lambda, double mu) {
  if (!(std::isfinite(lambda) && lambda > 0.0)) {
    throw InvalidParam(fmt::format("lambda must be finite and > 0, got {}", lambda));
  }
  if (!(std::isfinite(mu) && mu > 0.0)) {
    throw InvalidParam(fmt::format("mu must be finite and > 0, got {}", mu));
  }
}

void check(const QueueParams& p) {
  check_rates(p.lambda, p.mu);
  if (p.b < 1) throw InvalidParam(fmt::format("b must be >= 1, got {}", p.b));
}

void check(const PriorityEconParams& p) {
  check_rates(p.lambda, p.mu);
  if (!(p.q >= 0.0 && p.q <= 1.0)) throw InvalidParam(fmt::format("q must be in [0,1], got {}", p.q));
  if (!(std::isfinite(p.alpha) && p.alpha >= 0.0)) {
    throw InvalidParam(fmt::format("alpha must be >= 0, got {}", p.alpha));
  }
}

double stable_load(double load, const char* scenario) {
  if (!(load < 1.0)) throw UnstableQueue(scenario, load);
  return load;
}

}  // namespace

double mm1_time(const QueueParams& p) {
  check(p);
  const double rho = stable_load(p.lambda / p.mu, kOrig);
  return 1.0 / (p.mu * (1.0 - rho));
}

double batch_cdn_time(const QueueParams& p) {
  check(p);
  const double rho = stable_load(p.lambda / p.mu, kCdn);
  return (1.0 + p.b) / (2.0 * p.mu * (1.0 - rho));
}

double infra_time(const QueueParams& p) {
  check(p);
  const double load = stable_load(p.lambda / (p.b * p.mu), kInfra);
  return (1.0 + p.b) / (2.0 * p.mu * (1.0 - load));
}

ScenarioEval evaluate_scenarios(const QueueParams& p) {
  return {mm1_time(p), batch_cdn_time(p), infra_time(p)};
}

PriorityTimes priority_times(const PriorityEconParams& p) {
  check(p);
  const double rho = stable_load(p.lambda / p.mu, kPriority);
  const double rho_legal = p.q * p.lambda / p.mu;
  const double rho_illegal = (1.0 - p.q) * p.lambda / p.mu;
  const double residual = rho / p.mu;
  const double t_legal = residual / (1.0 - rho_legal);
  const double t_illegal = residual / ((1.0 - rho_legal) * (1.0 - rho_legal - rho_illegal));
  return {t_legal, t_illegal};
}

double legal_price_threshold(const PriorityEconParams& p) {
  if (!(p.beta >= 0.0 && p.beta < 1.0)) {
    throw InvalidParam(fmt::format("beta must be in [0,1), got {}", p.beta));
  }
  const PriorityTimes t = priority_times(p);
  return p.alpha * (t.t_illegal - t.t_legal) / (1.0 - p.beta);
}

bool is_legal_worthwhile(const PriorityEconParams& p) {
  if (!(std::isfinite(p.p_legal) && p.p_legal >= 0.0)) {
    throw InvalidParam(fmt::format("p_legal must be >= 0, got {}", p.p_legal));
  }
  return p.p_legal <= legal_price_threshold(p);
}

}  // namespace queueing
}  // namespace cdnguard
