#include "cdnguard/report.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include <fmt/format.h>

#include "cdnguard/errors.hpp"

namespace cdnguard::report {
namespace {

template <typename F>
std::optional<double> stable_or_empty(F&& f) {
  try {
    return f();
  } catch (const UnstableQueue&) {
    return std::nullopt;
  }
}

int as_burst_size(double x) {
  const double r = std::round(x);
  if (std::abs(x - r) > 1e-9 || r < 1.0) {
    throw InvalidSweep(fmt::format("b must be an integer >= 1, got {}", x));
  }
  return static_cast<int>(r);
}

std::vector<double> default_edges(std::uint64_t max_value, int bins) {
  if (bins < 1) throw InvalidParam(fmt::format("bins must be >= 1, got {}", bins));
  const double hi = max_value > 0 ? static_cast<double>(max_value) : 1.0;
  std::vector<double> edges(static_cast<std::size_t>(bins) + 1);
  for (int i = 0; i <= bins; ++i) edges[static_cast<std::size_t>(i)] = hi * i / bins;
  return edges;
}

void check_edges(const std::vector<double>& edges) {
  if (edges.size() < 2) throw InvalidParam("explicit histogram edges need at least 2 entries");
  for (std::size_t i = 1; i < edges.size(); ++i) {
    if (!(edges[i] > edges[i - 1])) throw InvalidParam("histogram edges must be strictly increasing");
  }
}

Histogram fill(std::span<const access::TokenStats> stats, std::vector<double> edges) {
  Histogram h;
  h.counts.assign(edges.size() - 1, 0);
  h.edges = std::move(edges);
  for (const auto& s : stats) {
    const auto v = static_cast<double>(s.requests);
    if (v < h.edges.front() || v > h.edges.back()) continue;
    auto it = std::upper_bound(h.edges.begin(), h.edges.end(), v);
    std::size_t bin = static_cast<std::size_t>(it - h.edges.begin()) - 1;
    bin = std::min(bin, h.counts.size() - 1);
    ++h.counts[bin];
    ++h.total;
  }
  return h;
}

std::vector<double> resolve_edges(std::span<const access::TokenStats> stats, const Binning& bins) {
  if (const auto* explicit_edges = std::get_if<std::vector<double>>(&bins)) {
    check_edges(*explicit_edges);
    return *explicit_edges;
  }
  std::uint64_t max_value = 0;
  for (const auto& s : stats) max_value = std::max(max_value, s.requests);
  return default_edges(max_value, std::get<int>(bins));
}

}  // namespace

const char* to_string(SweepVariable v) noexcept {
  switch (v) {
    case SweepVariable::Mu: return "mu";
    case SweepVariable::Q: return "q";
    case SweepVariable::Beta: return "beta";
    case SweepVariable::B: return "b";
  }
  return "unknown";
}

SweepVariable sweep_variable_from_string(const std::string& s) {
  for (auto v : {SweepVariable::Mu, SweepVariable::Q, SweepVariable::Beta, SweepVariable::B}) {
    if (s == to_string(v)) return v;
  }
  throw InvalidSweep(fmt::format("unknown sweep variable '{}' (expected mu, q, beta, b)", s));
}

std::string format_number(double x) { return fmt::format("{:.6g}", x); }

std::string to_csv(const Table& table) {
  std::string out;
  for (std::size_t i = 0; i < table.header.size(); ++i) {
    if (i) out += ',';
    out += table.header[i];
  }
  out += '\n';
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out += ',';
      out += row[i] ? format_number(*row[i]) : kUnstable;
    }
    out += '\n';
  }
  return out;
}

std::vector<double> grid(const SweepSpec& spec) {
  if (!spec.values.empty()) {
    for (double v : spec.values) {
      if (!std::isfinite(v)) throw InvalidSweep("sweep values must be finite");
    }
    return spec.values;
  }
  if (!(std::isfinite(spec.lo) && std::isfinite(spec.hi) && spec.lo < spec.hi)) {
    throw InvalidSweep(fmt::format("need lo < hi, got lo={} hi={}", spec.lo, spec.hi));
  }
  if (spec.steps < 2) throw InvalidSweep(fmt::format("steps must be >= 2, got {}", spec.steps));
  std::vector<double> xs(static_cast<std::size_t>(spec.steps));
  for (int i = 0; i < spec.steps; ++i) {
    xs[static_cast<std::size_t>(i)] = spec.lo + (spec.hi - spec.lo) * i / (spec.steps - 1);
  }
  xs.back() = spec.hi;
  return xs;
}

Table sweep_scenarios(const SweepSpec& spec) {
  if (spec.variable != SweepVariable::Mu && spec.variable != SweepVariable::B) {
    throw InvalidSweep(fmt::format("scenario sweeps vary mu or b, not {}", to_string(spec.variable)));
  }
  Table t;
  t.header = {"x", "t_orig", "t_cdn", "t_infra"};
  for (double x : grid(spec)) {
    queueing::QueueParams p = spec.queue;
    if (spec.variable == SweepVariable::Mu) {
      p.mu = x;
    } else {
      p.b = as_burst_size(x);
    }
    try {
      t.rows.push_back({x, stable_or_empty([&] { return queueing::mm1_time(p); }),
                        stable_or_empty([&] { return queueing::batch_cdn_time(p); }),
                        stable_or_empty([&] { return queueing::infra_time(p); })});
    } catch (const InvalidParam& e) {
      throw InvalidSweep(fmt::format("x={}: {}", x, e.what()));
    }
  }
  return t;
}

Table sweep_price_threshold(const SweepSpec& spec) {
  if (spec.variable == SweepVariable::B) throw InvalidSweep("price sweeps vary q, beta or mu, not b");
  Table t;
  t.header = {"x"};
  std::vector<double> betas;
  if (spec.variable == SweepVariable::Beta) {
    t.header.emplace_back("P_l");
  } else {
    if (spec.betas.empty()) throw InvalidSweep("at least one beta is required");
    betas = spec.betas;
    for (double beta : betas) t.header.push_back("P_l_beta" + format_number(beta));
  }
  for (double x : grid(spec)) {
    queueing::PriorityEconParams p = spec.econ;
    std::vector<std::optional<double>> row{x};
    try {
      if (spec.variable == SweepVariable::Beta) {
        if (x < 0.0) throw InvalidSweep(fmt::format("beta must be >= 0, got {}", x));
        p.beta = x;
        if (x >= 1.0) {
          row.emplace_back(std::nullopt);  // the threshold diverges
        } else {
          row.push_back(stable_or_empty([&] { return queueing::legal_price_threshold(p); }));
        }
      } else {
        if (spec.variable == SweepVariable::Q) p.q = x;
        if (spec.variable == SweepVariable::Mu) p.mu = x;
        for (double beta : betas) {
          p.beta = beta;
          if (beta >= 1.0) {
            row.emplace_back(std::nullopt);
          } else {
            row.push_back(stable_or_empty([&] { return queueing::legal_price_threshold(p); }));
          }
        }
      }
    } catch (const InvalidParam& e) {
      throw InvalidSweep(fmt::format("x={}: {}", x, e.what()));
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

Histogram request_histogram(std::span<const access::TokenStats> stats, const Binning& bins) {
  return fill(stats, resolve_edges(stats, bins));
}

FlaggedSet flagged_set(std::span<const detect::FlagRecord> flags) {
  FlaggedSet out;
  for (const auto& f : flags) out.emplace(f.token, f.day);
  return out;
}

std::vector<ContentHistogram> request_histograms(std::span<const access::TokenStats> stats,
                                                 const FlaggedSet& flagged, const Binning& bins,
                                                 std::uint64_t sample_rate) {
  std::map<std::string, std::vector<access::TokenStats>> union_rows, hits, sampled;
  for (const auto& s : stats) {
    const bool hit = flagged.contains({s.token, detect::day_of(s.window_start)});
    const bool in_sample = access::is_sampled(s.user, sample_rate);
    if (hit) hits[s.content].push_back(s);
    if (in_sample) sampled[s.content].push_back(s);
    if (hit || in_sample) union_rows[s.content].push_back(s);
  }
  std::vector<ContentHistogram> out;
  for (const auto& [content, rows] : union_rows) {
    const auto edges = resolve_edges(rows, bins);
    out.push_back({content, "flagged", fill(hits[content], edges)});
    out.push_back({content, "sample", fill(sampled[content], edges)});
  }
  return out;
}

nlohmann::ordered_json to_json(const ContentHistogram& h) {
  nlohmann::ordered_json j;
  j["content"] = h.content;
  j["edges"] = h.histogram.edges;
  j["counts"] = h.histogram.counts;
  j["population"] = h.population;
  return j;
}

}  // namespace cdnguard::report
