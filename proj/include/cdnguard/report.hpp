#pragma once

// Parameter sweeps over the closed forms and request-count histograms, as
// plot-ready CSV / JSON data. Numbers are printed with 6 significant digits.

#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "cdnguard/access_model.hpp"
#include "cdnguard/detect.hpp"
#include "cdnguard/queueing.hpp"
#include "json.hpp"

namespace cdnguard::report {

enum class SweepVariable { Mu, Q, Beta, B };

const char* to_string(SweepVariable v) noexcept;
SweepVariable sweep_variable_from_string(const std::string& s);

struct SweepSpec {
  SweepVariable variable = SweepVariable::Mu;
  double lo = 0.0;
  double hi = 1.0;
  int steps = 2;
  std::vector<double> values;  // explicit grid; overrides lo/hi/steps when non-empty
  queueing::QueueParams queue;         // fixed symbols for scenario sweeps
  queueing::PriorityEconParams econ;   // fixed symbols for price sweeps
  std::vector<double> betas{0.2, 0.3, 0.4};  // one P_l column per beta (q and mu sweeps)
};

// Rows of optional cells; an empty cell is an unstable (or undefined) point.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::optional<double>>> rows;
};

inline constexpr const char* kUnstable = "unstable";

std::string format_number(double x);
std::string to_csv(const Table& table);

// Grid points of a sweep; throws InvalidSweep on a malformed range.
std::vector<double> grid(const SweepSpec& spec);

// Columns x,t_orig,t_cdn,t_infra. variable must be mu or b.
Table sweep_scenarios(const SweepSpec& spec);

// Columns x,P_l_beta<b>... for q and mu sweeps; x,P_l for a beta sweep.
Table sweep_price_threshold(const SweepSpec& spec);

struct Histogram {
  std::vector<double> edges;  // strictly increasing, bins + 1 entries
  std::vector<std::uint64_t> counts;
  std::uint64_t total = 0;
};

// Either a bin count (equal width on [0, max observed]) or explicit edges.
using Binning = std::variant<int, std::vector<double>>;

inline constexpr int kDefaultBins = 50;

// Histogram of per-token request counts. Bins are half-open [e_i, e_i+1)
// except the last, which also holds its right edge. Values outside explicit
// edges are not counted.
Histogram request_histogram(std::span<const access::TokenStats> stats, const Binning& bins = kDefaultBins);

struct ContentHistogram {
  std::string content;
  std::string population;  // "flagged" or "sample"
  Histogram histogram;
};

// (token, day) pairs that were flagged by any rule.
using FlaggedSet = std::set<std::pair<std::string, detect::Day>>;

FlaggedSet flagged_set(std::span<const detect::FlagRecord> flags);

// Per content, the histogram of flagged rows ("flagged") and of the rows of
// 1-in-sample_rate users ("sample"), over shared edges. Default edges span 0
// to the largest count among both populations of that content.
std::vector<ContentHistogram> request_histograms(std::span<const access::TokenStats> stats,
                                                 const FlaggedSet& flagged, const Binning& bins = kDefaultBins,
                                                 std::uint64_t sample_rate = 1);

nlohmann::ordered_json to_json(const ContentHistogram& h);

}  // namespace cdnguard::report
