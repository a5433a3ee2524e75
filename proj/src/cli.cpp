#include "cdnguard/cli.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "CLI11.hpp"
#include "cdnguard/access_io.hpp"
#include "cdnguard/config.hpp"
#include "cdnguard/des.hpp"
#include "cdnguard/detect.hpp"
#include "cdnguard/errors.hpp"
#include "cdnguard/queueing.hpp"
#include "cdnguard/report.hpp"
#include "json.hpp"

namespace cdnguard::cli {
namespace {

using nlohmann::json;

// Raised for flag combinations CLI11 cannot express; maps to exit 1.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(fmt::format("cannot open '{}'", path));
  return in;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError(fmt::format("cannot write '{}'", path));
  return out;
}

// Writes `text` to `path`, or to `out` when path is empty or "-".
void emit(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << text;
    return;
  }
  auto f = open_out(path);
  f << text;
}

json read_json_file(const std::string& path) {
  auto in = open_in(path);
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) throw ParseError(fmt::format("'{}' is not valid JSON", path));
  return j;
}

json null_if_nan(double x) { return std::isnan(x) ? json(nullptr) : json(x); }

json to_json(const des::SimResult& r) {
  json j;
  j["mean_wait"] = null_if_nan(r.mean_wait);
  j["mean_system_time"] = null_if_nan(r.mean_system_time);
  j["ci95_half_width"] = r.ci95_half_width;
  j["wait_ci95_half_width"] = r.wait_ci95_half_width;
  j["completed"] = r.completed;
  j["mean_in_system"] = r.mean_in_system;
  j["arrival_rate"] = r.arrival_rate;
  j["utilisation"] = r.utilisation;
  if (r.per_class) {
    const char* names[] = {"legal", "illegal"};
    for (std::size_t c = 0; c < 2; ++c) {
      const auto& pc = (*r.per_class)[c];
      j["per_class"][names[c]] = {{"mean_wait", null_if_nan(pc.mean_wait)},
                                  {"ci95_half_width", pc.ci95_half_width},
                                  {"completed", pc.completed}};
    }
  }
  return j;
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

void report_skips(const std::string& what, std::uint64_t skipped, const std::vector<access::MalformedRecord>& problems,
                  std::ostream& err) {
  if (skipped == 0) return;
  fmt::print(err, "{}: skipped {} malformed record(s)\n", what, skipped);
  for (const auto& p : problems) fmt::print(err, "  line {}: {}\n", p.index, p.reason);
}

// ---- model ------------------------------------------------------------------

struct ModelEvalArgs {
  double lambda = 0, mu = 0;
  int b = 1;
  std::optional<double> q, alpha, beta, p_legal;
};

int model_eval(const ModelEvalArgs& a, std::ostream& out) {
  if ((a.alpha || a.beta || a.p_legal) && !a.q) throw UsageError("--alpha, --beta and --p-legal need --q");
  if (a.p_legal && !a.alpha) throw UsageError("--p-legal needs --alpha");
  json j;
  j["params"] = {{"lambda", a.lambda}, {"mu", a.mu}, {"b", a.b}};
  const auto s = queueing::evaluate_scenarios({a.lambda, a.mu, a.b});
  j["scenarios"] = {{"t_orig", s.t_orig}, {"t_cdn", s.t_cdn}, {"t_infra", s.t_infra}};
  if (a.q) {
    queueing::PriorityEconParams p{a.lambda, a.mu, *a.q, a.alpha.value_or(0.0), a.beta.value_or(0.0),
                                   a.p_legal.value_or(0.0)};
    j["params"]["q"] = p.q;
    const auto t = queueing::priority_times(p);
    j["priority"] = {{"t_legal", t.t_legal}, {"t_illegal", t.t_illegal}};
    if (a.alpha) {
      j["params"]["alpha"] = p.alpha;
      j["params"]["beta"] = p.beta;
      j["legal_price_threshold"] = queueing::legal_price_threshold(p);
      if (a.p_legal) {
        j["params"]["p_legal"] = p.p_legal;
        j["legal_worthwhile"] = queueing::is_legal_worthwhile(p);
      }
    }
  }
  out << dump(j);
  return kOk;
}

struct ModelSweepArgs {
  std::string var;
  std::string kind;
  double lo = 0, hi = 0;
  int steps = 100;
  std::vector<double> values;
  double lambda = 0.5, mu = 1.0;
  int b = 1;
  double q = 0.0, alpha = 2.0, beta = 0.0;
  std::vector<double> betas{0.2, 0.3, 0.4};
  std::string out_path;
};

int model_sweep(const ModelSweepArgs& a, std::ostream& out) {
  report::SweepSpec spec;
  spec.variable = report::sweep_variable_from_string(a.var);
  spec.lo = a.lo;
  spec.hi = a.hi;
  spec.steps = a.steps;
  spec.values = a.values;
  spec.queue = {a.lambda, a.mu, a.b};
  spec.econ = {a.lambda, a.mu, a.q, a.alpha, a.beta, 0.0};
  spec.betas = a.betas;
  std::string kind = a.kind;
  if (kind.empty()) {
    kind = (spec.variable == report::SweepVariable::Mu || spec.variable == report::SweepVariable::B) ? "scenarios"
                                                                                                      : "price";
  }
  report::Table table;
  if (kind == "scenarios") {
    table = report::sweep_scenarios(spec);
  } else if (kind == "price") {
    table = report::sweep_price_threshold(spec);
  } else {
    throw UsageError(fmt::format("--kind must be 'scenarios' or 'price', got '{}'", kind));
  }
  emit(a.out_path, report::to_csv(table), out);
  return kOk;
}

// ---- simulate ---------------------------------------------------------------

struct SimulateArgs {
  std::string scenario;
  double lambda = 0, mu = 0;
  int b = 1;
  double q = 0.0;
  std::optional<std::uint64_t> seed;
  std::uint64_t arrivals = 1'000'000;
  std::optional<std::uint64_t> warmup;
  int batches = 20;
  std::size_t reps = 1;
  unsigned threads = 1;
  bool check = false;
  double tolerance = 0.02;
  std::string out_path;
};

struct Estimate {
  double mean;
  double ci;
};

// Replication estimate: a single run uses its batch-means interval, several
// runs use the spread of the per-run means.
template <typename Get, typename Ci>
Estimate combine(const std::vector<des::SimResult>& rs, Get get, Ci ci) {
  if (rs.size() == 1) return {get(rs[0]), ci(rs[0])};
  double sum = 0.0;
  for (const auto& r : rs) sum += get(r);
  const double n = static_cast<double>(rs.size());
  const double mean = sum / n;
  double ss = 0.0;
  for (const auto& r : rs) ss += (get(r) - mean) * (get(r) - mean);
  return {mean, des::t95(rs.size() - 1) * std::sqrt(ss / (n - 1.0)) / std::sqrt(n)};
}

int simulate_cmd(const SimulateArgs& a, std::ostream& out, std::ostream& err) {
  if (!a.seed) throw UsageError("--seed is required");
  des::SimConfig cfg;
  cfg.scenario = des::scenario_from_string(a.scenario);
  cfg.seed = *a.seed;
  cfg.arrivals = a.arrivals;
  cfg.warmup = a.warmup;
  cfg.batches = a.batches;
  json params;
  if (cfg.scenario == des::Scenario::Priority) {
    cfg.params = queueing::PriorityEconParams{a.lambda, a.mu, a.q, 0.0, 0.0, 0.0};
    params = {{"lambda", a.lambda}, {"mu", a.mu}, {"q", a.q}};
  } else {
    cfg.params = queueing::QueueParams{a.lambda, a.mu, a.b};
    params = {{"lambda", a.lambda}, {"mu", a.mu}, {"b", a.b}};
  }
  const auto results = des::replicate(cfg, a.reps, a.threads);

  json j;
  j["scenario"] = des::to_string(cfg.scenario);
  j["params"] = params;
  j["seed"] = cfg.seed;
  j["arrivals"] = cfg.arrivals;
  j["replications"] = a.reps;
  j["results"] = json::array();
  for (const auto& r : results) j["results"].push_back(to_json(r));

  // Each comparison: (name, analytic value, simulated estimate).
  struct Comparison {
    std::string name;
    double analytic;
    Estimate sim;
  };
  std::vector<Comparison> comparisons;
  const auto system = combine(
      results, [](const des::SimResult& r) { return r.mean_system_time; },
      [](const des::SimResult& r) { return r.ci95_half_width; });
  const queueing::QueueParams qp{a.lambda, a.mu, a.b};
  switch (cfg.scenario) {
    case des::Scenario::MM1: comparisons.push_back({"t_orig", queueing::mm1_time(qp), system}); break;
    case des::Scenario::BatchCDN: comparisons.push_back({"t_cdn", queueing::batch_cdn_time(qp), system}); break;
    case des::Scenario::BatchInfra: comparisons.push_back({"t_infra", queueing::infra_time(qp), system}); break;
    case des::Scenario::Priority: {
      const auto t = queueing::priority_times({a.lambda, a.mu, a.q, 0.0, 0.0, 0.0});
      const double analytic[] = {t.t_legal, t.t_illegal};
      const char* names[] = {"t_legal", "t_illegal"};
      for (std::size_t c = 0; c < 2; ++c) {
        if ((*results[0].per_class)[c].completed == 0) continue;
        comparisons.push_back({names[c], analytic[c],
                               combine(
                                   results, [c](const des::SimResult& r) { return (*r.per_class)[c].mean_wait; },
                                   [c](const des::SimResult& r) { return (*r.per_class)[c].ci95_half_width; })});
      }
      break;
    }
  }

  bool ok = true;
  for (const auto& c : comparisons) {
    const double band = std::max(c.sim.ci, a.tolerance * std::abs(c.analytic));
    const double diff = std::abs(c.sim.mean - c.analytic);
    const bool pass = diff <= band;
    j["analytic"][c.name] = c.analytic;
    j["estimate"][c.name] = {{"mean", c.sim.mean}, {"ci95_half_width", c.sim.ci}};
    j["relative_error"][c.name] = diff / std::abs(c.analytic);
    if (a.check) {
      j["check"][c.name] = pass;
      if (!pass) {
        fmt::print(err, "check failed: {} analytic {} vs simulated {} +/- {}\n", c.name, c.analytic, c.sim.mean, band);
      }
    }
    ok = ok && pass;
  }
  emit(a.out_path, dump(j), out);
  return (a.check && !ok) ? kCheckFailed : kOk;
}

// ---- generate / aggregate ---------------------------------------------------

struct GenerateArgs {
  std::string spec_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> n_users;
  std::optional<double> pirate_fraction;
  std::optional<int> b;
  std::optional<int> days;
  std::optional<double> ip_switch_prob;
  std::string events_out = "events.csv";
  std::string labels_out = "labels.csv";
  std::string format = "csv";
};

int generate_cmd(const GenerateArgs& a, std::ostream& err) {
  auto file = config::workload_from_json(read_json_file(a.spec_path));
  auto& spec = file.spec;
  if (a.seed) spec.seed = *a.seed;
  if (!a.seed && !file.has_seed) throw UsageError("a seed is required (spec file 'seed' or --seed)");
  if (a.n_users) spec.n_users = *a.n_users;
  if (a.pirate_fraction) spec.pirate_fraction = *a.pirate_fraction;
  if (a.b) spec.b = *a.b;
  if (a.days) spec.days = *a.days;
  if (a.ip_switch_prob) spec.ip_switch_prob = *a.ip_switch_prob;
  if (a.format != "csv" && a.format != "jsonl") throw UsageError("--format must be csv or jsonl");

  auto events = open_out(a.events_out);
  std::uint64_t count = 0;
  access::LabelTable labels;
  if (a.format == "csv") {
    access::EventCsvWriter writer(events);
    labels = access::generate(spec, [&](const access::AccessEvent& e) {
      writer.write(e);
      ++count;
    });
  } else {
    labels = access::generate(spec, [&](const access::AccessEvent& e) {
      access::write_events_jsonl(events, std::span(&e, 1));
      ++count;
    });
  }
  auto label_file = open_out(a.labels_out);
  access::write_labels(label_file, labels);
  fmt::print(err, "generated {} events for {} tokens\n", count, labels.size());
  return kOk;
}

struct AggregateArgs {
  std::string events_path;
  std::string window = "1d";
  std::string out_path;
};

int aggregate_cmd(const AggregateArgs& a, std::ostream& out, std::ostream& err) {
  access::Aggregator agg(config::parse_duration(a.window));
  auto in = open_in(a.events_path);
  const auto read = access::read_events(in, [&](const access::AccessEvent& e) { agg.add(e); });
  report_skips(a.events_path, read.skipped, read.problems, err);
  report_skips("aggregate", agg.skipped(), agg.problems(), err);
  std::ostringstream text;
  access::write_token_stats(text, agg.finish());
  emit(a.out_path, text.str(), out);
  return kOk;
}

// ---- detect -------------------------------------------------------------------

struct DetectArgs {
  std::string events_path;
  std::string config_path;
  std::string labels_path;
  std::string out_dir = ".";
  std::optional<std::uint64_t> ip_threshold;
  std::optional<double> quantile_level;
  std::optional<std::uint64_t> sample_rate;
  std::optional<std::string> mode;
};

json to_json(const detect::DailySeries& d) {
  json j;
  j["all"] = json::object();
  j["non_recurring"] = json::object();
  for (const auto& [day, n] : d.all) j["all"][detect::format_day(day)] = n;
  for (const auto& [day, n] : d.non_recurring) j["non_recurring"][detect::format_day(day)] = n;
  return j;
}

int detect_cmd(const DetectArgs& a, std::ostream& err) {
  auto file = config::detection_from_json(read_json_file(a.config_path));
  auto& cfg = file.config;
  if (a.ip_threshold) cfg.ip_threshold = *a.ip_threshold;
  if (a.quantile_level) cfg.quantile_level = *a.quantile_level;
  if (a.sample_rate) cfg.sample_rate = *a.sample_rate;
  if (a.mode) {
    if (*a.mode == "quantile") {
      cfg.volumetry_mode = detect::VolumetryMode::Quantile;
    } else if (*a.mode == "absolute") {
      cfg.volumetry_mode = detect::VolumetryMode::Absolute;
    } else {
      throw UsageError("--mode must be quantile or absolute");
    }
  }
  detect::validate(cfg);

  access::Aggregator all(cfg.window_seconds);
  access::Aggregator sample(cfg.window_seconds);
  std::set<std::string> contents;
  auto in = open_in(a.events_path);
  const auto read = access::read_events(in, [&](const access::AccessEvent& e) {
    if (!all.add(e)) return;
    contents.insert(e.content);
    if (access::is_sampled(e.user, cfg.sample_rate)) sample.add(e);
  });
  report_skips(a.events_path, read.skipped, read.problems, err);
  report_skips("aggregate", all.skipped(), all.problems(), err);
  const auto stats = all.finish();

  json report;
  report["warnings"] = json::array();
  detect::ThresholdMap thresholds;
  if (cfg.volumetry_mode == detect::VolumetryMode::Quantile) {
    const auto sampled = sample.finish();
    if (sampled.empty()) throw EmptySample(fmt::format("no events survive 1-in-{} user sampling", cfg.sample_rate));
    const std::vector<std::string> names(contents.begin(), contents.end());
    auto baseline = detect::baseline_from_sample(sampled, names, cfg);
    thresholds = baseline.thresholds;
    report["baseline"] = {{"mode", "quantile"},
                          {"quantile_level", cfg.quantile_level},
                          {"sample_rate", cfg.sample_rate},
                          {"sampled_tokens", baseline.sampled_tokens},
                          {"thresholds", thresholds}};
    for (const auto& w : baseline.warnings) {
      report["warnings"].push_back(w);
      fmt::print(err, "warning: {}\n", w);
    }
  } else {
    thresholds = cfg.absolute_request_threshold;
    report["baseline"] = {{"mode", "absolute"}, {"thresholds", thresholds}};
  }

  auto flags = detect::flag_by_ip(stats, cfg);
  const auto vol = detect::flag_by_volumetry(stats, thresholds, cfg);
  flags.insert(flags.end(), vol.begin(), vol.end());
  std::stable_sort(flags.begin(), flags.end(), [](const auto& x, const auto& y) {
    return std::tie(x.day, x.token, x.rule) < std::tie(y.day, y.token, y.rule);
  });

  std::filesystem::create_directories(a.out_dir);
  const std::filesystem::path dir(a.out_dir);
  {
    auto f = open_out((dir / "flags.csv").string());
    detect::write_flags(f, flags);
  }

  report["token_windows"] = stats.size();
  report["skipped_records"] = read.skipped + all.skipped();
  report["flag_counts"] = {{"IpVolumetry", flags.size() - vol.size()}, {"RequestVolumetry", vol.size()}};
  std::vector<detect::FlagRecord> in_period;
  for (const auto& f : flags) {
    if (!file.period || (f.day >= file.period->first && f.day <= file.period->last)) in_period.push_back(f);
  }
  if (in_period.empty()) {
    report["recurrence"] = nullptr;
    report["warnings"].push_back("no flags: recurrence report omitted");
  } else {
    const auto rec = detect::recurrence(in_period, std::nullopt, cfg.recurrence_levels);
    json quantiles = json::object();
    for (const auto& [level, value] : rec.quantiles) quantiles[report::format_number(level)] = value;
    std::uint64_t max_count = 0;
    for (const auto& [u, n] : rec.per_user_flag_counts) max_count = std::max(max_count, n);
    report["recurrence"] = {{"flagged_users", rec.per_user_flag_counts.size()},
                            {"quantiles", quantiles},
                            {"non_recurring_fraction", rec.non_recurring_fraction},
                            {"per_user_flag_counts", rec.per_user_flag_counts}};
  }
  report["daily_series"] = to_json(detect::daily_series(in_period));
  emit((dir / "report.json").string(), dump(report), std::cout);

  if (!a.labels_path.empty()) {
    auto lf = open_in(a.labels_path);
    const auto labels = access::read_labels(lf);
    json metrics;
    for (const auto& [rule, m] : detect::evaluate(flags, labels)) {
      metrics[rule] = {{"precision", m.precision},
                       {"recall", m.recall},
                       {"f1", m.f1},
                       {"true_positives", m.true_positives},
                       {"false_positives", m.false_positives},
                       {"false_negatives", m.false_negatives}};
    }
    emit((dir / "metrics.json").string(), dump(metrics), std::cout);
  }
  fmt::print(err, "{} flags written to {}\n", flags.size(), (dir / "flags.csv").string());
  return kOk;
}

// ---- report -------------------------------------------------------------------

struct HistArgs {
  std::string stats_path;
  std::string flags_path;
  int bins = report::kDefaultBins;
  std::vector<double> edges;
  std::uint64_t sample_rate = 1;
  std::string out_path;
};

int report_hist(const HistArgs& a, std::ostream& out) {
  auto sf = open_in(a.stats_path);
  const auto stats = access::read_token_stats(sf);
  report::FlaggedSet flagged;
  if (!a.flags_path.empty()) {
    auto ff = open_in(a.flags_path);
    flagged = report::flagged_set(detect::read_flags(ff));
  }
  report::Binning binning = a.bins;
  if (!a.edges.empty()) binning = a.edges;
  if (a.sample_rate < 1) throw UsageError("--sample-rate must be >= 1");
  auto j = nlohmann::ordered_json::array();
  for (const auto& h : report::request_histograms(stats, flagged, binning, a.sample_rate)) {
    if (h.population == "flagged" && a.flags_path.empty()) continue;
    j.push_back(report::to_json(h));
  }
  emit(a.out_path, j.dump(2) + "\n", out);
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"cdnguard: piracy queueing models, simulation and token-abuse detection"};
  app.require_subcommand(1);

  // model
  auto* model = app.add_subcommand("model", "closed-form scenario and countermeasure models");
  model->require_subcommand(1);
  ModelEvalArgs eval;
  auto* eval_cmd = model->add_subcommand("eval", "evaluate the scenarios (and priority model) as JSON");
  eval_cmd->add_option("--lambda", eval.lambda, "arrival rate")->required();
  eval_cmd->add_option("--mu", eval.mu, "service rate")->required();
  eval_cmd->add_option("--b", eval.b, "burst size");
  eval_cmd->add_option("--q", eval.q, "priority split");
  eval_cmd->add_option("--alpha", eval.alpha, "price per unit time");
  eval_cmd->add_option("--beta", eval.beta, "illegal price fraction");
  eval_cmd->add_option("--p-legal", eval.p_legal, "legal price");

  ModelSweepArgs sweep;
  auto* sweep_cmd = model->add_subcommand("sweep", "write a parameter sweep as CSV");
  sweep_cmd->add_option("--var", sweep.var, "mu, q, beta or b")->required();
  sweep_cmd->add_option("--kind", sweep.kind, "scenarios or price (default by variable)");
  sweep_cmd->add_option("--lo", sweep.lo);
  sweep_cmd->add_option("--hi", sweep.hi);
  sweep_cmd->add_option("--steps", sweep.steps);
  sweep_cmd->add_option("--values", sweep.values, "explicit grid")->delimiter(',');
  sweep_cmd->add_option("--lambda", sweep.lambda);
  sweep_cmd->add_option("--mu", sweep.mu);
  sweep_cmd->add_option("--b", sweep.b);
  sweep_cmd->add_option("--q", sweep.q);
  sweep_cmd->add_option("--alpha", sweep.alpha);
  sweep_cmd->add_option("--beta", sweep.beta);
  sweep_cmd->add_option("--betas", sweep.betas)->delimiter(',');
  sweep_cmd->add_option("--out", sweep.out_path, "output CSV (default stdout)");

  // simulate
  SimulateArgs sim;
  auto* sim_cmd = app.add_subcommand("simulate", "discrete-event simulation of a scenario");
  sim_cmd->add_option("--scenario", sim.scenario, "mm1, batch-cdn, batch-infra or priority")
      ->required()
      ->check(CLI::IsMember({"mm1", "batch-cdn", "batch-infra", "priority"}));
  sim_cmd->add_option("--lambda", sim.lambda)->required();
  sim_cmd->add_option("--mu", sim.mu)->required();
  sim_cmd->add_option("--b", sim.b);
  sim_cmd->add_option("--q", sim.q);
  sim_cmd->add_option("--seed", sim.seed);
  sim_cmd->add_option("--arrivals", sim.arrivals);
  sim_cmd->add_option("--warmup", sim.warmup, "customers discarded (default 1%)");
  sim_cmd->add_option("--batches", sim.batches);
  sim_cmd->add_option("--reps", sim.reps);
  sim_cmd->add_option("--threads", sim.threads);
  sim_cmd->add_flag("--check", sim.check, "exit 3 when the closed form disagrees");
  sim_cmd->add_option("--tolerance", sim.tolerance, "relative tolerance for --check");
  sim_cmd->add_option("--out", sim.out_path);

  // generate
  GenerateArgs gen;
  auto* gen_cmd = app.add_subcommand("generate", "write a labelled synthetic access log");
  gen_cmd->add_option("--spec", gen.spec_path, "workload spec JSON")->required();
  gen_cmd->add_option("--seed", gen.seed);
  gen_cmd->add_option("--n-users", gen.n_users);
  gen_cmd->add_option("--pirate-fraction", gen.pirate_fraction);
  gen_cmd->add_option("--b", gen.b);
  gen_cmd->add_option("--days", gen.days);
  gen_cmd->add_option("--ip-switch-prob", gen.ip_switch_prob);
  gen_cmd->add_option("--events-out", gen.events_out);
  gen_cmd->add_option("--labels-out", gen.labels_out);
  gen_cmd->add_option("--format", gen.format, "csv or jsonl");

  // aggregate
  AggregateArgs agg;
  auto* agg_cmd = app.add_subcommand("aggregate", "per-window token statistics as CSV");
  agg_cmd->add_option("--events", agg.events_path)->required();
  agg_cmd->add_option("--window", agg.window, "e.g. 86400, 1d, 6h");
  agg_cmd->add_option("--out", agg.out_path);

  // detect
  DetectArgs det;
  auto* det_cmd = app.add_subcommand("detect", "flag suspicious tokens");
  det_cmd->add_option("--events", det.events_path)->required();
  det_cmd->add_option("--config", det.config_path, "detection config JSON")->required();
  det_cmd->add_option("--labels", det.labels_path);
  det_cmd->add_option("--out-dir", det.out_dir);
  det_cmd->add_option("--ip-threshold", det.ip_threshold);
  det_cmd->add_option("--quantile-level", det.quantile_level);
  det_cmd->add_option("--sample-rate", det.sample_rate);
  det_cmd->add_option("--mode", det.mode, "quantile or absolute");

  // report
  auto* rep = app.add_subcommand("report", "plot-ready data");
  rep->require_subcommand(1);
  HistArgs hist;
  auto* hist_cmd = rep->add_subcommand("hist", "request-count histograms as JSON");
  hist_cmd->add_option("--stats", hist.stats_path)->required();
  hist_cmd->add_option("--flags", hist.flags_path);
  hist_cmd->add_option("--bins", hist.bins);
  hist_cmd->add_option("--edges", hist.edges)->delimiter(',');
  hist_cmd->add_option("--sample-rate", hist.sample_rate);
  hist_cmd->add_option("--out", hist.out_path);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    fmt::print(err, "usage error: {}\n", e.what());
    return kUsageError;
  }

  try {
    if (*eval_cmd) return model_eval(eval, out);
    if (*sweep_cmd) return model_sweep(sweep, out);
    if (*sim_cmd) return simulate_cmd(sim, out, err);
    if (*gen_cmd) return generate_cmd(gen, err);
    if (*agg_cmd) return aggregate_cmd(agg, out, err);
    if (*det_cmd) return detect_cmd(det, err);
    if (*hist_cmd) return report_hist(hist, out);
  } catch (const UsageError& e) {
    fmt::print(err, "usage error: {}\n", e.what());
    return kUsageError;
  } catch (const Error& e) {
    fmt::print(err, "error: {}\n", e.what());
    return kInputError;
  } catch (const std::filesystem::filesystem_error& e) {
    fmt::print(err, "error: {}\n", e.what());
    return kInputError;
  }
  return kUsageError;
}

int run(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace cdnguard::cli
