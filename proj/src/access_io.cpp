#include "cdnguard/access_io.hpp"

#include <charconv>
#include <istream>
#include <ostream>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "cdnguard/errors.hpp"
#include "json.hpp"

namespace cdnguard::access {
namespace {

void strip_cr(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

bool blank(const std::string& line) {
  return line.find_first_not_of(" \t\r") == std::string::npos;
}

template <typename T>
bool parse_number(const std::string& s, T& out) {
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc{} && ptr == end;
}

template <typename T>
T require_number(const std::string& s, const char* what, std::size_t line) {
  T v{};
  if (!parse_number(s, v)) throw ParseError(fmt::format("line {}: bad {} '{}'", line, what, s));
  return v;
}

std::string event_from_csv(const std::string& line, AccessEvent& e) {
  auto f = split_csv_line(line);
  if (f.size() != 6) return fmt::format("expected 6 fields, got {}", f.size());
  if (!parse_number(f[0], e.ts)) return fmt::format("bad timestamp '{}'", f[0]);
  if (!parse_number(f[5], e.chunk_seq)) return fmt::format("bad chunk_seq '{}'", f[5]);
  e.token = std::move(f[1]);
  e.user = std::move(f[2]);
  e.ip = std::move(f[3]);
  e.content = std::move(f[4]);
  return check_event(e);
}

std::string event_from_json(const std::string& line, AccessEvent& e) {
  const auto j = nlohmann::json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object()) return "not a JSON object";
  try {
    e.ts = j.at("ts").get<double>();
    e.token = j.at("token").get<std::string>();
    e.user = j.at("user").get<std::string>();
    e.ip = j.at("ip").get<std::string>();
    e.content = j.at("content").get<std::string>();
    e.chunk_seq = j.at("chunk_seq").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& ex) {
    return ex.what();
  }
  return check_event(e);
}

}  // namespace

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return fields;
}

ReadReport read_events(std::istream& in, const EventSink& sink) {
  ReadReport report;
  std::string line;
  std::size_t line_no = 0;
  bool json = false;
  bool started = false;
  AccessEvent e;
  while (std::getline(in, line)) {
    ++line_no;
    strip_cr(line);
    if (blank(line)) continue;
    if (!started) {
      started = true;
      json = line[line.find_first_not_of(" \t")] == '{';
      if (!json) {
        if (line != kEventHeader) {
          throw ParseError(fmt::format("line {}: expected header '{}'", line_no, kEventHeader));
        }
        continue;
      }
    }
    std::string reason = json ? event_from_json(line, e) : event_from_csv(line, e);
    if (!reason.empty()) {
      ++report.skipped;
      if (report.problems.size() < kMaxReportedProblems) report.problems.push_back({line_no, std::move(reason)});
      continue;
    }
    ++report.records;
    sink(e);
  }
  return report;
}

std::vector<AccessEvent> read_events(std::istream& in, ReadReport* report) {
  std::vector<AccessEvent> events;
  ReadReport r = read_events(in, [&](const AccessEvent& e) { events.push_back(e); });
  if (report) *report = std::move(r);
  return events;
}

EventCsvWriter::EventCsvWriter(std::ostream& out) : out_(out) { out_ << kEventHeader << '\n'; }

void EventCsvWriter::write(const AccessEvent& e) {
  fmt::print(out_, "{:.3f},{},{},{},{},{}\n", e.ts, e.token, e.user, e.ip, e.content, e.chunk_seq);
}

void write_events_csv(std::ostream& out, std::span<const AccessEvent> events) {
  EventCsvWriter w(out);
  for (const auto& e : events) w.write(e);
}

void write_events_jsonl(std::ostream& out, std::span<const AccessEvent> events) {
  for (const auto& e : events) {
    nlohmann::ordered_json j;
    j["ts"] = e.ts;
    j["token"] = e.token;
    j["user"] = e.user;
    j["ip"] = e.ip;
    j["content"] = e.content;
    j["chunk_seq"] = e.chunk_seq;
    out << j.dump() << '\n';
  }
}

LabelTable read_labels(std::istream& in) {
  LabelTable labels;
  std::string line;
  std::size_t line_no = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++line_no;
    strip_cr(line);
    if (blank(line)) continue;
    if (!header) {
      if (line != kLabelHeader) throw ParseError(fmt::format("line {}: expected header '{}'", line_no, kLabelHeader));
      header = true;
      continue;
    }
    auto f = split_csv_line(line);
    if (f.size() != 2 || f[0].empty()) throw ParseError(fmt::format("line {}: expected 'token,label'", line_no));
    labels[f[0]] = label_from_string(f[1]);
  }
  if (!header) throw ParseError("label file is empty");
  return labels;
}

void write_labels(std::ostream& out, const LabelTable& labels) {
  out << kLabelHeader << '\n';
  for (const auto& [token, label] : labels) fmt::print(out, "{},{}\n", token, to_string(label));
}

std::vector<TokenStats> read_token_stats(std::istream& in) {
  std::vector<TokenStats> stats;
  std::string line;
  std::size_t line_no = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++line_no;
    strip_cr(line);
    if (blank(line)) continue;
    if (!header) {
      if (line != kStatsHeader) throw ParseError(fmt::format("line {}: expected header '{}'", line_no, kStatsHeader));
      header = true;
      continue;
    }
    auto f = split_csv_line(line);
    if (f.size() != 7) throw ParseError(fmt::format("line {}: expected 7 fields, got {}", line_no, f.size()));
    TokenStats s;
    s.token = f[0];
    s.user = f[1];
    s.content = f[2];
    s.window_start = require_number<double>(f[3], "window_start", line_no);
    s.window_end = require_number<double>(f[4], "window_end", line_no);
    s.distinct_ips = require_number<std::uint64_t>(f[5], "distinct_ips", line_no);
    s.requests = require_number<std::uint64_t>(f[6], "requests", line_no);
    stats.push_back(std::move(s));
  }
  if (!header) throw ParseError("stats file is empty");
  return stats;
}

void write_token_stats(std::ostream& out, std::span<const TokenStats> stats) {
  out << kStatsHeader << '\n';
  for (const auto& s : stats) {
    fmt::print(out, "{},{},{},{:.3f},{:.3f},{},{}\n", s.token, s.user, s.content, s.window_start, s.window_end,
               s.distinct_ips, s.requests);
  }
}

}  // namespace cdnguard::access
