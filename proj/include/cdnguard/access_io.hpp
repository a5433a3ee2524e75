#pragma once

// File formats for access events, ground-truth labels and token statistics.
//
//   events  CSV  ts,token,user,ip,content,chunk_seq   (ts printed with 3 decimals)
//           or JSON lines with the same field names
//   labels  CSV  token,label                           (label: honest | shared)
//   stats   CSV  token,user,content,window_start,window_end,distinct_ips,requests

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "cdnguard/access_model.hpp"

namespace cdnguard::access {

inline constexpr const char* kEventHeader = "ts,token,user,ip,content,chunk_seq";
inline constexpr const char* kLabelHeader = "token,label";
inline constexpr const char* kStatsHeader = "token,user,content,window_start,window_end,distinct_ips,requests";

struct ReadReport {
  std::uint64_t records = 0;  // well-formed events delivered to the sink
  std::uint64_t skipped = 0;
  std::vector<MalformedRecord> problems;  // index = 1-based line number
};

// Reads CSV (with header) or JSON lines, detected from the first non-blank
// character. Malformed records are skipped and reported; a missing or wrong
// CSV header throws ParseError.
ReadReport read_events(std::istream& in, const EventSink& sink);
std::vector<AccessEvent> read_events(std::istream& in, ReadReport* report = nullptr);

class EventCsvWriter {
 public:
  explicit EventCsvWriter(std::ostream& out);
  void write(const AccessEvent& e);

 private:
  std::ostream& out_;
};

void write_events_csv(std::ostream& out, std::span<const AccessEvent> events);
void write_events_jsonl(std::ostream& out, std::span<const AccessEvent> events);

LabelTable read_labels(std::istream& in);
void write_labels(std::ostream& out, const LabelTable& labels);

std::vector<TokenStats> read_token_stats(std::istream& in);
void write_token_stats(std::ostream& out, std::span<const TokenStats> stats);

// Splits one CSV line on commas. Quoting is not supported; identifiers in
// these files never contain commas.
std::vector<std::string> split_csv_line(const std::string& line);

}  // namespace cdnguard::access
