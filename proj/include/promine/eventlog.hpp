#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "promine/csv.hpp"
#include "promine/dot.hpp"
#include "promine/errors.hpp"
#include "promine/timestamp.hpp"

namespace promine::eventlog {

struct FlatEvent {
  std::string case_id;
  std::string activity;
  Timestamp start_ts;
  std::optional<Timestamp> end_ts;
  std::optional<std::string> resource;
  std::optional<double> cost;
  std::optional<bool> automated;
  std::map<std::string, std::string> attributes;

  bool operator==(const FlatEvent&) const = default;
};

struct FlatLog {
  std::string source_name;
  std::vector<FlatEvent> events;  // input order preserved

  bool operator==(const FlatLog&) const = default;
};

// Per-case event indices, ordered by start_ts with input order breaking ties.
inline std::map<std::string, std::vector<std::size_t>> case_traces(const FlatLog& log) {
  std::map<std::string, std::vector<std::size_t>> traces;
  for (std::size_t i = 0; i < log.events.size(); ++i)
    traces[log.events[i].case_id].push_back(i);
  for (auto& [case_id, idx] : traces)
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
      return log.events[a].start_ts < log.events[b].start_ts;
    });
  return traces;
}

struct DfgEdgeStats {
  std::int64_t frequency = 0;
  std::vector<std::int64_t> wait_ms;
};

struct DirectlyFollowsGraph {
  std::map<std::string, std::int64_t> activity_nodes;  // activity -> event frequency
  std::map<std::pair<std::string, std::string>, DfgEdgeStats> edges;
  std::int64_t case_count = 0;
};

// Role names for column mapping: case_id, activity, start_ts are mandatory;
// end_ts, resource, cost, automated are recognized optional roles.
struct ColumnConfig {
  std::map<std::string, std::string> roles;
};

namespace detail {

inline const std::set<std::string>& known_roles() {
  static const std::set<std::string> roles = {"case_id", "activity", "start_ts",
                                              "end_ts",  "resource", "cost",
                                              "automated"};
  return roles;
}

inline std::optional<bool> parse_bool(const std::string& s) {
  std::string lower;
  for (char c : s) lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  if (lower == "true" || lower == "1" || lower == "yes") return true;
  if (lower == "false" || lower == "0" || lower == "no") return false;
  return std::nullopt;
}

}  // namespace detail

inline FlatLog parse_flat_csv(std::istream& in, const ColumnConfig& config,
                              std::string source_name = "csv") {
  for (const auto& [role, column] : config.roles)
    if (!detail::known_roles().count(role))
      throw schema_error("unknown column role '" + role + "'");
  for (const char* role : {"case_id", "activity", "start_ts"})
    if (!config.roles.count(role))
      throw schema_error("missing mandatory column for role '" + std::string(role) + "'");

  CsvTable table = read_csv(in);
  if (table.header.empty() && table.rows.empty()) throw empty_log_error("empty log");

  std::map<std::string, std::size_t> col_index;
  for (std::size_t i = 0; i < table.header.size(); ++i) col_index[table.header[i]] = i;
  std::map<std::string, std::size_t> role_index;  // role -> column index
  std::set<std::size_t> consumed;
  for (const auto& [role, column] : config.roles) {
    auto it = col_index.find(column);
    if (it == col_index.end()) {
      bool mandatory = role == "case_id" || role == "activity" || role == "start_ts";
      if (mandatory)
        throw schema_error("missing mandatory column for role '" + role + "' (column '" + column + "')");
      continue;  // optional role whose column is absent: treated as unmapped
    }
    role_index[role] = it->second;
    consumed.insert(it->second);
  }

  if (table.rows.empty()) throw empty_log_error("empty log");

  FlatLog log;
  log.source_name = std::move(source_name);
  log.events.reserve(table.rows.size());
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    auto fail = [&](const std::string& what) {
      throw row_error("row " + std::to_string(r + 1) + ": " + what);
    };
    FlatEvent ev;
    ev.case_id = row[role_index.at("case_id")];
    ev.activity = row[role_index.at("activity")];
    if (ev.case_id.empty()) fail("empty case_id");
    if (ev.activity.empty()) fail("empty activity");
    const std::string& start_raw = row[role_index.at("start_ts")];
    auto start = try_parse_timestamp(start_raw);
    if (!start) fail("unparseable timestamp '" + start_raw + "'");
    ev.start_ts = *start;
    if (auto it = role_index.find("end_ts"); it != role_index.end() && !row[it->second].empty()) {
      auto end = try_parse_timestamp(row[it->second]);
      if (!end) fail("unparseable timestamp '" + row[it->second] + "'");
      if (*end < ev.start_ts) fail("end timestamp precedes start timestamp");
      ev.end_ts = *end;
    }
    if (auto it = role_index.find("resource"); it != role_index.end() && !row[it->second].empty())
      ev.resource = row[it->second];
    if (auto it = role_index.find("cost"); it != role_index.end() && !row[it->second].empty()) {
      try {
        std::size_t used = 0;
        double v = std::stod(row[it->second], &used);
        if (used != row[it->second].size()) fail("unparseable cost '" + row[it->second] + "'");
        if (v < 0) fail("negative cost");
        ev.cost = v;
      } catch (const std::invalid_argument&) {
        fail("unparseable cost '" + row[it->second] + "'");
      } catch (const std::out_of_range&) {
        fail("cost out of range");
      }
    }
    if (auto it = role_index.find("automated"); it != role_index.end() && !row[it->second].empty()) {
      auto b = detail::parse_bool(row[it->second]);
      if (!b) fail("unparseable boolean '" + row[it->second] + "'");
      ev.automated = *b;
    }
    for (std::size_t c = 0; c < row.size(); ++c)
      if (!consumed.count(c)) ev.attributes[table.header[c]] = row[c];
    log.events.push_back(std::move(ev));
  }
  return log;
}

// Serializes with the configured column names; attribute columns follow, sorted.
inline void write_flat_csv(std::ostream& os, const FlatLog& log, const ColumnConfig& config) {
  std::set<std::string> attr_columns;
  for (const auto& ev : log.events)
    for (const auto& [k, v] : ev.attributes) attr_columns.insert(k);

  std::vector<std::string> roles;
  for (const char* role : {"case_id", "activity", "start_ts", "end_ts", "resource", "cost", "automated"})
    if (config.roles.count(role)) roles.push_back(role);

  std::vector<std::string> header;
  for (const auto& role : roles) header.push_back(config.roles.at(role));
  for (const auto& col : attr_columns) header.push_back(col);
  write_csv_record(os, header);

  for (const auto& ev : log.events) {
    std::vector<std::string> rec;
    for (const auto& role : roles) {
      if (role == "case_id") rec.push_back(ev.case_id);
      else if (role == "activity") rec.push_back(ev.activity);
      else if (role == "start_ts") rec.push_back(format_timestamp(ev.start_ts));
      else if (role == "end_ts") rec.push_back(ev.end_ts ? format_timestamp(*ev.end_ts) : "");
      else if (role == "resource") rec.push_back(ev.resource.value_or(""));
      else if (role == "cost") rec.push_back(ev.cost ? nlohmann::json(*ev.cost).dump() : "");
      else rec.push_back(ev.automated ? (*ev.automated ? "true" : "false") : "");
    }
    for (const auto& col : attr_columns) {
      auto it = ev.attributes.find(col);
      rec.push_back(it == ev.attributes.end() ? "" : it->second);
    }
    write_csv_record(os, rec);
  }
}

inline nlohmann::json to_json(const FlatLog& log) {
  nlohmann::json events = nlohmann::json::array();
  for (const auto& ev : log.events) {
    nlohmann::json e;
    e["case_id"] = ev.case_id;
    e["activity"] = ev.activity;
    e["start_ts"] = format_timestamp(ev.start_ts);
    if (ev.end_ts) e["end_ts"] = format_timestamp(*ev.end_ts);
    if (ev.resource) e["resource"] = *ev.resource;
    if (ev.cost) e["cost"] = *ev.cost;
    if (ev.automated) e["automated"] = *ev.automated;
    e["attributes"] = ev.attributes;
    events.push_back(std::move(e));
  }
  return nlohmann::json{{"source_name", log.source_name}, {"events", std::move(events)}};
}

inline FlatLog flat_log_from_json(const nlohmann::json& j) {
  FlatLog log;
  log.source_name = j.at("source_name").get<std::string>();
  for (const auto& e : j.at("events")) {
    FlatEvent ev;
    ev.case_id = e.at("case_id").get<std::string>();
    ev.activity = e.at("activity").get<std::string>();
    auto start = try_parse_timestamp(e.at("start_ts").get<std::string>());
    if (!start) throw row_error("unparseable start_ts in log JSON");
    ev.start_ts = *start;
    if (e.contains("end_ts")) {
      auto end = try_parse_timestamp(e.at("end_ts").get<std::string>());
      if (!end) throw row_error("unparseable end_ts in log JSON");
      ev.end_ts = *end;
    }
    if (e.contains("resource")) ev.resource = e.at("resource").get<std::string>();
    if (e.contains("cost")) ev.cost = e.at("cost").get<double>();
    if (e.contains("automated")) ev.automated = e.at("automated").get<bool>();
    if (e.contains("attributes"))
      ev.attributes = e.at("attributes").get<std::map<std::string, std::string>>();
    log.events.push_back(std::move(ev));
  }
  return log;
}

// Wait time between consecutive events: successor start minus predecessor end
// (start when no end is recorded), floored at zero for overlapping activities.
inline std::int64_t wait_between(const FlatEvent& pred, const FlatEvent& succ) {
  Timestamp from = pred.end_ts ? *pred.end_ts : pred.start_ts;
  std::int64_t w = succ.start_ts - from;
  return w < 0 ? 0 : w;
}

inline std::string dfg_to_dot(const DirectlyFollowsGraph& dfg) {
  std::string out = "digraph dfg {\n  rankdir=TB;\n  node [shape=box];\n";
  for (const auto& [activity, freq] : dfg.activity_nodes)
    out += "  " + promine::dot_quote(activity) + " [label=" +
           promine::dot_quote(activity + " (" + std::to_string(freq) + ")") + "];\n";
  for (const auto& [key, edge] : dfg.edges)
    out += "  " + promine::dot_quote(key.first) + " -> " + promine::dot_quote(key.second) +
           " [label=" + promine::dot_quote(std::to_string(edge.frequency)) + "];\n";
  out += "}\n";
  return out;
}

inline nlohmann::json dfg_stats_json(const DirectlyFollowsGraph& dfg) {
  nlohmann::json edges = nlohmann::json::array();
  for (const auto& [key, edge] : dfg.edges) {
    double mean_wait = 0;
    for (std::int64_t w : edge.wait_ms) mean_wait += static_cast<double>(w);
    if (!edge.wait_ms.empty()) mean_wait /= static_cast<double>(edge.wait_ms.size());
    edges.push_back({{"from", key.first},
                     {"to", key.second},
                     {"frequency", edge.frequency},
                     {"mean_wait_ms", mean_wait}});
  }
  return nlohmann::json{{"case_count", dfg.case_count},
                        {"activities", dfg.activity_nodes},
                        {"edges", std::move(edges)}};
}

inline DirectlyFollowsGraph discover_dfg(const FlatLog& log) {
  if (log.events.empty()) throw empty_log_error("empty log");
  DirectlyFollowsGraph dfg;
  for (const auto& ev : log.events) dfg.activity_nodes[ev.activity]++;
  auto traces = case_traces(log);
  dfg.case_count = static_cast<std::int64_t>(traces.size());
  for (const auto& [case_id, idx] : traces) {
    for (std::size_t i = 0; i + 1 < idx.size(); ++i) {
      const FlatEvent& a = log.events[idx[i]];
      const FlatEvent& b = log.events[idx[i + 1]];
      auto& edge = dfg.edges[{a.activity, b.activity}];
      edge.frequency++;
      edge.wait_ms.push_back(wait_between(a, b));
    }
  }
  return dfg;
}

}  // namespace promine::eventlog
