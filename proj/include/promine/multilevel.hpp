#pragma once

#include <algorithm>
#include <cstdint>
#include <deque>
#include <functional>
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
#include "promine/measures.hpp"
#include "promine/timestamp.hpp"

namespace promine::multilevel {

// Ordered entity mapping: earliest entity first, terminal entity last.
struct EntitySchema {
  std::vector<std::string> entities;
  std::map<std::string, std::string> processid_columns;  // entity type -> column

  void validate() const {
    if (entities.empty()) throw schema_error("entity mapping is empty");
    std::set<std::string> seen;
    for (const auto& e : entities) {
      if (!seen.insert(e).second) throw schema_error("duplicate entity type '" + e + "'");
      if (!processid_columns.count(e))
        throw schema_error("entity '" + e + "' has no ProcessID column");
    }
    if (processid_columns.size() != entities.size())
      throw schema_error("ProcessID column declared for unknown entity");
  }

  std::size_t rank(const std::string& type) const {
    for (std::size_t i = 0; i < entities.size(); ++i)
      if (entities[i] == type) return i;
    throw schema_error("unknown entity type '" + type + "'");
  }

  const std::string& terminal() const { return entities.back(); }
};

struct MultilevelConfig {
  EntitySchema schema;
  std::string activity_column;
  std::string timestamp_column;
  std::optional<std::string> end_column;
  std::optional<std::string> resource_column;
  std::optional<std::string> cost_column;
  std::optional<std::string> automated_column;
};

inline MultilevelConfig multilevel_config_from_json(const nlohmann::json& j) {
  MultilevelConfig config;
  config.schema.entities = j.at("entities").get<std::vector<std::string>>();
  config.schema.processid_columns =
      j.at("processid_columns").get<std::map<std::string, std::string>>();
  config.activity_column = j.at("activity_column").get<std::string>();
  config.timestamp_column = j.at("timestamp_column").get<std::string>();
  if (j.contains("end_column")) config.end_column = j.at("end_column").get<std::string>();
  if (j.contains("resource_column")) config.resource_column = j.at("resource_column").get<std::string>();
  if (j.contains("cost_column")) config.cost_column = j.at("cost_column").get<std::string>();
  if (j.contains("automated_column"))
    config.automated_column = j.at("automated_column").get<std::string>();
  config.schema.validate();
  return config;
}

// One input row. A row carries one ProcessID (plain activity) or two
// (bridge activity connecting an earlier entity to a later one).
struct Row {
  int row_index = 0;  // 1-based input position
  std::string activity;
  Timestamp start_ts;
  std::optional<Timestamp> end_ts;
  std::map<std::string, std::string> links;  // entity type -> instance id
  std::optional<std::string> resource;
  std::optional<double> cost;
  std::optional<bool> automated;
  std::map<std::string, std::string> attributes;

  EntityRef owner(const EntitySchema& schema) const {
    const std::string* best_type = nullptr;
    std::size_t best_rank = 0;
    for (const auto& [type, id] : links) {
      std::size_t r = schema.rank(type);
      if (!best_type || r > best_rank) {
        best_type = &type;
        best_rank = r;
      }
    }
    return {*best_type, links.at(*best_type)};
  }

  std::optional<EntityRef> bridge_source(const EntitySchema& schema) const {
    if (links.size() < 2) return std::nullopt;
    const std::string* best_type = nullptr;
    std::size_t best_rank = 0;
    for (const auto& [type, id] : links) {
      std::size_t r = schema.rank(type);
      if (!best_type || r < best_rank) {
        best_type = &type;
        best_rank = r;
      }
    }
    return EntityRef{*best_type, links.at(*best_type)};
  }
};

struct Event {
  int event_id = 0;
  std::string activity;
  Timestamp start_ts;
  std::optional<Timestamp> end_ts;
  EntityRef owner;                       // latest-ordered linked entity
  std::vector<EntityRef> bridge_links;   // earlier entities joined to owner
  std::vector<int> merged_row_indices;
  std::optional<std::string> resource;
  std::optional<double> cost;
  std::optional<bool> automated;
  std::map<std::string, std::string> attributes;
};

struct Case {
  std::string case_id;
  EntityRef root;
  std::set<EntityRef> members;
  std::vector<std::size_t> event_indices;  // ordered by (start_ts, event_id)
};

inline std::vector<Row> parse_multilevel_csv(std::istream& in, const MultilevelConfig& config) {
  config.schema.validate();
  CsvTable table = read_csv(in);
  if (table.header.empty() && table.rows.empty()) throw empty_log_error("empty log");

  std::map<std::string, std::size_t> col_index;
  for (std::size_t i = 0; i < table.header.size(); ++i) col_index[table.header[i]] = i;

  auto require = [&](const std::string& column) {
    auto it = col_index.find(column);
    if (it == col_index.end()) throw schema_error("missing column '" + column + "'");
    return it->second;
  };
  std::size_t activity_col = require(config.activity_column);
  std::size_t ts_col = require(config.timestamp_column);
  std::map<std::string, std::size_t> pid_cols;  // entity type -> column index
  std::set<std::size_t> consumed{activity_col, ts_col};
  for (const auto& type : config.schema.entities) {
    pid_cols[type] = require(config.schema.processid_columns.at(type));
    consumed.insert(pid_cols[type]);
  }
  std::optional<std::size_t> end_col, resource_col, cost_col, automated_col;
  if (config.end_column) consumed.insert(*(end_col = require(*config.end_column)));
  if (config.resource_column) consumed.insert(*(resource_col = require(*config.resource_column)));
  if (config.cost_column) consumed.insert(*(cost_col = require(*config.cost_column)));
  if (config.automated_column) consumed.insert(*(automated_col = require(*config.automated_column)));

  if (table.rows.empty()) throw empty_log_error("empty log");

  std::vector<Row> rows;
  rows.reserve(table.rows.size());
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& rec = table.rows[r];
    auto fail = [&](const std::string& what) {
      throw row_error("row " + std::to_string(r + 1) + ": " + what);
    };
    Row row;
    row.row_index = static_cast<int>(r + 1);
    row.activity = rec[activity_col];
    if (row.activity.empty()) fail("empty activity");
    auto ts = try_parse_timestamp(rec[ts_col]);
    if (!ts) fail("unparseable timestamp '" + rec[ts_col] + "'");
    row.start_ts = *ts;
    if (end_col && !rec[*end_col].empty()) {
      auto end = try_parse_timestamp(rec[*end_col]);
      if (!end) fail("unparseable timestamp '" + rec[*end_col] + "'");
      if (*end < row.start_ts) fail("end timestamp precedes start timestamp");
      row.end_ts = *end;
    }
    for (const auto& type : config.schema.entities) {
      const std::string& cell = rec[pid_cols[type]];
      if (!cell.empty()) row.links[type] = cell;
    }
    if (row.links.empty()) fail("no populated ProcessID column");
    if (row.links.size() > 2) fail("canonical two-link rule violated");
    if (resource_col && !rec[*resource_col].empty()) row.resource = rec[*resource_col];
    if (cost_col && !rec[*cost_col].empty()) {
      try {
        double v = std::stod(rec[*cost_col]);
        if (v < 0) fail("negative cost");
        row.cost = v;
      } catch (const std::exception&) {
        fail("unparseable cost '" + rec[*cost_col] + "'");
      }
    }
    if (automated_col && !rec[*automated_col].empty()) {
      const std::string& cell = rec[*automated_col];
      if (cell == "true" || cell == "1") row.automated = true;
      else if (cell == "false" || cell == "0") row.automated = false;
      else fail("unparseable boolean '" + cell + "'");
    }
    for (std::size_t c = 0; c < rec.size(); ++c)
      if (!consumed.count(c)) row.attributes[table.header[c]] = rec[c];
    rows.push_back(std::move(row));
  }
  return rows;
}

// Rows sharing (activity, start_ts, later-entity link) collapse into one event;
// the earlier-entity links of the group are unioned. This is how a bridge that
// must join several earlier entities to one later entity stays a single event.
inline std::vector<Event> merge_bridge_rows(const std::vector<Row>& rows,
                                            const EntitySchema& schema) {
  using Key = std::tuple<std::string, std::int64_t, EntityRef>;
  std::map<Key, std::size_t> groups;  // key -> index into events
  std::vector<Event> events;
  for (const auto& row : rows) {
    EntityRef owner = row.owner(schema);
    Key key{row.activity, row.start_ts.ms, owner};
    auto it = groups.find(key);
    if (it == groups.end()) {
      Event ev;
      ev.activity = row.activity;
      ev.start_ts = row.start_ts;
      ev.end_ts = row.end_ts;
      ev.owner = owner;
      ev.merged_row_indices.push_back(row.row_index);
      if (auto src = row.bridge_source(schema)) ev.bridge_links.push_back(*src);
      ev.resource = row.resource;
      ev.cost = row.cost;
      ev.automated = row.automated;
      ev.attributes = row.attributes;
      groups.emplace(std::move(key), events.size());
      events.push_back(std::move(ev));
    } else {
      Event& ev = events[it->second];
      ev.merged_row_indices.push_back(row.row_index);
      if (auto src = row.bridge_source(schema))
        if (std::find(ev.bridge_links.begin(), ev.bridge_links.end(), *src) ==
            ev.bridge_links.end())
          ev.bridge_links.push_back(*src);
    }
  }
  // event ids follow the input order of each group's first member row
  std::sort(events.begin(), events.end(), [](const Event& a, const Event& b) {
    return a.merged_row_indices.front() < b.merged_row_indices.front();
  });
  for (std::size_t i = 0; i < events.size(); ++i) {
    events[i].event_id = static_cast<int>(i + 1);
    std::sort(events[i].bridge_links.begin(), events[i].bridge_links.end());
    std::sort(events[i].merged_row_indices.begin(), events[i].merged_row_indices.end());
  }
  return events;
}

namespace detail {

inline bool event_before(const Event& a, const Event& b) {
  if (a.start_ts != b.start_ts) return a.start_ts < b.start_ts;
  return a.event_id < b.event_id;
}

// Owned events per instance, trace-ordered.
inline std::map<EntityRef, std::vector<std::size_t>> owned_traces(const std::vector<Event>& events) {
  std::map<EntityRef, std::vector<std::size_t>> traces;
  for (std::size_t i = 0; i < events.size(); ++i) traces[events[i].owner].push_back(i);
  for (auto& [inst, idx] : traces)
    std::sort(idx.begin(), idx.end(),
              [&](std::size_t a, std::size_t b) { return event_before(events[a], events[b]); });
  return traces;
}

// owner instance -> earlier instances linked through its bridge events
inline std::map<EntityRef, std::set<EntityRef>> bridge_sources(const std::vector<Event>& events) {
  std::map<EntityRef, std::set<EntityRef>> sources;
  for (const auto& ev : events)
    for (const auto& src : ev.bridge_links) sources[ev.owner].insert(src);
  return sources;
}

}  // namespace detail

// Case composition walks the entity mapping in reverse: one case per terminal
// instance, earlier instances attached recursively through bridges. Instances
// left over become orphan case roots, again in reverse entity order.
inline std::vector<Case> compose_cases(const std::vector<Event>& events,
                                       const EntitySchema& schema) {
  auto traces = detail::owned_traces(events);
  auto sources = detail::bridge_sources(events);

  std::map<std::string, std::set<std::string>> instances_by_type;  // type -> ids
  for (const auto& [inst, idx] : traces) instances_by_type[inst.type].insert(inst.id);
  for (const auto& [owner, srcs] : sources)
    for (const auto& src : srcs) instances_by_type[src.type].insert(src.id);

  std::set<EntityRef> in_any_case;
  std::vector<Case> cases;

  auto build_case = [&](const EntityRef& root) {
    Case c;
    c.root = root;
    c.case_id = root.type + ":" + root.id;
    std::deque<EntityRef> queue{root};
    c.members.insert(root);
    while (!queue.empty()) {
      EntityRef m = queue.front();
      queue.pop_front();
      auto it = sources.find(m);
      if (it == sources.end()) continue;
      for (const auto& src : it->second)
        if (c.members.insert(src).second) queue.push_back(src);
    }
    for (const auto& member : c.members) {
      in_any_case.insert(member);
      auto it = traces.find(member);
      if (it == traces.end()) continue;
      for (std::size_t idx : it->second) c.event_indices.push_back(idx);
    }
    std::sort(c.event_indices.begin(), c.event_indices.end(), [&](std::size_t a, std::size_t b) {
      return detail::event_before(events[a], events[b]);
    });
    cases.push_back(std::move(c));
  };

  for (auto it = schema.entities.rbegin(); it != schema.entities.rend(); ++it) {
    const std::string& type = *it;
    auto inst_it = instances_by_type.find(type);
    if (inst_it == instances_by_type.end()) continue;
    for (const auto& id : inst_it->second) {
      EntityRef inst{type, id};
      if (!in_any_case.count(inst)) build_case(inst);
    }
  }
  std::sort(cases.begin(), cases.end(),
            [](const Case& a, const Case& b) { return a.case_id < b.case_id; });
  return cases;
}

struct ActivityStats {
  std::string entity_type;
  std::int64_t frequency = 0;
  std::int64_t rework = 0;
};

struct EdgeStats {
  std::int64_t frequency = 0;
  std::vector<std::int64_t> wait_ms;
  std::string from_entity_type;
  std::string to_entity_type;
};

struct Model {
  EntitySchema schema;
  std::vector<Event> events;
  std::vector<Case> cases;

  // statistics, de-duplicated: every event and instance counted once
  std::map<std::string, ActivityStats> activity_stats;
  std::map<std::string, std::int64_t> entity_cardinality;
  std::map<std::pair<std::string, std::string>, EdgeStats> edges;
  std::int64_t live_event_count = 0;
  std::int64_t input_row_count = 0;
};

namespace detail {

inline std::int64_t wait_between_events(const Event& pred, const Event& succ) {
  Timestamp from = pred.end_ts ? *pred.end_ts : pred.start_ts;
  std::int64_t w = succ.start_ts - from;
  return w < 0 ? 0 : w;
}

inline void recompute_stats(Model& model) {
  model.activity_stats.clear();
  model.entity_cardinality.clear();
  model.edges.clear();

  std::set<EntityRef> live;
  for (const auto& c : model.cases)
    for (const auto& m : c.members) live.insert(m);
  for (const auto& inst : live) model.entity_cardinality[inst.type]++;

  auto traces = owned_traces(model.events);

  std::set<std::size_t> live_events;
  for (const auto& inst : live) {
    auto it = traces.find(inst);
    if (it == traces.end()) continue;
    for (std::size_t idx : it->second) live_events.insert(idx);
  }
  model.live_event_count = static_cast<std::int64_t>(live_events.size());
  model.input_row_count = 0;
  for (std::size_t idx : live_events)
    model.input_row_count += static_cast<std::int64_t>(model.events[idx].merged_row_indices.size());

  // frequencies in event-id order so the recorded entity type is first-seen
  std::vector<std::size_t> ordered(live_events.begin(), live_events.end());
  std::sort(ordered.begin(), ordered.end(), [&](std::size_t a, std::size_t b) {
    return model.events[a].event_id < model.events[b].event_id;
  });
  for (std::size_t idx : ordered) {
    const Event& ev = model.events[idx];
    auto& stats = model.activity_stats[ev.activity];
    if (stats.frequency == 0) stats.entity_type = ev.owner.type;
    stats.frequency++;
  }

  // per-instance traces: no edge ever links two instances of the same type
  for (const auto& inst : live) {
    auto it = traces.find(inst);
    if (it == traces.end()) continue;
    const auto& idx = it->second;
    std::map<std::string, std::int64_t> occurrences;
    for (std::size_t i = 0; i < idx.size(); ++i) {
      occurrences[model.events[idx[i]].activity]++;
      if (i + 1 < idx.size()) {
        const Event& a = model.events[idx[i]];
        const Event& b = model.events[idx[i + 1]];
        auto& edge = model.edges[{a.activity, b.activity}];
        if (edge.frequency == 0) {
          edge.from_entity_type = inst.type;
          edge.to_entity_type = inst.type;
        }
        edge.frequency++;
        edge.wait_ms.push_back(wait_between_events(a, b));
      }
    }
    for (const auto& [activity, n] : occurrences)
      if (n > 1) model.activity_stats[activity].rework += n - 1;
  }

  // bridge events draw a cross-entity edge from the last prior event of each
  // linked earlier instance
  for (std::size_t idx : live_events) {
    const Event& ev = model.events[idx];
    for (const auto& src : ev.bridge_links) {
      if (!live.count(src)) continue;
      auto it = traces.find(src);
      if (it == traces.end()) continue;
      const Event* prior = nullptr;
      for (std::size_t src_idx : it->second) {
        const Event& cand = model.events[src_idx];
        if (event_before(cand, ev)) prior = &cand;
        else break;
      }
      if (!prior) continue;
      auto& edge = model.edges[{prior->activity, ev.activity}];
      if (edge.frequency == 0) {
        edge.from_entity_type = src.type;
        edge.to_entity_type = ev.owner.type;
      }
      edge.frequency++;
      edge.wait_ms.push_back(wait_between_events(*prior, ev));
    }
  }
}

}  // namespace detail

inline Model build_model(const EntitySchema& schema, std::vector<Event> events,
                         std::vector<Case> cases) {
  if (cases.empty()) throw empty_model_error("empty model: no cases");
  Model model;
  model.schema = schema;
  model.events = std::move(events);
  model.cases = std::move(cases);
  detail::recompute_stats(model);
  return model;
}

inline Model discover(const std::vector<Row>& rows, const EntitySchema& schema) {
  auto events = merge_bridge_rows(rows, schema);
  auto cases = compose_cases(events, schema);
  return build_model(schema, std::move(events), std::move(cases));
}

// Whole-case filtering: a case is kept or dropped in its entirety and the
// statistics are recomputed over what is kept.
inline Model filter_cases(const Model& model, const std::function<bool(const Case&)>& keep) {
  Model out;
  out.schema = model.schema;
  out.events = model.events;
  for (const auto& c : model.cases)
    if (keep(c)) out.cases.push_back(c);
  detail::recompute_stats(out);
  return out;
}

inline std::function<bool(const Case&)> member_filter(const std::string& expr) {
  // expr is "Type:id" or a bare instance id
  auto colon = expr.find(':');
  if (colon != std::string::npos) {
    EntityRef target{expr.substr(0, colon), expr.substr(colon + 1)};
    return [target](const Case& c) { return c.members.count(target) > 0; };
  }
  return [expr](const Case& c) {
    for (const auto& m : c.members)
      if (m.id == expr) return true;
    return false;
  };
}

struct ReferenceModel {
  std::set<std::pair<std::string, std::string>> activities;  // (activity, entity type)
  std::set<std::pair<std::string, std::string>> allowed_edges;
  std::set<std::string> start_activities;
  std::set<std::string> end_activities;
};

inline ReferenceModel reference_from_json(const nlohmann::json& j) {
  ReferenceModel ref;
  for (const auto& a : j.at("activities"))
    ref.activities.insert({a.at("activity").get<std::string>(), a.at("entity").get<std::string>()});
  for (const auto& e : j.at("edges"))
    ref.allowed_edges.insert({e.at("from").get<std::string>(), e.at("to").get<std::string>()});
  if (j.contains("start_activities"))
    for (const auto& s : j.at("start_activities")) ref.start_activities.insert(s.get<std::string>());
  if (j.contains("end_activities"))
    for (const auto& s : j.at("end_activities")) ref.end_activities.insert(s.get<std::string>());
  return ref;
}

inline nlohmann::json reference_to_json(const ReferenceModel& ref) {
  nlohmann::json activities = nlohmann::json::array();
  for (const auto& [activity, entity] : ref.activities)
    activities.push_back({{"activity", activity}, {"entity", entity}});
  nlohmann::json edges = nlohmann::json::array();
  for (const auto& [from, to] : ref.allowed_edges) edges.push_back({{"from", from}, {"to", to}});
  return nlohmann::json{{"activities", std::move(activities)},
                        {"edges", std::move(edges)},
                        {"start_activities", ref.start_activities},
                        {"end_activities", ref.end_activities}};
}

// Reference equal to what was discovered: every case replays cleanly.
inline ReferenceModel reference_from_model(const Model& model) {
  ReferenceModel ref;
  for (const auto& [activity, stats] : model.activity_stats)
    ref.activities.insert({activity, stats.entity_type});
  for (const auto& [key, edge] : model.edges) ref.allowed_edges.insert(key);
  for (const auto& c : model.cases) {
    if (c.event_indices.empty()) continue;
    ref.start_activities.insert(model.events[c.event_indices.front()].activity);
    ref.end_activities.insert(model.events[c.event_indices.back()].activity);
  }
  return ref;
}

struct Violation {
  int event_id = 0;
  std::string reason;
};

struct CaseConformance {
  bool conformant = true;
  std::vector<Violation> violations;
};

struct ConformanceResult {
  std::map<std::string, CaseConformance> per_case;
  std::map<EntityRef, bool> entity_conformant;
};

// Replays each case against the reference along the same decomposition that
// discovery uses: per-instance sequences plus bridge transitions. One
// deviation anywhere marks the whole case, and with it every member entity,
// as non-conformant. Entity-type ratios are never checked.
inline ConformanceResult check_conformance(const Model& model, const ReferenceModel& reference) {
  if (reference.activities.empty()) throw schema_error("empty reference model");
  ConformanceResult result;
  auto traces = detail::owned_traces(model.events);
  for (const auto& c : model.cases) {
    CaseConformance cc;
    for (std::size_t idx : c.event_indices) {
      const Event& ev = model.events[idx];
      if (!reference.activities.count({ev.activity, ev.owner.type}))
        cc.violations.push_back(
            {ev.event_id, "activity '" + ev.activity + "' (" + ev.owner.type + ") not in reference"});
    }
    for (const auto& m : c.members) {
      auto it = traces.find(m);
      if (it == traces.end()) continue;
      const auto& idx = it->second;
      for (std::size_t i = 0; i + 1 < idx.size(); ++i) {
        const Event& a = model.events[idx[i]];
        const Event& b = model.events[idx[i + 1]];
        if (!reference.allowed_edges.count({a.activity, b.activity}))
          cc.violations.push_back(
              {b.event_id, "edge '" + a.activity + "' -> '" + b.activity + "' not allowed"});
      }
    }
    for (std::size_t idx : c.event_indices) {
      const Event& ev = model.events[idx];
      for (const auto& src : ev.bridge_links) {
        if (!c.members.count(src)) continue;
        auto it = traces.find(src);
        if (it == traces.end()) continue;
        const Event* prior = nullptr;
        for (std::size_t src_idx : it->second) {
          if (detail::event_before(model.events[src_idx], ev)) prior = &model.events[src_idx];
          else break;
        }
        if (prior && !reference.allowed_edges.count({prior->activity, ev.activity}))
          cc.violations.push_back(
              {ev.event_id, "edge '" + prior->activity + "' -> '" + ev.activity + "' not allowed"});
      }
    }
    if (!c.event_indices.empty()) {
      const Event& first = model.events[c.event_indices.front()];
      const Event& last = model.events[c.event_indices.back()];
      if (!reference.start_activities.empty() && !reference.start_activities.count(first.activity))
        cc.violations.push_back({first.event_id, "case starts with disallowed activity"});
      if (!reference.end_activities.empty() && !reference.end_activities.count(last.activity))
        cc.violations.push_back({last.event_id, "case ends with disallowed activity"});
    }
    cc.conformant = cc.violations.empty();
    for (const auto& m : c.members) {
      auto [it, inserted] = result.entity_conformant.emplace(m, cc.conformant);
      if (!inserted) it->second = it->second && cc.conformant;
    }
    result.per_case[c.case_id] = std::move(cc);
  }
  return result;
}

inline nlohmann::json conformance_to_json(const ConformanceResult& result) {
  nlohmann::json per_case = nlohmann::json::object();
  for (const auto& [case_id, cc] : result.per_case) {
    nlohmann::json violations = nlohmann::json::array();
    for (const auto& v : cc.violations)
      violations.push_back({{"event_id", v.event_id}, {"reason", v.reason}});
    per_case[case_id] = {{"conformant", cc.conformant}, {"violations", std::move(violations)}};
  }
  nlohmann::json entities = nlohmann::json::object();
  for (const auto& [entity, ok] : result.entity_conformant) entities[to_string(entity)] = ok;
  return nlohmann::json{{"cases", std::move(per_case)}, {"entities", std::move(entities)}};
}

enum class Occurrence { First, Last };
enum class DurationMode { StartToStart, EndToStart };

// Throughput between two activities. Pairs are entity instances connected
// through the case's bridge links (bridge direction: earlier entity toward
// later entity, reflexive). One row per linked pair, even when a single case
// holds several; pairs shared by cases are emitted once.
inline ThroughputResult throughput(const Model& model, const std::string& from_activity,
                                   const std::string& to_activity,
                                   Occurrence occurrence = Occurrence::First,
                                   DurationMode duration_mode = DurationMode::StartToStart) {
  if (!model.activity_stats.count(from_activity))
    throw query_error("unknown activity '" + from_activity + "'");
  if (!model.activity_stats.count(to_activity))
    throw query_error("unknown activity '" + to_activity + "'");

  auto traces = detail::owned_traces(model.events);

  auto pick_event = [&](const EntityRef& inst, const std::string& activity) -> const Event* {
    auto it = traces.find(inst);
    if (it == traces.end()) return nullptr;
    const Event* found = nullptr;
    for (std::size_t idx : it->second) {
      if (model.events[idx].activity != activity) continue;
      found = &model.events[idx];
      if (occurrence == Occurrence::First) break;
    }
    return found;
  };

  // directed bridge adjacency: earlier instance -> later instance
  std::map<EntityRef, std::set<EntityRef>> forward;
  for (const auto& ev : model.events)
    for (const auto& src : ev.bridge_links) forward[src].insert(ev.owner);

  std::map<std::pair<EntityRef, EntityRef>, std::vector<EntityRef>> pairs;  // -> witness path
  for (const auto& c : model.cases) {
    std::vector<EntityRef> sources, targets;
    for (const auto& m : c.members) {
      auto it = traces.find(m);
      if (it == traces.end()) continue;
      bool has_from = false, has_to = false;
      for (std::size_t idx : it->second) {
        if (model.events[idx].activity == from_activity) has_from = true;
        if (model.events[idx].activity == to_activity) has_to = true;
      }
      if (has_from) sources.push_back(m);
      if (has_to) targets.push_back(m);
    }
    if (sources.empty() || targets.empty()) continue;
    std::set<EntityRef> target_set(targets.begin(), targets.end());
    for (const auto& s : sources) {
      // BFS over bridge direction, restricted to this case's members
      std::map<EntityRef, EntityRef> parent;
      std::deque<EntityRef> queue{s};
      std::set<EntityRef> visited{s};
      while (!queue.empty()) {
        EntityRef u = queue.front();
        queue.pop_front();
        auto adj = forward.find(u);
        if (adj == forward.end()) continue;
        for (const auto& v : adj->second) {
          if (!c.members.count(v) || visited.count(v)) continue;
          visited.insert(v);
          parent.emplace(v, u);
          queue.push_back(v);
        }
      }
      for (const auto& t : target_set) {
        if (!visited.count(t)) continue;
        auto key = std::make_pair(s, t);
        if (pairs.count(key)) continue;
        std::vector<EntityRef> path{t};
        EntityRef cur = t;
        while (!(cur == s)) {
          cur = parent.at(cur);
          path.push_back(cur);
        }
        std::reverse(path.begin(), path.end());
        pairs.emplace(std::move(key), std::move(path));
      }
    }
  }

  ThroughputResult result;
  for (const auto& [key, path] : pairs) {
    const Event* from_ev = pick_event(key.first, from_activity);
    const Event* to_ev = pick_event(key.second, to_activity);
    if (!from_ev || !to_ev) continue;
    Timestamp origin = from_ev->start_ts;
    if (duration_mode == DurationMode::EndToStart && from_ev->end_ts) origin = *from_ev->end_ts;
    std::int64_t d = to_ev->start_ts - origin;
    if (d < 0) continue;  // not a forward path in time
    result.rows.push_back({key.first, key.second, path, d});
  }
  result.aggregate = aggregate_durations(result.rows);
  return result;
}

inline std::string model_to_dot(const Model& model) {
  std::string out = "digraph multilevel {\n  rankdir=TB;\n  node [shape=box];\n";
  for (const auto& [activity, stats] : model.activity_stats) {
    out += "  " + dot_quote(activity) + " [entity=" + dot_quote(stats.entity_type) + ", label=" +
           dot_quote(activity + "\\n" + stats.entity_type + " (" + std::to_string(stats.frequency) +
                     ")") +
           "];\n";
  }
  for (const auto& [key, edge] : model.edges) {
    out += "  " + dot_quote(key.first) + " -> " + dot_quote(key.second) + " [label=" +
           dot_quote(std::to_string(edge.frequency)) + "];\n";
  }
  out += "}\n";
  return out;
}

inline nlohmann::json model_stats_json(const Model& model) {
  nlohmann::json cases = nlohmann::json::array();
  for (const auto& c : model.cases) {
    nlohmann::json members = nlohmann::json::array();
    for (const auto& m : c.members) members.push_back(to_string(m));
    nlohmann::json event_ids = nlohmann::json::array();
    nlohmann::json row_indices = nlohmann::json::array();
    for (std::size_t idx : c.event_indices) {
      event_ids.push_back(model.events[idx].event_id);
      for (int r : model.events[idx].merged_row_indices) row_indices.push_back(r);
    }
    cases.push_back({{"case_id", c.case_id},
                     {"members", std::move(members)},
                     {"event_ids", std::move(event_ids)},
                     {"row_indices", std::move(row_indices)}});
  }
  nlohmann::json activities = nlohmann::json::object();
  for (const auto& [activity, stats] : model.activity_stats)
    activities[activity] = {{"entity", stats.entity_type},
                            {"frequency", stats.frequency},
                            {"rework", stats.rework}};
  nlohmann::json edges = nlohmann::json::array();
  for (const auto& [key, edge] : model.edges) {
    double mean_wait = 0.0;
    for (std::int64_t w : edge.wait_ms) mean_wait += static_cast<double>(w);
    if (!edge.wait_ms.empty()) mean_wait /= static_cast<double>(edge.wait_ms.size());
    edges.push_back({{"from", key.first},
                     {"to", key.second},
                     {"frequency", edge.frequency},
                     {"mean_wait_ms", mean_wait},
                     {"from_entity", edge.from_entity_type},
                     {"to_entity", edge.to_entity_type}});
  }
  return nlohmann::json{{"case_count", model.cases.size()},
                        {"event_count", model.live_event_count},
                        {"input_rows", model.input_row_count},
                        {"entity_cardinality", model.entity_cardinality},
                        {"activities", std::move(activities)},
                        {"edges", std::move(edges)},
                        {"cases", std::move(cases)}};
}

}  // namespace promine::multilevel
