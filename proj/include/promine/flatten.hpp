#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "promine/errors.hpp"
#include "promine/eventlog.hpp"
#include "promine/ocel.hpp"

namespace promine::eventlog {

struct FlatteningReport {
  std::int64_t duplicated_event_count = 0;   // convergence: extra copies introduced
  std::int64_t false_rework_edge_count = 0;  // divergence: fabricated a->a successor pairs
  std::int64_t dropped_event_count = 0;      // events with no object of the target type
  // activity -> (rows in the flat log, distinct source events)
  std::map<std::string, std::pair<std::int64_t, std::int64_t>> per_activity_inflation;
};

// Flattens an object-centric log onto one object type: every event is emitted
// once per related object of that type, with the object id as the case id.
inline std::pair<FlatLog, FlatteningReport> flatten_ocel(const ocel::Log& log,
                                                         const std::string& target_type) {
  if (!log.find_type(target_type))
    throw schema_error("unknown object type '" + target_type + "'");

  FlatLog flat;
  flat.source_name = "flattened:" + target_type;
  FlatteningReport report;

  // flat row -> source event index, for divergence analysis
  std::vector<std::size_t> row_source;
  std::map<std::string, std::set<std::size_t>> distinct_by_activity;

  for (std::size_t i = 0; i < log.events.size(); ++i) {
    const ocel::Event& ev = log.events[i];
    std::vector<std::string> target_objects;
    for (const auto& rel : ev.relationships)
      if (log.objects.at(rel.object_id).type == target_type)
        target_objects.push_back(rel.object_id);
    if (target_objects.empty()) {
      report.dropped_event_count++;
      continue;
    }
    report.duplicated_event_count += static_cast<std::int64_t>(target_objects.size()) - 1;
    distinct_by_activity[ev.activity].insert(i);
    for (const auto& obj_id : target_objects) {
      FlatEvent fe;
      fe.case_id = obj_id;
      fe.activity = ev.activity;
      fe.start_ts = ev.time;
      for (const auto& [k, v] : ev.attributes) fe.attributes[k] = ocel::value_to_display(v);
      flat.events.push_back(std::move(fe));
      row_source.push_back(i);
      report.per_activity_inflation[ev.activity].first++;
    }
  }
  for (const auto& [activity, events] : distinct_by_activity)
    report.per_activity_inflation[activity].second = static_cast<std::int64_t>(events.size());

  // Divergence: an a->a successor pair inside a flattened case is false rework
  // when the two events touch disjoint sets of non-case objects. Pairs whose
  // events share an underlying object, or touch only the case object itself,
  // are genuine repetition.
  auto traces = case_traces(flat);
  for (const auto& [case_id, idx] : traces) {
    for (std::size_t k = 0; k + 1 < idx.size(); ++k) {
      const FlatEvent& a = flat.events[idx[k]];
      const FlatEvent& b = flat.events[idx[k + 1]];
      if (a.activity != b.activity) continue;
      const ocel::Event& ea = log.events[row_source[idx[k]]];
      const ocel::Event& eb = log.events[row_source[idx[k + 1]]];
      std::set<std::string> others_a, others_b;
      for (const auto& rel : ea.relationships)
        if (rel.object_id != case_id) others_a.insert(rel.object_id);
      for (const auto& rel : eb.relationships)
        if (rel.object_id != case_id) others_b.insert(rel.object_id);
      if (others_a.empty() && others_b.empty()) continue;
      bool shared = false;
      for (const auto& id : others_a)
        if (others_b.count(id)) {
          shared = true;
          break;
        }
      if (!shared) report.false_rework_edge_count++;
    }
  }
  return {std::move(flat), std::move(report)};
}

inline nlohmann::json flattening_report_to_json(const FlatteningReport& report) {
  nlohmann::json inflation = nlohmann::json::object();
  for (const auto& [activity, counts] : report.per_activity_inflation)
    inflation[activity] = {{"flat_rows", counts.first}, {"distinct_events", counts.second}};
  return nlohmann::json{{"duplicated_event_count", report.duplicated_event_count},
                        {"false_rework_edge_count", report.false_rework_edge_count},
                        {"dropped_event_count", report.dropped_event_count},
                        {"per_activity_inflation", std::move(inflation)}};
}

}  // namespace promine::eventlog
