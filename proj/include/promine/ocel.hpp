#pragma once

#include <algorithm>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <json.hpp>

#include "promine/errors.hpp"
#include "promine/timestamp.hpp"

namespace promine::ocel {

enum class ValueKind { String, Number, Boolean, Time };

inline std::string to_string(ValueKind k) {
  switch (k) {
    case ValueKind::String: return "string";
    case ValueKind::Number: return "number";
    case ValueKind::Boolean: return "boolean";
    case ValueKind::Time: return "timestamp";
  }
  return "string";
}

inline std::optional<ValueKind> value_kind_from_string(const std::string& s) {
  if (s == "string") return ValueKind::String;
  if (s == "number") return ValueKind::Number;
  if (s == "boolean") return ValueKind::Boolean;
  if (s == "timestamp") return ValueKind::Time;
  return std::nullopt;
}

using Value = std::variant<std::string, double, bool, Timestamp>;

inline ValueKind kind_of(const Value& v) {
  switch (v.index()) {
    case 0: return ValueKind::String;
    case 1: return ValueKind::Number;
    case 2: return ValueKind::Boolean;
    default: return ValueKind::Time;
  }
}

inline std::string value_to_display(const Value& v) {
  switch (v.index()) {
    case 0: return std::get<std::string>(v);
    case 1: return nlohmann::json(std::get<double>(v)).dump();
    case 2: return std::get<bool>(v) ? "true" : "false";
    default: return format_timestamp(std::get<Timestamp>(v));
  }
}

struct ObjectType {
  std::string name;
  std::map<std::string, ValueKind> attribute_schema;

  bool operator==(const ObjectType&) const = default;
};

struct AttributeEntry {
  Timestamp time;
  std::string name;
  Value value;

  bool operator==(const AttributeEntry&) const = default;
};

struct Object {
  std::string id;
  std::string type;
  std::vector<AttributeEntry> timeline;  // non-decreasing time per attribute

  bool operator==(const Object&) const = default;
};

struct Relationship {
  std::string object_id;
  std::optional<std::string> qualifier;

  bool operator==(const Relationship&) const = default;
  auto operator<=>(const Relationship&) const = default;
};

struct Event {
  std::string id;
  std::string activity;
  Timestamp time;  // an event has precisely one timestamp
  std::vector<Relationship> relationships;  // at least one object
  std::map<std::string, Value> attributes;

  bool operator==(const Event&) const = default;
};

struct O2ORelation {
  std::string source;
  std::string target;
  std::optional<std::string> qualifier;

  bool operator==(const O2ORelation&) const = default;
  auto operator<=>(const O2ORelation&) const = default;
};

// L = (E, O, #, R): events, typed objects, attribute mappings, relations.
struct Log {
  std::vector<ObjectType> types;          // sorted by name
  std::map<std::string, Object> objects;  // id -> object
  std::vector<Event> events;              // non-decreasing time, input-order ties
  std::vector<O2ORelation> o2o;

  bool operator==(const Log&) const = default;

  const ObjectType* find_type(const std::string& name) const {
    for (const auto& t : types)
      if (t.name == name) return &t;
    return nullptr;
  }
};

// Referential-integrity validation; throws on violations.
inline void validate_log(const Log& log) {
  std::set<std::string> type_names;
  for (const auto& t : log.types)
    if (!type_names.insert(t.name).second)
      throw integrity_error("duplicate object type '" + t.name + "'");
  for (const auto& [id, obj] : log.objects) {
    const ObjectType* type = log.find_type(obj.type);
    if (!type)
      throw integrity_error("object '" + id + "' has undeclared type '" + obj.type + "'");
    std::map<std::string, Timestamp> last_seen;
    for (const auto& entry : obj.timeline) {
      auto it = type->attribute_schema.find(entry.name);
      if (it == type->attribute_schema.end())
        throw integrity_error("object '" + id + "' sets attribute '" + entry.name +
                              "' not in schema of type '" + obj.type + "'");
      if (it->second != kind_of(entry.value))
        throw integrity_error("object '" + id + "' attribute '" + entry.name +
                              "' has kind " + to_string(kind_of(entry.value)) +
                              ", schema requires " + to_string(it->second));
      auto seen = last_seen.find(entry.name);
      if (seen != last_seen.end() && entry.time < seen->second)
        throw integrity_error("object '" + id + "' attribute '" + entry.name +
                              "' timeline is not time-ordered");
      last_seen[entry.name] = entry.time;
    }
  }
  std::set<std::string> event_ids;
  std::vector<std::string> dangling;
  for (const auto& ev : log.events) {
    if (!event_ids.insert(ev.id).second)
      throw integrity_error("duplicate event id '" + ev.id + "'");
    if (ev.relationships.empty())
      throw integrity_error("event '" + ev.id + "' is not linked with any object");
    std::set<std::string> seen;
    for (const auto& rel : ev.relationships) {
      if (!seen.insert(rel.object_id).second)
        throw integrity_error("event '" + ev.id + "' relates object '" + rel.object_id +
                              "' more than once");
      if (!log.objects.count(rel.object_id)) dangling.push_back(rel.object_id);
    }
  }
  for (const auto& rel : log.o2o) {
    if (rel.source == rel.target)
      throw integrity_error("object-to-object self-relation on '" + rel.source + "'");
    if (!log.objects.count(rel.source)) dangling.push_back(rel.source);
    if (!log.objects.count(rel.target)) dangling.push_back(rel.target);
  }
  if (!dangling.empty()) {
    std::sort(dangling.begin(), dangling.end());
    dangling.erase(std::unique(dangling.begin(), dangling.end()), dangling.end());
    std::string ids;
    for (const auto& id : dangling) {
      if (!ids.empty()) ids += ", ";
      ids += id;
    }
    throw integrity_error("dangling object references: " + ids);
  }
}

namespace detail {

inline Value value_from_json(const nlohmann::json& j, std::optional<ValueKind> declared) {
  if (declared && *declared == ValueKind::Time) {
    if (!j.is_string()) throw integrity_error("timestamp attribute value must be a string");
    auto t = try_parse_timestamp(j.get<std::string>());
    if (!t) throw integrity_error("unparseable timestamp attribute '" + j.get<std::string>() + "'");
    return *t;
  }
  if (j.is_string()) return j.get<std::string>();
  if (j.is_boolean()) return j.get<bool>();
  if (j.is_number()) return j.get<double>();
  throw integrity_error("unsupported attribute value type: " + j.dump());
}

inline nlohmann::json value_to_json(const Value& v) {
  switch (v.index()) {
    case 0: return std::get<std::string>(v);
    case 1: return std::get<double>(v);
    case 2: return std::get<bool>(v);
    default: return format_timestamp(std::get<Timestamp>(v));
  }
}

}  // namespace detail

inline Log parse_ocel_json(const nlohmann::json& j) {
  Log log;
  for (const auto& t : j.at("objectTypes")) {
    ObjectType type;
    type.name = t.at("name").get<std::string>();
    if (t.contains("attributes"))
      for (const auto& a : t.at("attributes")) {
        auto kind = value_kind_from_string(a.at("kind").get<std::string>());
        if (!kind)
          throw schema_error("unknown attribute kind '" + a.at("kind").get<std::string>() + "'");
        type.attribute_schema[a.at("name").get<std::string>()] = *kind;
      }
    log.types.push_back(std::move(type));
  }
  std::sort(log.types.begin(), log.types.end(),
            [](const ObjectType& a, const ObjectType& b) { return a.name < b.name; });

  for (const auto& o : j.at("objects")) {
    Object obj;
    obj.id = o.at("id").get<std::string>();
    obj.type = o.at("type").get<std::string>();
    const ObjectType* type = log.find_type(obj.type);
    if (!type) throw integrity_error("object '" + obj.id + "' has undeclared type '" + obj.type + "'");
    if (o.contains("attributes"))
      for (const auto& a : o.at("attributes")) {
        AttributeEntry entry;
        auto t = try_parse_timestamp(a.at("time").get<std::string>());
        if (!t) throw integrity_error("object '" + obj.id + "': unparseable attribute time");
        entry.time = *t;
        entry.name = a.at("name").get<std::string>();
        std::optional<ValueKind> declared;
        if (auto it = type->attribute_schema.find(entry.name); it != type->attribute_schema.end())
          declared = it->second;
        entry.value = detail::value_from_json(a.at("value"), declared);
        obj.timeline.push_back(std::move(entry));
      }
    if (log.objects.count(obj.id)) throw integrity_error("duplicate object id '" + obj.id + "'");
    log.objects[obj.id] = std::move(obj);
  }

  for (const auto& e : j.at("events")) {
    Event ev;
    ev.id = e.at("id").get<std::string>();
    ev.activity = e.at("activity").get<std::string>();
    auto t = try_parse_timestamp(e.at("time").get<std::string>());
    if (!t) throw integrity_error("event '" + ev.id + "': unparseable time");
    ev.time = *t;
    if (e.contains("relationships"))
      for (const auto& r : e.at("relationships")) {
        Relationship rel;
        rel.object_id = r.at("objectId").get<std::string>();
        if (r.contains("qualifier")) rel.qualifier = r.at("qualifier").get<std::string>();
        ev.relationships.push_back(std::move(rel));
      }
    std::sort(ev.relationships.begin(), ev.relationships.end());
    if (e.contains("attributes"))
      for (const auto& [k, v] : e.at("attributes").items())
        ev.attributes[k] = detail::value_from_json(v, std::nullopt);
    log.events.push_back(std::move(ev));
  }
  std::stable_sort(log.events.begin(), log.events.end(),
                   [](const Event& a, const Event& b) { return a.time < b.time; });

  if (j.contains("o2o"))
    for (const auto& r : j.at("o2o")) {
      O2ORelation rel;
      rel.source = r.at("source").get<std::string>();
      rel.target = r.at("target").get<std::string>();
      if (r.contains("qualifier")) rel.qualifier = r.at("qualifier").get<std::string>();
      log.o2o.push_back(std::move(rel));
    }
  std::sort(log.o2o.begin(), log.o2o.end());

  validate_log(log);
  return log;
}

inline Log parse_ocel_json(std::istream& in) {
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw schema_error(std::string("invalid JSON: ") + e.what());
  }
  return parse_ocel_json(j);
}

inline nlohmann::json to_json(const Log& log) {
  nlohmann::json types = nlohmann::json::array();
  for (const auto& t : log.types) {
    nlohmann::json attrs = nlohmann::json::array();
    for (const auto& [name, kind] : t.attribute_schema)
      attrs.push_back({{"name", name}, {"kind", to_string(kind)}});
    types.push_back({{"name", t.name}, {"attributes", std::move(attrs)}});
  }
  nlohmann::json objects = nlohmann::json::array();
  for (const auto& [id, obj] : log.objects) {
    nlohmann::json attrs = nlohmann::json::array();
    for (const auto& entry : obj.timeline)
      attrs.push_back({{"time", format_timestamp(entry.time)},
                       {"name", entry.name},
                       {"value", detail::value_to_json(entry.value)}});
    objects.push_back({{"id", id}, {"type", obj.type}, {"attributes", std::move(attrs)}});
  }
  nlohmann::json events = nlohmann::json::array();
  for (const auto& ev : log.events) {
    nlohmann::json rels = nlohmann::json::array();
    for (const auto& rel : ev.relationships) {
      nlohmann::json r{{"objectId", rel.object_id}};
      if (rel.qualifier) r["qualifier"] = *rel.qualifier;
      rels.push_back(std::move(r));
    }
    nlohmann::json attrs = nlohmann::json::object();
    for (const auto& [k, v] : ev.attributes) attrs[k] = detail::value_to_json(v);
    events.push_back({{"id", ev.id},
                      {"activity", ev.activity},
                      {"time", format_timestamp(ev.time)},
                      {"relationships", std::move(rels)},
                      {"attributes", std::move(attrs)}});
  }
  nlohmann::json o2o = nlohmann::json::array();
  for (const auto& rel : log.o2o) {
    nlohmann::json r{{"source", rel.source}, {"target", rel.target}};
    if (rel.qualifier) r["qualifier"] = *rel.qualifier;
    o2o.push_back(std::move(r));
  }
  return nlohmann::json{{"objectTypes", std::move(types)},
                        {"objects", std::move(objects)},
                        {"events", std::move(events)},
                        {"o2o", std::move(o2o)}};
}

struct QualityReport {
  std::int64_t consistency_inversions = 0;       // event pairs out of timestamp order
  std::vector<std::string> unreferenced_objects; // completeness warnings
  std::vector<std::string> accuracy_violations;  // schema conformance findings
  std::optional<std::int64_t> log_age_ms;        // timeliness, vs provided "now"
};

namespace detail {

// Merge-sort inversion count over event timestamps.
inline std::int64_t count_inversions(std::vector<std::int64_t>& v, std::size_t lo, std::size_t hi,
                                     std::vector<std::int64_t>& scratch) {
  if (hi - lo <= 1) return 0;
  std::size_t mid = lo + (hi - lo) / 2;
  std::int64_t count = count_inversions(v, lo, mid, scratch) + count_inversions(v, mid, hi, scratch);
  std::size_t i = lo, k = mid, out = lo;
  while (i < mid && k < hi) {
    if (v[k] < v[i]) {
      count += static_cast<std::int64_t>(mid - i);
      scratch[out++] = v[k++];
    } else {
      scratch[out++] = v[i++];
    }
  }
  while (i < mid) scratch[out++] = v[i++];
  while (k < hi) scratch[out++] = v[k++];
  std::copy(scratch.begin() + static_cast<std::ptrdiff_t>(lo),
            scratch.begin() + static_cast<std::ptrdiff_t>(hi),
            v.begin() + static_cast<std::ptrdiff_t>(lo));
  return count;
}

}  // namespace detail

// Data-quality report: never fails, only describes.
inline QualityReport validate_quality(const Log& log, std::optional<Timestamp> now = std::nullopt) {
  QualityReport report;

  std::vector<std::int64_t> times;
  times.reserve(log.events.size());
  for (const auto& ev : log.events) times.push_back(ev.time.ms);
  std::vector<std::int64_t> scratch(times.size());
  report.consistency_inversions = detail::count_inversions(times, 0, times.size(), scratch);

  std::set<std::string> referenced;
  for (const auto& ev : log.events)
    for (const auto& rel : ev.relationships) referenced.insert(rel.object_id);
  for (const auto& [id, obj] : log.objects)
    if (!referenced.count(id)) report.unreferenced_objects.push_back(id);

  for (const auto& [id, obj] : log.objects) {
    const ObjectType* type = log.find_type(obj.type);
    if (!type) {
      report.accuracy_violations.push_back("object '" + id + "' has undeclared type '" + obj.type + "'");
      continue;
    }
    for (const auto& entry : obj.timeline) {
      auto it = type->attribute_schema.find(entry.name);
      if (it == type->attribute_schema.end())
        report.accuracy_violations.push_back("object '" + id + "' attribute '" + entry.name +
                                             "' not in type schema");
      else if (it->second != kind_of(entry.value))
        report.accuracy_violations.push_back("object '" + id + "' attribute '" + entry.name +
                                             "' kind mismatch");
    }
  }

  if (now && !log.events.empty()) {
    Timestamp max_ts = log.events.front().time;
    for (const auto& ev : log.events) max_ts = std::max(max_ts, ev.time);
    report.log_age_ms = *now - max_ts;
  }
  return report;
}

// Multiset of object types involved in one event.
struct ExecutionMode {
  std::map<std::string, std::int64_t> counts;

  bool operator==(const ExecutionMode&) const = default;
  auto operator<=>(const ExecutionMode&) const = default;

  std::int64_t total() const {
    std::int64_t n = 0;
    for (const auto& [t, c] : counts) n += c;
    return n;
  }
};

inline std::string to_string(const ExecutionMode& mode) {
  std::string out = "{";
  bool first = true;
  for (const auto& [type, count] : mode.counts) {
    if (!first) out += ", ";
    first = false;
    out += type + ": " + std::to_string(count);
  }
  return out + "}";
}

inline ExecutionMode execution_mode(const Event& event, const Log& log) {
  ExecutionMode mode;
  for (const auto& rel : event.relationships) {
    const auto& obj = log.objects.at(rel.object_id);
    mode.counts[obj.type]++;
  }
  return mode;
}

struct ObjectCountStats {
  std::int64_t min = 0;
  std::int64_t max = 0;
  double mean = 0.0;
};

struct ActivityCharacteristics {
  std::set<std::pair<std::string, std::string>> aot;                      // (activity, object type)
  std::map<std::pair<std::string, ExecutionMode>, std::int64_t> occ;      // activity occurrences
  std::map<std::string, std::map<ExecutionMode, std::int64_t>> modes;     // mode_L(a)
  std::map<std::pair<std::string, std::string>, ObjectCountStats> stats;  // per (a, ot)
  std::int64_t event_count = 0;
};

// min/max/mean are taken over every event of the activity; events that touch
// no object of the type contribute zero.
inline ActivityCharacteristics activity_characteristics(const Log& log) {
  if (log.events.empty()) throw empty_log_error("empty log");
  ActivityCharacteristics ac;
  ac.event_count = static_cast<std::int64_t>(log.events.size());

  std::map<std::string, std::vector<ExecutionMode>> per_activity;
  for (const auto& ev : log.events) {
    ExecutionMode mode = execution_mode(ev, log);
    ac.occ[{ev.activity, mode}]++;
    ac.modes[ev.activity][mode]++;
    per_activity[ev.activity].push_back(std::move(mode));
  }

  std::set<std::string> all_types;
  for (const auto& t : log.types) all_types.insert(t.name);

  for (const auto& [activity, modes] : per_activity) {
    for (const auto& type : all_types) {
      ObjectCountStats s;
      std::int64_t sum = 0;
      bool first = true;
      for (const auto& mode : modes) {
        std::int64_t c = 0;
        if (auto it = mode.counts.find(type); it != mode.counts.end()) c = it->second;
        if (first || c < s.min) s.min = c;
        if (first || c > s.max) s.max = c;
        first = false;
        sum += c;
      }
      s.mean = static_cast<double>(sum) / static_cast<double>(modes.size());
      if (s.max >= 1) ac.aot.insert({activity, type});
      ac.stats[{activity, type}] = s;
    }
  }
  return ac;
}

inline nlohmann::json quality_to_json(const QualityReport& report) {
  nlohmann::json j{{"consistency_inversions", report.consistency_inversions},
                   {"unreferenced_objects", report.unreferenced_objects},
                   {"accuracy_violations", report.accuracy_violations}};
  if (report.log_age_ms) j["log_age_ms"] = *report.log_age_ms;
  return j;
}

inline nlohmann::json characteristics_to_json(const ActivityCharacteristics& ac) {
  nlohmann::json aot = nlohmann::json::array();
  for (const auto& [activity, type] : ac.aot)
    aot.push_back({{"activity", activity}, {"object_type", type}});
  nlohmann::json occ = nlohmann::json::array();
  for (const auto& [key, count] : ac.occ) {
    nlohmann::json mode = nlohmann::json::object();
    for (const auto& [type, c] : key.second.counts) mode[type] = c;
    occ.push_back({{"activity", key.first}, {"mode", std::move(mode)}, {"count", count}});
  }
  nlohmann::json stats = nlohmann::json::array();
  for (const auto& [key, s] : ac.stats) {
    if (!ac.aot.count(key)) continue;  // pairs never observed carry no signal
    stats.push_back({{"activity", key.first},
                     {"object_type", key.second},
                     {"min", s.min},
                     {"max", s.max},
                     {"mean", s.mean}});
  }
  return nlohmann::json{{"event_count", ac.event_count},
                        {"aot", std::move(aot)},
                        {"occ", std::move(occ)},
                        {"stats", std::move(stats)}};
}

}  // namespace promine::ocel
