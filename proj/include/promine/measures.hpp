#pragma once

#include <algorithm>
#include <compare>
#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "promine/csv.hpp"

namespace promine {

// One entity/object instance: an entity type (or object table) plus an id.
struct EntityRef {
  std::string type;
  std::string id;

  auto operator<=>(const EntityRef&) const = default;
};

inline std::string to_string(const EntityRef& e) { return e.type + ":" + e.id; }

struct ThroughputRow {
  EntityRef from_entity;
  EntityRef to_entity;
  std::vector<EntityRef> path_entities;
  std::int64_t duration_ms = 0;
};

struct ThroughputAggregate {
  double mean = 0.0;
  double median = 0.0;
  std::int64_t min = 0;
  std::int64_t max = 0;
};

struct ThroughputResult {
  std::vector<ThroughputRow> rows;
  ThroughputAggregate aggregate;
};

inline ThroughputAggregate aggregate_durations(const std::vector<ThroughputRow>& rows) {
  ThroughputAggregate agg;
  if (rows.empty()) return agg;
  std::vector<std::int64_t> ds;
  ds.reserve(rows.size());
  double sum = 0.0;
  for (const auto& r : rows) {
    ds.push_back(r.duration_ms);
    sum += static_cast<double>(r.duration_ms);
  }
  std::sort(ds.begin(), ds.end());
  agg.min = ds.front();
  agg.max = ds.back();
  agg.mean = sum / static_cast<double>(ds.size());
  std::size_t n = ds.size();
  agg.median = (n % 2 == 1) ? static_cast<double>(ds[n / 2])
                            : (static_cast<double>(ds[n / 2 - 1]) + static_cast<double>(ds[n / 2])) / 2.0;
  return agg;
}

inline void write_throughput_csv(std::ostream& os, const ThroughputResult& result) {
  write_csv_record(os, {"from_type", "from_id", "to_type", "to_id", "path", "duration_ms"});
  for (const auto& row : result.rows) {
    std::string path;
    for (std::size_t i = 0; i < row.path_entities.size(); ++i) {
      if (i) path += "->";
      path += to_string(row.path_entities[i]);
    }
    write_csv_record(os, {row.from_entity.type, row.from_entity.id, row.to_entity.type,
                          row.to_entity.id, path, std::to_string(row.duration_ms)});
  }
}

}  // namespace promine
