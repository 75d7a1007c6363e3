#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "promine/eventlog.hpp"
#include "promine/multilevel.hpp"
#include "promine/ocel.hpp"

namespace testutil {

using Rng = std::mt19937_64;

inline int pick(Rng& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

inline promine::Timestamp random_ts(Rng& rng) {
  // a few days of minute-resolution timestamps
  return promine::Timestamp{1700000000000LL + static_cast<std::int64_t>(pick(rng, 0, 5000)) * 60000};
}

inline promine::eventlog::FlatLog random_flat_log(Rng& rng, int n_events) {
  promine::eventlog::FlatLog log;
  log.source_name = "random";
  for (int i = 0; i < n_events; ++i) {
    promine::eventlog::FlatEvent ev;
    ev.case_id = "case" + std::to_string(pick(rng, 1, std::max(2, n_events / 4)));
    ev.activity = std::string(1, static_cast<char>('A' + pick(rng, 0, 5)));
    ev.start_ts = random_ts(rng);
    if (pick(rng, 0, 2) == 0) ev.end_ts = promine::Timestamp{ev.start_ts.ms + pick(rng, 0, 3600) * 1000};
    if (pick(rng, 0, 2) == 0) ev.resource = "res" + std::to_string(pick(rng, 1, 4));
    if (pick(rng, 0, 3) == 0) ev.cost = static_cast<double>(pick(rng, 0, 500)) / 4.0;
    if (pick(rng, 0, 3) == 0) ev.automated = pick(rng, 0, 1) == 1;
    if (pick(rng, 0, 1) == 0) ev.attributes["note"] = "n" + std::to_string(pick(rng, 0, 99));
    log.events.push_back(std::move(ev));
  }
  return log;
}

inline promine::ocel::Log random_ocel_log(Rng& rng, int n_events) {
  using namespace promine::ocel;
  Log log;
  const std::vector<std::string> type_names = {"Order", "Product", "Customer"};
  for (const auto& t : type_names) log.types.push_back({t, {{"label", ValueKind::String}}});

  int n_objects = std::max(3, n_events / 3);
  std::vector<std::string> object_ids;
  for (int i = 0; i < n_objects; ++i) {
    std::string id = "obj" + std::to_string(i);
    std::string type = type_names[static_cast<std::size_t>(pick(rng, 0, 2))];
    Object obj{id, type, {}};
    if (pick(rng, 0, 1) == 0)
      obj.timeline.push_back({random_ts(rng), "label", std::string("v") + std::to_string(pick(rng, 0, 9))});
    log.objects[id] = std::move(obj);
    object_ids.push_back(id);
  }

  const std::vector<std::string> activities = {"create", "confirm", "pay", "ship", "deliver"};
  for (int i = 0; i < n_events; ++i) {
    Event ev;
    ev.id = "e" + std::to_string(i);
    ev.activity = activities[static_cast<std::size_t>(pick(rng, 0, 4))];
    ev.time = random_ts(rng);
    int k = pick(rng, 1, 4);
    std::set<std::string> chosen;
    for (int r = 0; r < k; ++r)
      chosen.insert(object_ids[static_cast<std::size_t>(pick(rng, 0, n_objects - 1))]);
    for (const auto& id : chosen) {
      Relationship rel{id, std::nullopt};
      if (pick(rng, 0, 1) == 0) rel.qualifier = "q" + std::to_string(pick(rng, 0, 2));
      ev.relationships.push_back(std::move(rel));
    }
    std::sort(ev.relationships.begin(), ev.relationships.end());
    log.events.push_back(std::move(ev));
  }
  std::stable_sort(log.events.begin(), log.events.end(),
                   [](const Event& a, const Event& b) { return a.time < b.time; });
  for (int i = 0; i + 1 < n_objects && i < 3; ++i)
    if (object_ids[i] != object_ids[i + 1]) log.o2o.push_back({object_ids[i], object_ids[i + 1], "near"});
  std::sort(log.o2o.begin(), log.o2o.end());
  validate_log(log);
  return log;
}

// Random multilevel input over entity order A < B (< C). Activity alphabets
// are disjoint per entity type so cross-entity edges never collide with
// within-entity ones.
struct RandomMultilevel {
  promine::multilevel::EntitySchema schema;
  std::vector<promine::multilevel::Row> rows;
};

inline RandomMultilevel random_multilevel(Rng& rng, int max_instances_per_type = 4) {
  using namespace promine::multilevel;
  RandomMultilevel out;
  int n_types = pick(rng, 2, 3);
  const std::vector<std::string> names = {"Alpha", "Beta", "Gamma"};
  for (int t = 0; t < n_types; ++t) {
    out.schema.entities.push_back(names[static_cast<std::size_t>(t)]);
    out.schema.processid_columns[names[static_cast<std::size_t>(t)]] = names[static_cast<std::size_t>(t)] + " ID";
  }

  std::int64_t clock = 1700000000000LL;
  int row_index = 1;
  auto add_row = [&](const std::string& activity, std::map<std::string, std::string> links) {
    Row row;
    row.row_index = row_index++;
    row.activity = activity;
    clock += static_cast<std::int64_t>(pick(rng, 1, 30)) * 60000;
    row.start_ts = promine::Timestamp{clock};
    row.links = std::move(links);
    out.rows.push_back(std::move(row));
  };

  std::map<std::string, std::vector<std::string>> instances;
  for (int t = 0; t < n_types; ++t) {
    const std::string& type = out.schema.entities[static_cast<std::size_t>(t)];
    int n = pick(rng, 1, max_instances_per_type);
    for (int i = 1; i <= n; ++i) instances[type].push_back(type.substr(0, 1) + std::to_string(i));
  }

  for (int t = 0; t < n_types; ++t) {
    const std::string& type = out.schema.entities[static_cast<std::size_t>(t)];
    for (const auto& id : instances[type]) {
      int n_own = pick(rng, 1, 3);
      for (int k = 0; k < n_own; ++k) {
        std::string activity = type + "_act" + std::to_string(pick(rng, 1, 3));
        add_row(activity, {{type, id}});
      }
      if (t > 0) {
        // bridges from earlier-type instances into this one
        int n_bridges = pick(rng, 0, 2);
        const std::string& earlier = out.schema.entities[static_cast<std::size_t>(pick(rng, 0, t - 1))];
        std::string bridge_activity = type + "_link" + std::to_string(pick(rng, 1, 2));
        std::int64_t bridge_clock = clock + 60000;
        for (int k = 0; k < n_bridges; ++k) {
          const auto& pool = instances[earlier];
          const std::string& src = pool[static_cast<std::size_t>(pick(rng, 0, static_cast<int>(pool.size()) - 1))];
          Row row;
          row.row_index = row_index++;
          row.activity = bridge_activity;
          row.start_ts = promine::Timestamp{bridge_clock};  // same instant: rows merge
          row.links = {{earlier, src}, {type, id}};
          out.rows.push_back(std::move(row));
        }
        clock = bridge_clock;
      }
    }
  }
  return out;
}

struct TempDir {
  std::filesystem::path path;

  explicit TempDir(const std::string& tag) {
    path = std::filesystem::temp_directory_path() /
           ("promine_test_" + tag + "_" + std::to_string(::getpid()));
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }

  std::string file(const std::string& name, const std::string& content) const {
    auto p = path / name;
    std::ofstream out(p, std::ios::binary);
    out << content;
    return p.string();
  }
};

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace testutil
