#pragma once

#include <algorithm>
#include <cstdint>
#include <deque>
#include <fstream>
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
#include "promine/eventlog.hpp"
#include "promine/measures.hpp"
#include "promine/timestamp.hpp"

namespace promine::orgmine {

struct ObjectTable {
  std::string name;
  std::string primary_key_column;
  std::vector<std::string> columns;                 // header order
  std::vector<std::vector<std::string>> rows;       // aligned with columns
  std::map<std::string, std::size_t> column_index;
  std::map<std::string, std::size_t> pk_to_row;

  const std::string& cell(std::size_t row, const std::string& column) const {
    return rows[row][column_index.at(column)];
  }
};

inline ObjectTable load_object_table(std::istream& in, std::string name,
                                     std::string primary_key_column) {
  CsvTable csv = read_csv(in);
  ObjectTable table;
  table.name = std::move(name);
  table.primary_key_column = std::move(primary_key_column);
  table.columns = csv.header;
  for (std::size_t i = 0; i < csv.header.size(); ++i) table.column_index[csv.header[i]] = i;
  if (!table.column_index.count(table.primary_key_column))
    throw schema_error("table '" + table.name + "': primary key column '" +
                       table.primary_key_column + "' not in header");
  table.rows = csv.rows;
  std::size_t pk_col = table.column_index.at(table.primary_key_column);
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const std::string& pk = table.rows[r][pk_col];
    if (pk.empty())
      throw integrity_error("table '" + table.name + "': null primary key in row " +
                            std::to_string(r + 1));
    if (!table.pk_to_row.emplace(pk, r).second)
      throw integrity_error("table '" + table.name + "': duplicate primary key '" + pk + "'");
  }
  return table;
}

struct LogBinding {
  std::string process_name;
  eventlog::FlatLog log;
  std::string table;  // object table whose primary key the case ids reference
};

struct JoinEdge {
  std::string from_table;
  std::string from_column;
  std::string to_table;  // joined on its primary key

  auto operator<=>(const JoinEdge&) const = default;
};

inline std::string to_string(const JoinEdge& e) {
  return e.from_table + "." + e.from_column + " -> " + e.to_table;
}

struct EdgeIntegrity {
  std::int64_t dangling = 0;
  std::vector<std::string> samples;
};

struct BindingIntegrity {
  std::int64_t total_case_ids = 0;
  std::int64_t unresolved = 0;
  std::vector<std::string> samples;
};

struct GraphReport {
  std::map<std::string, EdgeIntegrity> per_edge;        // keyed by to_string(edge)
  std::map<std::string, BindingIntegrity> per_binding;  // keyed by process name
};

struct JoinGraph {
  std::map<std::string, ObjectTable> tables;
  std::vector<LogBinding> bindings;
  std::vector<JoinEdge> edges;
  GraphReport report;
  double case_threshold = 1.0;

  // edge index -> fk value -> rows of from_table carrying that value
  std::vector<std::map<std::string, std::vector<std::size_t>>> reverse_index;

  const LogBinding* find_binding(const std::string& process) const {
    for (const auto& b : bindings)
      if (b.process_name == process) return &b;
    return nullptr;
  }
};

inline JoinGraph build_join_graph(std::vector<ObjectTable> tables, std::vector<LogBinding> bindings,
                                  std::vector<JoinEdge> edges, double case_threshold = 1.0) {
  JoinGraph graph;
  graph.case_threshold = case_threshold;
  for (auto& t : tables) {
    std::string name = t.name;
    if (!graph.tables.emplace(std::move(name), std::move(t)).second)
      throw schema_error("duplicate table '" + graph.tables.rbegin()->first + "'");
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  for (const auto& e : edges) {
    auto from = graph.tables.find(e.from_table);
    if (from == graph.tables.end()) throw schema_error("join references unknown table '" + e.from_table + "'");
    if (!from->second.column_index.count(e.from_column))
      throw schema_error("join references unknown column '" + e.from_table + "." + e.from_column + "'");
    if (!graph.tables.count(e.to_table))
      throw schema_error("join references unknown table '" + e.to_table + "'");
    if (e.from_table == e.to_table) throw schema_error("self-join on table '" + e.from_table + "'");
  }
  graph.edges = std::move(edges);

  graph.reverse_index.resize(graph.edges.size());
  for (std::size_t i = 0; i < graph.edges.size(); ++i) {
    const JoinEdge& e = graph.edges[i];
    const ObjectTable& from = graph.tables.at(e.from_table);
    const ObjectTable& to = graph.tables.at(e.to_table);
    std::size_t col = from.column_index.at(e.from_column);
    EdgeIntegrity integrity;
    for (std::size_t r = 0; r < from.rows.size(); ++r) {
      const std::string& v = from.rows[r][col];
      if (v.empty()) continue;  // empty foreign key: no relationship
      graph.reverse_index[i][v].push_back(r);
      if (!to.pk_to_row.count(v)) {
        integrity.dangling++;
        if (integrity.samples.size() < 5) integrity.samples.push_back(v);
      }
    }
    graph.report.per_edge[to_string(e)] = std::move(integrity);
  }

  std::set<std::string> process_names;
  for (auto& b : bindings) {
    if (!process_names.insert(b.process_name).second)
      throw schema_error("duplicate process '" + b.process_name + "'");
    auto t = graph.tables.find(b.table);
    if (t == graph.tables.end())
      throw schema_error("process '" + b.process_name + "' bound to unknown table '" + b.table + "'");
    BindingIntegrity integrity;
    std::set<std::string> case_ids;
    for (const auto& ev : b.log.events) case_ids.insert(ev.case_id);
    integrity.total_case_ids = static_cast<std::int64_t>(case_ids.size());
    for (const auto& c : case_ids)
      if (!t->second.pk_to_row.count(c)) {
        integrity.unresolved++;
        if (integrity.samples.size() < 5) integrity.samples.push_back(c);
      }
    if (integrity.total_case_ids > 0) {
      double resolved = static_cast<double>(integrity.total_case_ids - integrity.unresolved) /
                        static_cast<double>(integrity.total_case_ids);
      if (resolved < case_threshold) {
        std::string ids;
        for (const auto& s : integrity.samples) {
          if (!ids.empty()) ids += ", ";
          ids += s;
        }
        throw integrity_error("process '" + b.process_name + "': case ids do not resolve to table '" +
                              b.table + "' (e.g. " + ids + ")");
      }
    }
    graph.report.per_binding[b.process_name] = std::move(integrity);
    graph.bindings.push_back(std::move(b));
  }
  return graph;
}

// Connected components over tables, linked by join edges.
inline std::vector<std::set<std::string>> components(const JoinGraph& graph) {
  std::map<std::string, std::string> parent;
  std::function<std::string(const std::string&)> find = [&](const std::string& x) {
    auto it = parent.find(x);
    if (it == parent.end() || it->second == x) return x;
    return it->second = find(it->second);
  };
  for (const auto& [name, t] : graph.tables) parent[name] = name;
  for (const auto& e : graph.edges) parent[find(e.from_table)] = find(e.to_table);
  std::map<std::string, std::set<std::string>> groups;
  for (const auto& [name, t] : graph.tables) groups[find(name)].insert(name);
  std::vector<std::set<std::string>> out;
  for (auto& [root, members] : groups) out.push_back(std::move(members));
  return out;
}

struct DiscoveredPath {
  std::vector<std::string> tables_in_order;
  std::vector<JoinEdge> edges_used;
  std::set<std::string> bindings_covered;  // process names
  bool accepted = false;
  std::string discard_reason;
};

namespace detail {

inline std::vector<std::string> dfs_table_order(const std::set<std::string>& nodes,
                                                const std::vector<JoinEdge>& tree,
                                                const std::string& root) {
  std::map<std::string, std::set<std::string>> adj;
  for (const auto& e : tree) {
    adj[e.from_table].insert(e.to_table);
    adj[e.to_table].insert(e.from_table);
  }
  std::vector<std::string> order;
  std::set<std::string> visited;
  std::function<void(const std::string&)> visit = [&](const std::string& t) {
    visited.insert(t);
    order.push_back(t);
    for (const auto& n : adj[t])
      if (!visited.count(n)) visit(n);
  };
  visit(root);
  for (const auto& n : nodes)
    if (!visited.count(n)) order.push_back(n);  // defensive: disconnected input
  return order;
}

// Resolves one case id through the tree: traversal away from the root table;
// a foreign-key step must resolve for every reached row, a reverse step may
// reach zero rows.
inline bool resolve_case(const JoinGraph& graph, const std::vector<JoinEdge>& tree,
                         const std::string& root_table, const std::string& case_id) {
  const ObjectTable& root = graph.tables.at(root_table);
  auto pk_it = root.pk_to_row.find(case_id);
  if (pk_it == root.pk_to_row.end()) return false;

  std::map<std::string, std::size_t> edge_index;  // tree edge -> graph edge position
  for (const auto& e : tree)
    for (std::size_t i = 0; i < graph.edges.size(); ++i)
      if (graph.edges[i] == e) edge_index[to_string(e)] = i;

  std::set<std::string> visited{root_table};
  std::function<bool(const std::string&, const std::vector<std::size_t>&)> walk =
      [&](const std::string& table, const std::vector<std::size_t>& rows) -> bool {
    for (const auto& e : tree) {
      std::string neighbor;
      bool forward;
      if (e.from_table == table && !visited.count(e.to_table)) {
        neighbor = e.to_table;
        forward = true;
      } else if (e.to_table == table && !visited.count(e.from_table)) {
        neighbor = e.from_table;
        forward = false;
      } else {
        continue;
      }
      visited.insert(neighbor);
      std::vector<std::size_t> next;
      if (forward) {
        const ObjectTable& from = graph.tables.at(table);
        const ObjectTable& to = graph.tables.at(neighbor);
        std::size_t col = from.column_index.at(e.from_column);
        for (std::size_t r : rows) {
          const std::string& v = from.rows[r][col];
          if (v.empty()) return false;  // broken traceability
          auto it = to.pk_to_row.find(v);
          if (it == to.pk_to_row.end()) return false;  // dangling foreign key
          next.push_back(it->second);
        }
        std::sort(next.begin(), next.end());
        next.erase(std::unique(next.begin(), next.end()), next.end());
      } else {
        const ObjectTable& from = graph.tables.at(table);
        std::size_t pk_col = from.column_index.at(from.primary_key_column);
        const auto& rindex = graph.reverse_index[edge_index.at(to_string(e))];
        for (std::size_t r : rows) {
          auto it = rindex.find(from.rows[r][pk_col]);
          if (it == rindex.end()) continue;
          next.insert(next.end(), it->second.begin(), it->second.end());
        }
        std::sort(next.begin(), next.end());
        next.erase(std::unique(next.begin(), next.end()), next.end());
      }
      if (!walk(neighbor, next)) return false;
    }
    return true;
  };
  return walk(root_table, {pk_it->second});
}

}  // namespace detail

// Enumerates acyclic join paths (trees over tables) connecting the bound
// tables of the selected processes, and accepts exactly those that cover
// every traversed table's primary key and keep every selected log's case ids
// traceable. Discarded candidates are returned with their reason.
inline std::vector<DiscoveredPath> discover_paths(const JoinGraph& graph,
                                                  const std::vector<std::string>& selected) {
  if (selected.empty()) throw query_error("no processes selected");
  std::set<std::string> required;  // bound tables
  std::set<std::string> selected_set;
  for (const auto& p : selected) {
    const LogBinding* b = graph.find_binding(p);
    if (!b) throw query_error("unknown process '" + p + "'");
    selected_set.insert(p);
    required.insert(b->table);
  }

  std::vector<std::string> table_names;
  for (const auto& [name, t] : graph.tables) table_names.push_back(name);

  constexpr std::size_t kMaxTables = 8;

  // all table subsets containing the required tables
  std::vector<std::set<std::string>> subsets;
  std::vector<std::string> optional_tables;
  for (const auto& name : table_names)
    if (!required.count(name)) optional_tables.push_back(name);
  std::size_t n_opt = optional_tables.size();
  for (std::size_t mask = 0; mask < (std::size_t{1} << std::min<std::size_t>(n_opt, 16)); ++mask) {
    std::set<std::string> s(required.begin(), required.end());
    for (std::size_t i = 0; i < n_opt; ++i)
      if (mask & (std::size_t{1} << i)) s.insert(optional_tables[i]);
    if (s.size() <= kMaxTables) subsets.push_back(std::move(s));
  }

  std::vector<DiscoveredPath> paths;
  for (const auto& nodes : subsets) {
    std::vector<JoinEdge> usable;
    for (const auto& e : graph.edges)
      if (nodes.count(e.from_table) && nodes.count(e.to_table)) usable.push_back(e);

    std::vector<std::vector<JoinEdge>> trees;
    if (nodes.size() == 1) {
      trees.push_back({});
    } else {
      std::size_t need = nodes.size() - 1;
      if (usable.size() >= need) {
        std::vector<std::size_t> combo(need);
        std::function<void(std::size_t, std::size_t)> choose = [&](std::size_t start,
                                                                   std::size_t depth) {
          if (depth == need) {
            // spanning-tree check over the chosen edges
            std::map<std::string, std::string> parent;
            std::function<std::string(const std::string&)> find = [&](const std::string& x) {
              auto it = parent.find(x);
              if (it == parent.end() || it->second == x) return x;
              return it->second = find(it->second);
            };
            for (const auto& t : nodes) parent[t] = t;
            bool acyclic = true;
            for (std::size_t i : combo) {
              std::string a = find(usable[i].from_table);
              std::string b = find(usable[i].to_table);
              if (a == b) {
                acyclic = false;
                break;
              }
              parent[a] = b;
            }
            if (acyclic) {
              std::set<std::string> roots;
              for (const auto& t : nodes) roots.insert(find(t));
              if (roots.size() == 1) {
                std::vector<JoinEdge> tree;
                for (std::size_t i : combo) tree.push_back(usable[i]);
                trees.push_back(std::move(tree));
              }
            }
            return;
          }
          for (std::size_t i = start; i < usable.size(); ++i) {
            combo[depth] = i;
            choose(i + 1, depth + 1);
          }
        };
        choose(0, 0);
      }
    }

    for (auto& tree : trees) {
      // every leaf must be a required table, otherwise the tree drags in a
      // pendant table contributing nothing
      std::map<std::string, int> degree;
      for (const auto& e : tree) {
        degree[e.from_table]++;
        degree[e.to_table]++;
      }
      bool useful = true;
      if (nodes.size() > 1)
        for (const auto& t : nodes)
          if (degree[t] <= 1 && !required.count(t)) {
            useful = false;
            break;
          }
      if (!useful) continue;

      DiscoveredPath path;
      path.edges_used = tree;
      std::sort(path.edges_used.begin(), path.edges_used.end());
      path.tables_in_order = detail::dfs_table_order(nodes, tree, *required.begin());
      path.bindings_covered = selected_set;

      // criterion 1: primary key coverage
      std::string uncovered;
      for (const auto& t : nodes) {
        bool covered = false;
        for (const auto& e : tree)
          if (e.to_table == t) covered = true;
        if (!covered)
          for (const auto& b : graph.bindings)
            if (selected_set.count(b.process_name) && b.table == t) covered = true;
        if (!covered) {
          uncovered = t;
          break;
        }
      }
      if (!uncovered.empty()) {
        path.accepted = false;
        path.discard_reason = "primary key of table '" + uncovered + "' not covered";
        paths.push_back(std::move(path));
        continue;
      }

      // criterion 2: case-id coverage for every selected log
      std::string reason;
      for (const auto& b : graph.bindings) {
        if (!selected_set.count(b.process_name)) continue;
        std::set<std::string> case_ids;
        for (const auto& ev : b.log.events) case_ids.insert(ev.case_id);
        std::int64_t resolved = 0;
        std::vector<std::string> failing;
        for (const auto& c : case_ids) {
          if (detail::resolve_case(graph, tree, b.table, c)) resolved++;
          else if (failing.size() < 3) failing.push_back(c);
        }
        double coverage = case_ids.empty()
                              ? 1.0
                              : static_cast<double>(resolved) / static_cast<double>(case_ids.size());
        if (coverage < graph.case_threshold) {
          std::string ids;
          for (const auto& f : failing) {
            if (!ids.empty()) ids += ", ";
            ids += f;
          }
          reason = "case ids of process '" + b.process_name + "' do not resolve through path (e.g. " +
                   ids + ")";
          break;
        }
      }
      if (!reason.empty()) {
        path.accepted = false;
        path.discard_reason = std::move(reason);
      } else {
        path.accepted = true;
      }
      paths.push_back(std::move(path));
    }
  }

  std::sort(paths.begin(), paths.end(), [](const DiscoveredPath& a, const DiscoveredPath& b) {
    if (a.tables_in_order != b.tables_in_order) return a.tables_in_order < b.tables_in_order;
    return a.edges_used < b.edges_used;
  });
  return paths;
}

struct UnifiedEntry {
  std::string process;
  eventlog::FlatEvent event;
  std::set<EntityRef> linked_objects;  // (table, primary key) pairs
};

struct UnifiedLog {
  std::vector<UnifiedEntry> entries;  // time-ordered, input order breaking ties
  std::map<std::string, std::string> activity_process;
  std::vector<std::string> processes;
  std::map<std::string, std::string> process_table;
  DiscoveredPath path;
  // per path edge: resolved (from-row pk, referenced pk) pairs, for join checks
  std::map<std::string, std::set<std::pair<std::string, std::string>>> join_pairs;
};

namespace detail {

// All (table, pk) instances reachable from one case row along the tree.
inline std::set<EntityRef> linked_closure(const JoinGraph& graph, const std::vector<JoinEdge>& tree,
                                          const std::string& root_table, const std::string& case_id) {
  std::set<EntityRef> out;
  const ObjectTable& root = graph.tables.at(root_table);
  auto pk_it = root.pk_to_row.find(case_id);
  if (pk_it == root.pk_to_row.end()) return out;
  out.insert({root_table, case_id});

  std::map<std::string, std::size_t> edge_index;
  for (const auto& e : tree)
    for (std::size_t i = 0; i < graph.edges.size(); ++i)
      if (graph.edges[i] == e) edge_index[to_string(e)] = i;

  std::set<std::string> visited{root_table};
  std::function<void(const std::string&, const std::vector<std::size_t>&)> walk =
      [&](const std::string& table, const std::vector<std::size_t>& rows) {
    for (const auto& e : tree) {
      std::string neighbor;
      bool forward;
      if (e.from_table == table && !visited.count(e.to_table)) {
        neighbor = e.to_table;
        forward = true;
      } else if (e.to_table == table && !visited.count(e.from_table)) {
        neighbor = e.from_table;
        forward = false;
      } else {
        continue;
      }
      visited.insert(neighbor);
      std::vector<std::size_t> next;
      const ObjectTable& near = graph.tables.at(table);
      const ObjectTable& far = graph.tables.at(neighbor);
      if (forward) {
        std::size_t col = near.column_index.at(e.from_column);
        for (std::size_t r : rows) {
          const std::string& v = near.rows[r][col];
          if (v.empty()) continue;
          auto it = far.pk_to_row.find(v);
          if (it == far.pk_to_row.end()) continue;
          next.push_back(it->second);
        }
      } else {
        std::size_t pk_col = near.column_index.at(near.primary_key_column);
        const auto& rindex = graph.reverse_index[edge_index.at(to_string(e))];
        for (std::size_t r : rows) {
          auto it = rindex.find(near.rows[r][pk_col]);
          if (it == rindex.end()) continue;
          next.insert(next.end(), it->second.begin(), it->second.end());
        }
      }
      std::sort(next.begin(), next.end());
      next.erase(std::unique(next.begin(), next.end()), next.end());
      std::size_t far_pk = far.column_index.at(far.primary_key_column);
      for (std::size_t r : next) out.insert({neighbor, far.rows[r][far_pk]});
      walk(neighbor, next);
    }
  };
  walk(root_table, {pk_it->second});
  return out;
}

}  // namespace detail

// Merges the selected processes into one time-ordered log, each event
// annotated with the object instances reachable from its case id.
inline UnifiedLog build_unified_log(const JoinGraph& graph, const DiscoveredPath& path) {
  if (!path.accepted) throw config_error("cannot build unified log from a discarded path");
  UnifiedLog unified;
  unified.path = path;

  for (const auto& b : graph.bindings) {
    if (!path.bindings_covered.count(b.process_name)) continue;
    unified.processes.push_back(b.process_name);
    unified.process_table[b.process_name] = b.table;
    for (const auto& ev : b.log.events) {
      auto [it, inserted] = unified.activity_process.emplace(ev.activity, b.process_name);
      if (!inserted && it->second != b.process_name)
        throw schema_error("activity '" + ev.activity + "' appears in processes '" + it->second +
                           "' and '" + b.process_name + "'");
    }
    std::map<std::string, std::set<EntityRef>> closure_cache;
    for (const auto& ev : b.log.events) {
      auto cached = closure_cache.find(ev.case_id);
      if (cached == closure_cache.end())
        cached = closure_cache
                     .emplace(ev.case_id, detail::linked_closure(graph, path.edges_used, b.table,
                                                                 ev.case_id))
                     .first;
      unified.entries.push_back({b.process_name, ev, cached->second});
    }
  }
  std::stable_sort(unified.entries.begin(), unified.entries.end(),
                   [](const UnifiedEntry& a, const UnifiedEntry& b) {
                     return a.event.start_ts < b.event.start_ts;
                   });

  for (const auto& e : path.edges_used) {
    const ObjectTable& from = graph.tables.at(e.from_table);
    const ObjectTable& to = graph.tables.at(e.to_table);
    std::size_t fk_col = from.column_index.at(e.from_column);
    std::size_t pk_col = from.column_index.at(from.primary_key_column);
    auto& pairs = unified.join_pairs[to_string(e)];
    for (const auto& row : from.rows) {
      const std::string& v = row[fk_col];
      if (v.empty() || !to.pk_to_row.count(v)) continue;
      pairs.insert({row[pk_col], v});
    }
  }
  return unified;
}

struct OrgNode {
  std::string process;
  std::int64_t frequency = 0;
  std::vector<std::size_t> entry_indices;
};

struct OrgEdge {
  std::string from_process;
  std::string to_process;
  std::int64_t frequency = 0;
  std::vector<std::int64_t> wait_ms;
  std::map<std::string, std::set<std::string>> role_instances;  // table -> distinct ids
  std::vector<std::pair<std::size_t, std::size_t>> occurrences; // entry index pairs
  bool rendered = true;
};

struct OrgModel {
  UnifiedLog unified;
  std::map<std::string, OrgNode> nodes;
  std::map<std::pair<std::string, std::string>, OrgEdge> edges;
};

// Interleaves the workflows: within-process edges per owning instance (as a
// per-case directly-follows graph), cross-process edges where consecutive
// events in a shared object's timeline belong to different processes.
inline OrgModel generate_org_model(const UnifiedLog& unified) {
  if (unified.entries.empty()) throw empty_model_error("empty unified log");
  OrgModel model;
  model.unified = unified;
  const auto& entries = model.unified.entries;

  for (std::size_t i = 0; i < entries.size(); ++i) {
    auto& node = model.nodes[entries[i].event.activity];
    node.process = entries[i].process;
    node.frequency++;
    node.entry_indices.push_back(i);
  }

  // within-process: one trace per owning instance (the process's case id)
  std::map<std::pair<std::string, std::string>, std::vector<std::size_t>> case_traces;
  for (std::size_t i = 0; i < entries.size(); ++i)
    case_traces[{entries[i].process, entries[i].event.case_id}].push_back(i);
  for (const auto& [key, idx] : case_traces) {
    const std::string& table = model.unified.process_table.at(key.first);
    for (std::size_t k = 0; k + 1 < idx.size(); ++k) {
      const UnifiedEntry& a = entries[idx[k]];
      const UnifiedEntry& b = entries[idx[k + 1]];
      auto& edge = model.edges[{a.event.activity, b.event.activity}];
      if (edge.frequency == 0) {
        edge.from_process = a.process;
        edge.to_process = b.process;
      }
      edge.frequency++;
      edge.wait_ms.push_back(eventlog::wait_between(a.event, b.event));
      edge.role_instances[table].insert(key.second);
      edge.occurrences.push_back({idx[k], idx[k + 1]});
    }
  }

  // cross-process: adjacency inside each linked instance's timeline
  std::map<EntityRef, std::vector<std::size_t>> instance_timeline;
  for (std::size_t i = 0; i < entries.size(); ++i)
    for (const auto& obj : entries[i].linked_objects) instance_timeline[obj].push_back(i);
  std::set<std::pair<std::size_t, std::size_t>> cross_pairs;
  for (const auto& [obj, idx] : instance_timeline)
    for (std::size_t k = 0; k + 1 < idx.size(); ++k) {
      const UnifiedEntry& a = entries[idx[k]];
      const UnifiedEntry& b = entries[idx[k + 1]];
      if (a.process == b.process) continue;
      cross_pairs.insert({idx[k], idx[k + 1]});
    }
  for (const auto& [i, j] : cross_pairs) {
    const UnifiedEntry& a = entries[i];
    const UnifiedEntry& b = entries[j];
    auto& edge = model.edges[{a.event.activity, b.event.activity}];
    if (edge.frequency == 0) {
      edge.from_process = a.process;
      edge.to_process = b.process;
    }
    edge.frequency++;
    edge.wait_ms.push_back(eventlog::wait_between(a.event, b.event));
    edge.occurrences.push_back({i, j});
    for (const auto& obj : a.linked_objects)
      if (b.linked_objects.count(obj)) edge.role_instances[obj.type].insert(obj.id);
  }
  for (auto& [key, edge] : model.edges)
    std::sort(edge.occurrences.begin(), edge.occurrences.end());
  return model;
}

// Coverage filter: edges below the frequency cutoff are no longer rendered.
inline void apply_min_edge_frequency(OrgModel& model, std::int64_t min_frequency) {
  for (auto& [key, edge] : model.edges) edge.rendered = edge.frequency >= min_frequency;
}

struct ActivityMeasures {
  std::int64_t frequency = 0;
  std::int64_t rework = 0;
  std::optional<double> avg_duration_ms;
  std::optional<double> median_duration_ms;
  std::optional<double> avg_cost;
  double overall_cost = 0.0;
  double automated_ratio = 0.0;
  double model_coverage = 1.0;
};

inline ActivityMeasures activity_stats(const OrgModel& model, const std::string& activity) {
  auto node_it = model.nodes.find(activity);
  if (node_it == model.nodes.end()) throw query_error("unknown activity '" + activity + "'");
  const OrgNode& node = node_it->second;
  const auto& entries = model.unified.entries;

  ActivityMeasures m;
  m.frequency = node.frequency;

  std::map<std::string, std::int64_t> per_case;
  std::vector<double> durations;
  std::vector<double> costs;
  std::int64_t automated = 0;
  for (std::size_t i : node.entry_indices) {
    const UnifiedEntry& e = entries[i];
    per_case[e.event.case_id]++;
    if (e.event.end_ts) durations.push_back(static_cast<double>(*e.event.end_ts - e.event.start_ts));
    if (e.event.cost) costs.push_back(*e.event.cost);
    if (e.event.automated && *e.event.automated) automated++;
  }
  for (const auto& [case_id, n] : per_case)
    if (n > 1) m.rework += n - 1;
  if (!durations.empty()) {
    double sum = 0;
    for (double d : durations) sum += d;
    m.avg_duration_ms = sum / static_cast<double>(durations.size());
    std::sort(durations.begin(), durations.end());
    std::size_t n = durations.size();
    m.median_duration_ms = n % 2 == 1 ? durations[n / 2] : (durations[n / 2 - 1] + durations[n / 2]) / 2;
  }
  if (!costs.empty()) {
    double sum = 0;
    for (double c : costs) sum += c;
    m.avg_cost = sum / static_cast<double>(costs.size());
    m.overall_cost = sum;
  }
  m.automated_ratio =
      node.frequency == 0 ? 0.0 : static_cast<double>(automated) / static_cast<double>(node.frequency);

  std::int64_t total_rel = 0, rendered_rel = 0;
  for (const auto& [key, edge] : model.edges) {
    if (key.first != activity && key.second != activity) continue;
    total_rel++;
    if (edge.rendered) rendered_rel++;
  }
  m.model_coverage =
      total_rel == 0 ? 1.0 : static_cast<double>(rendered_rel) / static_cast<double>(total_rel);
  return m;
}

struct PathStatsRow {
  std::map<std::string, std::string> role_ids;  // table -> id ("" when none)
  std::int64_t count = 0;
  double mean_wait_ms = 0.0;
};

struct PathStats {
  std::vector<std::string> roles;  // tables in path order
  std::vector<PathStatsRow> rows;
};

// Path statistics for one model connection: one row per join-consistent tuple
// of object ids witnessing a from->to occurrence.
inline PathStats path_stats(const OrgModel& model, const std::string& from_activity,
                            const std::string& to_activity) {
  if (!model.nodes.count(from_activity)) throw query_error("unknown activity '" + from_activity + "'");
  if (!model.nodes.count(to_activity)) throw query_error("unknown activity '" + to_activity + "'");

  PathStats stats;
  stats.roles = model.unified.path.tables_in_order;
  auto edge_it = model.edges.find({from_activity, to_activity});
  if (edge_it == model.edges.end()) return stats;
  const OrgEdge& edge = edge_it->second;
  const auto& entries = model.unified.entries;
  const auto& tree = model.unified.path.edges_used;

  // DFS parent of each table in role order, for join consistency checks
  std::map<std::string, std::pair<std::string, const JoinEdge*>> parent_of;
  {
    std::set<std::string> placed;
    for (const auto& t : stats.roles) {
      for (const auto& e : tree) {
        if (e.from_table == t && placed.count(e.to_table) && !parent_of.count(t))
          parent_of[t] = {e.to_table, &e};
        if (e.to_table == t && placed.count(e.from_table) && !parent_of.count(t))
          parent_of[t] = {e.from_table, &e};
      }
      placed.insert(t);
    }
  }

  // role index lookup for parent values during assembly
  std::map<std::string, std::size_t> role_index;
  for (std::size_t k = 0; k < stats.roles.size(); ++k) role_index[stats.roles[k]] = k;

  auto joined = [&](const std::string& table, const std::string& id, const std::string& parent_table,
                    const std::string& parent_id, const JoinEdge& e) -> bool {
    const auto& pairs = model.unified.join_pairs.at(to_string(e));
    if (e.from_table == table) return pairs.count({id, parent_id}) > 0;
    return pairs.count({parent_id, id}) > 0;
  };

  std::map<std::vector<std::string>, std::pair<std::int64_t, double>> tuples;
  for (const auto& [i, j] : edge.occurrences) {
    std::set<EntityRef> shared;
    for (const auto& obj : entries[i].linked_objects)
      if (entries[j].linked_objects.count(obj)) shared.insert(obj);
    if (shared.empty()) {
      // unresolved case ids leave no closure; fall back to the owning instance
      shared.insert({model.unified.process_table.at(entries[i].process), entries[i].event.case_id});
    }
    std::map<std::string, std::vector<std::string>> by_table;
    for (const auto& obj : shared) by_table[obj.type].push_back(obj.id);

    std::int64_t wait = eventlog::wait_between(entries[i].event, entries[j].event);
    std::vector<std::string> current(stats.roles.size());
    std::function<void(std::size_t)> assemble = [&](std::size_t depth) {
      if (depth == stats.roles.size()) {
        auto& agg = tuples[current];
        agg.first++;
        agg.second += static_cast<double>(wait);
        return;
      }
      const std::string& table = stats.roles[depth];
      std::vector<std::string> candidates;
      if (auto it = by_table.find(table); it != by_table.end()) {
        for (const auto& id : it->second) {
          bool ok = true;
          if (auto p = parent_of.find(table); p != parent_of.end()) {
            const std::string& parent_id = current[role_index.at(p->second.first)];
            if (!parent_id.empty())
              ok = joined(table, id, p->second.first, parent_id, *p->second.second);
          }
          if (ok) candidates.push_back(id);
        }
      }
      if (candidates.empty()) {
        current[depth] = "";
        assemble(depth + 1);
        return;
      }
      for (const auto& id : candidates) {
        current[depth] = id;
        assemble(depth + 1);
      }
    };
    assemble(0);
  }

  for (const auto& [tuple, agg] : tuples) {
    PathStatsRow row;
    for (std::size_t k = 0; k < stats.roles.size(); ++k) row.role_ids[stats.roles[k]] = tuple[k];
    row.count = agg.first;
    row.mean_wait_ms = agg.second / static_cast<double>(agg.first);
    stats.rows.push_back(std::move(row));
  }
  return stats;
}

// Throughput across object relationships: one measurement per related
// (from-event, to-event) pair; intermediate activities never affect it.
inline ThroughputResult org_throughput(const OrgModel& model, const std::string& from_activity,
                                       const std::string& to_activity) {
  auto from_it = model.nodes.find(from_activity);
  if (from_it == model.nodes.end()) throw query_error("unknown activity '" + from_activity + "'");
  auto to_it = model.nodes.find(to_activity);
  if (to_it == model.nodes.end()) throw query_error("unknown activity '" + to_activity + "'");

  const auto& entries = model.unified.entries;
  ThroughputResult result;
  for (std::size_t i : from_it->second.entry_indices) {
    for (std::size_t j : to_it->second.entry_indices) {
      if (i == j) continue;
      std::vector<EntityRef> shared;
      for (const auto& obj : entries[i].linked_objects)
        if (entries[j].linked_objects.count(obj)) shared.push_back(obj);
      if (shared.empty()) continue;
      const eventlog::FlatEvent& from_ev = entries[i].event;
      const eventlog::FlatEvent& to_ev = entries[j].event;
      Timestamp end = to_ev.end_ts ? *to_ev.end_ts : to_ev.start_ts;
      std::int64_t d = end - from_ev.start_ts;
      if (d < 0) continue;
      result.rows.push_back({{model.unified.process_table.at(entries[i].process), from_ev.case_id},
                             {model.unified.process_table.at(entries[j].process), to_ev.case_id},
                             std::move(shared),
                             d});
    }
  }
  std::sort(result.rows.begin(), result.rows.end(), [](const ThroughputRow& a, const ThroughputRow& b) {
    if (a.from_entity != b.from_entity) return a.from_entity < b.from_entity;
    if (a.to_entity != b.to_entity) return a.to_entity < b.to_entity;
    return a.duration_ms < b.duration_ms;
  });
  result.aggregate = aggregate_durations(result.rows);
  return result;
}

struct TraceFilter {
  std::vector<std::string> forbidden_activities;
  std::vector<std::string> required_sequence;
};

struct CustomMetric {
  std::string name;
  std::string from_activity;
  std::string to_activity;
  std::optional<std::int64_t> min_ms;
  std::optional<std::int64_t> max_ms;
};

struct FilterMatch {
  std::string process;
  std::string case_id;
  std::string detail;
};

struct MetricViolation {
  EntityRef from_entity;
  EntityRef to_entity;
  std::int64_t duration_ms = 0;
};

struct ConformanceReport {
  std::vector<std::pair<TraceFilter, std::vector<FilterMatch>>> filters;
  std::vector<std::pair<CustomMetric, std::vector<MetricViolation>>> metrics;
};

inline ConformanceReport evaluate_conformance(const OrgModel& model,
                                              const std::vector<TraceFilter>& filters,
                                              const std::vector<CustomMetric>& metrics) {
  ConformanceReport report;
  const auto& entries = model.unified.entries;

  std::map<std::pair<std::string, std::string>, std::vector<std::size_t>> traces;
  for (std::size_t i = 0; i < entries.size(); ++i)
    traces[{entries[i].process, entries[i].event.case_id}].push_back(i);

  for (const auto& filter : filters) {
    if (filter.forbidden_activities.empty() == filter.required_sequence.empty())
      throw config_error("trace filter must set exactly one of forbidden_activities, required_sequence");

    std::vector<FilterMatch> matches;
    if (!filter.forbidden_activities.empty()) {
      // an activity that never occurs simply matches nothing
      std::set<std::string> forbidden(filter.forbidden_activities.begin(),
                                      filter.forbidden_activities.end());
      for (const auto& [key, idx] : traces)
        for (std::size_t i : idx)
          if (forbidden.count(entries[i].event.activity)) {
            matches.push_back({key.first, key.second,
                               "forbidden activity '" + entries[i].event.activity + "'"});
            break;
          }
    } else {
      for (const auto& a : filter.required_sequence)
        if (!model.unified.activity_process.count(a))
          throw query_error("unknown activity '" + a + "'");
      const std::string& process = model.unified.activity_process.at(filter.required_sequence.front());
      for (const auto& a : filter.required_sequence)
        if (model.unified.activity_process.at(a) != process)
          throw config_error("required sequence spans multiple processes");
      for (const auto& [key, idx] : traces) {
        if (key.first != process) continue;
        std::size_t pos = 0;
        for (std::size_t i : idx) {
          if (pos < filter.required_sequence.size() &&
              entries[i].event.activity == filter.required_sequence[pos])
            pos++;
        }
        if (pos < filter.required_sequence.size())
          matches.push_back({key.first, key.second,
                             "required sequence not observed (stopped at '" +
                                 filter.required_sequence[pos] + "')"});
      }
    }
    report.filters.push_back({filter, std::move(matches)});
  }

  for (const auto& metric : metrics) {
    if (metric.min_ms && metric.max_ms && *metric.min_ms > *metric.max_ms)
      throw config_error("metric '" + metric.name + "': min bound exceeds max bound");
    ThroughputResult tp = org_throughput(model, metric.from_activity, metric.to_activity);
    std::vector<MetricViolation> violations;
    for (const auto& row : tp.rows) {
      bool outside = (metric.min_ms && row.duration_ms < *metric.min_ms) ||
                     (metric.max_ms && row.duration_ms > *metric.max_ms);
      if (outside) violations.push_back({row.from_entity, row.to_entity, row.duration_ms});
    }
    report.metrics.push_back({metric, std::move(violations)});
  }
  return report;
}

inline nlohmann::json conformance_report_to_json(const ConformanceReport& report) {
  nlohmann::json filters = nlohmann::json::array();
  for (const auto& [filter, matches] : report.filters) {
    nlohmann::json ms = nlohmann::json::array();
    for (const auto& m : matches)
      ms.push_back({{"process", m.process}, {"case_id", m.case_id}, {"detail", m.detail}});
    nlohmann::json f;
    if (!filter.forbidden_activities.empty()) f["forbidden_activities"] = filter.forbidden_activities;
    else f["required_sequence"] = filter.required_sequence;
    f["matches"] = std::move(ms);
    filters.push_back(std::move(f));
  }
  nlohmann::json metrics = nlohmann::json::array();
  for (const auto& [metric, violations] : report.metrics) {
    nlohmann::json vs = nlohmann::json::array();
    for (const auto& v : violations)
      vs.push_back({{"from", to_string(v.from_entity)},
                    {"to", to_string(v.to_entity)},
                    {"duration_ms", v.duration_ms}});
    nlohmann::json m{{"name", metric.name},
                     {"from_activity", metric.from_activity},
                     {"to_activity", metric.to_activity}};
    if (metric.min_ms) m["min_ms"] = *metric.min_ms;
    if (metric.max_ms) m["max_ms"] = *metric.max_ms;
    m["violations"] = std::move(vs);
    metrics.push_back(std::move(m));
  }
  return nlohmann::json{{"filters", std::move(filters)}, {"metrics", std::move(metrics)}};
}

inline std::string model_to_dot(const OrgModel& model) {
  std::string out = "digraph organization {\n  rankdir=TB;\n  node [shape=box];\n";
  for (const auto& [activity, node] : model.nodes) {
    out += "  " + dot_quote(activity) + " [process=" + dot_quote(node.process) + ", label=" +
           dot_quote(activity + "\\n" + node.process + " (" + std::to_string(node.frequency) + ")") +
           "];\n";
  }
  for (const auto& [key, edge] : model.edges) {
    if (!edge.rendered) continue;
    std::string roles;
    for (const auto& [table, ids] : edge.role_instances) {
      if (!roles.empty()) roles += ",";
      roles += table + "=" + std::to_string(ids.size());
    }
    out += "  " + dot_quote(key.first) + " -> " + dot_quote(key.second) + " [label=" +
           dot_quote(std::to_string(edge.frequency)) + ", roles=" + dot_quote(roles) + "];\n";
  }
  out += "}\n";
  return out;
}

inline nlohmann::json model_stats_json(const OrgModel& model) {
  nlohmann::json nodes = nlohmann::json::object();
  for (const auto& [activity, node] : model.nodes) {
    ActivityMeasures m = activity_stats(model, activity);
    nlohmann::json jm{{"process", node.process},
                      {"frequency", m.frequency},
                      {"rework", m.rework},
                      {"overall_cost", m.overall_cost},
                      {"automated_ratio", m.automated_ratio},
                      {"model_coverage", m.model_coverage}};
    if (m.avg_duration_ms) jm["avg_duration_ms"] = *m.avg_duration_ms;
    if (m.median_duration_ms) jm["median_duration_ms"] = *m.median_duration_ms;
    if (m.avg_cost) jm["avg_cost"] = *m.avg_cost;
    nodes[activity] = std::move(jm);
  }
  nlohmann::json edges = nlohmann::json::array();
  for (const auto& [key, edge] : model.edges) {
    double mean_wait = 0;
    for (std::int64_t w : edge.wait_ms) mean_wait += static_cast<double>(w);
    if (!edge.wait_ms.empty()) mean_wait /= static_cast<double>(edge.wait_ms.size());
    nlohmann::json role_counts = nlohmann::json::object();
    for (const auto& [table, ids] : edge.role_instances) role_counts[table] = ids.size();
    edges.push_back({{"from", key.first},
                     {"to", key.second},
                     {"from_process", edge.from_process},
                     {"to_process", edge.to_process},
                     {"frequency", edge.frequency},
                     {"mean_wait_ms", mean_wait},
                     {"role_counts", std::move(role_counts)},
                     {"rendered", edge.rendered}});
  }
  nlohmann::json path{{"tables", model.unified.path.tables_in_order}};
  nlohmann::json path_edges = nlohmann::json::array();
  for (const auto& e : model.unified.path.edges_used)
    path_edges.push_back({{"from", e.from_table + "." + e.from_column}, {"to", e.to_table}});
  path["edges"] = std::move(path_edges);
  return nlohmann::json{{"processes", model.unified.processes},
                        {"event_count", model.unified.entries.size()},
                        {"path", std::move(path)},
                        {"nodes", std::move(nodes)},
                        {"edges", std::move(edges)}};
}

inline void write_path_stats_csv(std::ostream& os, const PathStats& stats) {
  std::vector<std::string> header;
  for (const auto& role : stats.roles) header.push_back(role + " ID");
  header.push_back("count");
  header.push_back("mean_wait_ms");
  write_csv_record(os, header);
  for (const auto& row : stats.rows) {
    std::vector<std::string> rec;
    for (const auto& role : stats.roles) rec.push_back(row.role_ids.at(role));
    rec.push_back(std::to_string(row.count));
    rec.push_back(nlohmann::json(row.mean_wait_ms).dump());
    write_csv_record(os, rec);
  }
}

struct OrgProject {
  JoinGraph graph;
  std::vector<std::string> selected;  // declaration order
};

// Project declarations: {tables:[{name,file,primary_key}], logs:[{process_name,
// file,case_target:{table},columns{}}], joins:[{from:{table,column},to:{table}}]}.
inline OrgProject load_org_project(const nlohmann::json& j, const std::string& base_dir) {
  auto open = [&](const std::string& file) {
    std::string path = base_dir.empty() ? file : base_dir + "/" + file;
    std::ifstream in(path);
    if (!in) throw config_error("cannot open '" + path + "'");
    return in;
  };

  std::vector<ObjectTable> tables;
  for (const auto& t : j.at("tables")) {
    auto in = open(t.at("file").get<std::string>());
    tables.push_back(load_object_table(in, t.at("name").get<std::string>(),
                                       t.at("primary_key").get<std::string>()));
  }
  std::vector<LogBinding> bindings;
  for (const auto& l : j.at("logs")) {
    LogBinding b;
    b.process_name = l.at("process_name").get<std::string>();
    b.table = l.at("case_target").at("table").get<std::string>();
    eventlog::ColumnConfig columns;
    columns.roles = l.at("columns").get<std::map<std::string, std::string>>();
    auto in = open(l.at("file").get<std::string>());
    b.log = eventlog::parse_flat_csv(in, columns, b.process_name);
    bindings.push_back(std::move(b));
  }
  std::vector<JoinEdge> edges;
  for (const auto& e : j.at("joins"))
    edges.push_back({e.at("from").at("table").get<std::string>(),
                     e.at("from").at("column").get<std::string>(),
                     e.at("to").at("table").get<std::string>()});

  double threshold = 1.0;
  if (j.contains("options") && j.at("options").contains("coverage_threshold"))
    threshold = j.at("options").at("coverage_threshold").get<double>();

  OrgProject project;
  std::vector<std::string> declared;
  for (const auto& b : bindings) declared.push_back(b.process_name);
  project.graph = build_join_graph(std::move(tables), std::move(bindings), std::move(edges), threshold);
  if (j.contains("processes")) project.selected = j.at("processes").get<std::vector<std::string>>();
  else project.selected = declared;
  return project;
}

inline nlohmann::json paths_to_json(const std::vector<DiscoveredPath>& paths) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& p : paths) {
    nlohmann::json edges = nlohmann::json::array();
    for (const auto& e : p.edges_used)
      edges.push_back({{"from", e.from_table + "." + e.from_column}, {"to", e.to_table}});
    nlohmann::json j{{"tables", p.tables_in_order},
                     {"edges", std::move(edges)},
                     {"processes", p.bindings_covered},
                     {"verdict", p.accepted ? "accepted" : "discarded"}};
    if (!p.accepted) j["discard_reason"] = p.discard_reason;
    out.push_back(std::move(j));
  }
  return out;
}

}  // namespace promine::orgmine
