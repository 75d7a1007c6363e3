#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "promine/errors.hpp"
#include "promine/eventlog.hpp"
#include "promine/fixtures.hpp"
#include "promine/flatten.hpp"
#include "promine/multilevel.hpp"
#include "promine/ocel.hpp"
#include "promine/orgmine.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CommonOptions {
  std::string config_path;
  std::string out_dir = ".";
  std::string from_activity;
  std::string to_activity;
  std::string occurrence = "first";
  std::string filter_expr;
  bool deterministic = false;
};

struct Project {
  json config;
  fs::path base_dir;
};

Project load_project(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw promine::config_error("cannot open config '" + path + "'");
  Project project;
  try {
    in >> project.config;
  } catch (const json::exception& e) {
    throw promine::config_error("invalid config JSON: " + std::string(e.what()));
  }
  project.base_dir = fs::path(path).parent_path();
  return project;
}

std::ifstream open_input(const Project& project, const std::string& file) {
  fs::path path = project.base_dir / file;
  std::ifstream in(path);
  if (!in) throw promine::config_error("cannot open '" + path.string() + "'");
  return in;
}

void write_file(const fs::path& out_dir, const std::string& name, const std::string& content) {
  fs::create_directories(out_dir);
  std::ofstream out(out_dir / name, std::ios::binary);
  if (!out) throw promine::config_error("cannot write '" + (out_dir / name).string() + "'");
  out << content;
}

void write_stats(const CommonOptions& opts, json stats) {
  if (!opts.deterministic) {
    auto now = std::chrono::duration_cast<std::chrono::milliseconds>(
                   std::chrono::system_clock::now().time_since_epoch())
                   .count();
    stats["generated_at"] = promine::format_timestamp(promine::Timestamp{now});
  }
  write_file(opts.out_dir, "stats.json", stats.dump(2) + "\n");
}

std::string mode_of(const Project& project) {
  return project.config.at("mode").get<std::string>();
}

promine::eventlog::FlatLog load_flat_log(const Project& project) {
  promine::eventlog::ColumnConfig columns;
  columns.roles = project.config.at("columns").get<std::map<std::string, std::string>>();
  const std::string file = project.config.at("log").get<std::string>();
  auto in = open_input(project, file);
  return promine::eventlog::parse_flat_csv(in, columns, file);
}

promine::multilevel::Model load_multilevel_model(const Project& project,
                                                 const CommonOptions& opts) {
  auto config = promine::multilevel::multilevel_config_from_json(project.config.at("schema"));
  auto in = open_input(project, project.config.at("log").get<std::string>());
  auto rows = promine::multilevel::parse_multilevel_csv(in, config);
  auto model = promine::multilevel::discover(rows, config.schema);
  if (!opts.filter_expr.empty())
    model = promine::multilevel::filter_cases(model, promine::multilevel::member_filter(opts.filter_expr));
  return model;
}

promine::ocel::Log load_ocel_log(const Project& project) {
  auto in = open_input(project, project.config.at("log").get<std::string>());
  return promine::ocel::parse_ocel_json(in);
}

json project_options(const Project& project) {
  if (project.config.contains("options")) return project.config.at("options");
  return json::object();
}

struct OrgContext {
  promine::orgmine::OrgModel model;
  std::vector<promine::orgmine::DiscoveredPath> paths;
};

OrgContext load_org_model(const Project& project) {
  auto org = promine::orgmine::load_org_project(project.config, project.base_dir.string());
  OrgContext ctx;
  ctx.paths = promine::orgmine::discover_paths(org.graph, org.selected);
  const promine::orgmine::DiscoveredPath* accepted = nullptr;
  for (const auto& p : ctx.paths)
    if (p.accepted) {
      accepted = &p;
      break;
    }
  if (!accepted) throw promine::integrity_error("no accepted join path connects the selected processes");
  auto unified = promine::orgmine::build_unified_log(org.graph, *accepted);
  ctx.model = promine::orgmine::generate_org_model(unified);
  json options = project_options(project);
  if (options.contains("min_edge_frequency"))
    promine::orgmine::apply_min_edge_frequency(ctx.model,
                                               options.at("min_edge_frequency").get<std::int64_t>());
  return ctx;
}

int cmd_gen(const std::string& fixture, const CommonOptions& opts) {
  auto files = promine::fixtures::generate(fixture);
  for (const auto& f : files) write_file(opts.out_dir, f.name, f.content);
  for (const auto& f : files) std::cout << (fs::path(opts.out_dir) / f.name).string() << "\n";
  return 0;
}

int cmd_discover(const CommonOptions& opts) {
  Project project = load_project(opts.config_path);
  std::string mode = mode_of(project);
  if (mode == "flat") {
    auto log = load_flat_log(project);
    auto dfg = promine::eventlog::discover_dfg(log);
    write_file(opts.out_dir, "model.dot", promine::eventlog::dfg_to_dot(dfg));
    write_stats(opts, promine::eventlog::dfg_stats_json(dfg));
  } else if (mode == "multilevel") {
    auto model = load_multilevel_model(project, opts);
    write_file(opts.out_dir, "model.dot", promine::multilevel::model_to_dot(model));
    write_stats(opts, promine::multilevel::model_stats_json(model));
  } else if (mode == "ocel") {
    json options = project_options(project);
    if (!options.contains("flatten_type"))
      throw promine::config_error("ocel discover requires options.flatten_type");
    auto log = load_ocel_log(project);
    auto [flat, report] =
        promine::eventlog::flatten_ocel(log, options.at("flatten_type").get<std::string>());
    auto dfg = promine::eventlog::discover_dfg(flat);
    write_file(opts.out_dir, "model.dot", promine::eventlog::dfg_to_dot(dfg));
    json stats = promine::eventlog::dfg_stats_json(dfg);
    stats["flattening_report"] = promine::eventlog::flattening_report_to_json(report);
    write_stats(opts, std::move(stats));
  } else if (mode == "org") {
    auto ctx = load_org_model(project);
    write_file(opts.out_dir, "model.dot", promine::orgmine::model_to_dot(ctx.model));
    write_stats(opts, promine::orgmine::model_stats_json(ctx.model));
  } else {
    throw promine::config_error("unknown mode '" + mode + "'");
  }
  return 0;
}

int cmd_stats(const CommonOptions& opts) {
  Project project = load_project(opts.config_path);
  std::string mode = mode_of(project);
  if (mode == "flat") {
    auto log = load_flat_log(project);
    write_stats(opts, promine::eventlog::dfg_stats_json(promine::eventlog::discover_dfg(log)));
  } else if (mode == "multilevel") {
    auto model = load_multilevel_model(project, opts);
    write_stats(opts, promine::multilevel::model_stats_json(model));
  } else if (mode == "ocel") {
    auto log = load_ocel_log(project);
    json stats = promine::ocel::characteristics_to_json(promine::ocel::activity_characteristics(log));
    std::optional<promine::Timestamp> now;
    if (!opts.deterministic) {
      now = promine::Timestamp{std::chrono::duration_cast<std::chrono::milliseconds>(
                                   std::chrono::system_clock::now().time_since_epoch())
                                   .count()};
    }
    stats["quality"] = promine::ocel::quality_to_json(promine::ocel::validate_quality(log, now));
    write_stats(opts, std::move(stats));
  } else if (mode == "org") {
    auto ctx = load_org_model(project);
    json stats = promine::orgmine::model_stats_json(ctx.model);
    if (!opts.from_activity.empty() && !opts.to_activity.empty()) {
      auto ps = promine::orgmine::path_stats(ctx.model, opts.from_activity, opts.to_activity);
      std::ostringstream csv;
      promine::orgmine::write_path_stats_csv(csv, ps);
      write_file(opts.out_dir, "path_stats.csv", csv.str());
    }
    write_stats(opts, std::move(stats));
  } else {
    throw promine::config_error("unknown mode '" + mode + "'");
  }
  return 0;
}

int cmd_conform(const CommonOptions& opts) {
  Project project = load_project(opts.config_path);
  std::string mode = mode_of(project);
  if (mode == "multilevel") {
    auto model = load_multilevel_model(project, opts);
    if (!project.config.contains("reference"))
      throw promine::config_error("multilevel conform requires a reference file");
    auto in = open_input(project, project.config.at("reference").get<std::string>());
    json ref_json;
    in >> ref_json;
    auto reference = promine::multilevel::reference_from_json(ref_json);
    auto result = promine::multilevel::check_conformance(model, reference);
    write_file(opts.out_dir, "conformance.json",
               promine::multilevel::conformance_to_json(result).dump(2) + "\n");
  } else if (mode == "org") {
    auto ctx = load_org_model(project);
    std::vector<promine::orgmine::TraceFilter> filters;
    std::vector<promine::orgmine::CustomMetric> metrics;
    json options = project_options(project);
    if (options.contains("trace_filters"))
      for (const auto& f : options.at("trace_filters")) {
        promine::orgmine::TraceFilter filter;
        if (f.contains("forbidden_activities"))
          filter.forbidden_activities = f.at("forbidden_activities").get<std::vector<std::string>>();
        if (f.contains("required_sequence"))
          filter.required_sequence = f.at("required_sequence").get<std::vector<std::string>>();
        filters.push_back(std::move(filter));
      }
    if (options.contains("custom_metrics"))
      for (const auto& m : options.at("custom_metrics")) {
        promine::orgmine::CustomMetric metric;
        metric.name = m.at("name").get<std::string>();
        metric.from_activity = m.at("from_activity").get<std::string>();
        metric.to_activity = m.at("to_activity").get<std::string>();
        if (m.contains("min_ms")) metric.min_ms = m.at("min_ms").get<std::int64_t>();
        if (m.contains("max_ms")) metric.max_ms = m.at("max_ms").get<std::int64_t>();
        metrics.push_back(std::move(metric));
      }
    auto report = promine::orgmine::evaluate_conformance(ctx.model, filters, metrics);
    write_file(opts.out_dir, "conformance.json",
               promine::orgmine::conformance_report_to_json(report).dump(2) + "\n");
  } else {
    throw promine::config_error("conform is not supported in mode '" + mode + "'");
  }
  return 0;
}

int cmd_throughput(const CommonOptions& opts) {
  Project project = load_project(opts.config_path);
  std::string mode = mode_of(project);
  if (opts.from_activity.empty() || opts.to_activity.empty())
    throw promine::config_error("throughput requires --from and --to");
  promine::ThroughputResult result;
  if (mode == "multilevel") {
    auto model = load_multilevel_model(project, opts);
    auto occurrence = opts.occurrence == "last" ? promine::multilevel::Occurrence::Last
                                                : promine::multilevel::Occurrence::First;
    auto duration_mode = promine::multilevel::DurationMode::StartToStart;
    json options = project_options(project);
    if (options.contains("duration_mode") && options.at("duration_mode") == "end")
      duration_mode = promine::multilevel::DurationMode::EndToStart;
    result = promine::multilevel::throughput(model, opts.from_activity, opts.to_activity, occurrence,
                                             duration_mode);
  } else if (mode == "org") {
    auto ctx = load_org_model(project);
    result = promine::orgmine::org_throughput(ctx.model, opts.from_activity, opts.to_activity);
  } else {
    throw promine::config_error("throughput is not supported in mode '" + mode + "'");
  }
  std::ostringstream csv;
  promine::write_throughput_csv(csv, result);
  write_file(opts.out_dir, "throughput.csv", csv.str());
  return 0;
}

int cmd_paths(const CommonOptions& opts) {
  Project project = load_project(opts.config_path);
  if (mode_of(project) != "org")
    throw promine::config_error("paths is only supported in mode 'org'");
  auto org = promine::orgmine::load_org_project(project.config, project.base_dir.string());
  auto paths = promine::orgmine::discover_paths(org.graph, org.selected);
  write_file(opts.out_dir, "paths.json", promine::orgmine::paths_to_json(paths).dump(2) + "\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Process mining engine: flat, multilevel and organization mining"};
  app.require_subcommand(1);

  CommonOptions opts;
  std::string fixture;

  auto add_common = [&](CLI::App* cmd, bool needs_config) {
    if (needs_config) cmd->add_option("--config", opts.config_path, "project JSON file")->required();
    cmd->add_option("--out", opts.out_dir, "output directory");
    cmd->add_flag("--deterministic", opts.deterministic, "suppress wall-clock metadata in outputs");
  };

  CLI::App* gen = app.add_subcommand("gen", "write a named fixture to the output directory");
  gen->add_option("fixture", fixture, "fixture name")->required();
  add_common(gen, false);

  CLI::App* discover = app.add_subcommand("discover", "discover a process model");
  add_common(discover, true);
  discover->add_option("--filter", opts.filter_expr, "keep only cases containing this member");

  CLI::App* stats = app.add_subcommand("stats", "write model statistics");
  add_common(stats, true);
  stats->add_option("--filter", opts.filter_expr, "keep only cases containing this member");
  stats->add_option("--from", opts.from_activity, "path statistics: from activity");
  stats->add_option("--to", opts.to_activity, "path statistics: to activity");

  CLI::App* conform = app.add_subcommand("conform", "run conformance checking");
  add_common(conform, true);
  conform->add_option("--filter", opts.filter_expr, "keep only cases containing this member");

  CLI::App* throughput = app.add_subcommand("throughput", "compute throughput between two activities");
  add_common(throughput, true);
  throughput->add_option("--from", opts.from_activity, "from activity")->required();
  throughput->add_option("--to", opts.to_activity, "to activity")->required();
  throughput->add_option("--occurrence", opts.occurrence, "first|last occurrence per instance")
      ->check(CLI::IsMember({"first", "last"}));
  throughput->add_option("--filter", opts.filter_expr, "keep only cases containing this member");

  CLI::App* paths = app.add_subcommand("paths", "discover join paths between processes");
  add_common(paths, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    app.exit(e);
    return 2;
  }

  try {
    if (gen->parsed()) {
      const auto& names = promine::fixtures::fixture_names();
      if (std::find(names.begin(), names.end(), fixture) == names.end()) {
        std::cerr << "usage error: unknown fixture '" << fixture << "'\n";
        return 2;
      }
      return cmd_gen(fixture, opts);
    }
    if (discover->parsed()) return cmd_discover(opts);
    if (stats->parsed()) return cmd_stats(opts);
    if (conform->parsed()) return cmd_conform(opts);
    if (throughput->parsed()) return cmd_throughput(opts);
    if (paths->parsed()) return cmd_paths(opts);
  } catch (const promine::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
